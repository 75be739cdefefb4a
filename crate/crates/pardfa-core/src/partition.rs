//! Capacity-weighted input partitioning.
//!
//! The first chunk is matched from the known start state on a single
//! lane, while every later chunk tracks `budget` candidate states at
//! once, so a later chunk costs `budget` times as much per symbol. The
//! planner sizes the chunks so that workers of the given capacities all
//! finish at the same moment.
//!
//! With normalized weights `w_k` (capacities scaled so they sum to the
//! worker count) the balanced base length is
//!
//! ```text
//! l0 = n * budget / (budget * w_0 + w_1 + ... + w_{P-1})
//! ```
//!
//! giving chunk 0 a length of `l0 * w_0` and chunk k a length of
//! `(l0 / budget) * w_k`. All of this is computed in exact rational
//! arithmetic; the lengths sum to `n` exactly, and the only rounding is
//! the final floor when each running boundary is fixed to an integer
//! offset. Empty chunks are legal and simply produce identity results.

use num::rational::BigRational;
use num::{BigInt, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// One worker's relative throughput, tagged with the caller's id for
/// that worker so plans survive reordering.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorkerProfile {
    pub id: usize,
    pub capacity: f64,
}

impl WorkerProfile {
    /// `count` workers of equal capacity.
    pub fn uniform(count: usize) -> Vec<WorkerProfile> {
        (0..count)
            .map(|id| WorkerProfile { id, capacity: 1.0 })
            .collect()
    }
}

/// Orders workers fastest first, ids breaking ties, so the single-lane
/// chunk lands on the most capable worker.
pub fn sort_fastest_first(workers: &mut [WorkerProfile]) {
    workers.sort_by(|a, b| {
        b.capacity
            .partial_cmp(&a.capacity)
            .expect("capacities are validated finite")
            .then(a.id.cmp(&b.id))
    });
}

/// A contiguous half-open symbol range assigned to one worker.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChunkSpec {
    pub worker: usize,
    pub start: usize,
    pub end: usize,
    /// Offset where this chunk's lookahead window begins, when the plan
    /// was made for a lookahead run and this is not the first chunk.
    pub lookahead_start: Option<usize>,
}

impl ChunkSpec {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    /// The window of symbols to feed the lookahead table, ending where
    /// the chunk starts. Shorter than the full depth near offset zero.
    pub fn window_range(&self) -> Option<(usize, usize)> {
        self.lookahead_start.map(|w| (w, self.start))
    }
}

/// A full partition of the input, plus the exact quantities it was
/// derived from.
#[derive(Debug, Clone, PartialEq)]
pub struct ChunkPlan {
    chunks: Vec<ChunkSpec>,
    weights: Vec<BigRational>,
    base_length: BigRational,
    budget: usize,
    lookahead: Option<usize>,
    input_len: usize,
}

/// Plans chunks for `input_len` symbols across `workers`, where every
/// chunk after the first costs `budget` lanes per symbol. Chunk order
/// follows worker order; pass `lookahead` to annotate window offsets.
pub fn plan_chunks(
    input_len: usize,
    workers: &[WorkerProfile],
    budget: usize,
    lookahead: Option<usize>,
) -> Result<ChunkPlan> {
    if workers.is_empty() {
        return Err(Error::NoWorkers);
    }
    for (index, w) in workers.iter().enumerate() {
        if !w.capacity.is_finite() || w.capacity <= 0.0 {
            return Err(Error::BadCapacity {
                index,
                value: w.capacity,
            });
        }
    }
    if budget == 0 {
        return Err(Error::Config("lane budget must be at least 1".to_string()));
    }
    if lookahead == Some(0) {
        return Err(Error::ZeroLookahead);
    }

    let count = workers.len();
    let capacities: Vec<BigRational> = workers
        .iter()
        .map(|w| BigRational::from_float(w.capacity).expect("validated finite"))
        .collect();
    let total: BigRational = capacities.iter().sum();
    let scale = BigRational::from_integer(BigInt::from(count));
    let weights: Vec<BigRational> = capacities.iter().map(|c| c * &scale / &total).collect();

    let n = BigRational::from_integer(BigInt::from(input_len));
    let m = BigRational::from_integer(BigInt::from(budget));
    let tail_weight: BigRational = weights.iter().skip(1).sum();
    let base_length = &n * &m / (&m * &weights[0] + tail_weight);

    let mut chunks = Vec::with_capacity(count);
    let mut cursor = BigRational::zero();
    let mut prev = 0usize;
    for (k, worker) in workers.iter().enumerate() {
        let length = if k == 0 {
            &base_length * &weights[0]
        } else {
            &base_length / &m * &weights[k]
        };
        cursor += length;
        let boundary = cursor
            .floor()
            .to_integer()
            .to_usize()
            .expect("boundaries stay within the input length");
        let lookahead_start = match lookahead {
            Some(r) if k > 0 => Some(prev.saturating_sub(r)),
            _ => None,
        };
        chunks.push(ChunkSpec {
            worker: worker.id,
            start: prev,
            end: boundary,
            lookahead_start,
        });
        prev = boundary;
    }
    debug_assert_eq!(prev, input_len, "chunk lengths must sum to the input");

    Ok(ChunkPlan {
        chunks,
        weights,
        base_length,
        budget,
        lookahead,
        input_len,
    })
}

impl ChunkPlan {
    pub fn chunks(&self) -> &[ChunkSpec] {
        &self.chunks
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn lookahead(&self) -> Option<usize> {
        self.lookahead
    }

    pub fn input_len(&self) -> usize {
        self.input_len
    }

    /// Normalized weight of chunk `k`, as a float for display.
    pub fn weight(&self, k: usize) -> f64 {
        self.weights[k].to_f64().expect("weights are small")
    }

    /// The balanced base length `l0`, as a float for display.
    pub fn base_length(&self) -> f64 {
        self.base_length.to_f64().expect("lengths are small")
    }

    /// Symbols the whole run will push through match lanes: the first
    /// chunk single-lane, later chunks `budget` lanes wide, plus one
    /// window walk per speculated chunk.
    pub fn work_symbols(&self) -> usize {
        self.chunks
            .iter()
            .enumerate()
            .map(|(k, c)| {
                if k == 0 {
                    c.len()
                } else {
                    let window = c
                        .window_range()
                        .map(|(ws, we)| we - ws)
                        .unwrap_or(0);
                    self.budget * c.len() + window
                }
            })
            .sum()
    }

    /// Renders the plan as CSV with inclusive ends; `-1` marks an empty
    /// chunk's end and a missing window.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("worker,start,end,lookahead_start\n");
        for c in &self.chunks {
            let end = c.end as i64 - 1;
            let window = c.lookahead_start.map(|w| w as i64).unwrap_or(-1);
            out.push_str(&format!("{},{},{},{}\n", c.worker, c.start, end, window));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn ratio(num: i64, den: i64) -> BigRational {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    #[test]
    fn weighted_three_worker_plan_matches_hand_arithmetic() {
        let workers = vec![
            WorkerProfile { id: 0, capacity: 2.0 },
            WorkerProfile { id: 1, capacity: 1.0 },
            WorkerProfile { id: 2, capacity: 1.0 },
        ];
        let plan = plan_chunks(36, &workers, 4, Some(4)).unwrap();

        assert_eq!(plan.weights, vec![ratio(3, 2), ratio(3, 4), ratio(3, 4)]);
        assert_eq!(plan.base_length, ratio(96, 5));
        assert_eq!(plan.base_length(), 19.2);
        assert_eq!(&plan.base_length * &plan.weights[0], ratio(144, 5));

        let chunks = plan.chunks();
        assert_eq!(chunks[0].start..chunks[0].end, 0..28);
        assert_eq!(chunks[1].start..chunks[1].end, 28..32);
        assert_eq!(chunks[2].start..chunks[2].end, 32..36);
        assert_eq!(chunks[0].lookahead_start, None);
        assert_eq!(chunks[1].window_range(), Some((24, 28)));
        assert_eq!(chunks[2].window_range(), Some((28, 32)));

        assert_eq!(
            plan.to_csv(),
            "worker,start,end,lookahead_start\n\
             0,0,27,-1\n\
             1,28,31,24\n\
             2,32,35,28\n"
        );
    }

    #[test]
    fn uniform_workers_split_with_a_double_length_first_chunk() {
        let plan = plan_chunks(36, &WorkerProfile::uniform(3), 2, None).unwrap();
        assert_eq!(plan.base_length, ratio(18, 1));
        let lens: Vec<usize> = plan.chunks().iter().map(ChunkSpec::len).collect();
        assert_eq!(lens, vec![18, 9, 9]);

        let plan = plan_chunks(12, &WorkerProfile::uniform(3), 2, None).unwrap();
        let lens: Vec<usize> = plan.chunks().iter().map(ChunkSpec::len).collect();
        assert_eq!(lens, vec![6, 3, 3]);
    }

    #[test]
    fn single_worker_gets_everything() {
        let plan = plan_chunks(100, &WorkerProfile::uniform(1), 7, Some(3)).unwrap();
        assert_eq!(plan.chunks().len(), 1);
        assert_eq!(plan.chunks()[0].start..plan.chunks()[0].end, 0..100);
        assert_eq!(plan.chunks()[0].lookahead_start, None);
        assert_eq!(plan.work_symbols(), 100);
    }

    #[test]
    fn plans_cover_the_input_contiguously() {
        let mut rng = StdRng::seed_from_u64(0x9a17_0b3c);
        for _ in 0..300 {
            let n = rng.random_range(0..5000usize);
            let count = rng.random_range(1..=8usize);
            let budget = rng.random_range(1..=9usize);
            let workers: Vec<WorkerProfile> = (0..count)
                .map(|id| WorkerProfile {
                    id,
                    capacity: rng.random_range(0.1..10.0),
                })
                .collect();
            let lookahead = if rng.random_bool(0.5) {
                Some(rng.random_range(1..=6usize))
            } else {
                None
            };
            let plan = plan_chunks(n, &workers, budget, lookahead).unwrap();

            let chunks = plan.chunks();
            assert_eq!(chunks.len(), count);
            assert_eq!(chunks[0].start, 0);
            for pair in chunks.windows(2) {
                assert_eq!(pair[0].end, pair[1].start);
            }
            assert_eq!(chunks.last().unwrap().end, n);
            let total: BigRational = plan.weights.iter().sum();
            assert_eq!(total, ratio(count as i64, 1));
            for c in &chunks[1..] {
                if let Some(r) = lookahead {
                    assert_eq!(c.lookahead_start, Some(c.start.saturating_sub(r)));
                }
            }
        }
    }

    #[test]
    fn starved_workers_get_empty_chunks_without_breaking_coverage() {
        let workers = vec![
            WorkerProfile { id: 0, capacity: 1000.0 },
            WorkerProfile { id: 1, capacity: 0.001 },
            WorkerProfile { id: 2, capacity: 1000.0 },
        ];
        let plan = plan_chunks(10, &workers, 2, None).unwrap();
        let chunks = plan.chunks();
        assert!(chunks[1].is_empty());
        assert_eq!(chunks[0].end, chunks[1].start);
        assert_eq!(chunks[1].end, chunks[2].start);
        assert_eq!(chunks[2].end, 10);

        let csv = plan.to_csv();
        let empty_line = csv.lines().nth(2).unwrap();
        let fields: Vec<&str> = empty_line.split(',').collect();
        let start: i64 = fields[1].parse().unwrap();
        let end: i64 = fields[2].parse().unwrap();
        assert_eq!(end, start - 1);
    }

    #[test]
    fn zero_length_input_plans_all_empty_chunks() {
        let plan = plan_chunks(0, &WorkerProfile::uniform(4), 3, Some(2)).unwrap();
        assert!(plan.chunks().iter().all(ChunkSpec::is_empty));
        assert_eq!(plan.work_symbols(), 0);
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        assert!(matches!(plan_chunks(10, &[], 2, None), Err(Error::NoWorkers)));
        let bad = vec![WorkerProfile { id: 0, capacity: 0.0 }];
        assert!(matches!(
            plan_chunks(10, &bad, 2, None),
            Err(Error::BadCapacity { index: 0, .. })
        ));
        let nan = vec![
            WorkerProfile { id: 0, capacity: 1.0 },
            WorkerProfile { id: 1, capacity: f64::NAN },
        ];
        assert!(matches!(
            plan_chunks(10, &nan, 2, None),
            Err(Error::BadCapacity { index: 1, .. })
        ));
        assert!(matches!(
            plan_chunks(10, &WorkerProfile::uniform(2), 0, None),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            plan_chunks(10, &WorkerProfile::uniform(2), 2, Some(0)),
            Err(Error::ZeroLookahead)
        ));
    }

    #[test]
    fn fastest_first_ordering_is_stable() {
        let mut workers = vec![
            WorkerProfile { id: 0, capacity: 1.0 },
            WorkerProfile { id: 1, capacity: 3.0 },
            WorkerProfile { id: 2, capacity: 1.0 },
            WorkerProfile { id: 3, capacity: 2.0 },
        ];
        sort_fastest_first(&mut workers);
        let ids: Vec<usize> = workers.iter().map(|w| w.id).collect();
        assert_eq!(ids, vec![1, 3, 0, 2]);
    }

    #[test]
    fn work_symbols_counts_lanes_and_windows() {
        let plan = plan_chunks(36, &WorkerProfile::uniform(3), 2, Some(4)).unwrap();
        assert_eq!(plan.work_symbols(), 18 + (2 * 9 + 4) + (2 * 9 + 4));
    }
}
