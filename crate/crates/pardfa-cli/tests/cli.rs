//! End-to-end tests that drive the compiled binary the way a user
//! would: spawn it, feed files, and check stdout, stderr, and exit
//! codes.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use rand::prelude::*;
use tempfile::TempDir;

use pardfa_core::corpus::AMINO_ACIDS;
use pardfa_core::parse_grail;

const FOUR_LIVE: &str = "\
(START) |- 0
0 a 1
0 b 2
1 b 3
2 a 1
2 b 3
3 a 3
3 -| (FINAL)
";

fn pardfa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pardfa"))
        .args(args)
        .output()
        .expect("binary should spawn")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("stdout should be utf-8")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("stderr should be utf-8")
}

fn write(dir: &TempDir, name: &str, contents: &[u8]) -> String {
    let path = dir.path().join(name);
    fs::write(&path, contents).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn compile_reports_machine_shape() {
    let out = pardfa(&["compile", "a*bc*"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout_of(&out);
    assert!(text.contains("|Q|=3"), "unexpected summary: {text}");
    assert!(text.contains("|Σ|=3"), "unexpected summary: {text}");
    assert!(text.contains("sink=s2"), "unexpected summary: {text}");

    let raw = pardfa(&["compile", "a*bc*", "--no-minimize"]);
    assert_eq!(raw.status.code(), Some(0));
    let states: usize = stdout_of(&raw)
        .split_once("|Q|=")
        .and_then(|(_, rest)| rest.split_whitespace().next().map(str::to_owned))
        .and_then(|n| n.parse().ok())
        .expect("summary should carry a state count");
    assert!(states >= 3, "unminimized machine lost states: {states}");
}

#[test]
fn compile_round_trips_through_a_file() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("m.grail");
    let out = pardfa(&["compile", "a*bc*", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));

    let back = pardfa(&["compile", "--dfa", path.to_str().unwrap()]);
    assert_eq!(back.status.code(), Some(0));
    assert!(stdout_of(&back).contains("|Q|=3"));
}

#[test]
fn match_accepts_the_twelve_symbol_example() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "in.txt", b"aaaaaaabcccc");
    let out = pardfa(&[
        "match", "--pattern", "a*bc*", &input, "--mode", "lookahead", "--p", "3",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout_of(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("ACCEPT s1"));
    let timing = lines.next().expect("timing line");
    assert!(
        timing.starts_with("n=12 mode=lookahead workers=3"),
        "unexpected timing line: {timing}"
    );
}

#[test]
fn match_rejects_empty_input_with_exit_one() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "empty.txt", b"");
    let out = pardfa(&["match", "--pattern", "a*bc*", &input]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stdout_of(&out).lines().next(), Some("REJECT"));
}

#[test]
fn all_modes_agree_on_random_input() {
    let dir = TempDir::new().unwrap();
    let mut rng = StdRng::seed_from_u64(41);
    let bytes: Vec<u8> = (0..100_000)
        .map(|_| *b"abc".choose(&mut rng).unwrap())
        .collect();
    let input = write(&dir, "random.txt", &bytes);

    let mut verdicts = Vec::new();
    for mode in ["sequential", "basic", "lookahead"] {
        let out = pardfa(&[
            "match", "--pattern", "a*bc*", &input, "--mode", mode, "--p", "4",
        ]);
        assert!(matches!(out.status.code(), Some(0) | Some(1)), "mode {mode} errored");
        verdicts.push(stdout_of(&out).lines().next().unwrap().to_string());
    }
    assert_eq!(verdicts[0], verdicts[1], "basic disagrees with sequential");
    assert_eq!(verdicts[0], verdicts[2], "lookahead disagrees with sequential");
}

#[test]
fn analyze_reports_candidate_structure() {
    let dir = TempDir::new().unwrap();
    let machine = write(&dir, "four_live.grail", FOUR_LIVE.as_bytes());
    let out = pardfa(&[
        "analyze", "--dfa", &machine, "--r", "2", "--plan", "3", "--n", "36",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout_of(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "r,windows,i_max,gamma,reduction_rate,set_sizes");

    let row: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(row[0], "1");
    assert_eq!(row[2], "2", "i_max at depth 1");
    assert_eq!(row[3], "0.5", "gamma at depth 1");

    assert!(text.contains("worker,start,end,lookahead_start"));
    assert!(text.contains("0,0,17,-1"), "first chunk should span 0..=17");
}

#[test]
fn analyze_handles_a_single_state_machine() {
    let out = pardfa(&["analyze", "--pattern", "a*"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout_of(&out);
    let row: Vec<&str> = text.lines().nth(1).expect("one depth row").split(',').collect();
    assert_eq!(row[3], "1", "gamma should be 1 when every state is a candidate");
    assert_eq!(row[4], "0", "nothing is eliminated at gamma 1");
}

#[test]
fn bench_emits_consistent_csv() {
    let dir = TempDir::new().unwrap();
    let corpus = dir.path().join("corpus");
    let gen = pardfa(&[
        "gen-corpus", "--out", corpus.to_str().unwrap(),
        "--count", "2", "--states", "6", "--input-len", "1000", "--seed", "9",
    ]);
    assert_eq!(gen.status.code(), Some(0));

    let out = pardfa(&[
        "bench", "--corpus", corpus.to_str().unwrap(),
        "--modes", "sequential,basic,lookahead", "--p", "2", "--n", "30000", "--seed", "1",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout_of(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "dfa,states,alphabet,mode,workers,r,i_max,gamma,n,wall_us,speedup,speedup_display,per_worker_symbols,comm_fraction"
    );
    assert_eq!(lines.len(), 1 + 2 * 3, "one row per machine and mode");

    let mut baseline = None;
    for line in &lines[1..] {
        let fields: Vec<&str> = line.split(',').collect();
        let mode = fields[3];
        let wall: f64 = fields[9].parse().unwrap();
        let speedup: f64 = fields[10].parse().unwrap();
        if mode == "sequential" {
            assert_eq!(fields[10], "1.0000", "baseline row should have unit speedup");
            baseline = Some(wall);
        } else {
            let seq = baseline.expect("sequential row precedes parallel rows");
            let recomputed = seq / wall;
            assert!(
                (speedup - recomputed).abs() <= 0.01 * recomputed.max(speedup),
                "speedup {speedup} does not match walls {seq}/{wall}"
            );
        }
        assert!(fields[13].is_empty(), "live runs have no modeled communication");
    }
}

#[test]
fn simulate_is_deterministic_and_accounts_communication() {
    let dir = TempDir::new().unwrap();
    let machine = write(&dir, "four_live.grail", FOUR_LIVE.as_bytes());
    let topology = write(
        &dir,
        "cluster.txt",
        b"node cores=3\nnode cores=3 capacity=1.41\nseed 12\n",
    );
    let args = [
        "simulate", "--topology", &topology, "--dfa", &machine,
        "--n", "5000", "--seed", "5", "--mode", "lookahead", "--r", "1",
    ];

    let first = pardfa(&args);
    let second = pardfa(&args);
    assert!(matches!(first.status.code(), Some(0) | Some(1)));
    assert_eq!(first.stdout, second.stdout, "same seed should replay identically");
    assert_eq!(first.stderr, second.stderr);

    let mut match_finish: f64 = 0.0;
    let mut finish: f64 = 0.0;
    for line in stdout_of(&first).lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        let end: f64 = fields[4].parse().unwrap();
        if fields[0] == "match" {
            match_finish = match_finish.max(end);
        }
        finish = finish.max(end);
    }
    let recomputed = (finish - match_finish) / finish;

    let summary = stderr_of(&first);
    let comm: f64 = summary
        .split_whitespace()
        .find_map(|tok| tok.strip_prefix("comm_fraction="))
        .and_then(|v| v.parse().ok())
        .expect("summary should report comm_fraction");
    assert!(
        (comm - recomputed).abs() <= 2e-3,
        "summary {comm} vs phase rows {recomputed}"
    );
    let verdict = if summary.contains("verdict=accept") { 0 } else { 1 };
    assert_eq!(first.status.code(), Some(verdict));
}

#[test]
fn gen_corpus_is_seed_stable() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let run = |out: &Path| {
        pardfa(&[
            "gen-corpus", "--out", out.to_str().unwrap(),
            "--count", "2", "--states", "8,16", "--input-len", "4000", "--seed", "11",
        ])
    };
    let first = run(&a);
    let second = run(&b);
    assert_eq!(first.status.code(), Some(0));
    assert_eq!(first.stdout, second.stdout, "manifests should match");

    for name in ["dfa_000.grail", "dfa_001.grail", "input_000.txt", "input_001.txt"] {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "{name} should be byte-identical across runs"
        );
    }
    assert_eq!(fs::read(a.join("input_000.txt")).unwrap().len(), 4000);

    for (name, target) in [("dfa_000.grail", 8.0f64), ("dfa_001.grail", 16.0)] {
        let dfa = parse_grail(&fs::read_to_string(a.join(name)).unwrap()).unwrap();
        let drift = (dfa.state_count() as f64 - target).abs() / target;
        assert!(drift <= 0.2, "{name} missed its size target: {}", dfa.state_count());
    }
}

#[test]
fn gen_corpus_amino_stays_on_the_protein_alphabet() {
    let dir = TempDir::new().unwrap();
    let out = pardfa(&[
        "gen-corpus", "--out", dir.path().to_str().unwrap(),
        "--count", "3", "--amino", "--input-len", "500", "--seed", "3",
    ]);
    assert_eq!(out.status.code(), Some(0));
    for i in 0..3 {
        let path = dir.path().join(format!("dfa_{i:03}.grail"));
        let dfa = parse_grail(&fs::read_to_string(path).unwrap()).unwrap();
        for &symbol in dfa.alphabet() {
            assert!(
                AMINO_ACIDS.contains(&symbol),
                "symbol {} is not an amino acid code",
                symbol as char
            );
        }
    }
}

#[test]
fn errors_exit_with_code_two() {
    let missing = pardfa(&["match", "--pattern", "a*", "/nonexistent/input.txt"]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(stderr_of(&missing).starts_with("error:"));

    let bad_pattern = pardfa(&["compile", "a*(("]);
    assert_eq!(bad_pattern.status.code(), Some(2));
    assert!(stderr_of(&bad_pattern).contains("byte 4"), "should point at the offence");

    let deep = pardfa(&["analyze", "--pattern", "a*", "--r", "9"]);
    assert_eq!(deep.status.code(), Some(2));

    let dir = TempDir::new().unwrap();
    let topology = write(&dir, "bad.txt", b"node cores=1\n");
    let machine = write(&dir, "m.grail", FOUR_LIVE.as_bytes());
    let sim = pardfa(&["simulate", "--topology", &topology, "--dfa", &machine]);
    assert_eq!(sim.status.code(), Some(2));
    assert!(stderr_of(&sim).contains("line 1"), "should name the offending line");
}
