//! Failure-free speculative parallel DFA membership testing.
//!
//! The library answers one question, "does this DFA accept this input?",
//! by splitting the input into capacity-weighted chunks and matching the
//! chunks in parallel. Workers on chunks after the first do not know the
//! state the DFA will be in when it reaches their chunk, so they match
//! speculatively: either for every live state of the DFA, or only for the
//! states the DFA can possibly be in given the few symbols just before
//! the chunk boundary (reverse lookahead). Each worker produces a map
//! from entry state to exit state, and folding those maps left to right
//! recovers exactly the state a sequential run would have reached. The
//! speculation is failure-free: no re-matching or rollback is ever
//! needed, at the cost of some duplicated work on the later chunks.
//!
//! Pipeline, end to end:
//!
//! 1. [`automata`]: obtain a DFA (parse Grail+ text or compile a regex),
//!    minimize it, flatten it into a table the kernels can walk.
//! 2. [`speculation`]: build the reverse-lookahead table and size up how
//!    many candidate states a boundary can have.
//! 3. [`partition`]: cut the input into chunks so every worker finishes
//!    at the same time, given per-worker capacities and the candidate
//!    budget.
//! 4. [`matching`]: walk the table, one row per candidate state, and
//!    produce per-chunk state maps.
//! 5. [`runtime`]: orchestrate the above on threads, or simulate the
//!    same schedule on a modeled cluster with message delays.

pub mod automata;
pub mod corpus;
pub mod error;
pub mod matching;
pub mod partition;
pub mod runtime;
pub mod speculation;

pub use automata::{
    compile_regex, minimize, parse_grail, Dfa, EncodedInput, FlatTable, ForeignBytePolicy,
    SymbolBuffer,
};
pub use error::{Error, Result};
pub use matching::{ChunkOptions, MatchOutcome, StateMap, WorkerStats};
pub use partition::{plan_chunks, ChunkPlan, ChunkSpec, WorkerProfile};
pub use runtime::cluster::{simulate_cluster, ClusterTopology, DelayModel, NodeSpec, SimulatedRun};
pub use runtime::{
    profile_workers, run_parallel, BalanceReport, Mode, RunConfig, RunReport, WeightSource,
};
pub use speculation::{Gamma, LookaheadTable, StateSet};
