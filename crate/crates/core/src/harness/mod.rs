//! Scenario generation, legality checking, run drivers and the CLI.

pub mod cli;
pub mod dump;
pub mod legality;
pub mod metrics;
pub mod runner;
pub mod scenario;

pub use legality::{check_legal, LegalityReport, Rule, Violation};
pub use runner::{run_closure, run_until_legal, ClosureStats, RunConfig, RunStats};
pub use scenario::{
    apply_script, generate_initial_state, materialize, parse_keys, random_keys, CorruptionLevel,
    CorruptionScript, Mutation, MutationKind,
};
