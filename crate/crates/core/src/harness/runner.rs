//! Convergence and closure drivers.

use serde::Serialize;

use crate::dht::system::SystemState;
use crate::harness::legality::{check_legal, LegalityReport};
use crate::protocol::instrumentation::PhaseInstrumentation;
use crate::protocol::Shpt;
use crate::trie::ideal::IdealHpt;

#[derive(Clone, Copy, Debug)]
pub struct RunConfig {
    pub max_rounds: u64,
    /// Also require quiet channels for legality.
    pub strict: bool,
    pub record_series: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            max_rounds: 10_000,
            strict: false,
            record_series: true,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunStats {
    pub converged: bool,
    /// Rounds executed before the first legal check succeeded.
    pub rounds_to_legal: Option<u64>,
    pub rounds_run: u64,
    pub dht_reads: u64,
    pub dht_writes: u64,
    pub messages_sent: u64,
    pub max_reads_per_timeout: u64,
    pub max_msgs_per_timeout: u64,
    /// Counters observed before round 1 and after every round.
    pub phase_series: Vec<PhaseInstrumentation>,
    pub final_report: LegalityReport,
}

/// Runs rounds until the state is legal or `max_rounds` have passed.
pub fn run_until_legal(
    sys: &mut SystemState,
    ideal: &IdealHpt,
    protocol: &mut Shpt,
    cfg: RunConfig,
) -> RunStats {
    let start = sys.metrics.clone();
    let mut series = Vec::new();
    let mut report = check_legal(sys, ideal, cfg.strict);
    let mut rounds = 0;
    loop {
        if cfg.record_series {
            series.push(report.counters.clone());
        }
        if report.legal || rounds >= cfg.max_rounds {
            break;
        }
        sys.run_round(protocol);
        rounds += 1;
        report = check_legal(sys, ideal, cfg.strict);
    }
    let m = &sys.metrics;
    RunStats {
        converged: report.legal,
        rounds_to_legal: report.legal.then_some(rounds),
        rounds_run: rounds,
        dht_reads: m.dht_reads - start.dht_reads,
        dht_writes: m.dht_writes - start.dht_writes,
        messages_sent: m.messages_sent - start.messages_sent,
        max_reads_per_timeout: m.max_reads_per_timeout,
        max_msgs_per_timeout: m.max_msgs_per_timeout,
        phase_series: series,
        final_report: report,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ClosureStats {
    pub rounds: u64,
    /// Rounds after which the state was not legal.
    pub illegal_rounds: u64,
    /// Rounds that changed some stored node.
    pub changed_rounds: u64,
    /// Rounds after which some phase counter was non-zero.
    pub nonzero_counter_rounds: u64,
    pub max_reads_per_timeout: u64,
    pub max_msgs_per_timeout: u64,
}

impl ClosureStats {
    pub fn clean(&self) -> bool {
        self.illegal_rounds == 0 && self.changed_rounds == 0 && self.nonzero_counter_rounds == 0
    }
}

/// Continues a legal run for `rounds` rounds, checking every boundary and
/// measuring per-Timeout maxima over this window only.
pub fn run_closure(
    sys: &mut SystemState,
    ideal: &IdealHpt,
    protocol: &mut Shpt,
    rounds: u64,
    strict: bool,
) -> ClosureStats {
    sys.metrics.reset_maxima();
    let mut stats = ClosureStats {
        rounds,
        illegal_rounds: 0,
        changed_rounds: 0,
        nonzero_counter_rounds: 0,
        max_reads_per_timeout: 0,
        max_msgs_per_timeout: 0,
    };
    for _ in 0..rounds {
        let before: Vec<_> = sys.peers().iter().map(|p| p.store.clone()).collect();
        sys.run_round(protocol);
        if sys.peers().iter().zip(&before).any(|(p, b)| p.store != *b) {
            stats.changed_rounds += 1;
        }
        let report = check_legal(sys, ideal, strict);
        if !report.legal {
            stats.illegal_rounds += 1;
        }
        if !report.counters.is_zero() {
            stats.nonzero_counter_rounds += 1;
        }
    }
    stats.max_reads_per_timeout = sys.metrics.max_reads_per_timeout;
    stats.max_msgs_per_timeout = sys.metrics.max_msgs_per_timeout;
    stats
}
