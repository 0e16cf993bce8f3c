//! The metrics document written by `run`.

use serde::Serialize;

use crate::dht::system::SystemState;
use crate::harness::runner::RunStats;
use crate::protocol::instrumentation::PhaseInstrumentation;

#[derive(Clone, Debug, Serialize)]
pub struct MetricsDoc {
    pub seed: u64,
    pub num_keys: usize,
    pub d_bits: u64,
    pub rounds_to_legal: Option<u64>,
    pub max_reads_per_timeout: u64,
    pub max_msgs_per_timeout: u64,
    pub total_nodes: usize,
    pub patricia_nodes: usize,
    pub msd_nodes: usize,
    pub sum_label_bits: usize,
    pub phase_counters: Vec<PhaseInstrumentation>,
    pub converged: bool,
    pub rounds_run: u64,
    pub dht_reads: u64,
    pub dht_writes: u64,
    pub messages_sent: u64,
    /// Per-Timeout maxima measured over the closure window after
    /// convergence, if one was run.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub legal_window: Option<LegalWindow>,
}

#[derive(Clone, Debug, Serialize)]
pub struct LegalWindow {
    pub rounds: u64,
    pub max_reads_per_timeout: u64,
    pub max_msgs_per_timeout: u64,
    pub stayed_legal: bool,
}

/// Node and label-size totals of the stored trie.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct MemoryStats {
    pub total_nodes: usize,
    pub patricia_nodes: usize,
    pub msd_nodes: usize,
    pub sum_label_bits: usize,
}

pub fn memory_stats(sys: &SystemState) -> MemoryStats {
    let mut m = MemoryStats::default();
    for (_, n) in sys.all_nodes() {
        m.total_nodes += 1;
        if n.is_msd() {
            m.msd_nodes += 1;
        } else {
            m.patricia_nodes += 1;
        }
        m.sum_label_bits += n.label.len();
    }
    m
}

impl MetricsDoc {
    pub fn new(seed: u64, num_keys: usize, sys: &SystemState, stats: &RunStats) -> Self {
        let mem = memory_stats(sys);
        Self {
            seed,
            num_keys,
            d_bits: sys.metrics.d_bits,
            rounds_to_legal: stats.rounds_to_legal,
            max_reads_per_timeout: stats.max_reads_per_timeout,
            max_msgs_per_timeout: stats.max_msgs_per_timeout,
            total_nodes: mem.total_nodes,
            patricia_nodes: mem.patricia_nodes,
            msd_nodes: mem.msd_nodes,
            sum_label_bits: mem.sum_label_bits,
            phase_counters: stats.phase_series.clone(),
            converged: stats.converged,
            rounds_run: stats.rounds_run,
            dht_reads: stats.dht_reads,
            dht_writes: stats.dht_writes,
            messages_sent: stats.messages_sent,
            legal_window: None,
        }
    }
}
