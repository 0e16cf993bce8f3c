use serde::Serialize;

/// Cumulative DHT access counters plus per-Timeout maxima.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct AccessCounters {
    pub dht_reads: u64,
    pub dht_writes: u64,
    pub messages_sent: u64,
    pub max_reads_per_timeout: u64,
    pub max_writes_per_timeout: u64,
    pub max_msgs_per_timeout: u64,
    pub d_bits: u64,
    #[serde(skip)]
    window_start: Option<(u64, u64, u64)>,
}

impl AccessCounters {
    pub fn begin_timeout(&mut self) {
        self.window_start = Some((self.dht_reads, self.dht_writes, self.messages_sent));
    }

    pub fn end_timeout(&mut self) {
        if let Some((r, w, m)) = self.window_start.take() {
            self.max_reads_per_timeout = self.max_reads_per_timeout.max(self.dht_reads - r);
            self.max_writes_per_timeout = self.max_writes_per_timeout.max(self.dht_writes - w);
            self.max_msgs_per_timeout = self.max_msgs_per_timeout.max(self.messages_sent - m);
        }
    }

    /// Starts a fresh measurement window for the per-Timeout maxima.
    pub fn reset_maxima(&mut self) {
        self.max_reads_per_timeout = 0;
        self.max_writes_per_timeout = 0;
        self.max_msgs_per_timeout = 0;
    }
}
