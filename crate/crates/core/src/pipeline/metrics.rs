use std::fmt::Write as _;
use std::time::Duration;

use super::Status;

const SUB_BUCKETS: u64 = 16;
const SUB_BITS: u32 = 4;

/// Log-linear histogram of durations: 16 buckets per power of two, so any
/// reported percentile is within about 6% of the true sample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram {
    counts: Vec<u64>,
    total: u64,
    max_ns: u64,
}

impl Default for Histogram {
    fn default() -> Self {
        Self {
            counts: vec![0; bucket_of(u64::MAX) + 1],
            total: 0,
            max_ns: 0,
        }
    }
}

fn bucket_of(ns: u64) -> usize {
    if ns < SUB_BUCKETS {
        return ns as usize;
    }
    let exp = 63 - ns.leading_zeros();
    let sub = (ns >> (exp - SUB_BITS)) & (SUB_BUCKETS - 1);
    ((exp - SUB_BITS + 1) as u64 * SUB_BUCKETS + sub) as usize
}

/// Smallest value falling in `bucket`.
fn bucket_floor(bucket: usize) -> u64 {
    let b = bucket as u64;
    if b < SUB_BUCKETS {
        return b;
    }
    let exp = (b / SUB_BUCKETS) as u32 + SUB_BITS - 1;
    let sub = b % SUB_BUCKETS;
    (SUB_BUCKETS + sub) << (exp - SUB_BITS)
}

impl Histogram {
    pub fn record(&mut self, d: Duration) {
        let ns = u64::try_from(d.as_nanos()).unwrap_or(u64::MAX);
        self.counts[bucket_of(ns)] += 1;
        self.total += 1;
        self.max_ns = self.max_ns.max(ns);
    }

    pub fn count(&self) -> u64 {
        self.total
    }

    /// Value at quantile `q` in `[0, 1]`, or `None` when empty.
    pub fn quantile(&self, q: f64) -> Option<Duration> {
        if self.total == 0 {
            return None;
        }
        let rank = ((q.clamp(0.0, 1.0) * self.total as f64).ceil() as u64).max(1);
        let mut seen = 0;
        for (b, &c) in self.counts.iter().enumerate() {
            seen += c;
            if seen >= rank {
                let ns = bucket_floor(b).min(self.max_ns);
                return Some(Duration::from_nanos(ns));
            }
        }
        Some(Duration::from_nanos(self.max_ns))
    }

    pub fn merge(&mut self, other: &Histogram) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.total += other.total;
        self.max_ns = self.max_ns.max(other.max_ns);
    }
}

/// Counters for one stage. `frames_in` counts messages delivered to the
/// stage's inbox, including ones overwritten before the stage took them;
/// those and inputs the stage rejected are `drops`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StageMetrics {
    pub name: String,
    pub frames_in: u64,
    pub frames_out: u64,
    pub drops: u64,
    pub latency: Histogram,
}

impl StageMetrics {
    pub fn new(name: &str) -> Self {
        Self {
            name: name.to_owned(),
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageFailure {
    pub stage: String,
    pub at_us: u64,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SinkMetrics {
    pub emitted: u64,
    pub fresh: u64,
    pub stale: u64,
    pub starved: u64,
    /// Transitions out of `fresh`.
    pub staleness_events: u64,
    /// Distinct frames that reached the sink.
    pub arrivals: u64,
    pub end_to_end: Histogram,
}

impl SinkMetrics {
    pub fn count(&mut self, status: Status, previous: Option<Status>) {
        self.emitted += 1;
        match status {
            Status::Fresh => self.fresh += 1,
            Status::Stale => self.stale += 1,
            Status::Starved => self.starved += 1,
        }
        if previous == Some(Status::Fresh) && status != Status::Fresh {
            self.staleness_events += 1;
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PipelineMetrics {
    /// Source first, sink last.
    pub stages: Vec<StageMetrics>,
    pub sink: SinkMetrics,
    pub failures: Vec<StageFailure>,
    pub elapsed: Duration,
}

fn us(d: Option<Duration>) -> String {
    d.map_or_else(|| "-".to_owned(), |d| format!("{:.1}", d.as_secs_f64() * 1e6))
}

impl PipelineMetrics {
    /// Frames delivered to the sink per second of run time.
    pub fn end_to_end_fps(&self) -> f64 {
        let secs = self.elapsed.as_secs_f64();
        if secs > 0.0 {
            self.sink.arrivals as f64 / secs
        } else {
            0.0
        }
    }

    pub fn report(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<12} {:>8} {:>8} {:>8} {:>10} {:>10}",
            "stage", "in", "out", "drops", "p50_us", "p99_us"
        );
        for m in &self.stages {
            let _ = writeln!(
                s,
                "{:<12} {:>8} {:>8} {:>8} {:>10} {:>10}",
                m.name,
                m.frames_in,
                m.frames_out,
                m.drops,
                us(m.latency.quantile(0.5)),
                us(m.latency.quantile(0.99)),
            );
        }
        let k = &self.sink;
        let _ = writeln!(
            s,
            "end_to_end p50_us={} p99_us={} fps={:.2} elapsed_s={:.3}",
            us(k.end_to_end.quantile(0.5)),
            us(k.end_to_end.quantile(0.99)),
            self.end_to_end_fps(),
            self.elapsed.as_secs_f64(),
        );
        let _ = writeln!(
            s,
            "sink emitted={} fresh={} stale={} starved={} staleness_events={}",
            k.emitted, k.fresh, k.stale, k.starved, k.staleness_events
        );
        for f in &self.failures {
            let _ = writeln!(s, "failure stage={} at_us={} reason={}", f.stage, f.at_us, f.reason);
        }
        s
    }
}
