//! Raw event trace of a run.

use alloc::vec::Vec;

/// Bumped whenever the trace layout changes.
pub const TRACE_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TraceKind {
    Arrival,
    ServiceStart,
    Departure,
    /// The feed chose to renege.
    Renege,
    /// Patience ran out while waiting.
    Expiry,
    /// Left `queue` for the other queue.
    Jockey,
}

impl TraceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TraceKind::Arrival => "arrival",
            TraceKind::ServiceStart => "service_start",
            TraceKind::Departure => "departure",
            TraceKind::Renege => "renege",
            TraceKind::Expiry => "expiry",
            TraceKind::Jockey => "jockey",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "arrival" => TraceKind::Arrival,
            "service_start" => TraceKind::ServiceStart,
            "departure" => TraceKind::Departure,
            "renege" => TraceKind::Renege,
            "expiry" => TraceKind::Expiry,
            "jockey" => TraceKind::Jockey,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub time: f64,
    pub kind: TraceKind,
    pub queue: usize,
    pub request: u64,
    /// Queue lengths right after the event.
    pub len: [u64; 2],
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace {
    pub horizon: f64,
    pub warmup: f64,
    pub t_local: f64,
    pub sample_interval: f64,
    pub records: Vec<TraceRecord>,
}

impl Trace {
    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}
