//! Run metrics, computed online by the engine or recomputed from a trace.
//!
//! Request-level metrics cover the cohort of requests that entered during
//! `[warmup, horizon)`; every one of them is resolved because runs drain
//! after the horizon. Occupancy and the sampled series cover the same window
//! by event time.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::trace::{Trace, TraceKind};
use crate::error::{Error, Result};
use crate::stats::percentile_sorted;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Served,
    Reneged,
    ServedAfterJockey,
}

/// What the metrics need to know about one resolved request.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RequestSummary {
    pub entry: f64,
    pub entry_queue: usize,
    pub outcome: Outcome,
    /// Queue the request was served in or left from.
    pub end_queue: usize,
    /// Departure time if served, abandonment time if reneged.
    pub end: f64,
    pub jockeys_from: [u32; 2],
}

impl RequestSummary {
    pub fn jockeys(&self) -> u32 {
        self.jockeys_from[0] + self.jockeys_from[1]
    }

    /// Sojourn time; reneged requests add the local processing time.
    pub fn sojourn(&self, t_local: f64) -> f64 {
        match self.outcome {
            Outcome::Reneged => (self.end - self.entry) + t_local,
            _ => self.end - self.entry,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SeriesPoint {
    pub time: f64,
    pub len: [u64; 2],
    /// Reneges (voluntary or expired) since warmup.
    pub reneges: u64,
    pub jockeys: u64,
}

/// Time-integrated queue lengths and the sampled series.
#[derive(Debug, Clone, PartialEq)]
pub struct Occupancy {
    warmup: f64,
    horizon: f64,
    interval: f64,
    next_sample: f64,
    last_time: f64,
    len: [u64; 2],
    area: [f64; 2],
    reneges: u64,
    jockeys: u64,
    series: Vec<SeriesPoint>,
}

impl Occupancy {
    pub fn new(warmup: f64, horizon: f64, interval: f64) -> Self {
        Self {
            warmup,
            horizon,
            interval,
            next_sample: warmup,
            last_time: 0.0,
            len: [0; 2],
            area: [0.0; 2],
            reneges: 0,
            jockeys: 0,
            series: Vec::new(),
        }
    }

    fn advance(&mut self, time: f64) {
        let from = self.last_time.clamp(self.warmup, self.horizon);
        let to = time.clamp(self.warmup, self.horizon);
        if to > from {
            for q in 0..2 {
                self.area[q] += self.len[q] as f64 * (to - from);
            }
        }
        while self.interval > 0.0 && self.next_sample < time && self.next_sample <= self.horizon {
            self.series.push(SeriesPoint {
                time: self.next_sample,
                len: self.len,
                reneges: self.reneges,
                jockeys: self.jockeys,
            });
            self.next_sample += self.interval;
        }
        self.last_time = time;
    }

    /// Registers an event at `time` that left the queues at `len`.
    pub fn observe(&mut self, time: f64, kind: TraceKind, len: [u64; 2]) {
        self.advance(time);
        if time >= self.warmup && time <= self.horizon {
            match kind {
                TraceKind::Renege | TraceKind::Expiry => self.reneges += 1,
                TraceKind::Jockey => self.jockeys += 1,
                _ => {}
            }
        }
        self.len = len;
    }

    pub fn finish(mut self) -> ([f64; 2], Vec<SeriesPoint>) {
        let end = self.horizon.max(self.last_time);
        // Samples at exactly the horizon are still due.
        self.advance(end + if self.next_sample <= self.horizon { self.interval } else { 0.0 });
        (self.area, self.series)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct QueueMetrics {
    pub arrivals: u64,
    pub reneges: u64,
    /// Jockeys out of this queue.
    pub jockeys: u64,
    pub completions: u64,
    pub renege_rate_per_time: f64,
    pub renege_rate_per_arrival: f64,
    pub jockey_rate_per_time: f64,
    pub jockey_rate_per_arrival: f64,
    pub mean_length: f64,
    /// Mean sojourn of requests that entered this queue.
    pub mean_sojourn: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimMetrics {
    pub window: f64,
    pub queues: [QueueMetrics; 2],
    pub admitted: u64,
    pub completed: u64,
    pub reneged: u64,
    pub jockeying_requests: u64,
    pub served_after_jockey: u64,
    /// `served_after_jockey / jockeying_requests`, zero without jockeys.
    pub successful_jockey_fraction: f64,
    pub mean_sojourn: f64,
    pub p50_sojourn: f64,
    pub p90_sojourn: f64,
    pub p99_sojourn: f64,
    pub series: Vec<SeriesPoint>,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// Builds metrics from resolved requests (in id order) and occupancy.
pub fn assemble(
    requests: &[RequestSummary],
    occupancy: Occupancy,
    warmup: f64,
    horizon: f64,
    t_local: f64,
) -> SimMetrics {
    let window = (horizon - warmup).max(0.0);
    let (area, series) = occupancy.finish();
    let mut m = SimMetrics {
        window,
        series,
        ..SimMetrics::default()
    };
    let mut sojourn_sum = [0.0; 2];
    let mut sojourns = Vec::new();
    for r in requests.iter().filter(|r| r.entry >= warmup && r.entry < horizon) {
        m.admitted += 1;
        let s = r.sojourn(t_local);
        sojourns.push(s);
        sojourn_sum[r.entry_queue] += s;
        m.queues[r.entry_queue].arrivals += 1;
        for q in 0..2 {
            m.queues[q].jockeys += r.jockeys_from[q] as u64;
        }
        if r.jockeys() > 0 {
            m.jockeying_requests += 1;
        }
        match r.outcome {
            Outcome::Reneged => {
                m.reneged += 1;
                m.queues[r.end_queue].reneges += 1;
            }
            Outcome::Served | Outcome::ServedAfterJockey => {
                m.completed += 1;
                m.queues[r.end_queue].completions += 1;
                if r.outcome == Outcome::ServedAfterJockey {
                    m.served_after_jockey += 1;
                }
            }
        }
    }
    for q in 0..2 {
        let qm = &mut m.queues[q];
        let arrivals = qm.arrivals as f64;
        qm.renege_rate_per_time = ratio(qm.reneges as f64, window);
        qm.renege_rate_per_arrival = ratio(qm.reneges as f64, arrivals);
        qm.jockey_rate_per_time = ratio(qm.jockeys as f64, window);
        qm.jockey_rate_per_arrival = ratio(qm.jockeys as f64, arrivals);
        qm.mean_length = ratio(area[q], window);
        qm.mean_sojourn = ratio(sojourn_sum[q], arrivals);
    }
    m.successful_jockey_fraction = ratio(m.served_after_jockey as f64, m.jockeying_requests as f64);
    m.mean_sojourn = ratio(sojourns.iter().sum(), sojourns.len() as f64);
    sojourns.sort_by(f64::total_cmp);
    m.p50_sojourn = percentile_sorted(&sojourns, 50.0);
    m.p90_sojourn = percentile_sorted(&sojourns, 90.0);
    m.p99_sojourn = percentile_sorted(&sojourns, 99.0);
    m
}

#[derive(Debug, Clone, Copy)]
struct Partial {
    entry: f64,
    entry_queue: usize,
    queue: usize,
    jockeys_from: [u32; 2],
    started: bool,
    summary: Option<RequestSummary>,
}

/// Recomputes the metrics of a run from its trace alone.
pub fn drain_statistics(trace: &Trace) -> Result<SimMetrics> {
    let malformed = |i: usize, what: &str| Error::MalformedTrace(alloc::format!("record {i}: {what}"));
    let mut occupancy = Occupancy::new(trace.warmup, trace.horizon, trace.sample_interval);
    let mut requests: BTreeMap<u64, Partial> = BTreeMap::new();
    let mut last_time = f64::NEG_INFINITY;
    for (i, rec) in trace.records.iter().enumerate() {
        if rec.time < last_time || rec.queue > 1 {
            return Err(malformed(i, "out of order or bad queue"));
        }
        last_time = rec.time;
        occupancy.observe(rec.time, rec.kind, rec.len);
        if rec.kind == TraceKind::Arrival {
            if requests.contains_key(&rec.request) {
                return Err(malformed(i, "duplicate arrival"));
            }
            requests.insert(
                rec.request,
                Partial {
                    entry: rec.time,
                    entry_queue: rec.queue,
                    queue: rec.queue,
                    jockeys_from: [0; 2],
                    started: false,
                    summary: None,
                },
            );
            continue;
        }
        let p = requests.get_mut(&rec.request).ok_or_else(|| malformed(i, "unknown request"))?;
        if p.summary.is_some() {
            return Err(malformed(i, "event after resolution"));
        }
        if p.queue != rec.queue {
            return Err(malformed(i, "request is not in that queue"));
        }
        match rec.kind {
            TraceKind::Arrival => unreachable!(),
            TraceKind::ServiceStart => p.started = true,
            TraceKind::Jockey => {
                if p.started {
                    return Err(malformed(i, "jockey after service start"));
                }
                p.jockeys_from[rec.queue] += 1;
                p.queue = 1 - rec.queue;
            }
            TraceKind::Renege | TraceKind::Expiry => {
                if p.started {
                    return Err(malformed(i, "renege after service start"));
                }
                p.summary = Some(RequestSummary {
                    entry: p.entry,
                    entry_queue: p.entry_queue,
                    outcome: Outcome::Reneged,
                    end_queue: rec.queue,
                    end: rec.time,
                    jockeys_from: p.jockeys_from,
                });
            }
            TraceKind::Departure => {
                if !p.started {
                    return Err(malformed(i, "departure without service"));
                }
                let jockeyed = p.jockeys_from[0] + p.jockeys_from[1] > 0;
                p.summary = Some(RequestSummary {
                    entry: p.entry,
                    entry_queue: p.entry_queue,
                    outcome: if jockeyed {
                        Outcome::ServedAfterJockey
                    } else {
                        Outcome::Served
                    },
                    end_queue: rec.queue,
                    end: rec.time,
                    jockeys_from: p.jockeys_from,
                });
            }
        }
    }
    let mut summaries = Vec::with_capacity(requests.len());
    for (id, p) in requests {
        match p.summary {
            Some(s) => summaries.push(s),
            None => return Err(Error::MalformedTrace(alloc::format!("request {id} never resolved"))),
        }
    }
    Ok(assemble(&summaries, occupancy, trace.warmup, trace.horizon, trace.t_local))
}
