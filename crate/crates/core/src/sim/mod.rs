//! Discrete-event engine for the dual M/M/1 system.
//!
//! Each queue is FCFS with one exponential server; the head of a non-empty
//! queue is always in service. After every arrival or departure all waiting
//! requests are reviewed (queue 0 front to back, then queue 1) and the
//! [`InformationFeed`] decides whether each stays, reneges or jockeys. A
//! request whose patience runs out while waiting reneges. Patience is
//! total-time: it runs from entry and is not reset by a jockey.
//!
//! Arrivals stop at the horizon and the system then drains, so every
//! admitted request is resolved.

pub mod feed;
pub mod metrics;
pub mod trace;

use alloc::collections::{BinaryHeap, VecDeque};
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::config::{sample_patience, LandingMode, Patience, Router, SystemConfig};
use crate::error::{invalid, Error, Result};
use crate::rng::SimRng;

pub use feed::{Decision, DebugZero, FeedDecision, InformationFeed, LearnedFeed, MarkovFeed, NeverAct, Observation};
pub use metrics::{drain_statistics, Outcome, SimMetrics};
pub use trace::{Trace, TraceKind, TraceRecord};

use metrics::{Occupancy, RequestSummary};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum EventKind {
    Departure(usize),
    /// Arrival stream: 0 and 1 are the per-queue streams, 2 the routed one.
    Arrival(usize),
    Expiry(usize),
    Review,
}

impl EventKind {
    fn priority(self) -> u8 {
        match self {
            EventKind::Departure(_) => 0,
            EventKind::Arrival(_) => 1,
            EventKind::Expiry(_) => 2,
            EventKind::Review => 3,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Event {
    time: f64,
    kind: EventKind,
    seq: u64,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    // Reversed: the heap pops the earliest event first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.kind.priority().cmp(&self.kind.priority()))
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// One request's life in the system.
#[derive(Debug, Clone, PartialEq)]
pub struct RequestRecord {
    pub id: usize,
    pub patience: Patience,
    pub entry_queue: usize,
    pub queue: usize,
    pub jockeys_from: [u32; 2],
    pub service_start: Option<f64>,
    /// Service duration, drawn when service starts.
    pub service_time: Option<f64>,
    pub outcome: Option<Outcome>,
    /// Departure or abandonment time.
    pub end: Option<f64>,
    /// Whether the feed is consulted for this request.
    pub decides: bool,
}

impl RequestRecord {
    pub fn entry_time(&self) -> f64 {
        self.patience.entry_time()
    }

    pub fn jockeys(&self) -> u32 {
        self.jockeys_from[0] + self.jockeys_from[1]
    }

    /// Time from entry to service start or abandonment.
    pub fn wait(&self) -> Option<f64> {
        match self.outcome? {
            Outcome::Reneged => self.end.map(|e| e - self.entry_time()),
            _ => self.service_start.map(|s| s - self.entry_time()),
        }
    }

    fn is_waiting(&self) -> bool {
        self.outcome.is_none() && self.service_start.is_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub horizon: f64,
    pub warmup: f64,
    /// Series sampling interval; zero disables the series.
    pub sample_interval: f64,
    /// RNG stream, one per replication.
    pub stream: u64,
    pub record_trace: bool,
}

impl RunOptions {
    /// Warmup of 10% of the horizon and 100 series samples.
    pub fn new(horizon: f64) -> Self {
        Self {
            horizon,
            warmup: 0.1 * horizon,
            sample_interval: horizon / 100.0,
            stream: 0,
            record_trace: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > self.warmup && self.warmup >= 0.0 && self.horizon.is_finite()) {
            return Err(invalid("horizon", "need horizon > warmup >= 0"));
        }
        if !(self.sample_interval >= 0.0) {
            return Err(invalid("sample_interval", "must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub metrics: SimMetrics,
    pub trace: Trace,
    pub requests: Vec<RequestRecord>,
}

/// Preloaded start for a tagged run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TaggedStart {
    /// Patient requests already in queue 0 when the tagged request arrives.
    pub ahead: u64,
    /// Patient requests already in queue 1.
    pub other: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaggedResult {
    pub outcome: Outcome,
    /// Time to service start, or to abandonment.
    pub wait: f64,
    pub patience: f64,
    pub jockeys: u32,
    pub voluntary_renege: bool,
    /// Sum of the service times of the requests preloaded in queue 0, when
    /// all of them finished before the run stopped.
    pub ahead_work: Option<f64>,
}

struct Engine<'a, F: ?Sized> {
    cfg: &'a SystemConfig,
    feed: &'a mut F,
    rng: SimRng,
    now: f64,
    seq: u64,
    heap: BinaryHeap<Event>,
    queues: [VecDeque<usize>; 2],
    requests: Vec<RequestRecord>,
    last_review: f64,
    review_pending: bool,
    arrivals_until: f64,
    /// New arrivals consult the feed and draw patience.
    arrivals_decide: bool,
    record_trace: bool,
    trace: Vec<TraceRecord>,
    occupancy: Occupancy,
}

impl<'a, F: InformationFeed + ?Sized> Engine<'a, F> {
    fn new(cfg: &'a SystemConfig, feed: &'a mut F, rng: SimRng, occupancy: Occupancy) -> Self {
        Self {
            cfg,
            feed,
            rng,
            now: 0.0,
            seq: 0,
            heap: BinaryHeap::new(),
            queues: [VecDeque::new(), VecDeque::new()],
            requests: Vec::new(),
            last_review: 0.0,
            review_pending: false,
            arrivals_until: f64::INFINITY,
            arrivals_decide: true,
            record_trace: false,
            trace: Vec::new(),
            occupancy,
        }
    }

    fn schedule(&mut self, time: f64, kind: EventKind) {
        self.seq += 1;
        self.heap.push(Event {
            time,
            kind,
            seq: self.seq,
        });
    }

    fn lens(&self) -> [u64; 2] {
        [self.queues[0].len() as u64, self.queues[1].len() as u64]
    }

    fn log(&mut self, kind: TraceKind, queue: usize, id: usize) {
        let len = self.lens();
        self.occupancy.observe(self.now, kind, len);
        if self.record_trace {
            self.trace.push(TraceRecord {
                time: self.now,
                kind,
                queue,
                request: id as u64,
                len,
            });
        }
    }

    fn schedule_arrivals(&mut self) {
        match self.cfg.router {
            Router::Split => {
                for q in 0..2 {
                    self.schedule_arrival(q);
                }
            }
            Router::JoinShorter => self.schedule_arrival(2),
        }
    }

    fn schedule_arrival(&mut self, stream: usize) {
        let rate = match stream {
            0 => self.cfg.lambda_i,
            1 => self.cfg.lambda_j,
            _ => self.cfg.lambda_total,
        };
        let dt = self.rng.exponential(rate);
        if dt.is_finite() {
            self.schedule(self.now + dt, EventKind::Arrival(stream));
        }
    }

    fn schedule_review(&mut self) {
        if !self.review_pending {
            self.review_pending = true;
            self.schedule(self.now, EventKind::Review);
        }
    }

    fn start_service(&mut self, q: usize) {
        if let Some(&id) = self.queues[q].front() {
            let duration = self.rng.exponential(self.cfg.mu(q));
            let r = &mut self.requests[id];
            r.service_start = Some(self.now);
            r.service_time = Some(duration);
            self.log(TraceKind::ServiceStart, q, id);
            self.schedule(self.now + duration, EventKind::Departure(q));
        }
    }

    /// Adds a request at the tail of `q` and starts service if idle.
    fn enqueue(&mut self, id: usize, q: usize) {
        self.requests[id].queue = q;
        self.queues[q].push_back(id);
        if self.queues[q].len() == 1 {
            self.start_service(q);
        }
    }

    fn admit(&mut self, q: usize, budget: f64, decides: bool) -> Result<usize> {
        let id = self.requests.len();
        self.requests.push(RequestRecord {
            id,
            patience: Patience::new(budget, self.now)?,
            entry_queue: q,
            queue: q,
            jockeys_from: [0; 2],
            service_start: None,
            service_time: None,
            outcome: None,
            end: None,
            decides,
        });
        self.queues[q].push_back(id);
        self.log(TraceKind::Arrival, q, id);
        if self.queues[q].len() == 1 {
            self.start_service(q);
        }
        if budget.is_finite() {
            self.schedule(self.now + budget, EventKind::Expiry(id));
        }
        Ok(id)
    }

    fn new_arrival(&mut self, q: usize) -> Result<usize> {
        if self.arrivals_decide {
            let budget = sample_patience(&self.cfg.patience, &mut self.rng)?;
            self.admit(q, budget, true)
        } else {
            self.admit(q, f64::INFINITY, false)
        }
    }

    fn route(&mut self) -> usize {
        let (a, b) = (self.queues[0].len(), self.queues[1].len());
        match a.cmp(&b) {
            Ordering::Less => 0,
            Ordering::Greater => 1,
            Ordering::Equal => self.rng.below(2),
        }
    }

    fn remove_waiting(&mut self, id: usize) -> usize {
        let q = self.requests[id].queue;
        let pos = self.queues[q].iter().position(|&x| x == id).expect("waiting request is queued");
        debug_assert!(pos > 0, "the head of a queue is in service");
        self.queues[q].remove(pos);
        q
    }

    fn renege(&mut self, id: usize, kind: TraceKind) {
        let q = self.remove_waiting(id);
        let r = &mut self.requests[id];
        r.outcome = Some(Outcome::Reneged);
        r.end = Some(self.now);
        self.log(kind, q, id);
    }

    fn jockey(&mut self, id: usize, interval: f64) -> Result<()> {
        let from = self.remove_waiting(id);
        let to = 1 - from;
        self.requests[id].jockeys_from[from] += 1;
        self.log(TraceKind::Jockey, from, id);
        if self.cfg.landing == LandingMode::PoissonAhead && self.cfg.lambda_tar > 0.0 {
            let ahead = self.rng.poisson(self.cfg.lambda_tar * interval);
            for _ in 0..ahead {
                self.new_arrival(to)?;
            }
        }
        self.enqueue(id, to);
        Ok(())
    }

    fn review(&mut self) -> Result<()> {
        self.review_pending = false;
        let interval = self.now - self.last_review;
        self.last_review = self.now;
        let waiting: Vec<usize> = self.queues[0]
            .iter()
            .chain(self.queues[1].iter())
            .copied()
            .filter(|&id| self.requests[id].decides && self.requests[id].is_waiting())
            .collect();
        for id in waiting {
            if !self.requests[id].is_waiting() {
                continue;
            }
            let q = self.requests[id].queue;
            let k_i = self.queues[q].iter().position(|&x| x == id).expect("queued") as u64;
            let p = self.requests[id].patience;
            let obs = Observation {
                queue: q,
                k_i,
                k_j: self.queues[1 - q].len() as u64,
                mu_i: self.cfg.mu(q),
                mu_j: self.cfg.mu(1 - q),
                remaining: p.remaining(self.now),
                t0: p.consumed(self.now),
                lambda_tar: self.cfg.lambda_tar,
                t_local: self.cfg.t_local,
            };
            match self.feed.decide(&obs)?.decision {
                Decision::Stay => {}
                Decision::Renege => self.renege(id, TraceKind::Renege),
                Decision::Jockey => self.jockey(id, interval)?,
            }
        }
        Ok(())
    }

    fn process(&mut self, ev: Event) -> Result<()> {
        self.now = ev.time;
        match ev.kind {
            EventKind::Arrival(stream) => {
                if self.now > self.arrivals_until {
                    return Ok(());
                }
                self.schedule_arrival(stream);
                let q = if stream < 2 { stream } else { self.route() };
                self.new_arrival(q)?;
                self.schedule_review();
            }
            EventKind::Departure(q) => {
                let id = self.queues[q].pop_front().ok_or_else(|| Error::Environment("departure from empty queue".into()))?;
                let r = &mut self.requests[id];
                r.outcome = Some(if r.jockeys() > 0 {
                    Outcome::ServedAfterJockey
                } else {
                    Outcome::Served
                });
                r.end = Some(self.now);
                self.log(TraceKind::Departure, q, id);
                self.start_service(q);
                self.schedule_review();
            }
            EventKind::Expiry(id) => {
                if self.requests[id].is_waiting() {
                    self.renege(id, TraceKind::Expiry);
                }
            }
            EventKind::Review => self.review()?,
        }
        Ok(())
    }
}

/// Runs the system from empty queues up to `opts.horizon`, then drains.
pub fn run<F: InformationFeed + ?Sized>(cfg: &SystemConfig, feed: &mut F, opts: &RunOptions) -> Result<SimOutput> {
    cfg.validate()?;
    opts.validate()?;
    let occupancy = Occupancy::new(opts.warmup, opts.horizon, opts.sample_interval);
    let mut engine = Engine::new(cfg, feed, SimRng::new(cfg.seed, opts.stream), occupancy);
    engine.arrivals_until = opts.horizon;
    engine.record_trace = opts.record_trace;
    engine.schedule_arrivals();
    while let Some(ev) = engine.heap.pop() {
        engine.process(ev)?;
    }
    let summaries: Vec<RequestSummary> = engine
        .requests
        .iter()
        .map(|r| {
            Ok(RequestSummary {
                entry: r.entry_time(),
                entry_queue: r.entry_queue,
                outcome: r.outcome.ok_or_else(|| Error::Environment("unresolved request after drain".into()))?,
                end_queue: r.queue,
                end: r.end.unwrap_or(f64::NAN),
                jockeys_from: r.jockeys_from,
            })
        })
        .collect::<Result<_>>()?;
    let Engine {
        requests,
        trace,
        occupancy,
        ..
    } = engine;
    let metrics = metrics::assemble(&summaries, occupancy, opts.warmup, opts.horizon, cfg.t_local);
    Ok(SimOutput {
        metrics,
        trace: Trace {
            horizon: opts.horizon,
            warmup: opts.warmup,
            t_local: cfg.t_local,
            sample_interval: opts.sample_interval,
            records: trace,
        },
        requests,
    })
}

/// Follows one tagged request that arrives at time 0 to queue 0 behind
/// `start.ahead` patient requests, with `start.other` patient requests in
/// queue 1. Only the tagged request consults the feed; background arrivals
/// keep coming and never abandon. Stops once the tagged request starts
/// service or reneges.
pub fn run_tagged<F: InformationFeed + ?Sized>(
    cfg: &SystemConfig,
    feed: &mut F,
    start: TaggedStart,
    stream: u64,
) -> Result<TaggedResult> {
    cfg.validate()?;
    let mut engine = Engine::new(cfg, feed, SimRng::new(cfg.seed, stream), Occupancy::new(0.0, 0.0, 0.0));
    engine.arrivals_decide = false;
    for (q, n) in [(0, start.ahead), (1, start.other)] {
        for _ in 0..n {
            engine.admit(q, f64::INFINITY, false)?;
        }
    }
    let budget = sample_patience(&cfg.patience, &mut engine.rng)?;
    let tagged = engine.admit(0, budget, true)?;
    engine.schedule_arrivals();
    engine.schedule_review();
    loop {
        let r = &engine.requests[tagged];
        if !r.is_waiting() {
            break;
        }
        let ev = engine
            .heap
            .pop()
            .ok_or_else(|| Error::Environment("event queue ran dry before the tagged request resolved".into()))?;
        engine.process(ev)?;
    }
    let r = &engine.requests[tagged];
    let preloaded = &engine.requests[..start.ahead as usize];
    let ahead_work = preloaded
        .iter()
        .all(|p| p.outcome.is_some())
        .then(|| preloaded.iter().map(|p| p.service_time.unwrap_or(0.0)).sum());
    let (outcome, wait) = match (r.outcome, r.service_start) {
        (Some(Outcome::Reneged), _) => (Outcome::Reneged, r.end.unwrap_or(f64::NAN) - r.entry_time()),
        (_, Some(s)) => (
            if r.jockeys() > 0 {
                Outcome::ServedAfterJockey
            } else {
                Outcome::Served
            },
            s - r.entry_time(),
        ),
        _ => return Err(Error::Environment("tagged request unresolved".into())),
    };
    let voluntary_renege = outcome == Outcome::Reneged && engine.trace_kind_of_renege(tagged);
    Ok(TaggedResult {
        outcome,
        wait,
        patience: budget,
        jockeys: r.jockeys(),
        voluntary_renege,
        ahead_work,
    })
}

impl<F: ?Sized> Engine<'_, F> {
    fn trace_kind_of_renege(&self, id: usize) -> bool {
        let r = &self.requests[id];
        // Expiry happens exactly at the patience deadline.
        r.end.is_some_and(|e| e < r.patience.expires_at())
    }
}

#[cfg(test)]
mod tests;
