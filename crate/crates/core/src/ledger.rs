//! Per-lane step accounting for simulated parallel executions.
//!
//! Every event carries a work amount (added to the lane counters) and a
//! duration. Start times respect the lane's own clock (unless the event is
//! detached) and every declared dependency plus its delay, so the span is
//! the longest dependency-respecting schedule.

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    /// Query symbols consumed while following edges.
    Nav,
    Probe,
    Shorten,
    /// Symbols compared against the text during verification.
    Compare,
    /// Move to an already-known node without consuming query symbols.
    Hop,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Search,
    Verify,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct EventId(usize);

#[derive(Clone, Debug, Serialize)]
pub struct Event {
    pub lane: usize,
    pub kind: StepKind,
    pub work: u64,
    pub start: u64,
    pub end: u64,
    pub phase: Phase,
    /// Indices of events this one waited for, with the extra delay.
    pub deps: Vec<(usize, u64)>,
    pub blocking: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct LaneCounters {
    pub nav_chars: u64,
    pub probes: u64,
    pub shortens: u64,
    pub compares: u64,
    pub hops: u64,
}

impl LaneCounters {
    pub fn total(&self) -> u64 {
        self.nav_chars + self.probes + self.shortens + self.compares + self.hops
    }

    fn add(&mut self, kind: StepKind, work: u64) {
        match kind {
            StepKind::Nav => self.nav_chars += work,
            StepKind::Probe => self.probes += work,
            StepKind::Shorten => self.shortens += work,
            StepKind::Compare => self.compares += work,
            StepKind::Hop => self.hops += work,
        }
    }

    fn merge(&mut self, o: &LaneCounters) {
        self.nav_chars += o.nav_chars;
        self.probes += o.probes;
        self.shortens += o.shortens;
        self.compares += o.compares;
        self.hops += o.hops;
    }
}

#[derive(Clone, Debug, Default)]
pub struct StepLedger {
    counters: Vec<LaneCounters>,
    clock: Vec<u64>,
    events: Vec<Event>,
    search_end: u64,
}

/// Builder for one ledger event; see [`StepLedger::event`].
pub struct EventBuilder<'a> {
    ledger: &'a mut StepLedger,
    lane: usize,
    kind: StepKind,
    work: u64,
    duration: Option<u64>,
    deps: Vec<(usize, u64)>,
    blocking: bool,
    phase: Phase,
}

impl EventBuilder<'_> {
    pub fn work(mut self, w: u64) -> Self {
        self.work = w;
        self
    }

    /// Defaults to the work amount.
    pub fn duration(mut self, d: u64) -> Self {
        self.duration = Some(d);
        self
    }

    pub fn after(mut self, dep: EventId, delay: u64) -> Self {
        self.deps.push((dep.0, delay));
        self
    }

    pub fn after_opt(self, dep: Option<EventId>, delay: u64) -> Self {
        match dep {
            Some(d) => self.after(d, delay),
            None => self,
        }
    }

    /// Does not occupy the lane: later events on the lane may overlap it.
    pub fn detached(mut self) -> Self {
        self.blocking = false;
        self
    }

    pub fn verify(mut self) -> Self {
        self.phase = Phase::Verify;
        self
    }

    pub fn commit(self) -> EventId {
        let EventBuilder { ledger, lane, kind, work, duration, deps, blocking, phase } = self;
        ledger.ensure_lane(lane);
        let mut start = if blocking { ledger.clock[lane] } else { 0 };
        for &(d, delay) in &deps {
            start = start.max(ledger.events[d].end + delay);
        }
        if phase == Phase::Verify {
            start = start.max(ledger.search_end);
        }
        let end = start + duration.unwrap_or(work);
        if blocking {
            ledger.clock[lane] = end;
        }
        if phase == Phase::Search {
            ledger.search_end = ledger.search_end.max(end);
        }
        ledger.counters[lane].add(kind, work);
        ledger.events.push(Event { lane, kind, work, start, end, phase, deps, blocking });
        EventId(ledger.events.len() - 1)
    }
}

impl StepLedger {
    pub fn new(lanes: usize) -> Self {
        StepLedger {
            counters: vec![LaneCounters::default(); lanes],
            clock: vec![0; lanes],
            events: Vec::new(),
            search_end: 0,
        }
    }

    fn ensure_lane(&mut self, lane: usize) {
        if lane >= self.counters.len() {
            self.counters.resize(lane + 1, LaneCounters::default());
            self.clock.resize(lane + 1, 0);
        }
    }

    pub fn event(&mut self, lane: usize, kind: StepKind) -> EventBuilder<'_> {
        EventBuilder {
            ledger: self,
            lane,
            kind,
            work: 1,
            duration: None,
            deps: Vec::new(),
            blocking: true,
            phase: Phase::Search,
        }
    }

    /// Blocking search-phase event with duration equal to its work.
    pub fn record(&mut self, lane: usize, kind: StepKind, work: u64) -> EventId {
        self.event(lane, kind).work(work).commit()
    }

    pub fn lanes(&self) -> usize {
        self.counters.len()
    }

    pub fn lane(&self, lane: usize) -> LaneCounters {
        self.counters.get(lane).copied().unwrap_or_default()
    }

    pub fn totals(&self) -> LaneCounters {
        let mut t = LaneCounters::default();
        for c in &self.counters {
            t.merge(c);
        }
        t
    }

    pub fn work(&self) -> u64 {
        self.totals().total()
    }

    pub fn end_of(&self, e: EventId) -> u64 {
        self.events[e.0].end
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    /// Critical path of the search phase.
    pub fn span(&self) -> u64 {
        self.search_end
    }

    /// Critical path including verification.
    pub fn total_span(&self) -> u64 {
        self.events.iter().map(|e| e.end).max().unwrap_or(0)
    }

    pub fn verify_span(&self) -> u64 {
        self.total_span() - self.span()
    }
}
