//! Two-lane suffix-tree query.
//!
//! Lane 1 walks the first half of the pattern from the root. Every node β1
//! it reaches is the left key of the dictionary pairs for a window of
//! shortest-string lengths; lane 2 keeps a node β2 on the path of the
//! pattern suffix after cum(β1), shortening it through suffix links each
//! time lane 1 moves on, and probes (β1, β2) for every β2 inside the window.
//! The deepest hit is the locus of the pattern.

use std::sync::mpsc;

use serde::Serialize;

use crate::ancestry::Ancestry;
use crate::dict::PairDict;
use crate::error::{param, Result};
use crate::index::{IndexKind, NodeId, SuffixIndex};
use crate::ledger::{EventId, StepKind, StepLedger};
use crate::query::{ExecMode, QueryResult};
use crate::text::{Pattern, Symbol};

/// A node reached by lane 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Lane1Item {
    pub node: NodeId,
    pub cum: usize,
    /// Cumulative skip value of the parent.
    pub pc: usize,
    /// The node already covers the whole pattern.
    pub direct: bool,
    /// Pattern symbols charged for reaching the node.
    pub chars: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Lane1Msg {
    Node(Lane1Item),
    Absent,
}

/// Walks the pattern from the root until cum ≥ ⌈m/2⌉, reporting every
/// node to `sink`. The walk continues even if the sink stops listening.
pub fn run_lane1(tree: &SuffixIndex, q: &[Symbol], mut sink: impl FnMut(Lane1Msg)) -> Vec<Lane1Msg> {
    let m = q.len();
    let h1 = m.div_ceil(2);
    let mut out = Vec::new();
    let (mut v, mut c) = (NodeId::ROOT, 0);
    while c < h1 {
        let msg = match tree.child(v, q[c]) {
            None => Lane1Msg::Absent,
            Some(u) => {
                let cum = tree.cum(u);
                let item = Lane1Item { node: u, cum, pc: c, direct: cum >= m, chars: cum.min(h1) - c };
                v = u;
                c = cum;
                Lane1Msg::Node(item)
            }
        };
        sink(msg);
        out.push(msg);
        if msg == Lane1Msg::Absent {
            break;
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Lane2Action {
    Nav { chars: usize },
    Hop,
    /// Realignment after lane 1 moved; waits for lane-1 item `item`.
    Shorten { item: usize },
    Probe { a: NodeId, b: NodeId, hit: Option<NodeId> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Lane2End {
    Absent,
    /// Lane 1 alone reached the locus.
    Direct(NodeId),
    /// A leaf was reached early; the pattern can only start at `start`
    /// (0-based), if anywhere.
    Leaf { start: Option<usize> },
    /// Lane 1 finished; the deepest accepted probe hit, if any.
    Best(Option<NodeId>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Stage {
    Warmup,
    Await,
    Descend,
    Done(Lane2End),
}

/// Lane-2 state machine. Each [`navigate_one`](Self::navigate_one) call
/// performs one step: a child move, or the realignment to the next
/// lane-1 node together with its immediate probes.
pub struct TwoLaneState<'a> {
    tree: &'a SuffixIndex,
    anc: &'a Ancestry,
    dict: &'a PairDict,
    q: &'a [Symbol],
    s: usize,
    stage: Stage,
    served: Option<Lane1Item>,
    items_seen: usize,
    beta2: NodeId,
    base: usize,
    frontier: usize,
    r_lo: isize,
    r_hi: usize,
    best: Option<NodeId>,
}

impl<'a> TwoLaneState<'a> {
    pub fn new(tree: &'a SuffixIndex, anc: &'a Ancestry, dict: &'a PairDict, q: &'a [Symbol]) -> Result<Self> {
        check_parts(tree, anc, dict, q.len())?;
        let s = q.len().div_ceil(4);
        Ok(TwoLaneState {
            tree,
            anc,
            dict,
            q,
            s,
            stage: Stage::Warmup,
            served: None,
            items_seen: 0,
            beta2: NodeId::ROOT,
            base: s,
            frontier: s,
            r_lo: 0,
            r_hi: 0,
            best: None,
        })
    }

    pub fn beta1(&self) -> NodeId {
        self.served.map_or(NodeId::ROOT, |i| i.node)
    }

    pub fn beta2(&self) -> NodeId {
        self.beta2
    }

    pub fn best(&self) -> Option<NodeId> {
        self.best
    }

    pub fn end(&self) -> Option<Lane2End> {
        match self.stage {
            Stage::Done(e) => Some(e),
            _ => None,
        }
    }

    /// For a pattern that occurs in the text: β1 spells the pattern prefix
    /// of length cum(β1) and β2 spells the pattern from there on, up to the
    /// end of the pattern.
    pub fn invariant_holds(&self) -> bool {
        let m = self.q.len();
        if let Some(item) = self.served {
            if self.tree.spell(item.node)[..item.cum.min(m)] != self.q[..item.cum.min(m)] {
                return false;
            }
        }
        let k = self.tree.cum(self.beta2).min(m - self.base);
        self.tree.spell(self.beta2)[..k] == self.q[self.base..self.base + k]
    }

    fn finish(&mut self, e: Lane2End) {
        self.stage = Stage::Done(e);
    }

    fn charge(&mut self, u: NodeId) -> Lane2Action {
        let ext = (self.base + self.tree.cum(u)).min(self.q.len());
        if ext > self.frontier {
            let chars = ext - self.frontier;
            self.frontier = ext;
            Lane2Action::Nav { chars }
        } else {
            Lane2Action::Hop
        }
    }

    fn leaf_start(&self, leaf: NodeId) -> Option<usize> {
        let r = self.tree.leaf_ref(leaf)?;
        self.tree.text_position(r)?.checked_sub(self.base)
    }

    fn probe(&mut self, a: NodeId, b: NodeId) -> Lane2Action {
        let hit = self.dict.probe(a, b);
        if let Some(w) = hit {
            let deeper = self.best.is_none_or(|x| self.tree.cum(w) > self.tree.cum(x));
            if self.tree.shortest_len(w) <= self.q.len() && deeper {
                self.best = Some(w);
            }
        }
        Lane2Action::Probe { a, b, hit }
    }

    /// One lane-2 step. Returns the actions charged for it (none while
    /// skipping lane-1 nodes whose window is empty).
    pub fn navigate_one(&mut self, src: &mut dyn Iterator<Item = Lane1Msg>) -> Vec<Lane2Action> {
        let m = self.q.len();
        match self.stage {
            Stage::Done(_) => Vec::new(),
            Stage::Warmup => {
                let c = self.tree.cum(self.beta2);
                if self.s + c >= m {
                    self.stage = Stage::Await;
                    return Vec::new();
                }
                let Some(u) = self.tree.child(self.beta2, self.q[self.s + c]) else {
                    self.finish(Lane2End::Absent);
                    return Vec::new();
                };
                if self.tree.cum(u) > self.s + 1 {
                    self.stage = Stage::Await;
                    return Vec::new();
                }
                let act = self.charge(u);
                self.beta2 = u;
                if self.tree.is_leaf(u) {
                    let start = self.leaf_start(u);
                    self.finish(Lane2End::Leaf { start });
                }
                vec![act]
            }
            Stage::Await => {
                let item = match src.next() {
                    None => {
                        self.finish(Lane2End::Best(self.best));
                        return Vec::new();
                    }
                    Some(Lane1Msg::Absent) => {
                        self.finish(Lane2End::Absent);
                        return Vec::new();
                    }
                    Some(Lane1Msg::Node(item)) => item,
                };
                let idx = self.items_seen;
                self.items_seen += 1;
                if item.direct {
                    self.finish(Lane2End::Direct(item.node));
                    return Vec::new();
                }
                let lo = (2 * item.pc + 1).max(m.div_ceil(2) + 1);
                let hi = (2 * item.cum).min(m);
                if lo > hi {
                    return Vec::new();
                }
                let d = item.cum - self.base;
                let c2 = self.tree.cum(self.beta2);
                self.r_lo = lo as isize - item.cum as isize;
                self.r_hi = hi - item.cum;
                self.beta2 = if d >= c2 {
                    NodeId::ROOT
                } else {
                    let needed = (self.r_lo.max(1) as usize).min(c2 - d);
                    let x = self.anc.la_unchecked(self.beta2, d);
                    self.anc.ascend_unchecked(self.tree, x, needed)
                };
                self.base = item.cum;
                // symbols below cum(β1) are covered by lane 1's node
                self.frontier = self.frontier.max(item.cum);
                self.served = Some(item);
                self.stage = Stage::Descend;
                let mut acts = vec![Lane2Action::Shorten { item: idx }];
                if self.r_lo <= 0 {
                    acts.push(self.probe(item.node, NodeId::ROOT));
                }
                let b = self.beta2;
                if !b.is_root() && self.tree.cum(b) as isize >= self.r_lo {
                    acts.push(self.probe(item.node, b));
                }
                acts
            }
            Stage::Descend => {
                let c = self.tree.cum(self.beta2);
                if c >= self.r_hi {
                    self.stage = Stage::Await;
                    return Vec::new();
                }
                let Some(u) = self.tree.child(self.beta2, self.q[self.base + c]) else {
                    self.finish(Lane2End::Absent);
                    return Vec::new();
                };
                let mut acts = vec![self.charge(u)];
                self.beta2 = u;
                if self.tree.is_leaf(u) {
                    let start = self.leaf_start(u);
                    self.finish(Lane2End::Leaf { start });
                } else if self.tree.cum(u) as isize >= self.r_lo {
                    acts.push(self.probe(self.beta1(), u));
                }
                acts
            }
        }
    }
}

fn check_parts(tree: &SuffixIndex, anc: &Ancestry, dict: &PairDict, m: usize) -> Result<()> {
    if tree.kind() != IndexKind::Tree || tree.stride() != 1 {
        return param("two-lane query needs a plain suffix tree");
    }
    if anc.owner() != tree.id() || dict.key_owner() != tree.id() {
        return param("ancestry or dictionary was built for a different tree");
    }
    if m < 2 {
        return param("two-lane query needs a pattern of length at least 2");
    }
    Ok(())
}

/// Everything both lanes did, in order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TwoLaneTrace {
    pub lane1: Vec<Lane1Msg>,
    /// Lane-2 steps; each entry is the action list of one step.
    pub lane2: Vec<Vec<Lane2Action>>,
    pub end: Lane2End,
}

fn drive_lane2(mut st: TwoLaneState<'_>, src: &mut dyn Iterator<Item = Lane1Msg>) -> (Vec<Vec<Lane2Action>>, Lane2End) {
    let mut steps = Vec::new();
    loop {
        if let Some(end) = st.end() {
            return (steps, end);
        }
        let acts = st.navigate_one(src);
        if !acts.is_empty() {
            steps.push(acts);
        }
    }
}

pub fn trace_tree2(
    tree: &SuffixIndex,
    anc: &Ancestry,
    dict: &PairDict,
    q: &[Symbol],
    mode: ExecMode,
) -> Result<TwoLaneTrace> {
    let st = TwoLaneState::new(tree, anc, dict, q)?;
    match mode {
        ExecMode::Simulated => {
            let lane1 = run_lane1(tree, q, |_| {});
            let (lane2, end) = drive_lane2(st, &mut lane1.clone().into_iter());
            Ok(TwoLaneTrace { lane1, lane2, end })
        }
        ExecMode::Threaded => {
            let (tx, rx) = mpsc::sync_channel::<Lane1Msg>(8);
            std::thread::scope(|scope| {
                let h1 = scope.spawn(move || {
                    run_lane1(tree, q, |msg| {
                        let _ = tx.send(msg);
                    })
                });
                let h2 = scope.spawn(move || drive_lane2(st, &mut rx.into_iter()));
                let lane1 = h1.join().expect("lane 1 panicked");
                let (lane2, end) = h2.join().expect("lane 2 panicked");
                Ok(TwoLaneTrace { lane1, lane2, end })
            })
        }
    }
}

/// Replays a trace into the ledger. Lane-2 realignments wait one step
/// after the lane-1 node they read; probes run beside lane 2.
pub fn charge_trace(trace: &TwoLaneTrace, ledger: &mut StepLedger) {
    let mut arrivals: Vec<EventId> = Vec::new();
    for msg in &trace.lane1 {
        if let Lane1Msg::Node(item) = msg {
            arrivals.push(ledger.record(0, StepKind::Nav, item.chars as u64));
        }
    }
    let mut last: Option<EventId> = None;
    for step in &trace.lane2 {
        for act in step {
            match *act {
                Lane2Action::Nav { chars } => last = Some(ledger.record(1, StepKind::Nav, chars as u64)),
                Lane2Action::Hop => last = Some(ledger.record(1, StepKind::Hop, 1)),
                Lane2Action::Shorten { item } => {
                    last = Some(ledger.event(1, StepKind::Shorten).after(arrivals[item], 1).commit());
                }
                Lane2Action::Probe { .. } => {
                    ledger.event(1, StepKind::Probe).after_opt(last, 0).detached().commit();
                }
            }
        }
    }
}

fn verify_split(tree: &SuffixIndex, q: &[Symbol], start: usize, ledger: &mut StepLedger) -> bool {
    let m = q.len();
    let h = m.div_ceil(2);
    ledger.event(0, StepKind::Compare).work(h as u64).verify().commit();
    ledger.event(1, StepKind::Compare).work((m - h) as u64).verify().commit();
    tree.text().symbols().get(start..start + m) == Some(q)
}

/// Two-lane query with verification of the skipped symbols.
pub fn par_query_tree2(
    tree: &SuffixIndex,
    anc: &Ancestry,
    dict: &PairDict,
    pat: &Pattern,
    mode: ExecMode,
    ledger: &mut StepLedger,
) -> Result<QueryResult> {
    let q = pat.symbols();
    let trace = trace_tree2(tree, anc, dict, q, mode)?;
    charge_trace(&trace, ledger);
    let node = match trace.end {
        Lane2End::Absent | Lane2End::Leaf { start: None } => return Ok(QueryResult::empty()),
        Lane2End::Leaf { start: Some(start) } => {
            return Ok(if verify_split(tree, q, start, ledger) {
                QueryResult::single(start + 1)
            } else {
                QueryResult::empty()
            });
        }
        Lane2End::Direct(v) => v,
        Lane2End::Best(Some(v)) if tree.cum(v) >= q.len() => v,
        Lane2End::Best(_) => return Ok(QueryResult::empty()),
    };
    let Some(start) = tree.text_position(tree.leftmost_leaf(node)) else {
        return Ok(QueryResult::empty());
    };
    Ok(if verify_split(tree, q, start, ledger) {
        QueryResult::at(tree, node)
    } else {
        QueryResult::empty()
    })
}
