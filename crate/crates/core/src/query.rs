//! Query results, execution modes and the sequential baseline.

use serde::Serialize;

use crate::index::{IndexKind, NavStatus, NodeId, SuffixIndex};
use crate::ledger::{StepKind, StepLedger};
use crate::text::Pattern;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecMode {
    /// Single thread, deterministic schedule.
    #[default]
    Simulated,
    /// Lanes run on scoped OS threads.
    Threaded,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct QueryResult {
    /// Node whose leaves are the occurrences, when the pattern was found.
    pub node: Option<NodeId>,
    /// Sorted 1-based start positions.
    pub positions: Vec<usize>,
}

impl QueryResult {
    pub fn empty() -> Self {
        QueryResult::default()
    }

    pub fn count(&self) -> usize {
        self.positions.len()
    }

    pub fn found(&self) -> bool {
        !self.positions.is_empty()
    }

    pub(crate) fn at(index: &SuffixIndex, v: NodeId) -> Self {
        QueryResult { node: Some(v), positions: index.occurrences(v) }
    }

    pub(crate) fn single(pos: usize) -> Self {
        QueryResult { node: None, positions: vec![pos] }
    }
}

/// One-lane query: walk from the root, then verify skipped symbols on a
/// tree (trie navigation already compares every symbol).
pub fn seq_query(index: &SuffixIndex, pat: &Pattern, ledger: &mut StepLedger) -> QueryResult {
    let q = pat.symbols();
    let path = index.record_path(q);
    let mut prev = 0;
    for &(_, c) in &path.nodes[1..] {
        let now = c.min(q.len());
        ledger.record(0, StepKind::Nav, (now - prev) as u64);
        prev = now;
    }
    if path.status != NavStatus::FullMatch {
        return QueryResult::empty();
    }
    let (v, _) = path.last();
    if index.kind() == IndexKind::Tree {
        ledger.event(0, StepKind::Compare).work(q.len() as u64).verify().commit();
        if !index.verify_against_text(v, q) {
            return QueryResult::empty();
        }
    }
    QueryResult::at(index, v)
}

/// Reference answer: 1-based starts of every (possibly overlapping) match.
pub fn oracle_scan(text: &[u8], pat: &[u8]) -> Vec<usize> {
    if pat.is_empty() || pat.len() > text.len() {
        return Vec::new();
    }
    text.windows(pat.len())
        .enumerate()
        .filter(|(_, w)| *w == pat)
        .map(|(i, _)| i + 1)
        .collect()
}
