//! Parallel suffix-trie query: split the pattern into p chunks, navigate
//! each from the root, then merge neighbouring results through the
//! halving dictionary in lg p rounds.

use serde::Serialize;

use crate::dict::PairDict;
use crate::error::{param, Result};
use crate::index::{IndexKind, NavStatus, NodeId, SuffixIndex};
use crate::ledger::{EventId, StepKind, StepLedger};
use crate::query::{ExecMode, QueryResult};
use crate::text::{Pattern, Symbol};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SubqueryAssignment {
    pub p: usize,
    pub lengths: Vec<usize>,
    /// 1-based start of each chunk.
    pub offsets: Vec<usize>,
}

impl SubqueryAssignment {
    pub fn rounds(&self) -> u32 {
        self.p.trailing_zeros()
    }

    pub(crate) fn chunk<'a>(&self, q: &'a [Symbol], i: usize) -> &'a [Symbol] {
        let start = self.offsets[i] - 1;
        &q[start..start + self.lengths[i]]
    }
}

/// Recursive halving: m splits into ⌈m/2⌉ | ⌊m/2⌋, lg p times.
pub fn assign_subqueries(m: usize, p: usize) -> Result<SubqueryAssignment> {
    if !p.is_power_of_two() {
        return param(format!("processor count {p} is not a power of two"));
    }
    if p >= 2 * m {
        return param(format!("processor count {p} must be below 2m = {}", 2 * m));
    }
    let mut lengths = vec![m];
    while lengths.len() < p {
        lengths = lengths.iter().flat_map(|&l| [l.div_ceil(2), l / 2]).collect();
    }
    let mut offsets = Vec::with_capacity(p);
    let mut at = 1;
    for &l in &lengths {
        offsets.push(at);
        at += l;
    }
    Ok(SubqueryAssignment { p, lengths, offsets })
}

fn walk(trie: &SuffixIndex, chunk: &[Symbol]) -> (Option<NodeId>, usize) {
    let out = trie.navigate_exact(chunk);
    match out.status {
        NavStatus::FullMatch => (Some(out.node), chunk.len()),
        _ => (None, out.matched + 1),
    }
}

/// Query with p lanes. Fails fast (empty result) on any missing chunk or
/// pair; the ledger still holds the work spent up to that point.
pub fn par_query_trie(
    trie: &SuffixIndex,
    dict: &PairDict,
    pat: &Pattern,
    p: usize,
    mode: ExecMode,
    ledger: &mut StepLedger,
) -> Result<QueryResult> {
    if trie.kind() != IndexKind::Trie {
        return param("trie query needs a suffix trie");
    }
    if dict.key_owner() != trie.id() {
        return param("dictionary was built for a different trie");
    }
    let q = pat.symbols();
    let asg = assign_subqueries(q.len(), p)?;

    let walks: Vec<(Option<NodeId>, usize)> = match mode {
        ExecMode::Simulated => (0..p).map(|i| walk(trie, asg.chunk(q, i))).collect(),
        ExecMode::Threaded => std::thread::scope(|s| {
            let handles: Vec<_> = (0..p)
                .map(|i| {
                    let chunk = asg.chunk(q, i);
                    s.spawn(move || walk(trie, chunk))
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("lane panicked")).collect()
        }),
    };

    let mut reps: Vec<NodeId> = Vec::with_capacity(p);
    let mut last: Vec<EventId> = Vec::with_capacity(p);
    for (i, &(node, chars)) in walks.iter().enumerate() {
        last.push(ledger.record(i, StepKind::Nav, chars as u64));
        reps.push(node.unwrap_or(NodeId::ROOT));
    }
    if walks.iter().any(|w| w.0.is_none()) {
        return Ok(QueryResult::empty());
    }

    let mut j = 1;
    while j < p {
        let groups: Vec<usize> = (0..p).step_by(2 * j).collect();
        let merged: Vec<Option<NodeId>> = match mode {
            ExecMode::Simulated => groups.iter().map(|&g| dict.probe(reps[g], reps[g + j])).collect(),
            ExecMode::Threaded => {
                let reps = &reps;
                std::thread::scope(|s| {
                    let handles: Vec<_> = groups
                        .iter()
                        .map(|&g| s.spawn(move || dict.probe(reps[g], reps[g + j])))
                        .collect();
                    handles.into_iter().map(|h| h.join().expect("lane panicked")).collect()
                })
            }
        };
        let mut failed = false;
        for (&g, w) in groups.iter().zip(merged) {
            last[g] = ledger
                .event(g, StepKind::Probe)
                .after(last[g], 0)
                .after(last[g + j], 0)
                .commit();
            match w {
                Some(w) => reps[g] = w,
                None => failed = true,
            }
        }
        if failed {
            return Ok(QueryResult::empty());
        }
        j *= 2;
    }
    Ok(QueryResult::at(trie, reps[0]))
}
