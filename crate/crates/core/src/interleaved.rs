//! Layered k-interleaved suffix trees and the layered parallel query.
//!
//! Layer k indexes all suffixes of the k interleaved subsequences of the
//! text. A layer dictionary maps a pair of layer-k nodes (the loci of the
//! odd and even symbols of a string) to the layer-k/2 node of the string.

use serde::Serialize;

use crate::dict::PairDict;
use crate::error::{param, Error, Result};
use crate::index::{build_generalized_tree, NavPath, NavStatus, NodeId, SuffixIndex};
use crate::ledger::{EventId, StepKind, StepLedger};
use crate::query::{ExecMode, QueryResult};
use crate::text::{interleave, make_text, Pattern, Symbol};

/// Generalized suffix tree over the `k` interleaved subsequences of the
/// text extended by `k` delimiters. Leaf (seq i, offset o) starts at text
/// position i + o·k.
pub fn build_layer(raw: &[u8], k: usize) -> Result<SuffixIndex> {
    if !k.is_power_of_two() {
        return param(format!("layer stride {k} is not a power of two"));
    }
    build_generalized_tree(&make_text(raw, k), k)
}

/// Entry `(ω1, ω2) → ω` for every non-root node ω of `lower`, where ω1 and
/// ω2 are the `upper` loci of the odd and even symbols of ω's shortest
/// string (ω2 is the root when that part is empty).
pub fn build_layer_dict(upper: &SuffixIndex, lower: &SuffixIndex) -> Result<PairDict> {
    if upper.stride() != 2 * lower.stride() || upper.text().raw() != lower.text().raw() {
        return param("layers must share the text and differ by a factor of two in stride");
    }
    let mut dict = PairDict::new(upper.id(), lower.id());
    for w in lower.nodes().skip(1) {
        let s = &lower.spell(w)[..lower.shortest_len(w)];
        let odd: Vec<Symbol> = s.iter().step_by(2).copied().collect();
        let even: Vec<Symbol> = s.iter().skip(1).step_by(2).copied().collect();
        let missing = || Error::Structure(format!("half of lower node {} is not in the upper layer", w.0));
        let w1 = upper.locus(&odd).ok_or_else(missing)?;
        let w2 = if even.is_empty() { NodeId::ROOT } else { upper.locus(&even).ok_or_else(missing)? };
        dict.insert(w1, w2, w)?;
    }
    Ok(dict)
}

/// Layers for strides 1, 2, 4, …, p and the dictionaries between them.
#[derive(Clone, Debug)]
pub struct LayeredIndex {
    layers: Vec<SuffixIndex>,
    // dicts[t]: pairs of layers[t + 1] to nodes of layers[t]
    dicts: Vec<PairDict>,
}

pub fn build_layered_index(raw: &[u8], p: usize) -> Result<LayeredIndex> {
    if !p.is_power_of_two() || p < 2 {
        return param(format!("layer count needs a power of two p ≥ 2, got {p}"));
    }
    let mut layers = Vec::new();
    let mut k = 1;
    while k <= p {
        layers.push(build_layer(raw, k)?);
        k *= 2;
    }
    let dicts = layers
        .windows(2)
        .map(|w| build_layer_dict(&w[1], &w[0]))
        .collect::<Result<Vec<_>>>()?;
    Ok(LayeredIndex { layers, dicts })
}

impl LayeredIndex {
    pub(crate) fn from_parts(layers: Vec<SuffixIndex>, dicts: Vec<PairDict>) -> Result<Self> {
        if layers.len() < 2 || dicts.len() + 1 != layers.len() {
            return Err(Error::Structure("layer and dictionary counts disagree".into()));
        }
        for (t, d) in dicts.iter().enumerate() {
            if layers[t].stride() != 1 << t || d.key_owner() != layers[t + 1].id() || d.value_owner() != layers[t].id() {
                return Err(Error::Structure(format!("layer dictionary {t} does not match its layers")));
            }
        }
        if layers.last().is_some_and(|l| l.stride() != 1 << (layers.len() - 1)) {
            return Err(Error::Structure("top layer has the wrong stride".into()));
        }
        Ok(LayeredIndex { layers, dicts })
    }

    /// Largest stride.
    pub fn p(&self) -> usize {
        self.layers.last().map_or(1, |l| l.stride())
    }

    pub fn layers(&self) -> &[SuffixIndex] {
        &self.layers
    }

    pub fn layer(&self, k: usize) -> Option<&SuffixIndex> {
        k.is_power_of_two().then(|| self.layers.get(k.trailing_zeros() as usize)).flatten()
    }

    /// Dictionary from layer `k` pairs to layer `k/2` nodes.
    pub fn dict(&self, k: usize) -> Option<&PairDict> {
        (k >= 2 && k.is_power_of_two()).then(|| self.dicts.get(k.trailing_zeros() as usize - 1)).flatten()
    }
}

/// Result of merging two upper-layer paths.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MergeOutcome {
    pub path: NavPath,
    pub probes: usize,
    /// Every probed pair, in order.
    pub probed: Vec<(NodeId, NodeId)>,
}

/// Merges the paths of the odd and even parts of a string into the path of
/// the string in the `lower` layer. The pair covering shortest-string
/// length L is (locus of ⌈L/2⌉ on `p1`, locus of ⌊L/2⌋ on `p2`); sweeping L
/// upward advances `p1` exactly when cum1 ≤ cum2. Hits are kept only while
/// their cum increases, and the output stops at the first node with
/// cum ≥ `target`. The status is `FellOff` if `target` was not reached.
pub fn deinterleave_paths(
    p1: &NavPath,
    p2: &NavPath,
    dict: &PairDict,
    lower: &SuffixIndex,
    target: usize,
) -> MergeOutcome {
    let (a, b) = (&p1.nodes, &p2.nodes);
    let (mut i, mut j) = (0, 0);
    let mut nodes = vec![(NodeId::ROOT, 0)];
    let mut probed = Vec::new();
    let mut reached = target == 0;
    while !reached {
        if a[i].1 <= b[j].1 {
            if i + 1 >= a.len() {
                break;
            }
            i += 1;
        } else {
            if j + 1 >= b.len() {
                break;
            }
            j += 1;
        }
        let key = (a[i].0, b[j].0);
        probed.push(key);
        if let Some(w) = dict.probe(key.0, key.1) {
            let cum = lower.cum(w);
            if cum > nodes.last().map_or(0, |n| n.1) {
                nodes.push((w, cum));
                reached = cum >= target;
            }
        }
    }
    let status = if reached { NavStatus::FullMatch } else { NavStatus::FellOff };
    MergeOutcome { probes: probed.len(), probed, path: NavPath { nodes, status } }
}

/// Merges performed while going from layer `k` to layer `k/2`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayerMerge {
    pub k: usize,
    pub merges: Vec<MergeOutcome>,
}

impl LayerMerge {
    pub fn probes(&self) -> usize {
        self.merges.iter().map(|m| m.probes).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InterleavedTrace {
    pub j: usize,
    /// Subsequence lengths per lane.
    pub lane_lens: Vec<usize>,
    /// Top-layer paths recorded by the lanes.
    pub lane_paths: Vec<NavPath>,
    pub layers: Vec<LayerMerge>,
    /// Deepest node of the final layer-1 path when it covers the pattern.
    pub node: Option<NodeId>,
}

/// Per-layer summary for reports.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct LayerStat {
    pub k: usize,
    pub probes: usize,
    pub max_pair_probes: usize,
    pub max_pair_path_len: usize,
}

impl InterleavedTrace {
    /// `(k, probes, |π1| + |π2|)` for every merge, paths counted without
    /// their roots.
    pub fn pair_loads(&self) -> Vec<(usize, usize, usize)> {
        let mut paths = self.lane_paths.clone();
        let mut out = Vec::new();
        for layer in &self.layers {
            let half = layer.k / 2;
            for (i, mo) in layer.merges.iter().enumerate() {
                let len = paths[i].len_without_root() + paths[i + half].len_without_root();
                out.push((layer.k, mo.probes, len));
            }
            paths = layer.merges.iter().map(|m| m.path.clone()).collect();
        }
        out
    }

    pub fn layer_stats(&self) -> Vec<LayerStat> {
        let mut paths = self.lane_paths.clone();
        let mut out = Vec::new();
        for layer in &self.layers {
            let half = layer.k / 2;
            let max_len = (0..half)
                .map(|i| paths[i].len_without_root() + paths[i + half].len_without_root())
                .max()
                .unwrap_or(0);
            out.push(LayerStat {
                k: layer.k,
                probes: layer.probes(),
                max_pair_probes: layer.merges.iter().map(|m| m.probes).max().unwrap_or(0),
                max_pair_path_len: max_len,
            });
            paths = layer.merges.iter().map(|m| m.path.clone()).collect();
        }
        out
    }
}

fn check_query(index: &LayeredIndex, m: usize, j: usize) -> Result<()> {
    if !j.is_power_of_two() || j < 2 || j > index.p() {
        return param(format!("lane count {j} must be a power of two in 2..={}", index.p()));
    }
    if j >= 2 * m {
        return param(format!("lane count {j} must be below 2m = {}", 2 * m));
    }
    Ok(())
}

fn run_par<T: Send>(mode: ExecMode, n: usize, f: impl Fn(usize) -> T + Sync) -> Vec<T> {
    match mode {
        ExecMode::Simulated => (0..n).map(f).collect(),
        ExecMode::Threaded => std::thread::scope(|s| {
            let f = &f;
            let hs: Vec<_> = (0..n).map(|i| s.spawn(move || f(i))).collect();
            hs.into_iter().map(|h| h.join().expect("lane panicked")).collect()
        }),
    }
}

/// Runs the lanes and all merge layers; stops early (with `node = None`)
/// when a lane or a merge cannot cover its subsequence.
pub fn trace_interleaved(index: &LayeredIndex, q: &[Symbol], j: usize, mode: ExecMode) -> Result<InterleavedTrace> {
    let m = q.len();
    check_query(index, m, j)?;
    let subs = interleave(q, j)?;
    let top = index.layer(j).expect("checked lane count");
    let lane_paths = run_par(mode, j, |i| top.record_path(&subs[i]));
    let mut trace = InterleavedTrace {
        j,
        lane_lens: subs.iter().map(Vec::len).collect(),
        lane_paths,
        layers: Vec::new(),
        node: None,
    };
    if trace.lane_paths.iter().any(|p| p.status != NavStatus::FullMatch) {
        return Ok(trace);
    }
    let mut paths = trace.lane_paths.clone();
    let mut k = j;
    while k > 1 {
        let half = k / 2;
        let lower = index.layer(half).expect("layer present");
        let dict = index.dict(k).expect("dictionary present");
        let merges = run_par(mode, half, |i| {
            let target = m.saturating_sub(i).div_ceil(half);
            deinterleave_paths(&paths[i], &paths[i + half], dict, lower, target)
        });
        let ok = merges.iter().all(|mo| mo.path.status == NavStatus::FullMatch);
        paths = merges.iter().map(|mo| mo.path.clone()).collect();
        trace.layers.push(LayerMerge { k, merges });
        if !ok {
            return Ok(trace);
        }
        k = half;
    }
    let (v, c) = paths[0].last();
    trace.node = (c >= m).then_some(v);
    Ok(trace)
}

/// Replays a trace into the ledger. The merge of one pair at layer k is
/// shared by the 2j/k lanes assigned to it.
pub fn charge_interleaved(trace: &InterleavedTrace, ledger: &mut StepLedger) {
    let j = trace.j;
    let mut last: Vec<EventId> = trace
        .lane_paths
        .iter()
        .zip(&trace.lane_lens)
        .enumerate()
        .map(|(i, (p, &len))| {
            let (_, c) = p.last();
            let chars = if p.status == NavStatus::FullMatch { len } else { (c + 1).min(len) };
            ledger.record(i, StepKind::Nav, chars as u64)
        })
        .collect();
    for layer in &trace.layers {
        let half = layer.k / 2;
        let share = (2 * j / layer.k) as u64;
        for (i, mo) in layer.merges.iter().enumerate() {
            let p = mo.probes as u64;
            last[i] = ledger
                .event(i, StepKind::Probe)
                .work(p)
                .duration(p.div_ceil(share))
                .after(last[i], 0)
                .after(last[i + half], 0)
                .commit();
        }
    }
}

/// Layered query with j lanes: navigate the j-interleaved subsequences of
/// the pattern in layer j, merge pairwise down to layer 1, then verify.
pub fn par_query_interleaved(
    index: &LayeredIndex,
    pat: &Pattern,
    j: usize,
    mode: ExecMode,
    ledger: &mut StepLedger,
) -> Result<QueryResult> {
    let q = pat.symbols();
    let trace = trace_interleaved(index, q, j, mode)?;
    charge_interleaved(&trace, ledger);
    let Some(v) = trace.node else {
        return Ok(QueryResult::empty());
    };
    for (i, &len) in trace.lane_lens.iter().enumerate() {
        ledger.event(i, StepKind::Compare).work(len as u64).verify().commit();
    }
    let base = &index.layers[0];
    Ok(if base.verify_against_text(v, q) { QueryResult::at(base, v) } else { QueryResult::empty() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::build_suffix_tree;
    use crate::query::oracle_scan;
    use crate::text::{base_symbols, render};
    use proptest::prelude::*;

    fn node(t: &SuffixIndex, s: &str) -> NodeId {
        t.locus(&base_symbols(s.as_bytes())).unwrap()
    }

    #[test]
    fn layer_two_of_abracadabra() {
        let t2 = build_layer(b"ABRACADABRA", 2).unwrap();
        assert_eq!(render(&t2.seqs()[0]), "ARCDBA%");
        assert_eq!(render(&t2.seqs()[1]), "BAAAR$");
        let t1 = build_layer(b"ABRACADABRA", 1).unwrap();
        assert_eq!(t1.node_count(), build_suffix_tree(&make_text(b"ABRACADABRA", 1)).unwrap().node_count());
        assert!(build_layer(b"ABC", 3).is_err());
    }

    fn base_leaves(t: &SuffixIndex) -> usize {
        t.nodes()
            .filter(|&v| t.is_leaf(v))
            .filter(|&v| !t.suffix(t.leaf_ref(v).unwrap())[0].is_delimiter())
            .count()
    }

    #[test]
    fn layer_dict_examples() {
        let idx = build_layered_index(b"ABRACADABRA", 2).unwrap();
        let (t1, t2) = (idx.layer(1).unwrap(), idx.layer(2).unwrap());
        let d = idx.dict(2).unwrap();
        assert_eq!(d.probe(node(t2, "A"), node(t2, "BA")), Some(node(t1, "ABRA")));
        assert_eq!(d.probe(node(t2, "A"), NodeId::ROOT), Some(node(t1, "A")));
        assert_eq!(t2.cum(node(t2, "BA")), 2);
        assert_eq!(crate::text::deinterleaved_len(1, 2), 2);
        assert_eq!(d.len(), t1.node_count() - 1);
        assert_eq!(base_leaves(t1), 11);
        assert_eq!(base_leaves(t2), 11);
    }

    #[test]
    fn layered_structure() {
        let i2 = build_layered_index(b"ABRACADABRA", 2).unwrap();
        assert_eq!(i2.layers().len(), 2);
        let i4 = build_layered_index(b"ABRACADABRA", 4).unwrap();
        assert_eq!(i4.layers().len(), 3);
        assert_eq!(i4.dict(2).unwrap().len(), i4.layer(1).unwrap().node_count() - 1);
        assert_eq!(i4.dict(4).unwrap().len(), i4.layer(2).unwrap().node_count() - 1);
        assert!(i4.dict(8).is_none());
        assert!(build_layered_index(b"AB", 3).is_err());
        assert!(build_layered_index(b"AB", 1).is_err());
    }

    #[test]
    fn deinterleave_abra() {
        let idx = build_layered_index(b"ABRACADABRA", 2).unwrap();
        let (t1, t2) = (idx.layer(1).unwrap(), idx.layer(2).unwrap());
        let p1 = t2.record_path(&base_symbols(b"AR"));
        let p2 = t2.record_path(&base_symbols(b"BA"));
        assert_eq!(p1.nodes.len(), 3);
        assert_eq!(p2.nodes.len(), 2);
        let out = deinterleave_paths(&p1, &p2, idx.dict(2).unwrap(), t1, 4);
        let (a, ba) = (node(t2, "A"), node(t2, "BA"));
        assert_eq!(out.probed, vec![(a, NodeId::ROOT), (a, ba)]);
        assert_eq!(out.path.nodes, t1.record_path(&base_symbols(b"ABRA")).nodes);

        let root = NavPath::root_only();
        let out = deinterleave_paths(&root, &root, idx.dict(2).unwrap(), t1, 3);
        assert_eq!(out.probes, 0);
        assert_eq!(out.path.len_without_root(), 0);
    }

    fn q(idx: &LayeredIndex, pat: &[u8], j: usize, mode: ExecMode) -> QueryResult {
        par_query_interleaved(idx, &Pattern::new(pat).unwrap(), j, mode, &mut StepLedger::new(j)).unwrap()
    }

    #[test]
    fn query_examples() {
        let idx = build_layered_index(b"ABRACADABRA", 2).unwrap();
        assert_eq!(q(&idx, b"ABRA", 2, ExecMode::Simulated).positions, vec![1, 8]);
        assert_eq!(q(&idx, b"ABR", 2, ExecMode::Simulated).positions, vec![1, 8]);
        assert!(!q(&idx, b"ABZ", 2, ExecMode::Threaded).found());
        let mut l = StepLedger::new(2);
        assert!(par_query_interleaved(&idx, &Pattern::new(b"A").unwrap(), 2, ExecMode::Simulated, &mut l).is_err());
        assert!(par_query_interleaved(&idx, &Pattern::new(b"ABRA").unwrap(), 4, ExecMode::Simulated, &mut l).is_err());
    }

    /// Every merged path equals direct navigation of the deinterleaved
    /// subsequence in the lower layer, truncated at its length.
    fn check_recovery(idx: &LayeredIndex, pat: &[Symbol], tr: &InterleavedTrace) {
        for layer in &tr.layers {
            let half = layer.k / 2;
            let subs = interleave(pat, half).unwrap();
            let lower = idx.layer(half).unwrap();
            for (i, mo) in layer.merges.iter().enumerate() {
                let want = lower.record_path(&subs[i]);
                assert_eq!(mo.path.nodes, want.nodes, "layer {} pair {i}", layer.k);
            }
        }
    }

    proptest! {
        #[test]
        fn equals_oracle(text in "[AB]{1,48}", at in 0usize..48, len in 1usize..24, lg in 1u32..4, present: bool) {
            let j = 1usize << lg;
            let b = text.as_bytes();
            let pat: Vec<u8> = if present {
                let s = at % b.len();
                b[s..(s + len).min(b.len())].to_vec()
            } else {
                (0..len).map(|i| if (at >> (i % 6)) & 1 == 1 { b'A' } else { b'B' }).collect()
            };
            prop_assume!(j < 2 * pat.len());
            let idx = build_layered_index(b, j).unwrap();
            let want = oracle_scan(b, &pat);
            let r = q(&idx, &pat, j, ExecMode::Simulated);
            prop_assert_eq!(&r.positions, &want);
            let syms = base_symbols(&pat);
            let t1 = trace_interleaved(&idx, &syms, j, ExecMode::Simulated).unwrap();
            let t2 = trace_interleaved(&idx, &syms, j, ExecMode::Threaded).unwrap();
            prop_assert_eq!(&t1, &t2);
            for (_, probes, len) in t1.pair_loads() {
                prop_assert!(probes <= len);
            }
            if !want.is_empty() {
                check_recovery(&idx, &syms, &t1);
            }
        }

        #[test]
        fn structural_properties(text in "[ABC]{1,40}", lg in 0u32..4) {
            let k = 1usize << lg;
            let t = build_layer(text.as_bytes(), k).unwrap();
            let n = text.len();
            prop_assert!(t.height() <= (n + k).div_ceil(k));
            prop_assert_eq!(base_leaves(&t), n);
        }
    }
}
