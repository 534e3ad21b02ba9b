//! Node-pair dictionaries: halving pairs for suffix tries and suffix
//! trees, and the cross-layer deinterleaving maps.

use std::collections::HashMap;

use crate::error::{param, Error, Result};
use crate::index::{IndexKind, NodeId, SuffixIndex};

/// Map from an ordered node pair to a node.
///
/// Keys are nodes of the index with id `key_owner`; values are nodes of
/// `value_owner` (the same index for halving dictionaries).
#[derive(Clone, Debug)]
pub struct PairDict {
    key_owner: u64,
    value_owner: u64,
    map: HashMap<(NodeId, NodeId), NodeId>,
}

impl PairDict {
    pub(crate) fn new(key_owner: u64, value_owner: u64) -> Self {
        PairDict { key_owner, value_owner, map: HashMap::new() }
    }

    pub(crate) fn insert(&mut self, a: NodeId, b: NodeId, w: NodeId) -> Result<()> {
        if let Some(prev) = self.map.insert((a, b), w) {
            return Err(Error::Structure(format!(
                "pair ({}, {}) maps to both {} and {}",
                a.0, b.0, prev.0, w.0
            )));
        }
        Ok(())
    }

    pub fn key_owner(&self) -> u64 {
        self.key_owner
    }

    pub fn value_owner(&self) -> u64 {
        self.value_owner
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    #[inline]
    pub fn probe(&self, a: NodeId, b: NodeId) -> Option<NodeId> {
        self.map.get(&(a, b)).copied()
    }

    /// Probe that rejects node ids from an index other than the key owner.
    pub fn probe_checked(&self, keys: &SuffixIndex, a: NodeId, b: NodeId) -> Result<Option<NodeId>> {
        if keys.id() != self.key_owner {
            return param("probe with nodes of a different index");
        }
        keys.check(a)?;
        keys.check(b)?;
        Ok(self.probe(a, b))
    }

    /// Entries as `(a, b, value)` triples sorted by key.
    pub fn entries(&self) -> Vec<(NodeId, NodeId, NodeId)> {
        let mut v: Vec<_> = self.map.iter().map(|(&(a, b), &w)| (a, b, w)).collect();
        v.sort_unstable();
        v
    }

    pub(crate) fn from_entries(
        key_owner: u64,
        value_owner: u64,
        entries: impl IntoIterator<Item = (NodeId, NodeId, NodeId)>,
    ) -> Result<Self> {
        let mut d = PairDict::new(key_owner, value_owner);
        for (a, b, w) in entries {
            d.insert(a, b, w)?;
        }
        Ok(d)
    }
}

/// For every non-root trie node ω of depth d: `(α1, α2) → ω`, where α1
/// spells the first ⌈d/2⌉ symbols of ω and α2 the rest (root if empty).
pub fn build_trie_halving_dict(trie: &SuffixIndex) -> Result<PairDict> {
    if trie.kind() != IndexKind::Trie {
        return param("trie halving dictionary needs a suffix trie");
    }
    let seq = &trie.seqs()[0];
    let len = seq.len();
    // paths[i][d]: node spelling seq[i..i+d]
    let mut paths: Vec<Vec<NodeId>> = Vec::with_capacity(len);
    for i in 0..len {
        let mut path = Vec::with_capacity(len - i + 1);
        let mut v = NodeId::ROOT;
        path.push(v);
        for &c in &seq[i..] {
            v = trie
                .child(v, c)
                .ok_or_else(|| Error::Structure("suffix missing from trie".into()))?;
            path.push(v);
        }
        paths.push(path);
    }
    let mut seen = vec![false; trie.node_count()];
    let mut dict = PairDict::new(trie.id(), trie.id());
    for (i, path) in paths.iter().enumerate() {
        for (d, &w) in path.iter().enumerate().skip(1) {
            if std::mem::replace(&mut seen[w.idx()], true) {
                continue;
            }
            let h = d.div_ceil(2);
            dict.insert(path[h], paths.get(i + h).map_or(NodeId::ROOT, |p| p[d - h]), w)?;
        }
    }
    Ok(dict)
}

/// For every non-root tree node ω whose shortest string S has length L:
/// β1 is the shallowest ancestor-or-self with cumulative skip ≥ ⌈L/2⌉ and
/// β2 the locus of S with its first cum(β1) symbols removed (root when
/// nothing remains).
pub fn build_tree_halving_dict(tree: &SuffixIndex) -> Result<PairDict> {
    if tree.kind() != IndexKind::Tree {
        return param("tree halving dictionary needs a suffix tree");
    }
    let mut dict = PairDict::new(tree.id(), tree.id());
    for w in tree.nodes().skip(1) {
        let (b1, b2) = tree_halving_pair(tree, w)?;
        dict.insert(b1, b2, w)?;
    }
    Ok(dict)
}

pub(crate) fn tree_halving_pair(tree: &SuffixIndex, w: NodeId) -> Result<(NodeId, NodeId)> {
    let l = tree.shortest_len(w);
    let b1 = tree.shallowest_covering(w, l.div_ceil(2));
    let split = tree.cum(b1);
    if split >= l {
        return Ok((b1, NodeId::ROOT));
    }
    let rest = &tree.spell(w)[split..l];
    let b2 = tree
        .locus(rest)
        .ok_or_else(|| Error::Structure(format!("right half of node {} is not indexed", w.0)))?;
    Ok((b1, b2))
}
