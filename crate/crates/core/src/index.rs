//! Suffix tries and patricia-compressed (generalized) suffix trees stored
//! in a flat node arena.

use std::collections::hash_map::Entry;
use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::Serialize;

use crate::error::{param, Error, Result};
use crate::text::{interleave, Symbol, Text};

static NEXT_INDEX_ID: AtomicU64 = AtomicU64::new(1);

pub(crate) fn fresh_index_id() -> u64 {
    NEXT_INDEX_ID.fetch_add(1, Ordering::Relaxed)
}

const NONE: u32 = u32::MAX;

/// Dense handle into a node arena. The root is always node 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    pub const ROOT: NodeId = NodeId(0);

    #[inline]
    pub fn idx(self) -> usize {
        self.0 as usize
    }

    pub fn is_root(self) -> bool {
        self == NodeId::ROOT
    }
}

/// Start of a suffix: `offset` (0-based) inside indexed sequence `seq`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LeafRef {
    pub seq: u32,
    pub offset: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexKind {
    Trie,
    Tree,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NavStatus {
    FullMatch,
    /// A non-discriminator symbol differed (exact navigation only).
    Mismatch,
    /// No child for the next discriminator.
    FellOff,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NavOutcome {
    pub node: NodeId,
    pub matched: usize,
    pub status: NavStatus,
}

/// Nodes visited root to final, with their cumulative skip values.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NavPath {
    pub nodes: Vec<(NodeId, usize)>,
    pub status: NavStatus,
}

impl NavPath {
    pub fn root_only() -> Self {
        NavPath { nodes: vec![(NodeId::ROOT, 0)], status: NavStatus::FullMatch }
    }

    pub fn last(&self) -> (NodeId, usize) {
        *self.nodes.last().expect("paths start at the root")
    }

    /// Number of nodes excluding the root.
    pub fn len_without_root(&self) -> usize {
        self.nodes.len().saturating_sub(1)
    }
}

/// Unsorted edge list plus per-node data, as produced by a builder or
/// read back from a container.
pub(crate) struct RawIndex {
    pub parent: Vec<u32>,
    pub cum: Vec<u32>,
    pub leaf: Vec<Option<LeafRef>>,
    pub edges: Vec<(u32, Symbol, u32)>,
}

#[derive(Clone, Debug)]
pub struct SuffixIndex {
    id: u64,
    kind: IndexKind,
    text: Text,
    stride: usize,
    seqs: Vec<Vec<Symbol>>,
    parent: Vec<u32>,
    cum: Vec<u32>,
    child_start: Vec<u32>,
    edges: Vec<(Symbol, NodeId)>,
    leaf: Vec<Option<LeafRef>>,
    leaf_span: Vec<(u32, u32)>,
    leaf_order: Vec<LeafRef>,
}

fn require_terminated(text: &Text) -> Result<()> {
    if text.delimiters() == 0 {
        return param("text must end with at least one delimiter");
    }
    Ok(())
}

/// Suffix trie: one node per distinct non-empty substring, every skip 1.
pub fn build_suffix_trie(text: &Text) -> Result<SuffixIndex> {
    require_terminated(text)?;
    let seq = text.symbols();
    let mut map: HashMap<(u32, Symbol), u32> = HashMap::new();
    let mut parent = vec![NONE];
    let mut cum = vec![0u32];
    let mut leaf = vec![None];
    for j in 0..seq.len() {
        let mut v = 0u32;
        for (t, &c) in seq.iter().enumerate().skip(j) {
            v = match map.entry((v, c)) {
                Entry::Occupied(e) => *e.get(),
                Entry::Vacant(e) => {
                    let id = parent.len() as u32;
                    parent.push(v);
                    cum.push((t - j + 1) as u32);
                    leaf.push(None);
                    *e.insert(id)
                }
            };
        }
        leaf[v as usize] = Some(LeafRef { seq: 0, offset: j as u32 });
    }
    let edges = map.into_iter().map(|((p, c), u)| (p, c, u)).collect();
    let raw = RawIndex { parent, cum, leaf, edges };
    SuffixIndex::assemble(IndexKind::Trie, text.clone(), 1, raw)
}

/// Suffix tree over the whole text (stride 1).
pub fn build_suffix_tree(text: &Text) -> Result<SuffixIndex> {
    build_generalized_tree(text, 1)
}

/// Generalized suffix tree over the `stride` interleaved subsequences of
/// `text`, built by naive suffix insertion with edge splitting.
///
/// Every subsequence must end in a distinct delimiter, which holds when
/// `text` carries at least `stride` delimiters.
pub fn build_generalized_tree(text: &Text, stride: usize) -> Result<SuffixIndex> {
    require_terminated(text)?;
    if stride == 0 || text.delimiters() < stride {
        return param(format!(
            "stride {stride} needs at least as many delimiters (text has {})",
            text.delimiters()
        ));
    }
    let seqs = interleave(text.symbols(), stride)?;
    let mut b = TreeBuilder::default();
    b.push(NONE, 0, None, LeafRef { seq: 0, offset: 0 });
    for (s, seq) in seqs.iter().enumerate() {
        for j in 0..seq.len() {
            b.insert(&seqs, LeafRef { seq: s as u32, offset: j as u32 })?;
        }
    }
    let mut edges = Vec::with_capacity(b.parent.len());
    for (p, ch) in b.children.iter().enumerate() {
        edges.extend(ch.iter().map(|&(c, u)| (p as u32, c, u)));
    }
    let raw = RawIndex { parent: b.parent, cum: b.cum, leaf: b.leaf, edges };
    SuffixIndex::assemble(IndexKind::Tree, text.clone(), stride, raw)
}

#[derive(Default)]
struct TreeBuilder {
    parent: Vec<u32>,
    cum: Vec<u32>,
    leaf: Vec<Option<LeafRef>>,
    label: Vec<LeafRef>,
    children: Vec<Vec<(Symbol, u32)>>,
}

impl TreeBuilder {
    fn push(&mut self, parent: u32, cum: u32, leaf: Option<LeafRef>, label: LeafRef) -> u32 {
        let id = self.parent.len() as u32;
        self.parent.push(parent);
        self.cum.push(cum);
        self.leaf.push(leaf);
        self.label.push(label);
        self.children.push(Vec::new());
        id
    }

    fn child(&self, v: u32, c: Symbol) -> Option<(usize, u32)> {
        self.children[v as usize]
            .iter()
            .enumerate()
            .find(|(_, &(s, _))| s == c)
            .map(|(i, &(_, u))| (i, u))
    }

    fn insert(&mut self, seqs: &[Vec<Symbol>], r: LeafRef) -> Result<()> {
        let suffix = &seqs[r.seq as usize][r.offset as usize..];
        let mut v = 0u32;
        let mut depth = 0usize;
        loop {
            let Some(&c) = suffix.get(depth) else {
                return Err(Error::Structure("suffix ended at an inner node".into()));
            };
            let Some((slot, u)) = self.child(v, c) else {
                let leaf = self.push(v, suffix.len() as u32, Some(r), r);
                self.children[v as usize].push((c, leaf));
                return Ok(());
            };
            let lab = self.label[u as usize];
            let edge = &seqs[lab.seq as usize][lab.offset as usize..];
            let end = self.cum[u as usize] as usize;
            let split = (depth + 1..end).find(|&t| suffix.get(t) != Some(&edge[t]));
            match split {
                None => {
                    v = u;
                    depth = end;
                }
                Some(t) => {
                    if t >= suffix.len() {
                        return Err(Error::Structure("suffix ended inside an edge".into()));
                    }
                    let w = self.push(v, t as u32, None, lab);
                    self.children[v as usize][slot] = (c, w);
                    self.parent[u as usize] = w;
                    self.children[w as usize].push((edge[t], u));
                    let leaf = self.push(w, suffix.len() as u32, Some(r), r);
                    self.children[w as usize].push((suffix[t], leaf));
                    return Ok(());
                }
            }
        }
    }
}

impl SuffixIndex {
    pub(crate) fn assemble(kind: IndexKind, text: Text, stride: usize, raw: RawIndex) -> Result<Self> {
        let n = raw.parent.len();
        if n == 0 || raw.cum.len() != n || raw.leaf.len() != n {
            return Err(Error::Structure("inconsistent node table".into()));
        }
        let seqs = interleave(text.symbols(), stride)?;
        let mut edges = raw.edges;
        edges.sort_unstable_by_key(|&(p, c, _)| (p, c));
        if edges.len() != n - 1 || edges.windows(2).any(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1)) {
            return Err(Error::Structure("node table is not a tree".into()));
        }
        let mut child_start = vec![0u32; n + 1];
        for &(p, _, u) in &edges {
            if p as usize >= n || u as usize >= n || raw.parent[u as usize] != p {
                return Err(Error::Structure(format!("edge {p}->{u} disagrees with parent table")));
            }
            child_start[p as usize + 1] += 1;
        }
        for i in 0..n {
            child_start[i + 1] += child_start[i];
        }
        let edges: Vec<(Symbol, NodeId)> = edges.into_iter().map(|(_, c, u)| (c, NodeId(u))).collect();

        let mut idx = SuffixIndex {
            id: fresh_index_id(),
            kind,
            text,
            stride,
            seqs,
            parent: raw.parent,
            cum: raw.cum,
            child_start,
            edges,
            leaf: raw.leaf,
            leaf_span: vec![(0, 0); n],
            leaf_order: Vec::new(),
        };
        idx.index_leaves()?;
        Ok(idx)
    }

    fn index_leaves(&mut self) -> Result<()> {
        let n = self.parent.len();
        let mut preorder = Vec::with_capacity(n);
        let mut stack = vec![NodeId::ROOT];
        while let Some(v) = stack.pop() {
            preorder.push(v);
            stack.extend(self.children(v).iter().rev().map(|&(_, u)| u));
        }
        if preorder.len() != n {
            return Err(Error::Structure("unreachable nodes in node table".into()));
        }
        let mut order = Vec::new();
        for &v in &preorder {
            if self.children(v).is_empty() {
                let r = self.leaf[v.idx()]
                    .ok_or_else(|| Error::Structure(format!("childless node {} has no suffix", v.0)))?;
                let lo = order.len() as u32;
                order.push(r);
                self.leaf_span[v.idx()] = (lo, lo + 1);
            }
        }
        for &v in preorder.iter().rev() {
            let ch = self.children(v);
            if let (Some(&(_, first)), Some(&(_, last))) = (ch.first(), ch.last()) {
                self.leaf_span[v.idx()] = (self.leaf_span[first.idx()].0, self.leaf_span[last.idx()].1);
            }
        }
        self.leaf_order = order;
        Ok(())
    }

    /// Process-unique identity used to reject cross-index probes.
    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn kind(&self) -> IndexKind {
        self.kind
    }

    pub fn text(&self) -> &Text {
        &self.text
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn seqs(&self) -> &[Vec<Symbol>] {
        &self.seqs
    }

    pub fn node_count(&self) -> usize {
        self.parent.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.parent.len() as u32).map(NodeId)
    }

    pub fn contains(&self, v: NodeId) -> bool {
        v.idx() < self.parent.len()
    }

    pub fn check(&self, v: NodeId) -> Result<()> {
        if self.contains(v) {
            Ok(())
        } else {
            Err(Error::ForeignNode(v.0))
        }
    }

    pub fn parent(&self, v: NodeId) -> Option<NodeId> {
        let p = self.parent[v.idx()];
        (p != NONE).then_some(NodeId(p))
    }

    /// Cumulative skip value: length of the node's longest string.
    #[inline]
    pub fn cum(&self, v: NodeId) -> usize {
        self.cum[v.idx()] as usize
    }

    /// Length of the incoming edge label (0 for the root).
    pub fn skip(&self, v: NodeId) -> usize {
        self.parent(v).map_or(0, |p| self.cum(v) - self.cum(p))
    }

    /// Length of the shortest string this node corresponds to.
    pub fn shortest_len(&self, v: NodeId) -> usize {
        self.parent(v).map_or(0, |p| self.cum(p) + 1)
    }

    pub fn children(&self, v: NodeId) -> &[(Symbol, NodeId)] {
        let lo = self.child_start[v.idx()] as usize;
        let hi = self.child_start[v.idx() + 1] as usize;
        &self.edges[lo..hi]
    }

    #[inline]
    pub fn child(&self, v: NodeId, c: Symbol) -> Option<NodeId> {
        let ch = self.children(v);
        ch.binary_search_by_key(&c, |&(s, _)| s).ok().map(|i| ch[i].1)
    }

    pub fn is_leaf(&self, v: NodeId) -> bool {
        self.children(v).is_empty()
    }

    pub fn leaf_ref(&self, v: NodeId) -> Option<LeafRef> {
        self.leaf[v.idx()]
    }

    /// Suffix of the leftmost leaf in the node's subtree.
    pub fn leftmost_leaf(&self, v: NodeId) -> LeafRef {
        self.leaf_order[self.leaf_span[v.idx()].0 as usize]
    }

    pub fn leaf_count(&self) -> usize {
        self.leaf_order.len()
    }

    pub fn leaves_under(&self, v: NodeId) -> &[LeafRef] {
        let (lo, hi) = self.leaf_span[v.idx()];
        &self.leaf_order[lo as usize..hi as usize]
    }

    /// The node's longest corresponding string.
    pub fn spell(&self, v: NodeId) -> &[Symbol] {
        let r = self.leftmost_leaf(v);
        let start = r.offset as usize;
        &self.seqs[r.seq as usize][start..start + self.cum(v)]
    }

    /// Suffix of an indexed sequence starting at `r`.
    pub fn suffix(&self, r: LeafRef) -> &[Symbol] {
        &self.seqs[r.seq as usize][r.offset as usize..]
    }

    /// 0-based position in the base text, or `None` inside the delimiter tail.
    pub fn text_position(&self, r: LeafRef) -> Option<usize> {
        let pos = r.seq as usize + r.offset as usize * self.stride;
        (pos < self.text.base_len()).then_some(pos)
    }

    /// Sorted 1-based text positions of all leaves below `v`.
    pub fn occurrences(&self, v: NodeId) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .leaves_under(v)
            .iter()
            .filter_map(|&r| self.text_position(r))
            .map(|p| p + 1)
            .collect();
        out.sort_unstable();
        out
    }

    /// Patricia navigation: only discriminator symbols are compared; stops
    /// at the first node with cumulative skip value ≥ |pat|.
    pub fn navigate(&self, pat: &[Symbol]) -> NavOutcome {
        let mut v = NodeId::ROOT;
        while self.cum(v) < pat.len() {
            match self.child(v, pat[self.cum(v)]) {
                Some(u) => v = u,
                None => return NavOutcome { node: v, matched: self.cum(v), status: NavStatus::FellOff },
            }
        }
        NavOutcome { node: v, matched: pat.len(), status: NavStatus::FullMatch }
    }

    pub fn record_path(&self, pat: &[Symbol]) -> NavPath {
        let mut nodes = vec![(NodeId::ROOT, 0)];
        let mut v = NodeId::ROOT;
        while self.cum(v) < pat.len() {
            match self.child(v, pat[self.cum(v)]) {
                Some(u) => {
                    v = u;
                    nodes.push((u, self.cum(u)));
                }
                None => return NavPath { nodes, status: NavStatus::FellOff },
            }
        }
        NavPath { nodes, status: NavStatus::FullMatch }
    }

    /// Navigation comparing every symbol of every edge.
    pub fn navigate_exact(&self, pat: &[Symbol]) -> NavOutcome {
        let mut v = NodeId::ROOT;
        while self.cum(v) < pat.len() {
            let depth = self.cum(v);
            let Some(u) = self.child(v, pat[depth]) else {
                return NavOutcome { node: v, matched: depth, status: NavStatus::FellOff };
            };
            let edge = self.spell(u);
            let end = self.cum(u).min(pat.len());
            if let Some(t) = (depth + 1..end).find(|&t| edge[t] != pat[t]) {
                return NavOutcome { node: u, matched: t, status: NavStatus::Mismatch };
            }
            v = u;
        }
        NavOutcome { node: v, matched: pat.len(), status: NavStatus::FullMatch }
    }

    /// Locus of `s`: the shallowest node whose longest string has `s` as a
    /// prefix, if `s` occurs in an indexed sequence.
    pub fn locus(&self, s: &[Symbol]) -> Option<NodeId> {
        let out = self.navigate_exact(s);
        (out.status == NavStatus::FullMatch).then_some(out.node)
    }

    /// Shallowest ancestor-or-self of `v` with cumulative skip ≥ `len`.
    pub fn shallowest_covering(&self, v: NodeId, len: usize) -> NodeId {
        let mut x = v;
        while let Some(p) = self.parent(x) {
            if self.cum(p) < len {
                break;
            }
            x = p;
        }
        x
    }

    /// Number of edges on the longest root-to-leaf path.
    pub fn height(&self) -> usize {
        let mut depth = vec![0usize; self.node_count()];
        let mut best = 0;
        let mut stack = vec![NodeId::ROOT];
        while let Some(v) = stack.pop() {
            for &(_, u) in self.children(v) {
                depth[u.idx()] = depth[v.idx()] + 1;
                best = best.max(depth[u.idx()]);
                stack.push(u);
            }
        }
        best
    }

    /// Compares `pat[range]` against the suffix at `r`, shifted by the range start.
    pub fn matches_at(&self, r: LeafRef, pat: &[Symbol], range: std::ops::Range<usize>) -> bool {
        let suffix = self.suffix(r);
        suffix.len() >= range.end && suffix[range.clone()] == pat[range]
    }

    /// Checks the symbols skipped by patricia navigation against the
    /// leftmost leaf below `v`.
    pub fn verify_against_text(&self, v: NodeId, pat: &[Symbol]) -> bool {
        self.matches_at(self.leftmost_leaf(v), pat, 0..pat.len())
    }
}
