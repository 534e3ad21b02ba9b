//! Suffix links, the suffix-links tree and binary-lifting level ancestors.

use crate::error::{param, Error, Result};
use crate::index::{IndexKind, NodeId, SuffixIndex};

const NONE: u32 = u32::MAX;

/// Suffix-link structure of one suffix tree.
///
/// Following a suffix link drops exactly one leading symbol, so a node's
/// depth in the suffix-links tree equals its cumulative skip value.
#[derive(Clone, Debug)]
pub struct Ancestry {
    owner: u64,
    links: Vec<u32>,
    // jump[j][v]: 2^j-th ancestor of v in the suffix-links tree
    jump: Vec<Vec<u32>>,
    // up[j][v]: 2^j-th ancestor of v in the suffix tree (root maps to itself)
    up: Vec<Vec<u32>>,
}

pub fn build_ancestry(tree: &SuffixIndex) -> Result<Ancestry> {
    if tree.kind() != IndexKind::Tree {
        return param("suffix links are only built for suffix trees");
    }
    let mut links = vec![NONE; tree.node_count()];
    for v in tree.nodes().skip(1) {
        let tail = &tree.spell(v)[1..];
        let target = tree
            .locus(tail)
            .filter(|&u| tree.cum(u) == tail.len())
            .ok_or_else(|| Error::Structure(format!("node {} has no suffix-link target", v.0)))?;
        links[v.idx()] = target.0;
    }
    Ancestry::from_links(tree, links)
}

fn levels_for(max: usize) -> usize {
    (usize::BITS - max.leading_zeros()).max(1) as usize
}

impl Ancestry {
    /// Rebuilds the lifting tables from stored suffix links.
    pub(crate) fn from_links(tree: &SuffixIndex, links: Vec<u32>) -> Result<Self> {
        let n = tree.node_count();
        if links.len() != n || links[0] != NONE {
            return Err(Error::Structure("suffix-link table size or root entry invalid".into()));
        }
        for v in tree.nodes().skip(1) {
            let t = links[v.idx()];
            if t as usize >= n || tree.cum(NodeId(t)) + 1 != tree.cum(v) {
                return Err(Error::Structure(format!("bad suffix link from node {}", v.0)));
            }
        }
        let max_cum = tree.nodes().map(|v| tree.cum(v)).max().unwrap_or(0);
        let base: Vec<u32> = links.iter().map(|&t| if t == NONE { 0 } else { t }).collect();
        let jump = lift(base, levels_for(max_cum));
        let parents: Vec<u32> = tree.nodes().map(|v| tree.parent(v).map_or(0, |p| p.0)).collect();
        let up = lift(parents, levels_for(tree.height()));
        Ok(Ancestry { owner: tree.id(), links, jump, up })
    }

    pub fn owner(&self) -> u64 {
        self.owner
    }

    pub fn link(&self, v: NodeId) -> Option<NodeId> {
        let t = self.links[v.idx()];
        (t != NONE).then_some(NodeId(t))
    }

    pub(crate) fn links(&self) -> &[u32] {
        &self.links
    }

    fn check(&self, tree: &SuffixIndex, v: NodeId) -> Result<()> {
        if tree.id() != self.owner {
            return param("ancestry belongs to a different index");
        }
        tree.check(v)
    }

    /// Node reached by following exactly `d` suffix links.
    pub fn level_ancestor_sl(&self, tree: &SuffixIndex, v: NodeId, d: usize) -> Result<NodeId> {
        self.check(tree, v)?;
        let depth = tree.cum(v);
        if d > depth {
            return Err(Error::Overshoot { asked: d, depth });
        }
        Ok(self.la_unchecked(v, d))
    }

    pub(crate) fn la_unchecked(&self, v: NodeId, d: usize) -> NodeId {
        let mut x = v.0;
        let mut rest = d;
        let mut j = 0;
        while rest > 0 {
            if rest & 1 == 1 {
                x = self.jump[j][x as usize];
            }
            rest >>= 1;
            j += 1;
        }
        NodeId(x)
    }

    /// Shallowest ancestor-or-self of `v` in the suffix tree with
    /// cumulative skip ≥ `len`.
    pub(crate) fn ascend_unchecked(&self, tree: &SuffixIndex, v: NodeId, len: usize) -> NodeId {
        let mut x = v.0;
        for level in self.up.iter().rev() {
            let y = level[x as usize];
            if y != x && tree.cum(NodeId(y)) >= len {
                x = y;
            }
        }
        NodeId(x)
    }

    /// Removes `d` leading symbols from `v`'s longest string, then ascends
    /// to the shallowest node still covering `needed_len` symbols.
    pub fn shorten(&self, tree: &SuffixIndex, v: NodeId, d: usize, needed_len: usize) -> Result<NodeId> {
        let x = self.level_ancestor_sl(tree, v, d)?;
        if needed_len > tree.cum(x) {
            return param(format!(
                "needed length {needed_len} exceeds the shortened string ({})",
                tree.cum(x)
            ));
        }
        Ok(self.ascend_unchecked(tree, x, needed_len))
    }
}

fn lift(base: Vec<u32>, levels: usize) -> Vec<Vec<u32>> {
    let mut out = vec![base];
    for j in 1..levels {
        let prev = &out[j - 1];
        let next = prev.iter().map(|&x| prev[x as usize]).collect();
        out.push(next);
    }
    out
}
