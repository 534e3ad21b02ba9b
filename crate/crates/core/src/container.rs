//! Binary index container ("PQST"). See `docs/FORMAT.md` for the layout.

use std::io::{Cursor, Read};
use std::path::Path;
use std::str::FromStr;

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};

use crate::ancestry::{build_ancestry, Ancestry};
use crate::dict::{build_tree_halving_dict, build_trie_halving_dict, PairDict};
use crate::error::{param, Error, Result};
use crate::harness::Algo;
use crate::index::{build_suffix_tree, build_suffix_trie, IndexKind, LeafRef, NodeId, RawIndex, SuffixIndex};
use crate::interleaved::{build_layered_index, par_query_interleaved, LayeredIndex};
use crate::ledger::StepLedger;
use crate::query::{seq_query, ExecMode, QueryResult};
use crate::text::{make_text, Pattern, Symbol};
use crate::tree_par::par_query_tree2;
use crate::trie_par::par_query_trie;

pub const MAGIC: &[u8; 4] = b"PQST";
pub const VERSION: u8 = 1;
const NONE: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StoredKind {
    Trie,
    Tree,
    Interleaved,
}

impl StoredKind {
    pub fn name(self) -> &'static str {
        match self {
            StoredKind::Trie => "trie",
            StoredKind::Tree => "tree",
            StoredKind::Interleaved => "interleaved",
        }
    }

    fn code(self) -> u8 {
        self as u8
    }
}

impl FromStr for StoredKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "trie" => Ok(StoredKind::Trie),
            "tree" => Ok(StoredKind::Tree),
            "interleaved" => Ok(StoredKind::Interleaved),
            _ => param(format!("unknown index kind {s:?}")),
        }
    }
}

/// An index with everything its parallel query needs.
#[derive(Clone, Debug)]
pub enum StoredIndex {
    Trie { trie: SuffixIndex, dict: PairDict },
    Tree { tree: SuffixIndex, anc: Ancestry, dict: PairDict },
    Interleaved(LayeredIndex),
}

impl StoredIndex {
    /// `p` is only used for interleaved indexes (largest layer stride).
    pub fn build(raw: &[u8], kind: StoredKind, p: usize) -> Result<Self> {
        Ok(match kind {
            StoredKind::Trie => {
                let trie = build_suffix_trie(&make_text(raw, 1))?;
                let dict = build_trie_halving_dict(&trie)?;
                StoredIndex::Trie { trie, dict }
            }
            StoredKind::Tree => {
                let tree = build_suffix_tree(&make_text(raw, 1))?;
                let anc = build_ancestry(&tree)?;
                let dict = build_tree_halving_dict(&tree)?;
                StoredIndex::Tree { tree, anc, dict }
            }
            StoredKind::Interleaved => StoredIndex::Interleaved(build_layered_index(raw, p)?),
        })
    }

    pub fn kind(&self) -> StoredKind {
        match self {
            StoredIndex::Trie { .. } => StoredKind::Trie,
            StoredIndex::Tree { .. } => StoredKind::Tree,
            StoredIndex::Interleaved(_) => StoredKind::Interleaved,
        }
    }

    /// The stride-1 index over the whole text.
    pub fn base(&self) -> &SuffixIndex {
        match self {
            StoredIndex::Trie { trie, .. } => trie,
            StoredIndex::Tree { tree, .. } => tree,
            StoredIndex::Interleaved(l) => &l.layers()[0],
        }
    }

    pub fn layers(&self) -> Vec<&SuffixIndex> {
        match self {
            StoredIndex::Interleaved(l) => l.layers().iter().collect(),
            _ => vec![self.base()],
        }
    }

    pub fn dicts(&self) -> Vec<&PairDict> {
        match self {
            StoredIndex::Trie { dict, .. } | StoredIndex::Tree { dict, .. } => vec![dict],
            StoredIndex::Interleaved(l) => (1..l.layers().len()).map(|t| l.dict(1 << t).expect("dict")).collect(),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        out.push(self.kind().code());
        let raw = self.base().text().raw();
        w32(&mut out, raw.len() as u32);
        out.extend_from_slice(&raw);
        let layers = self.layers();
        w32(&mut out, layers.len() as u32);
        let links = match self {
            StoredIndex::Tree { anc, .. } => Some(anc.links()),
            _ => None,
        };
        for layer in &layers {
            write_layer(&mut out, layer, links);
        }
        let dicts = self.dicts();
        w32(&mut out, dicts.len() as u32);
        for d in dicts {
            let entries = d.entries();
            w32(&mut out, entries.len() as u32);
            for (a, b, w) in entries {
                w32(&mut out, a.0);
                w32(&mut out, b.0);
                w32(&mut out, w.0);
            }
        }
        let crc = crc32fast::hash(&out);
        w32(&mut out, crc);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 4 + 2 + 4 + 4 || &bytes[..4] != MAGIC {
            return Err(Error::Format("missing PQST magic".into()));
        }
        let (body, tail) = bytes.split_at(bytes.len() - 4);
        let stored = u32::from_le_bytes(tail.try_into().expect("4 bytes"));
        if crc32fast::hash(body) != stored {
            return Err(Error::Format("checksum mismatch".into()));
        }
        let mut r = Cursor::new(&body[4..]);
        let version = r.read_u8().map_err(eof)?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported format version {version}")));
        }
        let kind = match r.read_u8().map_err(eof)? {
            0 => StoredKind::Trie,
            1 => StoredKind::Tree,
            2 => StoredKind::Interleaved,
            c => return Err(Error::Format(format!("unknown index kind code {c}"))),
        };
        let n = r32(&mut r)? as usize;
        bounded(&r, n, 1)?;
        let mut raw = vec![0u8; n];
        r.read_exact(&mut raw).map_err(eof)?;
        let layer_count = r32(&mut r)? as usize;
        bounded(&r, layer_count, 16)?;
        if layer_count == 0 || (kind != StoredKind::Interleaved && layer_count != 1) {
            return Err(Error::Format(format!("{} index with {layer_count} layers", kind.name())));
        }
        let mut layers = Vec::with_capacity(layer_count);
        let mut links = Vec::new();
        for t in 0..layer_count {
            let ik = if kind == StoredKind::Trie { IndexKind::Trie } else { IndexKind::Tree };
            let (idx, l) = read_layer(&mut r, &raw, ik, 1 << t)?;
            layers.push(idx);
            links = l;
        }
        let dict_count = r32(&mut r)? as usize;
        if dict_count != layer_count.max(2) - 1 {
            return Err(Error::Format(format!("expected {} dictionaries, found {dict_count}", layer_count.max(2) - 1)));
        }
        let mut dicts = Vec::with_capacity(dict_count);
        for t in 0..dict_count {
            let (keys, values) = match kind {
                StoredKind::Interleaved => (&layers[t + 1], &layers[t]),
                _ => (&layers[0], &layers[0]),
            };
            dicts.push(read_dict(&mut r, keys, values)?);
        }
        if r.position() as usize != body.len() - 4 {
            return Err(Error::Format("trailing bytes before checksum".into()));
        }
        Ok(match kind {
            StoredKind::Trie => {
                let trie = layers.pop().expect("one layer");
                StoredIndex::Trie { dict: dicts.pop().expect("one dict"), trie }
            }
            StoredKind::Tree => {
                let tree = layers.pop().expect("one layer");
                let anc = Ancestry::from_links(&tree, links)?;
                StoredIndex::Tree { dict: dicts.pop().expect("one dict"), anc, tree }
            }
            StoredKind::Interleaved => StoredIndex::Interleaved(LayeredIndex::from_parts(layers, dicts)?),
        })
    }

    /// Runs `algo` with `p` lanes. The sequential query runs on any kind;
    /// each parallel algorithm needs its own index kind.
    pub fn query(&self, algo: Algo, pat: &Pattern, p: usize, mode: ExecMode, ledger: &mut StepLedger) -> Result<QueryResult> {
        match (algo, self) {
            (Algo::Seq, _) => Ok(seq_query(self.base(), pat, ledger)),
            (Algo::TriePar, StoredIndex::Trie { trie, dict }) => par_query_trie(trie, dict, pat, p, mode, ledger),
            (Algo::TreePar2, StoredIndex::Tree { tree, anc, dict }) => par_query_tree2(tree, anc, dict, pat, mode, ledger),
            (Algo::Interleaved, StoredIndex::Interleaved(l)) => par_query_interleaved(l, pat, p, mode, ledger),
            _ => param(format!("{algo} cannot run on a {} index", self.kind().name())),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

fn w32(out: &mut Vec<u8>, v: u32) {
    out.write_u32::<LE>(v).expect("write to Vec");
}

fn eof(_: std::io::Error) -> Error {
    Error::Format("truncated container".into())
}

fn r32(r: &mut Cursor<&[u8]>) -> Result<u32> {
    r.read_u32::<LE>().map_err(eof)
}

/// Rejects counts that could not fit in the remaining bytes.
fn bounded(r: &Cursor<&[u8]>, count: usize, min_bytes: usize) -> Result<()> {
    let left = r.get_ref().len() - r.position() as usize;
    if count.saturating_mul(min_bytes) > left {
        return Err(Error::Format(format!("count {count} exceeds the remaining data")));
    }
    Ok(())
}

fn write_layer(out: &mut Vec<u8>, idx: &SuffixIndex, links: Option<&[u32]>) {
    w32(out, idx.text().delimiters() as u32);
    w32(out, idx.stride() as u32);
    w32(out, idx.node_count() as u32);
    for v in idx.nodes() {
        w32(out, idx.parent(v).map_or(NONE, |p| p.0));
        w32(out, idx.skip(v) as u32);
        let ch = idx.children(v);
        w32(out, ch.len() as u32);
        for &(c, u) in ch {
            w32(out, c.code());
            w32(out, u.0);
        }
        let r = idx.leaf_ref(v);
        w32(out, r.map_or(NONE, |r| r.seq));
        w32(out, r.map_or(NONE, |r| r.offset));
        w32(out, links.map_or(NONE, |l| l[v.idx()]));
    }
}

fn read_layer(r: &mut Cursor<&[u8]>, raw: &[u8], kind: IndexKind, stride: usize) -> Result<(SuffixIndex, Vec<u32>)> {
    let k = r32(r)? as usize;
    let st = r32(r)? as usize;
    if st != stride || k != stride {
        return Err(Error::Format(format!("layer stride {st} with {k} delimiters, expected {stride}")));
    }
    let n = r32(r)? as usize;
    bounded(r, n, 24)?;
    if n == 0 {
        return Err(Error::Format("empty node table".into()));
    }
    let mut parent = Vec::with_capacity(n);
    let mut skip = Vec::with_capacity(n);
    let mut leaf = Vec::with_capacity(n);
    let mut links = Vec::with_capacity(n);
    let mut edges = Vec::new();
    for v in 0..n as u32 {
        parent.push(r32(r)?);
        skip.push(r32(r)?);
        let c = r32(r)? as usize;
        bounded(r, c, 8)?;
        for _ in 0..c {
            let sym = r32(r)?;
            let u = r32(r)?;
            edges.push((v, Symbol::from_code(sym), u));
        }
        let (seq, off) = (r32(r)?, r32(r)?);
        leaf.push((seq != NONE).then_some(LeafRef { seq, offset: off }));
        links.push(r32(r)?);
    }
    if parent[0] != NONE || skip[0] != 0 || parent[1..].iter().any(|&p| p as usize >= n) {
        return Err(Error::Format("bad parent table".into()));
    }
    let cum = cumulative(&parent, &skip)?;
    let text = make_text(raw, k);
    let idx = SuffixIndex::assemble(kind, text, stride, RawIndex { parent, cum, leaf, edges })?;
    validate_strings(&idx)?;
    Ok((idx, links))
}

fn cumulative(parent: &[u32], skip: &[u32]) -> Result<Vec<u32>> {
    let n = parent.len();
    let mut cum = vec![NONE; n];
    cum[0] = 0;
    for v in 1..n {
        let mut chain = vec![v];
        let mut x = parent[v] as usize;
        while cum[x] == NONE {
            if chain.len() > n {
                return Err(Error::Format("cycle in parent table".into()));
            }
            chain.push(x);
            x = parent[x] as usize;
        }
        for &y in chain.iter().rev() {
            if skip[y] == 0 {
                return Err(Error::Format(format!("node {y} has skip 0")));
            }
            cum[y] = cum[parent[y] as usize]
                .checked_add(skip[y])
                .ok_or_else(|| Error::Format("skip overflow".into()))?;
        }
    }
    Ok(cum)
}

/// Every node string must be spelled by its leftmost leaf, and every leaf
/// must end exactly at the end of its suffix.
fn validate_strings(idx: &SuffixIndex) -> Result<()> {
    let seqs = idx.seqs();
    for v in idx.nodes() {
        if let Some(r) = idx.leaf_ref(v) {
            let len = seqs.get(r.seq as usize).and_then(|s| s.len().checked_sub(r.offset as usize));
            if len != Some(idx.cum(v)) {
                return Err(Error::Format(format!("leaf {} does not match its suffix", v.0)));
            }
        }
    }
    for v in idx.nodes().skip(1) {
        let s = idx.spell(v);
        let first = s[idx.cum(idx.parent(v).expect("non-root"))];
        if idx.child(idx.parent(v).expect("non-root"), first) != Some(v) {
            return Err(Error::Format(format!("edge label of node {} disagrees with its leaf", v.0)));
        }
    }
    Ok(())
}

fn read_dict(r: &mut Cursor<&[u8]>, keys: &SuffixIndex, values: &SuffixIndex) -> Result<PairDict> {
    let n = r32(r)? as usize;
    bounded(r, n, 12)?;
    let mut entries = Vec::with_capacity(n);
    for _ in 0..n {
        let (a, b, w) = (NodeId(r32(r)?), NodeId(r32(r)?), NodeId(r32(r)?));
        if !keys.contains(a) || !keys.contains(b) || !values.contains(w) {
            return Err(Error::Format("dictionary entry outside its node tables".into()));
        }
        entries.push((a, b, w));
    }
    if n != values.node_count() - 1 {
        return Err(Error::Format(format!("dictionary has {n} entries for {} nodes", values.node_count())));
    }
    PairDict::from_entries(keys.id(), values.id(), entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_preserves_node_ids() {
        for kind in [StoredKind::Trie, StoredKind::Tree, StoredKind::Interleaved] {
            let a = StoredIndex::build(b"ABRACADABRA", kind, 4).unwrap();
            let bytes = a.to_bytes();
            let b = StoredIndex::from_bytes(&bytes).unwrap();
            assert_eq!(b.kind(), kind);
            assert_eq!(b.to_bytes(), bytes);
            for (x, y) in a.layers().iter().zip(b.layers()) {
                assert_eq!(x.node_count(), y.node_count());
                for v in x.nodes() {
                    assert_eq!(x.spell(v), y.spell(v));
                    assert_eq!(x.occurrences(v), y.occurrences(v));
                }
            }
        }
    }

    #[test]
    fn empty_text_round_trips() {
        let a = StoredIndex::build(b"", StoredKind::Trie, 1).unwrap();
        assert_eq!(a.base().node_count(), 2);
        StoredIndex::from_bytes(&a.to_bytes()).unwrap();
    }

    #[test]
    fn corruption_is_rejected() {
        let bytes = StoredIndex::build(b"ABRACADABRA", StoredKind::Tree, 1).unwrap().to_bytes();
        for i in [0, 4, 5, 9, 30, bytes.len() / 2, bytes.len() - 1] {
            let mut bad = bytes.clone();
            bad[i] ^= 0x5a;
            assert!(StoredIndex::from_bytes(&bad).is_err(), "flip at {i}");
        }
        assert!(StoredIndex::from_bytes(&bytes[..bytes.len() - 7]).is_err());
        assert!(StoredIndex::from_bytes(b"PQS").is_err());
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("tree".parse::<StoredKind>().unwrap(), StoredKind::Tree);
        assert!("forest".parse::<StoredKind>().is_err());
    }
}
