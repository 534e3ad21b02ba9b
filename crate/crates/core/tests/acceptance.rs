//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the process exits with a failure status if any criterion fails.

use std::collections::{HashMap, HashSet};
use std::process::ExitCode;
use std::time::Instant;

use parsuffix::ancestry::build_ancestry;
use parsuffix::dict::{build_tree_halving_dict, build_trie_halving_dict, PairDict};
use parsuffix::harness::{generate_cases, run_pattern, Workbench, TRIE_PS};
use parsuffix::index::{build_suffix_tree, build_suffix_trie};
use parsuffix::interleaved::{build_layered_index, par_query_interleaved, trace_interleaved, LayeredIndex};
use parsuffix::query::seq_query;
use parsuffix::text::{base_symbols, interleave};
use parsuffix::tree_par::par_query_tree2;
use parsuffix::trie_par::par_query_trie;
use parsuffix::{
    make_text, oracle_scan, Algo, ExecMode, NodeId, Pattern, StepLedger, StoredIndex, StoredKind, SuffixIndex, Symbol,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SUITE_SEED: u64 = 0x5eed_2024;
const SUITE_TEXTS: usize = 125;
const PATTERNS_PER_TEXT: usize = 8;
const N_LO: usize = 8;
const N_HI: usize = 2000;
const SIGMAS: [usize; 4] = [1, 2, 4, 26];
const MIN_CASES: usize = 1000;
const MAX_MISMATCHES: usize = 0;
/// Extra span allowed for the two-lane tree query beyond m.
const TREE2_SPAN_SLACK: u64 = 4;
/// Extra navigation steps allowed beyond ⌈m/2⌉ + ⌈3m/4⌉.
const TREE2_NAV_SLACK: u64 = 2;
/// Constant c in span ≤ c·(m/j)·lg j.
const INTERLEAVED_C: f64 = 4.0;
/// Probes per layer may not exceed this multiple of the merged path lengths.
const PROBES_PER_PATH_NODE: usize = 2;
const ROUND_TRIP_TEXTS: usize = 24;
const STRUCTURE_TEXTS: usize = 40;

struct Outcome {
    pass: bool,
    detail: String,
}

fn report(id: usize, name: &str, o: &Outcome) {
    let verdict = if o.pass { "PASS" } else { "FAIL" };
    println!("criterion {id} {name}: {verdict} ({})", o.detail);
}

fn lg(x: usize) -> u64 {
    x.trailing_zeros() as u64
}

#[derive(Default)]
struct SuiteTally {
    cases: usize,
    runs: usize,
    mismatches: usize,
    mode_disagreements: usize,
    sigmas: HashSet<usize>,
    n_min: usize,
    n_max: usize,
    absent: usize,
    trie_runs: usize,
    trie_violations: Vec<String>,
    tree2_runs: usize,
    tree2_violations: Vec<String>,
    tree2_max_excess: i64,
    inter_runs: usize,
    inter_violations: Vec<String>,
    inter_max_c: f64,
}

fn run_main_suite() -> SuiteTally {
    let cases = generate_cases(SUITE_SEED, SUITE_TEXTS, PATTERNS_PER_TEXT, N_LO, N_HI, &SIGMAS);
    let mut t = SuiteTally { n_min: usize::MAX, tree2_max_excess: i64::MIN, ..Default::default() };
    for group in cases.chunks(PATTERNS_PER_TEXT) {
        let raw = group[0].text();
        let wb = Workbench::new(&raw, usize::MAX).expect("workbench");
        for &case in group {
            let pat = case.pattern(&raw);
            let m = pat.len();
            let mu = m as u64;
            let want = oracle_scan(&raw, &pat);
            let rep = run_pattern(&wb, case, &pat, &Algo::ALL).expect("run");
            t.cases += 1;
            t.sigmas.insert(case.sigma);
            t.n_min = t.n_min.min(case.n);
            t.n_max = t.n_max.max(case.n);
            t.absent += usize::from(want.is_empty());
            let trace = (m >= 2).then(|| {
                [2usize, 4, 8]
                    .into_iter()
                    .filter(|&j| j < 2 * m)
                    .map(|j| (j, trace_interleaved(&wb.layered, &base_symbols(&pat), j, ExecMode::Simulated).expect("trace")))
                    .collect::<HashMap<_, _>>()
            });
            let mut trie_ps = Vec::new();
            let mut seen_tree2 = false;
            let mut inter_js = Vec::new();
            for run in &rep.runs {
                t.runs += 1;
                let ok = run.count == want.len() && run.matches_oracle;
                t.mismatches += usize::from(!ok);
                t.mode_disagreements += usize::from(!run.modes_agree);
                let tag = format!("n={} sigma={} m={m} seed={}", case.n, case.sigma, case.seed);
                let c = run.counters;
                match run.algo {
                    Algo::Seq => {}
                    Algo::TriePar => {
                        t.trie_runs += 1;
                        let p = run.p;
                        trie_ps.push(p);
                        let bound = mu.div_ceil(p as u64) + lg(p);
                        if !want.is_empty() && (c.nav_chars != mu || c.probes != p as u64 - 1) {
                            t.trie_violations.push(format!("{tag} p={p}: nav {} probes {}", c.nav_chars, c.probes));
                        }
                        if c.nav_chars > mu || c.probes > p as u64 - 1 || run.span > bound {
                            t.trie_violations.push(format!("{tag} p={p}: span {} bound {bound}", run.span));
                        }
                    }
                    Algo::TreePar2 => {
                        t.tree2_runs += 1;
                        seen_tree2 = true;
                        let nav_bound = mu.div_ceil(2) + (3 * mu).div_ceil(4) + TREE2_NAV_SLACK;
                        if c.nav_chars > nav_bound || run.span > mu + TREE2_SPAN_SLACK {
                            t.tree2_violations.push(format!("{tag}: nav {} span {}", c.nav_chars, run.span));
                        }
                        t.tree2_max_excess = t.tree2_max_excess.max(run.span as i64 - m as i64);
                    }
                    Algo::Interleaved => {
                        t.inter_runs += 1;
                        let j = run.p;
                        inter_js.push(j);
                        let unit = (m as f64 / j as f64) * lg(j) as f64;
                        let constant = run.span as f64 / unit;
                        t.inter_max_c = t.inter_max_c.max(constant);
                        if constant > INTERLEAVED_C {
                            t.inter_violations.push(format!("{tag} j={j}: span {} constant {constant:.3}", run.span));
                        }
                        let tr = &trace.as_ref().expect("traced")[&j];
                        let mut per_layer: HashMap<usize, (usize, usize)> = HashMap::new();
                        for (k, probes, len) in tr.pair_loads() {
                            let e = per_layer.entry(k).or_default();
                            e.0 += probes;
                            e.1 += len;
                        }
                        for (k, (probes, len)) in per_layer {
                            if probes > PROBES_PER_PATH_NODE * len {
                                t.inter_violations.push(format!("{tag} j={j} layer {k}: {probes} probes, paths {len}"));
                            }
                        }
                    }
                }
            }
            // every applicable configuration must have run
            let want_ps: Vec<usize> = TRIE_PS.into_iter().filter(|&p| p < 2 * m).collect();
            let want_js: Vec<usize> = [2, 4, 8].into_iter().filter(|&j| j < 2 * m).collect();
            if trie_ps != want_ps || inter_js != want_js || seen_tree2 != (m >= 2) {
                t.mismatches += 1;
            }
        }
    }
    t
}

fn distinct_substrings(s: &[Symbol]) -> usize {
    let mut set = HashSet::new();
    for i in 0..s.len() {
        for j in i + 1..=s.len() {
            set.insert(&s[i..j]);
        }
    }
    set.len()
}

fn values_cover(dict: &PairDict, lower: &SuffixIndex) -> bool {
    let vals: HashSet<NodeId> = dict.entries().iter().map(|e| e.2).collect();
    vals.len() == dict.len() && dict.len() == lower.node_count() - 1 && lower.nodes().filter(|v| !v.is_root()).all(|v| vals.contains(&v))
}

fn compressed(t: &SuffixIndex) -> bool {
    t.nodes().filter(|&v| !v.is_root() && !t.is_leaf(v)).all(|v| t.children(v).len() >= 2)
}

fn base_leaves(t: &SuffixIndex) -> usize {
    t.nodes()
        .filter_map(|v| t.leaf_ref(v))
        .filter(|&r| !t.suffix(r)[0].is_delimiter())
        .count()
}

fn check_layers(raw: &[u8], idx: &LayeredIndex, errs: &mut Vec<String>) {
    let n = raw.len();
    for (i, layer) in idx.layers().iter().enumerate() {
        let k = 1usize << i;
        if layer.height() > (n + k).div_ceil(k) {
            errs.push(format!("layer {k} of n={n}: height {}", layer.height()));
        }
        if base_leaves(layer) != n {
            errs.push(format!("layer {k} of n={n}: {} non-delimiter leaves", base_leaves(layer)));
        }
        if !compressed(layer) {
            errs.push(format!("layer {k} of n={n}: unary internal node"));
        }
        if k >= 2 && !values_cover(idx.dict(k).expect("dict"), idx.layer(k / 2).expect("lower")) {
            errs.push(format!("layer dict {k} of n={n}: incomplete"));
        }
    }
}

fn structural_suite() -> Outcome {
    let mut errs = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(SUITE_SEED ^ 5);
    let mut texts: Vec<Vec<u8>> = (0..STRUCTURE_TEXTS)
        .map(|i| {
            let n = rng.gen_range(0..=120);
            let sigma = SIGMAS[i % SIGMAS.len()];
            (0..n).map(|_| b'A' + rng.gen_range(0..sigma) as u8).collect()
        })
        .collect();
    let distinct: Vec<Vec<u8>> = (1..=26).map(|n| (0..n).map(|i| b'A' + ((i * 7) % 26) as u8).collect()).collect();
    texts.extend(distinct.iter().cloned());
    texts.push(b"ABRACADABRA".to_vec());
    let mut trie_checks = 0;
    for raw in &texts {
        let text = make_text(raw, 1);
        let l = text.len();
        let trie = build_suffix_trie(&text).expect("trie");
        let nodes = trie.node_count();
        trie_checks += 1;
        if nodes > l * (l + 1) / 2 + 1 || nodes != distinct_substrings(text.symbols()) + 1 {
            errs.push(format!("trie of n={}: {nodes} nodes", raw.len()));
        }
        let all_distinct = raw.iter().collect::<HashSet<_>>().len() == raw.len();
        if all_distinct && nodes != l * (l + 1) / 2 + 1 {
            errs.push(format!("trie of distinct n={}: {nodes} nodes, want {}", raw.len(), l * (l + 1) / 2 + 1));
        }
        let tdict = build_trie_halving_dict(&trie).expect("trie dict");
        if !values_cover(&tdict, &trie) {
            errs.push(format!("trie dict of n={}: incomplete", raw.len()));
        }
        for (a, b, w) in tdict.entries() {
            let (la, lb) = (trie.cum(a), trie.cum(b));
            let joined: Vec<Symbol> = trie.spell(a).iter().chain(trie.spell(b)).copied().collect();
            if !(la == lb || la == lb + 1) || joined != trie.spell(w) {
                errs.push(format!("trie dict of n={}: entry lengths {la},{lb}", raw.len()));
            }
        }
        let tree = build_suffix_tree(&text).expect("tree");
        if !compressed(&tree) {
            errs.push(format!("tree of n={}: unary internal node", raw.len()));
        }
        if tree.leaf_count() != l {
            errs.push(format!("tree of n={}: {} leaves", raw.len(), tree.leaf_count()));
        }
        let d = build_tree_halving_dict(&tree).expect("tree dict");
        if !values_cover(&d, &tree) {
            errs.push(format!("tree dict of n={}: incomplete", raw.len()));
        }
        check_layers(raw, &build_layered_index(raw, 8).expect("layers"), &mut errs);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SUITE_SEED ^ 6);
    for &n in &[500usize, 1000, 2000] {
        for sigma in SIGMAS {
            let raw: Vec<u8> = (0..n).map(|_| b'A' + rng.gen_range(0..sigma) as u8).collect();
            let tree = build_suffix_tree(&make_text(&raw, 1)).expect("tree");
            if !compressed(&tree) || !values_cover(&build_tree_halving_dict(&tree).expect("dict"), &tree) {
                errs.push(format!("tree of n={n} sigma={sigma}"));
            }
            check_layers(&raw, &build_layered_index(&raw, 8).expect("layers"), &mut errs);
        }
    }
    Outcome {
        pass: errs.is_empty(),
        detail: format!("{} texts, {trie_checks} tries, {} violations{}", texts.len() + 12, errs.len(), first(&errs)),
    }
}

fn first(errs: &[String]) -> String {
    errs.first().map(|e| format!("; first: {e}")).unwrap_or_default()
}

fn node(t: &SuffixIndex, s: &str) -> NodeId {
    t.locus(&base_symbols(s.as_bytes())).unwrap_or_else(|| panic!("no node for {s}"))
}

fn golden() -> Outcome {
    let mut errs = Vec::new();
    let raw = b"ABRACADABRA";
    let halves = interleave(raw, 2).expect("interleave");
    if halves != [b"ARCDBA".to_vec(), b"BAAAR".to_vec()] {
        errs.push("interleave".to_string());
    }
    let text = make_text(raw, 1);
    let tree = build_suffix_tree(&text).expect("tree");
    if tree.leaf_count() != 12 || tree.children(NodeId::ROOT).len() != 6 {
        errs.push(format!("tree shape {} leaves, {} root children", tree.leaf_count(), tree.children(NodeId::ROOT).len()));
    }
    let trie = build_suffix_trie(&text).expect("trie");
    let tdict = build_trie_halving_dict(&trie).expect("trie dict");
    if tdict.probe(node(&trie, "AB"), node(&trie, "RA")) != Some(node(&trie, "ABRA")) {
        errs.push("trie dict (AB,RA)".to_string());
    }
    let ddict = build_tree_halving_dict(&tree).expect("tree dict");
    if ddict.probe(node(&tree, "A"), node(&tree, "BRA")) != Some(node(&tree, "ABRA")) {
        errs.push("tree dict (A,BRA)".to_string());
    }
    let layered = build_layered_index(raw, 4).expect("layers");
    let (t1, t2) = (layered.layer(1).expect("layer 1"), layered.layer(2).expect("layer 2"));
    if layered.dict(2).expect("dict").probe(node(t2, "A"), node(t2, "BA")) != Some(node(t1, "ABRA")) {
        errs.push("layer-2 dict (A,BA)".to_string());
    }
    let anc = build_ancestry(&tree).expect("ancestry");
    let pat = Pattern::new(b"ABRA").expect("pattern");
    let want = vec![1, 8];
    for mode in [ExecMode::Simulated, ExecMode::Threaded] {
        let mut got = vec![("seq".to_string(), seq_query(&tree, &pat, &mut StepLedger::new(1)).positions)];
        for p in [1, 2, 4] {
            let r = par_query_trie(&trie, &tdict, &pat, p, mode, &mut StepLedger::new(p)).expect("trie-par");
            got.push((format!("trie-par p={p}"), r.positions));
        }
        let r = par_query_tree2(&tree, &anc, &ddict, &pat, mode, &mut StepLedger::new(2)).expect("tree-par2");
        got.push(("tree-par2".to_string(), r.positions));
        for j in [2, 4] {
            let r = par_query_interleaved(&layered, &pat, j, mode, &mut StepLedger::new(j)).expect("interleaved");
            got.push((format!("interleaved j={j}"), r.positions));
        }
        for (name, pos) in got {
            if pos != want {
                errs.push(format!("{name} {mode:?}: {pos:?}"));
            }
        }
    }
    Outcome { pass: errs.is_empty(), detail: format!("{} mismatches{}", errs.len(), first(&errs)) }
}

fn round_trip() -> (usize, Vec<String>) {
    let mut errs = Vec::new();
    let mut checked = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(SUITE_SEED ^ 7);
    for i in 0..ROUND_TRIP_TEXTS {
        let n = rng.gen_range(0..=300);
        let sigma = SIGMAS[i % SIGMAS.len()];
        let raw: Vec<u8> = (0..n).map(|_| b'A' + rng.gen_range(0..sigma) as u8).collect();
        let pats: Vec<Vec<u8>> = (0..PATTERNS_PER_TEXT)
            .map(|k| {
                let m = rng.gen_range(1..=12);
                if k % 2 == 0 && n >= m {
                    let s = rng.gen_range(0..=n - m);
                    raw[s..s + m].to_vec()
                } else {
                    (0..m).map(|_| b'A' + rng.gen_range(0..sigma) as u8).collect()
                }
            })
            .collect();
        for (kind, p, algo) in [
            (StoredKind::Trie, 2, Algo::TriePar),
            (StoredKind::Tree, 2, Algo::TreePar2),
            (StoredKind::Interleaved, 8, Algo::Interleaved),
        ] {
            let built = StoredIndex::build(&raw, kind, p).expect("build");
            let bytes = built.to_bytes();
            let loaded = match StoredIndex::from_bytes(&bytes) {
                Ok(x) => x,
                Err(e) => {
                    errs.push(format!("{} n={n}: {e}", kind.name()));
                    continue;
                }
            };
            if loaded.to_bytes() != bytes {
                errs.push(format!("{} n={n}: bytes differ after reload", kind.name()));
            }
            for pat in &pats {
                let pattern = Pattern::new(pat).expect("pattern");
                let m = pat.len();
                let lanes: Vec<usize> = match algo {
                    Algo::TriePar => vec![1, 2, 4, 8],
                    _ => vec![2, 4, 8],
                };
                let mut configs = vec![(Algo::Seq, 1)];
                configs.extend(lanes.into_iter().filter(|&q| q < 2 * m && (algo != Algo::TreePar2 || q == 2)).map(|q| (algo, q)));
                for (a, q) in configs {
                    let before = built.query(a, &pattern, q, ExecMode::Simulated, &mut StepLedger::new(q)).expect("query");
                    let after = loaded.query(a, &pattern, q, ExecMode::Threaded, &mut StepLedger::new(q)).expect("query");
                    checked += 1;
                    if before != after || after.positions != oracle_scan(&raw, pat) {
                        errs.push(format!("{} n={n} {a} p={q} pattern {}", kind.name(), String::from_utf8_lossy(pat)));
                    }
                }
            }
        }
    }
    (checked, errs)
}

fn main() -> ExitCode {
    let started = Instant::now();
    let t = run_main_suite();
    let suite_secs = started.elapsed().as_secs_f64();

    let c1 = Outcome {
        pass: t.cases >= MIN_CASES
            && t.mismatches == MAX_MISMATCHES
            && t.sigmas.len() == SIGMAS.len()
            && t.n_min >= N_LO
            && t.n_max <= N_HI
            && t.absent > 0
            && t.trie_runs > 0
            && t.tree2_runs > 0
            && t.inter_runs > 0,
        detail: format!(
            "{} cases, {} runs, {} mismatches, n {}..{}, {} absent patterns, {suite_secs:.1}s",
            t.cases, t.runs, t.mismatches, t.n_min, t.n_max, t.absent
        ),
    };
    let c2 = Outcome {
        pass: t.trie_violations.is_empty() && t.trie_runs > 0,
        detail: format!("{} trie-par runs, {} violations{}", t.trie_runs, t.trie_violations.len(), first(&t.trie_violations)),
    };
    let c3 = Outcome {
        pass: t.tree2_violations.is_empty() && t.tree2_runs > 0,
        detail: format!(
            "{} tree-par2 runs, {} violations, max span - m = {}{}",
            t.tree2_runs,
            t.tree2_violations.len(),
            t.tree2_max_excess,
            first(&t.tree2_violations)
        ),
    };
    let c4 = Outcome {
        pass: t.inter_violations.is_empty() && t.inter_runs > 0,
        detail: format!(
            "{} interleaved runs, {} violations, max constant {:.3} (limit {INTERLEAVED_C}){}",
            t.inter_runs,
            t.inter_violations.len(),
            t.inter_max_c,
            first(&t.inter_violations)
        ),
    };
    let c5 = structural_suite();
    let c6 = golden();
    let (checked, rt_errs) = round_trip();
    let c7 = Outcome {
        pass: t.mode_disagreements == 0 && rt_errs.is_empty(),
        detail: format!(
            "{} mode disagreements over {} runs, {checked} reloaded queries, {} round-trip errors{}",
            t.mode_disagreements,
            t.runs,
            rt_errs.len(),
            first(&rt_errs)
        ),
    };

    let all = [
        (1, "oracle equivalence", &c1),
        (2, "trie-par work and span", &c2),
        (3, "tree-par2 work and span", &c3),
        (4, "interleaved probes and span", &c4),
        (5, "structural properties", &c5),
        (6, "golden fixtures", &c6),
        (7, "mode agreement and round trip", &c7),
    ];
    for (id, name, o) in &all {
        report(*id, name, o);
    }
    let failed: Vec<usize> = all.iter().filter(|a| !a.2.pass).map(|a| a.0).collect();
    if failed.is_empty() {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}
