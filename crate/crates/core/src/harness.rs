//! Randomized corpus, cross-checks against the naive scan, and ledger laws.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::ancestry::{build_ancestry, Ancestry};
use crate::dict::{build_tree_halving_dict, build_trie_halving_dict, PairDict};
use crate::error::{param, Error, Result};
use crate::index::{build_suffix_tree, build_suffix_trie, SuffixIndex};
use crate::interleaved::{build_layered_index, par_query_interleaved, trace_interleaved, LayeredIndex};
use crate::ledger::{LaneCounters, StepLedger};
use crate::query::{oracle_scan, seq_query, ExecMode, QueryResult};
use crate::text::{make_text, Pattern};
use crate::tree_par::par_query_tree2;
use crate::trie_par::par_query_trie;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algo {
    Seq,
    TriePar,
    TreePar2,
    Interleaved,
}

impl Algo {
    pub const ALL: [Algo; 4] = [Algo::Seq, Algo::TriePar, Algo::TreePar2, Algo::Interleaved];

    pub fn name(self) -> &'static str {
        match self {
            Algo::Seq => "seq",
            Algo::TriePar => "trie-par",
            Algo::TreePar2 => "tree-par2",
            Algo::Interleaved => "interleaved",
        }
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algo::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .map_or_else(|| param(format!("unknown algorithm {s:?}")), Ok)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternMode {
    /// A substring of the text.
    Present,
    /// Uniform over the alphabet.
    Random,
    /// A substring with one symbol replaced.
    Mutated,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CorpusCase {
    /// Seed of the text.
    pub seed: u64,
    pub n: usize,
    pub sigma: usize,
    pub m: usize,
    pub mode: PatternMode,
    /// Seed of the pattern, independent of the text.
    pub pattern_seed: u64,
}

/// Text of `n` symbols drawn uniformly from the first `sigma` capitals.
pub fn gen_text(seed: u64, n: usize, sigma: usize) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| b'A' + rng.gen_range(0..sigma.clamp(1, 26)) as u8).collect()
}

impl CorpusCase {
    pub fn text(&self) -> Vec<u8> {
        gen_text(self.seed, self.n, self.sigma)
    }

    pub fn pattern(&self, text: &[u8]) -> Vec<u8> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.pattern_seed);
        let sigma = self.sigma.clamp(1, 26) as u8;
        let m = self.m.max(1);
        match self.mode {
            PatternMode::Random => (0..m).map(|_| b'A' + rng.gen_range(0..sigma)).collect(),
            PatternMode::Present | PatternMode::Mutated => {
                let m = m.min(text.len());
                let start = rng.gen_range(0..=text.len() - m);
                let mut pat = text[start..start + m].to_vec();
                if self.mode == PatternMode::Mutated {
                    let at = rng.gen_range(0..m);
                    let old = pat[at] - b'A';
                    // a symbol outside the alphabet when there is no other choice
                    pat[at] = if sigma == 1 { b'Z' } else { b'A' + (old + rng.gen_range(1..sigma)) % sigma };
                }
                pat
            }
        }
    }
}

/// Cases over texts with n in `n_lo..=n_hi`, `per_text` patterns per text.
pub fn generate_cases(seed: u64, texts: usize, per_text: usize, n_lo: usize, n_hi: usize, sigmas: &[usize]) -> Vec<CorpusCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(texts * per_text);
    for _ in 0..texts {
        let n = log_uniform(&mut rng, n_lo.max(1), n_hi.max(n_lo).max(1));
        let sigma = sigmas[rng.gen_range(0..sigmas.len())];
        let text_seed = rng.gen();
        for i in 0..per_text {
            let mode = [PatternMode::Present, PatternMode::Random, PatternMode::Mutated][i % 3];
            let m = log_uniform(&mut rng, 1, n);
            out.push(CorpusCase { seed: text_seed, n, sigma, m, mode, pattern_seed: rng.gen() });
        }
    }
    out
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: usize, hi: usize) -> usize {
    if lo >= hi {
        return lo;
    }
    let x = rng.gen_range((lo as f64).ln()..=((hi + 1) as f64).ln()).exp();
    (x as usize).clamp(lo, hi)
}

/// Indexes of one text, built once and shared by many patterns.
pub struct Workbench {
    pub raw: Vec<u8>,
    pub trie: Option<(SuffixIndex, PairDict)>,
    pub tree: (SuffixIndex, Ancestry, PairDict),
    pub layered: LayeredIndex,
}

/// Largest lane count used by the interleaved runs.
pub const MAX_J: usize = 8;
pub const TRIE_PS: [usize; 4] = [2, 4, 8, 16];

impl Workbench {
    /// Tries are quadratic in size; they are only built when n ≤ `trie_limit`.
    pub fn new(raw: &[u8], trie_limit: usize) -> Result<Self> {
        let trie = if raw.len() <= trie_limit {
            let t = build_suffix_trie(&make_text(raw, 1))?;
            let d = build_trie_halving_dict(&t)?;
            Some((t, d))
        } else {
            None
        };
        let tree = build_suffix_tree(&make_text(raw, 1))?;
        let anc = build_ancestry(&tree)?;
        let dict = build_tree_halving_dict(&tree)?;
        let layered = build_layered_index(raw, MAX_J)?;
        Ok(Workbench { raw: raw.to_vec(), trie, tree: (tree, anc, dict), layered })
    }
}

/// One algorithm run in both modes.
#[derive(Clone, Debug, Serialize)]
pub struct AlgoRun {
    pub algo: Algo,
    /// Lane count (1 for the sequential query).
    pub p: usize,
    pub count: usize,
    pub matches_oracle: bool,
    pub modes_agree: bool,
    pub work: u64,
    pub span: u64,
    pub verify_span: u64,
    pub counters: LaneCounters,
    /// Measured span divided by (m/j)·lg j, interleaved runs only.
    pub span_constant: Option<f64>,
    pub violations: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CaseReport {
    pub case: CorpusCase,
    pub oracle_count: usize,
    pub runs: Vec<AlgoRun>,
    /// Algorithms or lane counts skipped because their parameters do not apply.
    pub skipped: Vec<String>,
}

impl CaseReport {
    pub fn mismatches(&self) -> usize {
        self.runs.iter().filter(|r| !r.matches_oracle || !r.modes_agree).count()
    }

    pub fn violations(&self) -> usize {
        self.runs.iter().map(|r| r.violations.len()).sum()
    }
}

fn run_modes(mut f: impl FnMut(ExecMode, &mut StepLedger) -> Result<QueryResult>) -> Result<(QueryResult, bool, StepLedger)> {
    let mut ls = StepLedger::new(1);
    let rs = f(ExecMode::Simulated, &mut ls)?;
    let mut lt = StepLedger::new(1);
    let rt = f(ExecMode::Threaded, &mut lt)?;
    Ok((rs.clone(), rs == rt, ls))
}

fn algo_run(algo: Algo, p: usize, want: &[usize], res: (QueryResult, bool, StepLedger)) -> AlgoRun {
    let (r, agree, l) = res;
    AlgoRun {
        algo,
        p,
        count: r.count(),
        matches_oracle: r.positions == want,
        modes_agree: agree,
        work: l.work(),
        span: l.span(),
        verify_span: l.verify_span(),
        counters: l.totals(),
        span_constant: None,
        violations: Vec::new(),
    }
}

/// Runs every applicable algorithm on one pattern and checks the ledger laws.
pub fn run_pattern(wb: &Workbench, case: CorpusCase, pat: &[u8], algos: &[Algo]) -> Result<CaseReport> {
    let want = oracle_scan(&wb.raw, pat);
    let pattern = Pattern::new(pat)?;
    let m = pat.len();
    let mu = m as u64;
    let present = !want.is_empty();
    let mut runs = Vec::new();
    let mut skipped = Vec::new();
    for &algo in algos {
        match algo {
            Algo::Seq => {
                let res = run_modes(|_, l| Ok(seq_query(&wb.tree.0, &pattern, l)))?;
                runs.push(algo_run(algo, 1, &want, res));
            }
            Algo::TriePar => {
                let Some((trie, dict)) = &wb.trie else {
                    skipped.push(format!("trie-par: no trie for n = {}", wb.raw.len()));
                    continue;
                };
                for p in TRIE_PS {
                    if p >= 2 * m {
                        skipped.push(format!("trie-par p={p}: needs p < 2m"));
                        continue;
                    }
                    let res = run_modes(|mode, l| par_query_trie(trie, dict, &pattern, p, mode, l))?;
                    let mut run = algo_run(algo, p, &want, res);
                    let lg = p.trailing_zeros() as u64;
                    let c = run.counters;
                    let bound = mu.div_ceil(p as u64) + lg;
                    if present && (c.nav_chars != mu || c.probes != p as u64 - 1) {
                        run.violations.push(format!("work: nav {} probes {} (want {mu}, {})", c.nav_chars, c.probes, p - 1));
                    }
                    if c.nav_chars > mu || c.probes > p as u64 - 1 {
                        run.violations.push(format!("work over budget: nav {} probes {}", c.nav_chars, c.probes));
                    }
                    if run.span > bound {
                        run.violations.push(format!("span {} > {bound}", run.span));
                    }
                    runs.push(run);
                }
            }
            Algo::TreePar2 => {
                if m < 2 {
                    skipped.push("tree-par2: needs m ≥ 2".into());
                    continue;
                }
                let (tree, anc, dict) = &wb.tree;
                let res = run_modes(|mode, l| par_query_tree2(tree, anc, dict, &pattern, mode, l))?;
                let mut run = algo_run(algo, 2, &want, res);
                let nav_bound = mu.div_ceil(2) + (3 * mu).div_ceil(4) + 2;
                if run.counters.nav_chars > nav_bound {
                    run.violations.push(format!("nav {} > {nav_bound}", run.counters.nav_chars));
                }
                if run.span > mu + 4 {
                    run.violations.push(format!("span {} > m + 4 = {}", run.span, mu + 4));
                }
                runs.push(run);
            }
            Algo::Interleaved => {
                for j in [2, 4, 8] {
                    if j >= 2 * m {
                        skipped.push(format!("interleaved j={j}: needs j < 2m"));
                        continue;
                    }
                    let res = run_modes(|mode, l| par_query_interleaved(&wb.layered, &pattern, j, mode, l))?;
                    let mut run = algo_run(algo, j, &want, res);
                    let trace = trace_interleaved(&wb.layered, pattern.symbols(), j, ExecMode::Simulated)?;
                    for (k, probes, len) in trace.pair_loads() {
                        if probes > 2 * len {
                            run.violations.push(format!("layer {k}: {probes} probes for path length {len}"));
                        }
                    }
                    let unit = (m as f64 / j as f64) * (j.trailing_zeros() as f64);
                    let constant = run.span as f64 / unit;
                    run.span_constant = Some(constant);
                    if constant > 4.0 {
                        run.violations.push(format!("span {} exceeds 4·(m/j)·lg j = {:.2}", run.span, 4.0 * unit));
                    }
                    runs.push(run);
                }
            }
        }
    }
    Ok(CaseReport { case, oracle_count: want.len(), runs, skipped })
}

/// Summary of a suite run; serialized as the versioned report.
#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub schema_version: u32,
    pub seed: u64,
    pub cases: usize,
    pub runs: usize,
    pub mismatches: usize,
    pub violations: usize,
    pub max_interleaved_constant: f64,
    pub max_tree2_span_excess: i64,
    pub first_failure: Option<CaseReport>,
    pub per_algo: Vec<AlgoSummary>,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct AlgoSummary {
    pub algo: String,
    pub runs: usize,
    pub mismatches: usize,
    pub violations: usize,
    pub total_work: u64,
    pub total_span: u64,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.mismatches == 0 && self.violations == 0
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Runs all cases, building each text's indexes once. Cases sharing a
/// text seed must be adjacent.
pub fn run_suite(seed: u64, cases: &[CorpusCase], algos: &[Algo], trie_limit: usize) -> Result<(SuiteReport, Vec<CaseReport>)> {
    let mut reports = Vec::with_capacity(cases.len());
    let mut bench: Option<(u64, usize, usize, Workbench)> = None;
    for &case in cases {
        let fresh = !matches!(&bench, Some((s, n, g, _)) if (*s, *n, *g) == (case.seed, case.n, case.sigma));
        if fresh {
            bench = Some((case.seed, case.n, case.sigma, Workbench::new(&case.text(), trie_limit)?));
        }
        let wb = &bench.as_ref().expect("workbench").3;
        let pat = case.pattern(&wb.raw);
        if pat.is_empty() {
            continue;
        }
        reports.push(run_pattern(wb, case, &pat, algos)?);
    }
    Ok((summarize(seed, &reports), reports))
}

pub fn summarize(seed: u64, reports: &[CaseReport]) -> SuiteReport {
    let mut per: Vec<AlgoSummary> = Algo::ALL
        .iter()
        .map(|a| AlgoSummary { algo: a.name().into(), ..Default::default() })
        .collect();
    let mut max_c: f64 = 0.0;
    let mut excess = i64::MIN;
    for r in reports {
        for run in &r.runs {
            let s = &mut per[Algo::ALL.iter().position(|&a| a == run.algo).expect("known algo")];
            s.runs += 1;
            s.mismatches += usize::from(!run.matches_oracle || !run.modes_agree);
            s.violations += run.violations.len();
            s.total_work += run.work;
            s.total_span += run.span;
            if let Some(c) = run.span_constant {
                max_c = max_c.max(c);
            }
            if run.algo == Algo::TreePar2 {
                excess = excess.max(run.span as i64 - r.case.m as i64);
            }
        }
    }
    SuiteReport {
        schema_version: REPORT_SCHEMA_VERSION,
        seed,
        cases: reports.len(),
        runs: per.iter().map(|s| s.runs).sum(),
        mismatches: reports.iter().map(CaseReport::mismatches).sum(),
        violations: reports.iter().map(CaseReport::violations).sum(),
        max_interleaved_constant: max_c,
        max_tree2_span_excess: if excess == i64::MIN { 0 } else { excess },
        first_failure: reports.iter().find(|r| r.mismatches() + r.violations() > 0).cloned(),
        per_algo: per,
    }
}
