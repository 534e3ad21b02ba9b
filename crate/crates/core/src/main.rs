use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use parsuffix::harness::{generate_cases, run_suite};
use parsuffix::{Algo, ExecMode, Pattern, StepLedger, StoredIndex, StoredKind};

#[derive(Parser)]
#[command(name = "parsuffix", version, about = "Parallel suffix-index pattern queries")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build an index from a text file and write it to disk.
    Build(BuildArgs),
    /// Count or locate patterns with one of the query algorithms.
    Query(QueryArgs),
    /// Print work and span of every applicable algorithm for sampled patterns.
    Bench(BenchArgs),
    /// Run the randomized cross-check suite.
    Selftest(SelftestArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Trie,
    Tree,
    Interleaved,
}

impl From<KindArg> for StoredKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Trie => StoredKind::Trie,
            KindArg::Tree => StoredKind::Tree,
            KindArg::Interleaved => StoredKind::Interleaved,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgoArg {
    Seq,
    TriePar,
    TreePar2,
    Interleaved,
}

impl From<AlgoArg> for Algo {
    fn from(a: AlgoArg) -> Self {
        match a {
            AlgoArg::Seq => Algo::Seq,
            AlgoArg::TriePar => Algo::TriePar,
            AlgoArg::TreePar2 => Algo::TreePar2,
            AlgoArg::Interleaved => Algo::Interleaved,
        }
    }
}

#[derive(Args)]
struct BuildArgs {
    #[arg(long)]
    text: PathBuf,
    #[arg(long, value_enum)]
    index: KindArg,
    /// Largest layer stride of an interleaved index (power of two ≥ 2).
    #[arg(long, default_value_t = 2)]
    p: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct QueryArgs {
    #[arg(long)]
    index: PathBuf,
    #[arg(long, conflicts_with = "pattern_file", required_unless_present = "pattern_file")]
    pattern: Option<String>,
    /// One pattern per line; empty lines are skipped.
    #[arg(long)]
    pattern_file: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = AlgoArg::Seq)]
    algo: AlgoArg,
    /// Lane count; defaults to 2, or the index's largest stride for interleaved.
    #[arg(long)]
    p: Option<usize>,
    #[arg(long, conflicts_with = "locate")]
    count: bool,
    #[arg(long)]
    locate: bool,
    #[arg(long)]
    stats: bool,
    /// Run lanes on OS threads instead of the simulated schedule.
    #[arg(long)]
    threads: bool,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    index: PathBuf,
    /// Comma-separated pattern lengths.
    #[arg(long, value_delimiter = ',', default_values_t = [4usize, 8, 16, 32, 64])]
    lengths: Vec<usize>,
    /// Patterns sampled per length.
    #[arg(long, default_value_t = 4)]
    samples: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct SelftestArgs {
    #[arg(long, default_value_t = 256)]
    n: usize,
    #[arg(long, default_value_t = 4)]
    sigma: usize,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    /// Overridden by the PARSUFFIX_SEED environment variable.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Write the JSON report here.
    #[arg(long)]
    report: Option<PathBuf>,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.cmd {
        Cmd::Build(a) => build(a),
        Cmd::Query(a) => query(a),
        Cmd::Bench(a) => bench(a),
        Cmd::Selftest(a) => selftest(a),
    }
}

fn build(a: BuildArgs) -> Result<ExitCode> {
    let kind = StoredKind::from(a.index);
    if kind == StoredKind::Interleaved && (!a.p.is_power_of_two() || a.p < 2) {
        bail!("--p must be a power of two ≥ 2 for an interleaved index, got {}", a.p);
    }
    let raw = fs::read(&a.text).with_context(|| format!("reading {}", a.text.display()))?;
    let idx = StoredIndex::build(&raw, kind, a.p)?;
    idx.save(&a.out).with_context(|| format!("writing {}", a.out.display()))?;
    let nodes: Vec<String> = idx.layers().iter().map(|l| l.node_count().to_string()).collect();
    let dicts: Vec<String> = idx.dicts().iter().map(|d| d.len().to_string()).collect();
    println!("kind {}", kind.name());
    println!("text {} bytes", raw.len());
    println!("nodes {}", nodes.join(" "));
    println!("dict entries {}", dicts.join(" "));
    Ok(ExitCode::SUCCESS)
}

/// Lane count actually used for a pattern of length `m`, with a warning
/// when the request had to be reduced.
fn effective_p(algo: Algo, requested: usize, m: usize) -> Result<(Algo, usize, Option<String>)> {
    if algo == Algo::Seq {
        return Ok((algo, 1, None));
    }
    if !requested.is_power_of_two() {
        bail!("--p must be a power of two, got {requested}");
    }
    let mut p = requested;
    let mut warn = None;
    if p >= 2 * m {
        p = 1 << (2 * m - 1).ilog2();
        warn = Some(format!("p = {requested} needs p < 2m = {}; using p = {p}", 2 * m));
    }
    let min = if algo == Algo::TriePar { 1 } else { 2 };
    if p < min {
        let msg = format!("pattern of length {m} is too short for {algo}; using seq");
        return Ok((Algo::Seq, 1, Some(msg)));
    }
    Ok((algo, p, warn))
}

fn query(a: QueryArgs) -> Result<ExitCode> {
    let idx = StoredIndex::load(&a.index).with_context(|| format!("loading {}", a.index.display()))?;
    let algo = Algo::from(a.algo);
    let requested = match (a.p, &idx, algo) {
        (Some(p), _, _) => p,
        (None, StoredIndex::Interleaved(l), Algo::Interleaved) => l.p(),
        (None, ..) => 2,
    };
    let patterns: Vec<Vec<u8>> = match (&a.pattern, &a.pattern_file) {
        (Some(p), _) => vec![p.as_bytes().to_vec()],
        (None, Some(f)) => fs::read(f)
            .with_context(|| format!("reading {}", f.display()))?
            .split(|&b| b == b'\n')
            .map(|l| l.strip_suffix(b"\r").unwrap_or(l).to_vec())
            .filter(|l| !l.is_empty())
            .collect(),
        (None, None) => bail!("one of --pattern or --pattern-file is required"),
    };
    let mode = if a.threads { ExecMode::Threaded } else { ExecMode::Simulated };
    let mut out = io::stdout().lock();
    for pat in patterns {
        let pattern = Pattern::new(&pat)?;
        let (run_algo, p, warn) = effective_p(algo, requested, pat.len())?;
        if let Some(w) = warn {
            eprintln!("warning: {w}");
        }
        let mut ledger = StepLedger::new(p);
        let res = idx.query(run_algo, &pattern, p, mode, &mut ledger)?;
        let mut line = if a.locate {
            res.positions.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
        } else {
            res.count().to_string()
        };
        if a.stats {
            let c = ledger.totals();
            line.push_str(&format!(
                "\twork={} span={} verify_span={} nav={} probes={} shortens={} hops={} compares={}",
                ledger.work(),
                ledger.span(),
                ledger.verify_span(),
                c.nav_chars,
                c.probes,
                c.shortens,
                c.hops,
                c.compares
            ));
        }
        writeln!(out, "{line}")?;
    }
    Ok(ExitCode::SUCCESS)
}

fn bench(a: BenchArgs) -> Result<ExitCode> {
    let idx = StoredIndex::load(&a.index).with_context(|| format!("loading {}", a.index.display()))?;
    let raw = idx.base().text().raw();
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let parallel = match idx.kind() {
        StoredKind::Trie => Algo::TriePar,
        StoredKind::Tree => Algo::TreePar2,
        StoredKind::Interleaved => Algo::Interleaved,
    };
    let lanes: Vec<usize> = match &idx {
        StoredIndex::Trie { .. } => vec![2, 4, 8, 16],
        StoredIndex::Tree { .. } => vec![2],
        StoredIndex::Interleaved(l) => (1..=l.p().ilog2()).map(|t| 1 << t).collect(),
    };
    println!("{:>6} {:>12} {:>3} {:>8} {:>8} {:>8}", "m", "algo", "p", "work", "span", "probes");
    for &m in &a.lengths {
        if m == 0 || m > raw.len() {
            continue;
        }
        let mut rows: Vec<(Algo, usize, u64, u64, u64, usize)> = Vec::new();
        for _ in 0..a.samples {
            let start = rng.gen_range(0..=raw.len() - m);
            let pattern = Pattern::new(&raw[start..start + m])?;
            let mut runs = vec![(Algo::Seq, 1)];
            runs.extend(lanes.iter().filter(|&&p| p < 2 * m).map(|&p| (parallel, p)));
            for (algo, p) in runs {
                let mut l = StepLedger::new(p);
                idx.query(algo, &pattern, p, ExecMode::Simulated, &mut l)?;
                match rows.iter_mut().find(|r| r.0 == algo && r.1 == p) {
                    Some(r) => {
                        r.2 += l.work();
                        r.3 += l.span();
                        r.4 += l.totals().probes;
                        r.5 += 1;
                    }
                    None => rows.push((algo, p, l.work(), l.span(), l.totals().probes, 1)),
                }
            }
        }
        for (algo, p, work, span, probes, k) in rows {
            let k = k as f64;
            println!(
                "{m:>6} {:>12} {p:>3} {:>8.1} {:>8.1} {:>8.1}",
                algo.name(),
                work as f64 / k,
                span as f64 / k,
                probes as f64 / k
            );
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn selftest(a: SelftestArgs) -> Result<ExitCode> {
    let seed = match std::env::var("PARSUFFIX_SEED") {
        Ok(s) => s.trim().parse().with_context(|| format!("PARSUFFIX_SEED={s:?} is not an integer"))?,
        Err(_) => a.seed,
    };
    if a.n == 0 || !(1..=26).contains(&a.sigma) {
        bail!("--n must be positive and --sigma in 1..=26");
    }
    let per_text = 8;
    let texts = a.trials.div_ceil(per_text);
    let mut cases = generate_cases(seed, texts, per_text, a.n, a.n, &[a.sigma]);
    cases.truncate(a.trials);
    let (report, _) = run_suite(seed, &cases, &Algo::ALL, 600)?;
    println!("seed {seed}  cases {}  runs {}", report.cases, report.runs);
    println!("{:>12} {:>6} {:>10} {:>10} {:>10} {:>10}", "algo", "runs", "mismatch", "violation", "work", "span");
    for s in &report.per_algo {
        println!(
            "{:>12} {:>6} {:>10} {:>10} {:>10} {:>10}",
            s.algo, s.runs, s.mismatches, s.violations, s.total_work, s.total_span
        );
    }
    println!("max interleaved span constant {:.3}", report.max_interleaved_constant);
    println!("max tree-par2 span minus m {}", report.max_tree2_span_excess);
    if let Some(path) = &a.report {
        fs::write(path, report.to_json()).with_context(|| format!("writing {}", path.display()))?;
    }
    if report.passed() {
        println!("PASS");
        Ok(ExitCode::SUCCESS)
    } else {
        let f = report.first_failure.as_ref().expect("failure recorded");
        println!(
            "FAIL first failing case: text seed {} n {} sigma {} m {} pattern seed {}",
            f.case.seed, f.case.n, f.case.sigma, f.case.m, f.case.pattern_seed
        );
        Ok(ExitCode::FAILURE)
    }
}
