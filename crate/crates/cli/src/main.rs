use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{ArgGroup, Parser, ValueEnum};
use splitrank::harness::{render, run_bench, BenchConfig, Format, InputSource};
use splitrank::matrix::ingest_stats;
use splitrank::{GraphModel, GraphSpec, Method};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Preset {
    Paper,
}

/// Run PageRank solvers on a graph and tabulate IT, Mv, CPU and speedup.
#[derive(Debug, Parser)]
#[command(name = "splitrank", version)]
#[command(group(ArgGroup::new("source").required(true).args(["input", "synthetic"])))]
struct Args {
    /// Matrix Market file, optionally gzip-compressed.
    #[arg(long)]
    input: Option<PathBuf>,

    /// Generated graph, e.g. `n=100000,deg=8,dangling=0.15,seed=42,model=host-clustered`.
    #[arg(long)]
    synthetic: Option<String>,

    /// Read entry (i, j) as a link j -> i.
    #[arg(long)]
    transpose: bool,

    /// Comma-separated solvers, or `all`.
    #[arg(long, default_value = "power,iio,miio,arnoldi,garnoldi,arnoldi-miio,garnoldi-miio")]
    methods: String,

    /// Comma-separated damping factors.
    #[arg(long, default_value = "0.99")]
    alpha: String,

    /// Parameter preset; explicit flags override it.
    #[arg(long, value_enum, default_value = "paper")]
    preset: Preset,

    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    m1: Option<usize>,
    #[arg(long)]
    m2: Option<usize>,
    /// Outer tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Inner tolerance.
    #[arg(long)]
    eta: Option<f64>,
    /// Krylov subspace size.
    #[arg(long)]
    m: Option<usize>,
    /// Retained Ritz vectors.
    #[arg(long)]
    p: Option<usize>,
    /// Stall budget per splitting visit.
    #[arg(long)]
    maxit: Option<usize>,
    /// Krylov cycles per visit.
    #[arg(long)]
    arnoldi_runs: Option<usize>,
    /// Outer ratio threshold [default: alpha - 0.1].
    #[arg(long)]
    alpha1: Option<f64>,
    /// Inner ratio threshold [default: alpha - 0.1].
    #[arg(long)]
    alpha2: Option<f64>,
    /// Outer iteration cap for every solver.
    #[arg(long)]
    max_outer: Option<usize>,
    /// Matrix-vector product budget for the hybrids.
    #[arg(long)]
    mv_budget: Option<u64>,
    /// Reset the inner residual state on every splitting visit.
    #[arg(long)]
    reset_d0: bool,

    /// Directory for result tables and residual histories.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Comma-separated output formats: csv, md, json.
    #[arg(long, default_value = "csv")]
    format: String,

    /// Record the phase log of the hybrid solvers.
    #[arg(long)]
    trace: bool,

    /// Overwrite existing files in the output directory.
    #[arg(long)]
    force: bool,
}

fn parse_list<T>(text: &str, what: &str) -> anyhow::Result<Vec<T>>
where
    T: std::str::FromStr,
    T::Err: std::fmt::Display,
{
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|e| anyhow::anyhow!("bad {what} `{s}`: {e}")))
        .collect()
}

fn parse_methods(text: &str) -> anyhow::Result<Vec<Method>> {
    if text.trim() == "all" {
        return Ok(Method::ALL.to_vec());
    }
    parse_list(text, "method")
}

fn parse_model(text: &str) -> anyhow::Result<GraphModel> {
    Ok(match text {
        "uniform-sparse" | "uniform" => GraphModel::UniformSparse,
        "preferential-attachment" | "pa" => GraphModel::PreferentialAttachment,
        "host-clustered" | "hosts" => GraphModel::HostClustered,
        other => bail!("unknown graph model `{other}`"),
    })
}

fn parse_synthetic(text: &str) -> anyhow::Result<GraphSpec> {
    let mut spec = GraphSpec::new(0, 8.0, 0.0, 0);
    let mut have_n = false;
    for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (key, value) = part
            .split_once('=')
            .with_context(|| format!("expected key=value, got `{part}`"))?;
        let bad = || format!("bad value for `{key}`: `{value}`");
        match key.trim() {
            "n" => {
                spec.n = value.parse().with_context(bad)?;
                have_n = true;
            }
            "deg" => spec.avg_outdegree = value.parse().with_context(bad)?,
            "dangling" => spec.dangling_fraction = value.parse().with_context(bad)?,
            "seed" => spec.seed = value.parse().with_context(bad)?,
            "model" => spec.model = parse_model(value)?,
            "host" => spec.host_size = value.parse().with_context(bad)?,
            "external" => spec.external_fraction = value.parse().with_context(bad)?,
            other => bail!("unknown synthetic key `{other}`"),
        }
    }
    if !have_n {
        bail!("synthetic spec needs n=...");
    }
    spec.validate()?;
    Ok(spec)
}

fn thread_cap() -> anyhow::Result<Option<usize>> {
    match std::env::var("PAGERANK_THREADS") {
        Ok(s) => {
            let n: usize = s.trim().parse().with_context(|| format!("PAGERANK_THREADS=`{s}`"))?;
            if n == 0 {
                bail!("PAGERANK_THREADS must be at least 1");
            }
            Ok(Some(n))
        }
        Err(_) => Ok(None),
    }
}

fn build_config(args: &Args) -> anyhow::Result<BenchConfig> {
    let input = match (&args.input, &args.synthetic) {
        (Some(path), None) => InputSource::File(path.clone()),
        (None, Some(spec)) => InputSource::Synthetic(parse_synthetic(spec)?),
        _ => bail!("give exactly one of --input or --synthetic"),
    };
    let alphas: Vec<f64> = parse_list(&args.alpha, "alpha")?;
    let Preset::Paper = args.preset;
    let mut cfg = BenchConfig::paper(input, alphas);
    cfg.transpose = args.transpose;
    cfg.methods = parse_methods(&args.methods)?;
    cfg.formats = parse_list::<Format>(&args.format, "format")?;
    if cfg.formats.is_empty() {
        bail!("no output format selected");
    }

    let sp = &mut cfg.splitting;
    if let Some(v) = args.beta {
        sp.beta = v;
    }
    if let Some(v) = args.m1 {
        sp.m1 = v;
    }
    if let Some(v) = args.m2 {
        sp.m2 = v;
    }
    if let Some(v) = args.tol {
        sp.tau = v;
    }
    if let Some(v) = args.eta {
        sp.eta = v;
    }
    if let Some(v) = args.max_outer {
        sp.max_outer = v;
    }

    let ff = &mut cfg.flip_flop;
    if let Some(v) = args.m {
        ff.m = v;
    }
    if let Some(v) = args.p {
        ff.p = v;
    }
    if let Some(v) = args.maxit {
        ff.maxit = v;
    }
    if let Some(v) = args.arnoldi_runs {
        ff.arnoldi_runs = v;
    }
    if let Some(v) = args.mv_budget {
        ff.mv_budget = v;
    }
    ff.reset_d0 = args.reset_d0;
    ff.trace = args.trace;
    cfg.alpha1 = args.alpha1;
    cfg.alpha2 = args.alpha2;

    cfg.output_dir = args.out.clone();
    cfg.overwrite = args.force;
    cfg.validate()?;
    Ok(cfg)
}

fn run() -> anyhow::Result<ExitCode> {
    let args = match Args::try_parse() {
        Ok(args) => args,
        Err(err) => {
            let usage = err.use_stderr();
            let _ = err.print();
            return Ok(if usage { ExitCode::from(1) } else { ExitCode::SUCCESS });
        }
    };
    let mut cfg = build_config(&args)?;

    let threads = thread_cap()?;
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("building worker pool")?;
    }
    cfg.parallel = threads.is_none_or(|n| n > 1);

    let (name, adj) = splitrank::harness::load_input(&cfg.input, cfg.transpose)?;
    let stats = ingest_stats(&adj);
    eprintln!(
        "{name}: n={} nnz={} density={:.3e}% dangling={}",
        stats.n, stats.nnz, stats.density_percent, stats.dangling_count
    );

    let outcome = run_bench(&cfg)?;
    print!("{}", render(&outcome.rows, cfg.formats[0]));
    for path in &outcome.written {
        eprintln!("wrote {}", path.display());
    }
    if !outcome.all_converged() {
        eprintln!("some runs did not converge");
    }
    Ok(ExitCode::from(outcome.exit_code() as u8))
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
