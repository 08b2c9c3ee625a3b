//! Benchmark driver: runs solvers over a graph for several damping factors
//! and renders IT / Mv / CPU / Speedup tables.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;

use crate::dense::{dense_oracle_pagerank, ORACLE_LIMIT};
use crate::error::{invalid, Error, Result};
use crate::hybrid::{arnoldi_miio_solve, garnoldi_miio_solve, FlipFlopParams};
use crate::krylov::{adaptive_garnoldi_solve, thick_restart_arnoldi_solve};
use crate::matrix::{read_matrix_market_file, CompressedSparseMatrix};
use crate::operator::TransitionOperator;
use crate::report::{Method, Phase, SolveReport};
use crate::splitting::{iio_solve, miio_solve, power_method, SplittingParams};
use crate::synthetic::{generate, GraphSpec};
use crate::vecops;

#[derive(Debug, Clone, PartialEq)]
pub enum InputSource {
    File(PathBuf),
    Synthetic(GraphSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Markdown,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Markdown => "md",
            Format::Json => "json",
        }
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "md" | "markdown" => Ok(Format::Markdown),
            "json" => Ok(Format::Json),
            other => Err(invalid(format!("unknown format `{other}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub input: InputSource,
    pub transpose: bool,
    pub methods: Vec<Method>,
    pub alphas: Vec<f64>,
    /// Template; `alpha` is replaced per run.
    pub splitting: SplittingParams,
    /// Template; the ratio thresholds are replaced per run unless pinned.
    pub flip_flop: FlipFlopParams,
    /// Pinned outer ratio; `alpha − 0.1` when absent.
    pub alpha1: Option<f64>,
    /// Pinned inner ratio; `alpha − 0.1` when absent.
    pub alpha2: Option<f64>,
    pub output_dir: Option<PathBuf>,
    pub formats: Vec<Format>,
    /// Replace existing artifacts instead of refusing.
    pub overwrite: bool,
    /// Row-parallel operator products.
    pub parallel: bool,
}

impl BenchConfig {
    /// The `paper` parameter preset on `input` for every method except the oracle.
    pub fn paper(input: InputSource, alphas: Vec<f64>) -> Self {
        let first = alphas.first().copied().unwrap_or(0.99);
        Self {
            input,
            transpose: false,
            methods: Method::ALL.iter().copied().filter(|m| *m != Method::Oracle).collect(),
            alphas,
            splitting: SplittingParams::paper(first),
            flip_flop: FlipFlopParams::paper(first),
            alpha1: None,
            alpha2: None,
            output_dir: None,
            formats: vec![Format::Csv],
            overwrite: false,
            parallel: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(invalid("no methods selected"));
        }
        if self.alphas.is_empty() {
            return Err(invalid("no damping factors selected"));
        }
        for &alpha in &self.alphas {
            self.splitting_for(alpha).validate()?;
            self.flip_flop_for(alpha).validate()?;
        }
        Ok(())
    }

    pub fn splitting_for(&self, alpha: f64) -> SplittingParams {
        SplittingParams {
            alpha,
            ..self.splitting.clone()
        }
    }

    pub fn flip_flop_for(&self, alpha: f64) -> FlipFlopParams {
        FlipFlopParams {
            alpha1: self.alpha1.unwrap_or(alpha - 0.1),
            alpha2: self.alpha2.unwrap_or(alpha - 0.1),
            ..self.flip_flop.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub matrix: String,
    pub alpha: f64,
    pub method: Method,
    pub mv: u64,
    pub cpu_seconds: f64,
    pub it: usize,
    pub speedup_percent: Option<f64>,
    pub converged: bool,
    pub final_residual: f64,
    /// ∞-norm distance to the oracle row, when the oracle ran.
    pub oracle_error: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct BenchOutcome {
    pub matrix: String,
    pub rows: Vec<BenchRow>,
    pub reports: Vec<(f64, SolveReport)>,
    pub written: Vec<PathBuf>,
}

impl BenchOutcome {
    pub fn all_converged(&self) -> bool {
        self.rows.iter().all(|r| r.converged)
    }

    /// 0 when every run converged, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.all_converged() {
            0
        } else {
            2
        }
    }
}

/// Loads the graph and returns it with a display name.
pub fn load_input(input: &InputSource, transpose: bool) -> Result<(String, CompressedSparseMatrix)> {
    let (name, adj) = match input {
        InputSource::File(path) => {
            let name = path
                .file_name()
                .and_then(|s| s.to_str())
                .map(|s| s.trim_end_matches(".gz").trim_end_matches(".mtx").to_string())
                .unwrap_or_else(|| "input".into());
            (name, read_matrix_market_file(path)?)
        }
        InputSource::Synthetic(spec) => (
            format!("synthetic-n{}-s{}", spec.n, spec.seed),
            generate(spec)?,
        ),
    };
    Ok((name, if transpose { adj.transpose() } else { adj }))
}

fn oracle_report(adj: &CompressedSparseMatrix, op: &TransitionOperator, alpha: f64) -> Result<SolveReport> {
    let clock = Instant::now();
    let x = dense_oracle_pagerank(adj, alpha, op.teleport())?;
    let cpu_seconds = clock.elapsed().as_secs_f64();
    let residual = op.pagerank_residual(alpha, &x, None)?;
    Ok(SolveReport {
        method: Method::Oracle,
        x,
        iterations: 0,
        mv: 0,
        cpu_seconds,
        residual_history: vec![(0, residual)],
        converged: true,
        trace: Vec::new(),
    })
}

/// Runs one method from `x⁰ = v`.
pub fn run_method(
    method: Method,
    adj: &CompressedSparseMatrix,
    op: &TransitionOperator,
    sp: &SplittingParams,
    ff: &FlipFlopParams,
) -> Result<SolveReport> {
    let alpha = sp.alpha;
    let v = op.teleport();
    let cap = sp.max_outer;
    match method {
        Method::Power => power_method(op, alpha, sp.tau, cap),
        Method::Iio => iio_solve(op, sp, v),
        Method::Miio => miio_solve(op, sp, v),
        Method::Arnoldi => thick_restart_arnoldi_solve(op, alpha, ff.m, ff.p, sp.tau, cap),
        Method::GArnoldi => adaptive_garnoldi_solve(op, alpha, ff.m, sp.tau, cap),
        Method::ArnoldiMiio => arnoldi_miio_solve(op, sp, ff, v),
        Method::GArnoldiMiio => garnoldi_miio_solve(op, sp, ff, v),
        Method::Oracle => oracle_report(adj, op, alpha),
    }
}

/// Fills `speedup_percent` from the IIO row of each (matrix, alpha) group.
pub fn compute_speedup(rows: &mut [BenchRow]) {
    let baselines: Vec<(String, f64, f64)> = rows
        .iter()
        .filter(|r| r.method == Method::Iio)
        .map(|r| (r.matrix.clone(), r.alpha, r.cpu_seconds))
        .collect();
    for row in rows.iter_mut() {
        row.speedup_percent = None;
        if row.method == Method::Iio {
            continue;
        }
        let base = baselines
            .iter()
            .find(|(m, a, _)| *m == row.matrix && *a == row.alpha)
            .map(|b| b.2);
        if let Some(cpu) = base.filter(|&c| c > 0.0) {
            row.speedup_percent = Some((cpu - row.cpu_seconds) / cpu * 100.0);
        }
    }
}

/// Writes `mv,residual` with 16 significant digits per residual.
pub fn emit_residual_plot_data(report: &SolveReport, path: &Path) -> Result<()> {
    if report.residual_history.is_empty() {
        return Err(invalid("empty residual history"));
    }
    let mut out = String::from("mv,residual\n");
    for (mv, r) in &report.residual_history {
        writeln!(out, "{mv},{r:.15e}").unwrap();
    }
    fs::write(path, out)?;
    Ok(())
}

/// Phase log as CSV: `phase,mv,entry_residual,exit_residual,restarts`.
pub fn render_trace(report: &SolveReport) -> String {
    let mut out = String::from("phase,mv,entry_residual,exit_residual,restarts\n");
    for t in &report.trace {
        let phase = match t.phase {
            Phase::Krylov => "krylov",
            Phase::Splitting => "splitting",
        };
        writeln!(
            out,
            "{phase},{},{:.15e},{:.15e},{}",
            t.mv, t.entry_residual, t.exit_residual, t.restarts
        )
        .unwrap();
    }
    out
}

fn cpu_text(cpu: f64) -> String {
    format!("{cpu:.4}")
}

fn speedup_text(s: Option<f64>) -> String {
    s.map(|v| format!("{v:.2}")).unwrap_or_default()
}

pub fn render_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from("matrix,alpha,method,mv,cpu,it,speedup,converged,residual\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{:.6e}",
            r.matrix,
            r.alpha,
            r.method.key(),
            r.mv,
            cpu_text(r.cpu_seconds),
            r.it,
            speedup_text(r.speedup_percent),
            r.converged,
            r.final_residual
        )
        .unwrap();
    }
    out
}

pub fn render_markdown(rows: &[BenchRow]) -> String {
    let mut out = String::from("| Matrix | α | Method | Mv | CPU | IT | Speedup |\n");
    out.push_str("|---|---|---|---:|---:|---:|---:|\n");
    for r in rows {
        let speedup = r.speedup_percent.map(|v| format!("{v:.2}%")).unwrap_or_default();
        let flag = if r.converged { "" } else { " (not converged)" };
        writeln!(
            out,
            "| {} | {} | {}{} | {} | {} | {} | {} |",
            r.matrix,
            r.alpha,
            r.method.label(),
            flag,
            r.mv,
            cpu_text(r.cpu_seconds),
            r.it,
            speedup
        )
        .unwrap();
    }
    out
}

#[derive(Serialize)]
struct JsonRow<'a> {
    matrix: &'a str,
    alpha: f64,
    method: Method,
    mv: u64,
    cpu_seconds: f64,
    it: usize,
    speedup_percent: Option<f64>,
    converged: bool,
    final_residual: f64,
    oracle_error: Option<f64>,
}

fn rounded(text: String) -> f64 {
    text.parse().expect("formatted number")
}

pub fn render_json(rows: &[BenchRow]) -> String {
    let json: Vec<JsonRow> = rows
        .iter()
        .map(|r| JsonRow {
            matrix: &r.matrix,
            alpha: r.alpha,
            method: r.method,
            mv: r.mv,
            cpu_seconds: rounded(cpu_text(r.cpu_seconds)),
            it: r.it,
            speedup_percent: r.speedup_percent.map(|s| rounded(format!("{s:.2}"))),
            converged: r.converged,
            final_residual: r.final_residual,
            oracle_error: r.oracle_error,
        })
        .collect();
    let mut s = serde_json::to_string_pretty(&json).expect("rows serialize");
    s.push('\n');
    s
}

pub fn render(rows: &[BenchRow], format: Format) -> String {
    match format {
        Format::Csv => render_csv(rows),
        Format::Markdown => render_markdown(rows),
        Format::Json => render_json(rows),
    }
}

fn write_new(path: &Path, contents: &str, overwrite: bool) -> Result<()> {
    if overwrite {
        fs::write(path, contents)?;
        return Ok(());
    }
    let mut f = fs::OpenOptions::new()
        .write(true)
        .create_new(true)
        .open(path)
        .map_err(|e| match e.kind() {
            std::io::ErrorKind::AlreadyExists => invalid(format!("refusing to overwrite {}", path.display())),
            _ => Error::Io(e),
        })?;
    f.write_all(contents.as_bytes())?;
    Ok(())
}

fn history_name(matrix: &str, alpha: f64, method: Method) -> String {
    format!("history_{matrix}_{alpha}_{}.csv", method.key())
}

/// Runs every (alpha, method) pair and writes the requested artifacts.
pub fn run_bench(config: &BenchConfig) -> Result<BenchOutcome> {
    config.validate()?;
    let (matrix, adj) = load_input(&config.input, config.transpose)?;
    if !adj.is_square() {
        return Err(Error::NotSquare {
            rows: adj.n_rows(),
            cols: adj.n_cols(),
        });
    }
    if config.methods.contains(&Method::Oracle) && adj.n_rows() > ORACLE_LIMIT {
        return Err(Error::OracleTooLarge {
            n: adj.n_rows(),
            limit: ORACLE_LIMIT,
        });
    }
    let op = TransitionOperator::uniform(&adj)?.with_parallel(config.parallel);

    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for &alpha in &config.alphas {
        let sp = config.splitting_for(alpha);
        let ff = config.flip_flop_for(alpha);
        let mut group: Vec<SolveReport> = Vec::new();
        for &method in &config.methods {
            group.push(run_method(method, &adj, &op, &sp, &ff)?);
        }
        let oracle = group.iter().find(|r| r.method == Method::Oracle).map(|r| r.x.clone());
        for report in group {
            rows.push(BenchRow {
                matrix: matrix.clone(),
                alpha,
                method: report.method,
                mv: report.mv,
                cpu_seconds: report.cpu_seconds,
                it: report.iterations,
                speedup_percent: None,
                converged: report.converged,
                final_residual: report.final_residual().unwrap_or(f64::NAN),
                oracle_error: oracle.as_ref().map(|o| vecops::max_abs_diff(o, &report.x)),
            });
            reports.push((alpha, report));
        }
    }
    compute_speedup(&mut rows);

    let mut written = Vec::new();
    if let Some(dir) = &config.output_dir {
        fs::create_dir_all(dir)?;
        for &format in &config.formats {
            let path = dir.join(format!("results.{}", format.extension()));
            write_new(&path, &render(&rows, format), config.overwrite)?;
            written.push(path);
        }
        for (alpha, report) in &reports {
            let path = dir.join(history_name(&matrix, *alpha, report.method));
            if !config.overwrite && path.exists() {
                return Err(invalid(format!("refusing to overwrite {}", path.display())));
            }
            emit_residual_plot_data(report, &path)?;
            written.push(path);
            if !report.trace.is_empty() {
                let path = dir.join(format!("trace_{matrix}_{alpha}_{}.csv", report.method.key()));
                write_new(&path, &render_trace(report), config.overwrite)?;
                written.push(path);
            }
        }
    }
    Ok(BenchOutcome {
        matrix,
        rows,
        reports,
        written,
    })
}
