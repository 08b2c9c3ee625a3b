use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error};

/// Solver identifiers, in the order the bench reports them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Power,
    Iio,
    Miio,
    Arnoldi,
    #[serde(rename = "garnoldi")]
    GArnoldi,
    ArnoldiMiio,
    #[serde(rename = "garnoldi-miio")]
    GArnoldiMiio,
    Oracle,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::Power,
        Method::Iio,
        Method::Miio,
        Method::Arnoldi,
        Method::GArnoldi,
        Method::ArnoldiMiio,
        Method::GArnoldiMiio,
        Method::Oracle,
    ];

    /// Command-line spelling.
    pub fn key(self) -> &'static str {
        match self {
            Method::Power => "power",
            Method::Iio => "iio",
            Method::Miio => "miio",
            Method::Arnoldi => "arnoldi",
            Method::GArnoldi => "garnoldi",
            Method::ArnoldiMiio => "arnoldi-miio",
            Method::GArnoldiMiio => "garnoldi-miio",
            Method::Oracle => "oracle",
        }
    }

    /// Table spelling.
    pub fn label(self) -> &'static str {
        match self {
            Method::Power => "Power",
            Method::Iio => "IIO",
            Method::Miio => "MIIO",
            Method::Arnoldi => "Arnoldi",
            Method::GArnoldi => "GArnoldi",
            Method::ArnoldiMiio => "Arnoldi-MIIO",
            Method::GArnoldiMiio => "GArnoldi-MIIO",
            Method::Oracle => "Oracle",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase();
        Method::ALL
            .into_iter()
            .find(|m| m.key() == key)
            .ok_or_else(|| invalid(format!("unknown method `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Phase {
    Krylov,
    Splitting,
}

/// One visit to a phase of a hybrid solver.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseRecord {
    pub phase: Phase,
    pub mv: u64,
    pub entry_residual: f64,
    pub exit_residual: f64,
    pub restarts: usize,
}

/// Outcome of one solver run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub method: Method,
    /// Unit-sum approximation.
    pub x: Vec<f64>,
    pub iterations: usize,
    pub mv: u64,
    pub cpu_seconds: f64,
    /// `(mv at check, residual)` pairs with strictly increasing `mv`.
    pub residual_history: Vec<(u64, f64)>,
    pub converged: bool,
    /// Phase log, filled by hybrid solvers when tracing is enabled.
    pub trace: Vec<PhaseRecord>,
}

impl SolveReport {
    pub fn final_residual(&self) -> Option<f64> {
        self.residual_history.last().map(|&(_, r)| r)
    }
}

/// Records residual checks, dropping a check that lands on the same product
/// count as the previous one (the later value wins).
#[derive(Debug, Default)]
pub(crate) struct History(Vec<(u64, f64)>);

impl History {
    pub fn push(&mut self, mv: u64, residual: f64) {
        match self.0.last_mut() {
            Some(last) if last.0 >= mv => {
                last.1 = residual;
            }
            _ => self.0.push((mv, residual)),
        }
    }

    pub fn into_inner(self) -> Vec<(u64, f64)> {
        self.0
    }
}
