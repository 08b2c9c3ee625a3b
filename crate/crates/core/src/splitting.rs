//! Stationary iterations: the power method, the two-stage inner-outer
//! splitting (IIO) and its multi-step extension (MIIO).
//!
//! All three keep `z = P x` current so the outer residual
//! `‖α z + (1 − α) v − x‖₂` never costs an extra product.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dense::{spectral_radius, DenseMatrix};
use crate::error::{invalid, Result};
use crate::operator::{check_alpha, Session, TransitionOperator};
use crate::report::{History, Method, SolveReport};
use crate::synthetic::Stream;
use crate::vecops;

/// Scalar knobs shared by IIO, MIIO and the hybrids' splitting phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplittingParams {
    pub alpha: f64,
    pub beta: f64,
    pub m1: usize,
    pub m2: usize,
    /// Inner tolerance.
    pub eta: f64,
    /// Outer tolerance.
    pub tau: f64,
    pub max_outer: usize,
    pub max_inner: usize,
}

impl SplittingParams {
    /// β = 0.5, m1 = 5, m2 = 3, η = 1e-2, τ = 1e-8.
    pub fn paper(alpha: f64) -> Self {
        Self {
            alpha,
            beta: 0.5,
            m1: 5,
            m2: 3,
            eta: 1e-2,
            tau: 1e-8,
            max_outer: 100_000,
            max_inner: 100,
        }
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = tau;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        if !(self.beta > 0.0 && self.beta < self.alpha) {
            return Err(invalid(format!(
                "beta {} must lie in (0, alpha = {})",
                self.beta, self.alpha
            )));
        }
        if self.m1 == 0 || self.m2 == 0 {
            return Err(invalid("m1 and m2 must be at least 1"));
        }
        if !(self.eta > 0.0) || !(self.tau > 0.0) {
            return Err(invalid("tolerances must be positive"));
        }
        if self.max_outer == 0 || self.max_inner == 0 {
            return Err(invalid("iteration caps must be at least 1"));
        }
        Ok(())
    }
}

pub(crate) fn check_start(op: &TransitionOperator, x0: &[f64]) -> Result<()> {
    if x0.len() != op.n() {
        return Err(crate::error::Error::Dimension {
            expected: op.n(),
            got: x0.len(),
        });
    }
    if x0.iter().any(|&x| !(x >= 0.0)) {
        return Err(invalid("start vector must be non-negative"));
    }
    if vecops::sum(x0) == 0.0 {
        return Err(invalid("start vector is zero"));
    }
    Ok(())
}

/// `x = a z + b v`
fn set_combo(x: &mut [f64], a: f64, z: &[f64], b: f64, v: &[f64]) {
    for ((xi, zi), vi) in x.iter_mut().zip(z).zip(v) {
        *xi = a * zi + b * vi;
    }
}

/// `x = f + b z`
fn set_shifted(x: &mut [f64], f: &[f64], b: f64, z: &[f64]) {
    for ((xi, fi), zi) in x.iter_mut().zip(f).zip(z) {
        *xi = fi + b * zi;
    }
}

/// State carried through a stationary run: the iterate and its product.
pub(crate) struct Iterate<'s, 'a> {
    pub session: &'s Session<'a>,
    pub alpha: f64,
    pub x: Vec<f64>,
    pub z: Vec<f64>,
}

impl<'s, 'a> Iterate<'s, 'a> {
    pub fn start(session: &'s Session<'a>, alpha: f64, x: Vec<f64>) -> Self {
        let z = session.p(&x);
        Self {
            session,
            alpha,
            x,
            z,
        }
    }

    pub fn residual(&self) -> f64 {
        self.session.residual_cached(self.alpha, &self.x, &self.z)
    }

    fn refresh(&mut self) {
        self.session.p_into(&self.x, &mut self.z);
    }

    /// `x = α z + (1 − α) v; z = P x`
    pub fn power_step(&mut self) {
        set_combo(&mut self.x, self.alpha, &self.z, 1.0 - self.alpha, self.session.v());
        self.refresh();
    }

    /// `f = (α − β) z + (1 − α) v`
    pub fn splitting_rhs(&self, beta: f64) -> Vec<f64> {
        let mut f = vec![0.0; self.x.len()];
        set_combo(&mut f, self.alpha - beta, &self.z, 1.0 - self.alpha, self.session.v());
        f
    }

    /// `x = f + β z; z = P x`
    pub fn splitting_step(&mut self, f: &[f64], beta: f64) {
        set_shifted(&mut self.x, f, beta, &self.z);
        self.refresh();
    }

    /// `‖f + β z − x‖₂`
    pub fn inner_residual(&self, f: &[f64], beta: f64) -> f64 {
        vecops::combo_residual(1.0, f, beta, &self.z, &self.x)
    }

    /// `x ← x / eᵀx; z = P x`
    pub fn rescale(&mut self) {
        vecops::normalize_sum(&mut self.x);
        self.refresh();
    }

    /// `x = α z + (1 − α) v; x ← x / eᵀx`, leaving `z` stale.
    pub fn power_combine(&mut self) {
        set_combo(&mut self.x, self.alpha, &self.z, 1.0 - self.alpha, self.session.v());
        vecops::normalize_sum(&mut self.x);
    }

    /// Final free power step, then rescale to unit sum.
    pub fn finish(mut self) -> Vec<f64> {
        set_combo(&mut self.x, self.alpha, &self.z, 1.0 - self.alpha, self.session.v());
        vecops::normalize_sum(&mut self.x);
        self.x
    }
}

/// `x ← α P x + (1 − α) v` from `x = v` until the residual drops below `tau`.
pub fn power_method(op: &TransitionOperator, alpha: f64, tau: f64, cap: usize) -> Result<SolveReport> {
    check_alpha(alpha)?;
    if !(tau > 0.0) {
        return Err(invalid("tolerance must be positive"));
    }
    let clock = Instant::now();
    let session = op.session();
    let mut history = History::default();
    let mut it = Iterate::start(&session, alpha, op.teleport().to_vec());
    let mut r = it.residual();
    history.push(session.mv(), r);
    let mut steps = 0;
    while r >= tau && steps < cap {
        it.power_step();
        steps += 1;
        r = it.residual();
        history.push(session.mv(), r);
    }
    let converged = r < tau;
    let x = it.finish();
    Ok(SolveReport {
        method: Method::Power,
        x,
        iterations: steps,
        mv: session.mv(),
        cpu_seconds: clock.elapsed().as_secs_f64(),
        residual_history: history.into_inner(),
        converged,
        trace: Vec::new(),
    })
}

/// Two-stage splitting: per outer cycle, `m1` steps `x ← β P x + f` with `f`
/// frozen at the cycle start, then Richardson sweeps on
/// `(I − β P) x = (α − β) P x + (1 − α) v` until the inner residual is below
/// `eta`.
pub fn iio_solve(op: &TransitionOperator, params: &SplittingParams, x0: &[f64]) -> Result<SolveReport> {
    params.validate()?;
    check_start(op, x0)?;
    let clock = Instant::now();
    let session = op.session();
    let beta = params.beta;
    let mut history = History::default();
    let mut it = Iterate::start(&session, params.alpha, x0.to_vec());
    let mut r = it.residual();
    history.push(session.mv(), r);
    let mut cycles = 0;
    while r >= params.tau && cycles < params.max_outer {
        let f = it.splitting_rhs(beta);
        for _ in 0..params.m1 {
            it.splitting_step(&f, beta);
        }
        let f_inner = it.splitting_rhs(beta);
        for _ in 0..params.max_inner {
            it.splitting_step(&f_inner, beta);
            if it.inner_residual(&f_inner, beta) < params.eta {
                break;
            }
        }
        cycles += 1;
        r = it.residual();
        history.push(session.mv(), r);
    }
    let converged = r < params.tau;
    let x = it.finish();
    Ok(SolveReport {
        method: Method::Iio,
        x,
        iterations: cycles,
        mv: session.mv(),
        cpu_seconds: clock.elapsed().as_secs_f64(),
        residual_history: history.into_inner(),
        converged,
        trace: Vec::new(),
    })
}

/// One MIIO pass: `m1` power steps, `f` refresh, `m2` splitting steps, then
/// splitting steps until `‖f + β z − x‖₂ < eta`.
pub(crate) fn miio_pass(it: &mut Iterate<'_, '_>, params: &SplittingParams) {
    for _ in 0..params.m1 {
        it.power_step();
    }
    let f = it.splitting_rhs(params.beta);
    for _ in 0..params.m2 {
        it.splitting_step(&f, params.beta);
    }
    for _ in 0..params.max_inner {
        it.splitting_step(&f, params.beta);
        if it.inner_residual(&f, params.beta) < params.eta {
            break;
        }
    }
}

/// Multi-step splitting iteration. `iterations` counts outer passes.
pub fn miio_solve(op: &TransitionOperator, params: &SplittingParams, x0: &[f64]) -> Result<SolveReport> {
    params.validate()?;
    check_start(op, x0)?;
    let clock = Instant::now();
    let session = op.session();
    let mut history = History::default();
    let mut it = Iterate::start(&session, params.alpha, x0.to_vec());
    let mut r = it.residual();
    history.push(session.mv(), r);
    let mut passes = 0;
    while r >= params.tau && passes < params.max_outer {
        miio_pass(&mut it, params);
        passes += 1;
        r = it.residual();
        history.push(session.mv(), r);
    }
    let converged = r < params.tau;
    let x = it.finish();
    Ok(SolveReport {
        method: Method::Miio,
        x,
        iterations: passes,
        mv: session.mv(),
        cpu_seconds: clock.elapsed().as_secs_f64(),
        residual_history: history.into_inner(),
        converged,
        trace: Vec::new(),
    })
}

/// Upper bound on the eigenvalue moduli of the MIIO iteration matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceBound {
    pub alpha: f64,
    pub beta: f64,
    pub m1: usize,
    pub m2: usize,
    pub bound: f64,
}

fn check_bound_params(alpha: f64, beta: f64, m1: usize, m2: usize) -> Result<()> {
    check_alpha(alpha)?;
    if !(beta > 0.0 && beta < alpha) {
        return Err(invalid(format!("beta {beta} must lie in (0, {alpha})")));
    }
    if m1 == 0 || m2 == 0 {
        return Err(invalid("m1 and m2 must be at least 1"));
    }
    Ok(())
}

/// `(α − β) β^m2 α^m1 / (1 − β)`.
pub fn convergence_bound(alpha: f64, beta: f64, m1: usize, m2: usize) -> Result<ConvergenceBound> {
    check_bound_params(alpha, beta, m1, m2)?;
    let bound = (alpha - beta) * beta.powi(m2 as i32) * alpha.powi(m1 as i32) / (1.0 - beta);
    debug_assert!(bound > 0.0 && bound < 1.0);
    Ok(ConvergenceBound {
        alpha,
        beta,
        m1,
        m2,
        bound,
    })
}

/// `M(α, β) = (α − β) β^m2 α^m1 P^(m1+m2+1) (I − β P)⁻¹` for a dense `P`.
pub fn miio_iteration_matrix(
    p: &DenseMatrix,
    alpha: f64,
    beta: f64,
    m1: usize,
    m2: usize,
) -> Result<DenseMatrix> {
    check_bound_params(alpha, beta, m1, m2)?;
    let n = p.rows();
    let mut power = DenseMatrix::identity(n);
    for _ in 0..m1 + m2 + 1 {
        power = power.matmul(p);
    }
    let mut shifted = p.scaled(-beta);
    for i in 0..n {
        shifted[(i, i)] += 1.0;
    }
    let inverse = shifted.solve(&DenseMatrix::identity(n))?;
    let c = (alpha - beta) * beta.powi(m2 as i32) * alpha.powi(m1 as i32);
    Ok(power.matmul(&inverse).scaled(c))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCheck {
    pub bound: f64,
    pub max_spectral_radius: f64,
    pub trials: usize,
    pub passed: bool,
}

/// Slack allowed above the analytic bound.
pub const BOUND_SLACK: f64 = 1e-12;

/// Spectral radius of `M(α, β)` for one explicit stochastic matrix.
pub fn check_bound_for(p: &DenseMatrix, alpha: f64, beta: f64, m1: usize, m2: usize) -> Result<BoundCheck> {
    let bound = convergence_bound(alpha, beta, m1, m2)?.bound;
    let rho = spectral_radius(&miio_iteration_matrix(p, alpha, beta, m1, m2)?)?;
    Ok(BoundCheck {
        bound,
        max_spectral_radius: rho,
        trials: 1,
        passed: rho <= bound + BOUND_SLACK,
    })
}

/// Random dense column-stochastic matrix with entries drawn from `[0, 1)`.
pub fn random_stochastic(n: usize, seed: u64) -> DenseMatrix {
    let mut rng = Stream::new(seed);
    let mut p = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let mut total = 0.0;
        for i in 0..n {
            let u = rng.unit();
            p[(i, j)] = u;
            total += u;
        }
        if total == 0.0 {
            p[(j, j)] = 1.0;
            continue;
        }
        for i in 0..n {
            p[(i, j)] /= total;
        }
    }
    p
}

/// Checks the spectral bound numerically on `trials` random stochastic
/// matrices of order `n`.
pub fn verify_theorem1_bound(
    n: usize,
    trials: usize,
    alpha: f64,
    beta: f64,
    m1: usize,
    m2: usize,
    seed: u64,
) -> Result<BoundCheck> {
    if n == 0 || n > 64 {
        return Err(invalid("matrix order must lie in 1..=64"));
    }
    let bound = convergence_bound(alpha, beta, m1, m2)?.bound;
    let mut worst = 0.0f64;
    for t in 0..trials {
        let p = random_stochastic(n, seed.wrapping_add(t as u64));
        let check = check_bound_for(&p, alpha, beta, m1, m2)?;
        worst = worst.max(check.max_spectral_radius);
    }
    Ok(BoundCheck {
        bound,
        max_spectral_radius: worst,
        trials,
        passed: worst <= bound + BOUND_SLACK,
    })
}
