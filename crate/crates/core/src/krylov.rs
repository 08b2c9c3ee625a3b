//! Krylov solvers on the Google operator: the (weighted) Arnoldi process,
//! thick-restarted Arnoldi and the adaptive weighted variant that takes its
//! iterate from the minimal singular triplet of `H̄ − [I; 0]`.

use std::time::Instant;

use crate::dense::{eigs, orthonormalize_columns, small_svd, DenseMatrix, EigenPair, WeightVector};
use crate::error::{invalid, Error, Result};
use crate::operator::{check_alpha, Session, TransitionOperator};
use crate::report::{History, Method, SolveReport};
use crate::vecops;

const BREAKDOWN_TOL: f64 = 1e-14;
const REORTH_FACTOR: f64 = 0.5;
const WEIGHT_FLOOR: f64 = 1e-16;

/// `A V_m = V_{m+1} H̄_m` with `V` orthonormal in the weighted inner product.
#[derive(Debug, Clone, PartialEq)]
pub struct KrylovFactorization {
    /// `m_effective + 1` basis columns; the last one is zero after a happy
    /// breakdown.
    pub basis: Vec<Vec<f64>>,
    /// `(m_effective + 1) × m_effective`. Upper Hessenberg for a fresh build;
    /// after a thick restart the leading block is full.
    pub hbar: DenseMatrix,
    pub weights: WeightVector,
    pub m_effective: usize,
    pub breakdown: bool,
}

impl KrylovFactorization {
    /// Leading square block `H_m`.
    pub fn h_square(&self) -> DenseMatrix {
        self.hbar.block(self.m_effective, self.m_effective)
    }

    /// `Σ_j V(:, j) c_j` over the first `c.len()` columns.
    pub fn combine(&self, c: &[f64]) -> Vec<f64> {
        combine(&self.basis, c)
    }

    /// `max |Vᵀ W V − I|` over the non-zero basis columns.
    pub fn orthonormality_error(&self) -> f64 {
        let k = if self.breakdown {
            self.m_effective
        } else {
            self.m_effective + 1
        };
        let w = self.weights.as_slice();
        let mut worst = 0.0f64;
        for i in 0..k {
            for j in 0..=i {
                let target = if i == j { 1.0 } else { 0.0 };
                let d = wdot(&self.basis[i], &self.basis[j], w) - target;
                worst = worst.max(d.abs());
            }
        }
        worst
    }

    /// Largest column norm of `A V_m − V_{m+1} H̄_m`.
    pub fn relation_error<F: FnMut(&[f64], &mut [f64])>(&self, mut apply: F) -> f64 {
        let n = self.basis[0].len();
        let mut av = vec![0.0; n];
        let mut worst = 0.0f64;
        for j in 0..self.m_effective {
            apply(&self.basis[j], &mut av);
            let h: Vec<f64> = (0..=self.m_effective).map(|i| self.hbar[(i, j)]).collect();
            let rhs = combine(&self.basis, &h);
            let d: f64 = av.iter().zip(&rhs).map(|(a, b)| (a - b) * (a - b)).sum();
            worst = worst.max(d.sqrt());
        }
        worst
    }
}

fn wdot(x: &[f64], y: &[f64], w: &[f64]) -> f64 {
    x.iter().zip(y).zip(w).map(|((a, b), c)| c * a * b).sum()
}

fn combine(basis: &[Vec<f64>], c: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; basis[0].len()];
    for (col, &cj) in basis.iter().zip(c) {
        if cj != 0.0 {
            vecops::axpy(cj, col, &mut out);
        }
    }
    out
}

/// Runs `m` Arnoldi steps from `v_start` under the inner product defined by
/// `weights`. One operator application per step.
pub fn arnoldi_process<F: FnMut(&[f64], &mut [f64])>(
    apply: F,
    v_start: &[f64],
    m: usize,
    weights: &WeightVector,
) -> Result<KrylovFactorization> {
    if m == 0 {
        return Err(invalid("subspace size must be at least 1"));
    }
    if v_start.len() != weights.len() {
        return Err(Error::Dimension {
            expected: weights.len(),
            got: v_start.len(),
        });
    }
    let norm = wdot(v_start, v_start, weights.as_slice()).sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(invalid("Arnoldi start vector is zero or not finite"));
    }
    let v1: Vec<f64> = v_start.iter().map(|x| x / norm).collect();
    let seed = KrylovFactorization {
        basis: vec![v1],
        hbar: DenseMatrix::zeros(1, 0),
        weights: weights.clone(),
        m_effective: 0,
        breakdown: false,
    };
    extend_factorization(apply, seed, m)
}

/// Extends a factorization with `k` columns to `m` columns, continuing from
/// its last basis vector.
pub fn extend_factorization<F: FnMut(&[f64], &mut [f64])>(
    mut apply: F,
    fact: KrylovFactorization,
    m: usize,
) -> Result<KrylovFactorization> {
    let k = fact.m_effective;
    if fact.breakdown || k >= m {
        return Ok(fact);
    }
    let w = fact.weights.as_slice().to_vec();
    let n = w.len();
    let mut basis = fact.basis;
    // columns of H̄ as they grow
    let mut cols: Vec<Vec<f64>> = (0..k)
        .map(|j| (0..=k).map(|i| fact.hbar[(i, j)]).collect())
        .collect();
    let mut frob2: f64 = cols.iter().flatten().map(|x| x * x).sum();
    let mut breakdown = false;
    let mut q = vec![0.0; n];
    for j in k..m {
        apply(&basis[j], &mut q);
        if q.iter().any(|x| !x.is_finite()) {
            return Err(Error::Solver("operator produced a non-finite vector".into()));
        }
        let before = wdot(&q, &q, &w).sqrt();
        let mut h = vec![0.0; j + 2];
        for (i, vi) in basis.iter().enumerate() {
            let c = wdot(&q, vi, &w);
            h[i] = c;
            vecops::axpy(-c, vi, &mut q);
        }
        let mut after = wdot(&q, &q, &w).sqrt();
        if after < REORTH_FACTOR * before {
            for (i, vi) in basis.iter().enumerate() {
                let c = wdot(&q, vi, &w);
                h[i] += c;
                vecops::axpy(-c, vi, &mut q);
            }
            after = wdot(&q, &q, &w).sqrt();
        }
        h[j + 1] = after;
        frob2 += h.iter().map(|x| x * x).sum::<f64>();
        cols.push(h);
        if after < BREAKDOWN_TOL * frob2.sqrt() {
            basis.push(vec![0.0; n]);
            breakdown = true;
            break;
        }
        basis.push(q.iter().map(|x| x / after).collect());
    }
    let m_eff = cols.len();
    let mut hbar = DenseMatrix::zeros(m_eff + 1, m_eff);
    for (j, col) in cols.iter().enumerate() {
        for (i, &x) in col.iter().enumerate() {
            hbar[(i, j)] = x;
        }
    }
    Ok(KrylovFactorization {
        basis,
        hbar,
        weights: fact.weights,
        m_effective: m_eff,
        breakdown,
    })
}

/// Ritz pairs of `H_m` and the retained count.
#[derive(Debug, Clone, PartialEq)]
pub struct RitzSet {
    pub pairs: Vec<EigenPair>,
    pub p: usize,
    /// `h_{m+1,m} |e_mᵀ y_1|`
    pub residual_estimate: f64,
}

/// Result of one thick-restart step.
#[derive(Debug, Clone)]
pub struct RestartStep {
    pub ritz: RitzSet,
    /// Real part of the dominant Ritz vector, Euclidean unit length, sign
    /// chosen so the entries sum to a positive value.
    pub ritz_vector: Vec<f64>,
    pub converged: bool,
    /// `V_{p+1}` and `H̄_p`, present when not converged.
    pub restart: Option<KrylovFactorization>,
}

/// Number of Ritz pairs kept for a cut at `p`, honouring conjugate pairs.
fn retained_count(pairs: &[EigenPair], p: usize, m: usize) -> usize {
    let mut k = p.min(pairs.len());
    if k > 0 && k < pairs.len() && pairs[k - 1].value.im > 0.0 && pairs[k].value == pairs[k - 1].value.conj() {
        // keep the pair whole; drop it instead if keeping it leaves no room
        k = if k + 1 < m { k + 1 } else { k - 1 };
    }
    k
}

fn sign_fix(x: &mut [f64]) {
    if vecops::sum(x) < 0.0 {
        x.iter_mut().for_each(|xi| *xi = -*xi);
    }
}

/// Selects Ritz pairs of a complete factorization, tests convergence and
/// assembles the restart data otherwise.
pub fn thick_restart_cycle(fact: &KrylovFactorization, p: usize, tol: f64) -> Result<RestartStep> {
    let m = fact.m_effective;
    if m == 0 {
        return Err(invalid("empty factorization"));
    }
    let pairs = eigs(&fact.h_square())?;
    let y1 = &pairs[0].vector;
    let h_last = fact.hbar[(m, m - 1)];
    let residual_estimate = h_last.abs() * y1[m - 1].norm();

    let re1: Vec<f64> = y1.iter().map(|c| c.re).collect();
    let mut ritz_vector = fact.combine(&re1);
    let norm = vecops::norm2(&ritz_vector);
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::Solver("degenerate Ritz vector".into()));
    }
    vecops::scale(1.0 / norm, &mut ritz_vector);
    sign_fix(&mut ritz_vector);

    let converged = fact.breakdown || residual_estimate <= tol;
    if converged || m < 2 {
        let p = retained_count(&pairs, p, m.max(2));
        return Ok(RestartStep {
            ritz: RitzSet {
                pairs,
                p,
                residual_estimate,
            },
            ritz_vector,
            converged,
            restart: None,
        });
    }
    if p == 0 || p >= m {
        return Err(invalid(format!("retained count {p} must lie in 1..{m}")));
    }

    let k = retained_count(&pairs, p, m);
    let mut split: Vec<Vec<f64>> = Vec::with_capacity(k);
    for pair in &pairs[..k] {
        if pair.value.im < 0.0 {
            continue;
        }
        split.push(pair.vector.iter().map(|c| c.re).collect());
        if pair.value.im > 0.0 {
            split.push(pair.vector.iter().map(|c| c.im).collect());
        }
    }
    let wp = orthonormalize_columns(&DenseMatrix::from_columns(m, &split), &WeightVector::ones(m))?;
    let kept = wp.cols();
    if kept == 0 {
        return Err(Error::Solver("Ritz vectors collapsed during orthonormalization".into()));
    }

    // V_{p+1} = V_{m+1} [W_p 0; 0 1]
    let mut basis: Vec<Vec<f64>> = (0..kept).map(|j| fact.combine(&wp.column(j))).collect();
    basis.push(fact.basis[m].clone());

    // H̄_p = W_{p+1}ᵀ H̄_m W_p
    let hw = fact.hbar.matmul(&wp);
    let mut hbar = DenseMatrix::zeros(kept + 1, kept);
    for i in 0..kept {
        for j in 0..kept {
            hbar[(i, j)] = (0..m).map(|r| wp[(r, i)] * hw[(r, j)]).sum();
        }
    }
    for j in 0..kept {
        hbar[(kept, j)] = hw[(m, j)];
    }

    Ok(RestartStep {
        ritz: RitzSet {
            pairs,
            p: k,
            residual_estimate,
        },
        ritz_vector,
        converged: false,
        restart: Some(KrylovFactorization {
            basis,
            hbar,
            weights: fact.weights.clone(),
            m_effective: kept,
            breakdown: false,
        }),
    })
}

pub(crate) fn check_krylov(m: usize, p: Option<usize>, tol: f64) -> Result<()> {
    if m == 0 || m > crate::dense::MAX_ORDER {
        return Err(invalid(format!("subspace size {m} outside 1..=64")));
    }
    if let Some(p) = p {
        if p == 0 || p >= m {
            return Err(invalid(format!("retained count {p} must lie in 1..{m}")));
        }
    }
    if !(tol > 0.0) {
        return Err(invalid("tolerance must be positive"));
    }
    Ok(())
}

/// Thick-restart Arnoldi state owned by a caller that runs a chosen number of
/// cycles at a time.
pub(crate) struct ThickRestart<'s, 'a> {
    session: &'s Session<'a>,
    alpha: f64,
    m: usize,
    p: usize,
    tol: f64,
    fact: Option<KrylovFactorization>,
}

impl<'s, 'a> ThickRestart<'s, 'a> {
    pub fn new(session: &'s Session<'a>, alpha: f64, m: usize, p: usize, tol: f64) -> Self {
        Self {
            session,
            alpha,
            m,
            p,
            tol,
            fact: None,
        }
    }

    /// Drops the current factorization so the next cycle starts from `x`.
    pub fn restart_from(&mut self, x: &[f64]) -> Result<()> {
        let session = self.session;
        let alpha = self.alpha;
        let apply = |x: &[f64], y: &mut [f64]| session.g_into(alpha, x, y);
        self.fact = Some(arnoldi_process(apply, x, self.m, &WeightVector::ones(x.len()))?);
        Ok(())
    }

    /// One cycle on the current factorization. Must follow `restart_from`.
    pub fn cycle(&mut self) -> Result<RestartStep> {
        let session = self.session;
        let alpha = self.alpha;
        let fact = self.fact.take().ok_or_else(|| invalid("cycle without a start vector"))?;
        let fact = if fact.m_effective < self.m && !fact.breakdown {
            let apply = |x: &[f64], y: &mut [f64]| session.g_into(alpha, x, y);
            extend_factorization(apply, fact, self.m)?
        } else {
            fact
        };
        let mut step = thick_restart_cycle(&fact, self.p, self.tol)?;
        self.fact = step.restart.take();
        if self.fact.is_none() && !step.converged {
            // a factorization too short to restart: rebuild from the Ritz vector
            self.restart_from(&step.ritz_vector)?;
        }
        Ok(step)
    }
}

pub(crate) fn finish_vector(mut x: Vec<f64>) -> Result<Vec<f64>> {
    sign_fix(&mut x);
    if !vecops::normalize_sum(&mut x) {
        return Err(Error::Solver("approximation has zero sum".into()));
    }
    Ok(x)
}

/// Thick-restarted Arnoldi from `x = v` until the Ritz residual estimate is at
/// most `tol`. `iterations` counts cycles.
pub fn thick_restart_arnoldi_solve(
    op: &TransitionOperator,
    alpha: f64,
    m: usize,
    p: usize,
    tol: f64,
    max_cycles: usize,
) -> Result<SolveReport> {
    check_alpha(alpha)?;
    check_krylov(m, Some(p), tol)?;
    let clock = Instant::now();
    let session = op.session();
    let mut history = History::default();
    let mut solver = ThickRestart::new(&session, alpha, m, p, tol);
    solver.restart_from(op.teleport())?;
    let mut cycles = 0;
    let (x, converged) = loop {
        let step = solver.cycle()?;
        cycles += 1;
        history.push(session.mv(), step.ritz.residual_estimate);
        if step.converged || cycles >= max_cycles {
            break (step.ritz_vector, step.converged);
        }
    };
    Ok(SolveReport {
        method: Method::Arnoldi,
        x: finish_vector(x)?,
        iterations: cycles,
        mv: session.mv(),
        cpu_seconds: clock.elapsed().as_secs_f64(),
        residual_history: history.into_inner(),
        converged,
        trace: Vec::new(),
    })
}

/// Inner-product weights carried between adaptive cycles.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveWeightState {
    pub weights: WeightVector,
    pub last_residual_vector: Vec<f64>,
}

impl AdaptiveWeightState {
    /// Euclidean start, used for the first cycle.
    pub fn euclidean(n: usize) -> Self {
        Self {
            weights: WeightVector::ones(n),
            last_residual_vector: Vec::new(),
        }
    }

    /// `|res| / ‖res‖₁`, floored and renormalized to unit sum. A zero residual
    /// leaves the weights unchanged.
    pub fn update(&mut self, res: &[f64]) {
        let total = vecops::norm1(res);
        if total > 0.0 && total.is_finite() {
            let mut w: Vec<f64> = res.iter().map(|r| (r.abs() / total).max(WEIGHT_FLOOR)).collect();
            let s = vecops::sum(&w);
            w.iter_mut().for_each(|x| *x /= s);
            self.weights = WeightVector::new(w).expect("floored weights are positive");
        }
        self.last_residual_vector = res.to_vec();
    }
}

/// Output of one adaptive weighted cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveStep {
    /// `V_m s_m` with positive sum.
    pub x: Vec<f64>,
    /// `σ_m V_{m+1} u_m = (A − I) x`.
    pub residual: Vec<f64>,
    /// `‖res‖₂ / ‖x‖₂`
    pub residual_norm: f64,
    pub sigma: f64,
}

/// One weighted Arnoldi build from `x` followed by the minimal singular
/// triplet of `H̄_m − [I; 0]`. Updates the weights in `state`.
pub fn adaptive_garnoldi_cycle(
    session: &Session<'_>,
    alpha: f64,
    x: &[f64],
    m: usize,
    state: &mut AdaptiveWeightState,
) -> Result<AdaptiveStep> {
    check_alpha(alpha)?;
    let apply = |x: &[f64], y: &mut [f64]| session.g_into(alpha, x, y);
    let fact = arnoldi_process(apply, x, m, &state.weights)?;
    let k = fact.m_effective;
    let mut b = fact.hbar.clone();
    for i in 0..k {
        b[(i, i)] -= 1.0;
    }
    let svd = small_svd(&b)?;
    let mut xn = fact.combine(&svd.right);
    let mut res = fact.combine(&svd.left);
    vecops::scale(svd.sigma_min, &mut res);
    if vecops::sum(&xn) < 0.0 {
        vecops::scale(-1.0, &mut xn);
        vecops::scale(-1.0, &mut res);
    }
    let norm = vecops::norm2(&xn);
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::Solver("degenerate singular vector".into()));
    }
    let residual_norm = vecops::norm2(&res) / norm;
    state.update(&res);
    Ok(AdaptiveStep {
        x: xn,
        residual: res,
        residual_norm,
        sigma: svd.sigma_min,
    })
}

/// Adaptive weighted Arnoldi from `x = v` until the scaled residual drops
/// below `tol`. `iterations` counts cycles.
pub fn adaptive_garnoldi_solve(
    op: &TransitionOperator,
    alpha: f64,
    m: usize,
    tol: f64,
    max_cycles: usize,
) -> Result<SolveReport> {
    check_alpha(alpha)?;
    check_krylov(m, None, tol)?;
    let clock = Instant::now();
    let session = op.session();
    let mut history = History::default();
    let mut state = AdaptiveWeightState::euclidean(op.n());
    let mut x = op.teleport().to_vec();
    let mut cycles = 0;
    let converged = loop {
        let step = adaptive_garnoldi_cycle(&session, alpha, &x, m, &mut state)?;
        cycles += 1;
        history.push(session.mv(), step.residual_norm);
        x = step.x;
        if step.residual_norm < tol {
            break true;
        }
        if cycles >= max_cycles {
            break false;
        }
        // keep the entries at a scale the next weighted build can normalize
        vecops::scale(1.0 / vecops::norm2(&x), &mut x);
    };
    Ok(SolveReport {
        method: Method::GArnoldi,
        x: finish_vector(x)?,
        iterations: cycles,
        mv: session.mv(),
        cpu_seconds: clock.elapsed().as_secs_f64(),
        residual_history: history.into_inner(),
        converged,
        trace: Vec::new(),
    })
}
