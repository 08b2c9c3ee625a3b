//! Matrix-free application of the column-stochastic transition matrix
//!
//! ```text
//! P = (P̃ + d vᵀ)ᵀ,    G = αP + (1 − α) v eᵀ
//! ```
//!
//! where `P̃[i][j] = 1/n_i` for every link `i -> j`, `d` marks dangling pages
//! and `v` is the teleport distribution. Neither `P` nor `G` is ever formed: a
//! product costs one pass over the in-link lists plus a scalar dangling sum
//! broadcast through `v`.

use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::matrix::{compute_outdegrees_and_dangling, CompressedSparseMatrix};
use crate::vecops;

/// Monotone count of `P` applications.
#[derive(Debug, Default)]
pub struct MvCounter(AtomicU64);

impl MvCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self) -> u64 {
        self.0.load(Ordering::Relaxed)
    }

    fn bump(&self) {
        self.0.fetch_add(1, Ordering::Relaxed);
    }
}

/// Rows per rayon task in parallel mode.
const PAR_CHUNK: usize = 4096;

/// The operator `P` for one link graph and teleport vector.
#[derive(Debug)]
pub struct TransitionOperator {
    n: usize,
    // transposed adjacency: row j lists the pages linking to j
    in_links: CompressedSparseMatrix,
    inv_outdegree: Vec<f64>,
    dangling: Vec<usize>,
    v: Vec<f64>,
    parallel: bool,
    total_mv: MvCounter,
}

impl TransitionOperator {
    /// Operator with the uniform teleport vector `v = e/n`.
    pub fn uniform(adj: &CompressedSparseMatrix) -> Result<Self> {
        let n = adj.n_rows();
        let v = vec![1.0 / n.max(1) as f64; n];
        Self::with_teleport(adj, v)
    }

    pub fn with_teleport(adj: &CompressedSparseMatrix, v: Vec<f64>) -> Result<Self> {
        let od = compute_outdegrees_and_dangling(adj)?;
        let n = adj.n_rows();
        if n == 0 {
            return Err(invalid("graph has no nodes"));
        }
        if v.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: v.len(),
            });
        }
        if v.iter().any(|&vi| !(vi >= 0.0) || !vi.is_finite()) {
            return Err(invalid("teleport vector must be finite and non-negative"));
        }
        let total = vecops::sum(&v);
        if (total - 1.0).abs() > 1e-14 * n.max(1) as f64 {
            return Err(invalid(format!("teleport vector sums to {total}, not 1")));
        }
        let inv_outdegree = od
            .outdegree
            .iter()
            .map(|&d| if d == 0 { 0.0 } else { 1.0 / d as f64 })
            .collect();
        Ok(Self {
            n,
            in_links: adj.transpose(),
            inv_outdegree,
            dangling: od.dangling,
            v,
            parallel: false,
            total_mv: MvCounter::new(),
        })
    }

    /// Splits the sparse gather across rayon workers. Each output entry is
    /// still accumulated in the same order, so results do not change.
    pub fn with_parallel(mut self, parallel: bool) -> Self {
        self.parallel = parallel;
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn teleport(&self) -> &[f64] {
        &self.v
    }

    pub fn dangling(&self) -> &[usize] {
        &self.dangling
    }

    pub fn inv_outdegree(&self) -> &[f64] {
        &self.inv_outdegree
    }

    /// Total `P` applications over the operator's lifetime, across all
    /// sessions.
    pub fn total_mv(&self) -> u64 {
        self.total_mv.get()
    }

    /// A counting handle for one solver run.
    pub fn session(&self) -> Session<'_> {
        Session {
            op: self,
            counter: MvCounter::new(),
        }
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                got: len,
            });
        }
        Ok(())
    }

    fn gather(&self, x: &[f64], j: usize) -> f64 {
        let lo = self.in_links.row_offsets()[j];
        let hi = self.in_links.row_offsets()[j + 1];
        self.in_links.col_indices()[lo..hi]
            .iter()
            .map(|&i| x[i] * self.inv_outdegree[i])
            .sum()
    }

    fn product_into(&self, x: &[f64], y: &mut [f64]) {
        let dangling_mass: f64 = self.dangling.iter().map(|&i| x[i]).sum();
        if self.parallel {
            y.par_chunks_mut(PAR_CHUNK)
                .enumerate()
                .for_each(|(c, chunk)| {
                    let base = c * PAR_CHUNK;
                    for (k, yj) in chunk.iter_mut().enumerate() {
                        let j = base + k;
                        *yj = self.gather(x, j) + self.v[j] * dangling_mass;
                    }
                });
        } else {
            for (j, yj) in y.iter_mut().enumerate() {
                *yj = self.gather(x, j) + self.v[j] * dangling_mass;
            }
        }
        self.total_mv.bump();
    }

    /// `y = P x`.
    pub fn apply_p(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x.len())?;
        let mut y = vec![0.0; self.n];
        self.product_into(x, &mut y);
        Ok(y)
    }

    /// `y = G x = α P x + (1 − α) v (eᵀx)`.
    pub fn apply_g(&self, alpha: f64, x: &[f64]) -> Result<Vec<f64>> {
        check_alpha(alpha)?;
        let mut y = self.apply_p(x)?;
        self.finish_google(alpha, x, &mut y);
        Ok(y)
    }

    fn finish_google(&self, alpha: f64, x: &[f64], y: &mut [f64]) {
        let teleport = (1.0 - alpha) * vecops::sum(x);
        for (yi, vi) in y.iter_mut().zip(&self.v) {
            *yi = alpha * *yi + teleport * vi;
        }
    }

    /// `‖α P x + (1 − α) v − x‖₂`. Pass a cached `P x` to avoid a product.
    pub fn pagerank_residual(&self, alpha: f64, x: &[f64], px: Option<&[f64]>) -> Result<f64> {
        self.check_len(x.len())?;
        let owned;
        let px = match px {
            Some(px) => {
                self.check_len(px.len())?;
                px
            }
            None => {
                owned = self.apply_p(x)?;
                &owned
            }
        };
        Ok(vecops::combo_residual(alpha, px, 1.0 - alpha, &self.v, x))
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("damping factor {alpha} outside (0, 1)")))
    }
}

/// Per-run view of an operator that counts its own products.
#[derive(Debug)]
pub struct Session<'a> {
    op: &'a TransitionOperator,
    counter: MvCounter,
}

impl<'a> Session<'a> {
    pub fn op(&self) -> &'a TransitionOperator {
        self.op
    }

    pub fn n(&self) -> usize {
        self.op.n
    }

    pub fn v(&self) -> &'a [f64] {
        &self.op.v
    }

    pub fn mv(&self) -> u64 {
        self.counter.get()
    }

    /// `y = P x` into a caller buffer.
    pub fn p_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.op.n);
        self.op.product_into(x, y);
        self.counter.bump();
    }

    pub fn p(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.op.n];
        self.p_into(x, &mut y);
        y
    }

    /// `y = G x` into a caller buffer, one product.
    pub fn g_into(&self, alpha: f64, x: &[f64], y: &mut [f64]) {
        self.p_into(x, y);
        self.op.finish_google(alpha, x, y);
    }

    pub fn g(&self, alpha: f64, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.op.n];
        self.g_into(alpha, x, &mut y);
        y
    }

    /// Residual from a cached `z = P x`; costs no product.
    pub fn residual_cached(&self, alpha: f64, x: &[f64], z: &[f64]) -> f64 {
        vecops::combo_residual(alpha, z, 1.0 - alpha, &self.op.v, x)
    }
}
