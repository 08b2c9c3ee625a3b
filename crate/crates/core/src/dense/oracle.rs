//! Dense ground truth for desk-scale graphs.

use super::DenseMatrix;
use crate::error::{Error, Result};
use crate::matrix::{compute_outdegrees_and_dangling, CompressedSparseMatrix};
use crate::operator::check_alpha;

pub const ORACLE_LIMIT: usize = 2000;

/// Explicit column-stochastic `P = (P̃ + d vᵀ)ᵀ`.
pub fn dense_transition(adj: &CompressedSparseMatrix, v: &[f64]) -> Result<DenseMatrix> {
    let od = compute_outdegrees_and_dangling(adj)?;
    let n = adj.n_rows();
    if v.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: v.len(),
        });
    }
    if n > ORACLE_LIMIT {
        return Err(Error::OracleTooLarge {
            n,
            limit: ORACLE_LIMIT,
        });
    }
    let mut p = DenseMatrix::zeros(n, n);
    for i in 0..n {
        if od.outdegree[i] == 0 {
            for j in 0..n {
                p[(j, i)] = v[j];
            }
        } else {
            let share = 1.0 / od.outdegree[i] as f64;
            for &j in adj.row(i) {
                p[(j, i)] = share;
            }
        }
    }
    Ok(p)
}

/// Explicit Google matrix `G = αP + (1 − α) v eᵀ`.
pub fn dense_google(adj: &CompressedSparseMatrix, alpha: f64, v: &[f64]) -> Result<DenseMatrix> {
    check_alpha(alpha)?;
    let p = dense_transition(adj, v)?;
    let n = p.rows();
    let mut g = p.scaled(alpha);
    for i in 0..n {
        for j in 0..n {
            g[(i, j)] += (1.0 - alpha) * v[i];
        }
    }
    Ok(g)
}

/// Solves `(I − αP) x = (1 − α) v` by partial-pivoting elimination and
/// rescales to unit sum.
pub fn dense_oracle_pagerank(
    adj: &CompressedSparseMatrix,
    alpha: f64,
    v: &[f64],
) -> Result<Vec<f64>> {
    check_alpha(alpha)?;
    let p = dense_transition(adj, v)?;
    let n = p.rows();
    let mut a = p.scaled(-alpha);
    for i in 0..n {
        a[(i, i)] += 1.0;
    }
    let b = DenseMatrix::from_columns(n, &[v.iter().map(|x| (1.0 - alpha) * x).collect()]);
    let mut x = a.solve(&b)?.column(0);
    let s: f64 = x.iter().sum();
    x.iter_mut().for_each(|xi| *xi /= s);
    Ok(x)
}
