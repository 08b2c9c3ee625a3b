use super::DenseMatrix;
use crate::error::{Error, Result};

/// Strictly positive diagonal weights defining `(x, y)_w = Σ wᵢ xᵢ yᵢ`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if let Some(bad) = w.iter().find(|&&x| !(x > 0.0) || !x.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "weights must be positive and finite, found {bad}"
            )));
        }
        Ok(Self(w))
    }

    pub fn ones(n: usize) -> Self {
        Self(vec![1.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn is_unit(&self) -> bool {
        self.0.iter().all(|&x| x == 1.0)
    }
}

pub fn weighted_dot(x: &[f64], y: &[f64], w: &WeightVector) -> Result<f64> {
    if x.len() != y.len() || x.len() != w.len() {
        return Err(Error::Dimension {
            expected: w.len(),
            got: if x.len() != w.len() { x.len() } else { y.len() },
        });
    }
    Ok(x.iter()
        .zip(y)
        .zip(w.as_slice())
        .map(|((a, b), c)| c * a * b)
        .sum())
}

pub fn weighted_norm(x: &[f64], w: &WeightVector) -> Result<f64> {
    Ok(weighted_dot(x, x, w)?.sqrt())
}

const DROP_TOL: f64 = 1e-12;

/// Modified Gram–Schmidt with one full reorthogonalization pass.
///
/// Columns whose norm after projection falls below `1e-12` of their norm
/// before projection are dropped; the result holds only retained columns.
pub fn orthonormalize_columns(y: &DenseMatrix, w: &WeightVector) -> Result<DenseMatrix> {
    if y.rows() != w.len() {
        return Err(Error::Dimension {
            expected: w.len(),
            got: y.rows(),
        });
    }
    let mut kept: Vec<Vec<f64>> = Vec::new();
    for j in 0..y.cols() {
        let mut q = y.column(j);
        let before = weighted_norm(&q, w)?;
        if before == 0.0 {
            continue;
        }
        for _ in 0..2 {
            for basis in &kept {
                let h = weighted_dot(&q, basis, w)?;
                for (qi, bi) in q.iter_mut().zip(basis) {
                    *qi -= h * bi;
                }
            }
        }
        let after = weighted_norm(&q, w)?;
        if after < DROP_TOL * before {
            continue;
        }
        q.iter_mut().for_each(|x| *x /= after);
        kept.push(q);
    }
    Ok(DenseMatrix::from_columns(y.rows(), &kept))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dots() {
        let w = WeightVector::new(vec![4.0, 1.0]).unwrap();
        assert_eq!(weighted_dot(&[1.0, 1.0], &[1.0, 1.0], &w).unwrap(), 5.0);
        assert_eq!(weighted_norm(&[1.0, 1.0], &w).unwrap(), 5f64.sqrt());
        assert_eq!(weighted_dot(&[3.0, 4.0], &[3.0, 4.0], &WeightVector::ones(2)).unwrap(), 25.0);
        assert_eq!(weighted_dot(&[1.0, 0.0], &[0.0, 1.0], &w).unwrap(), 0.0);
        assert!(weighted_dot(&[1.0], &[1.0, 2.0], &w).is_err());
        assert!(WeightVector::new(vec![1.0, 0.0]).is_err());
    }

    #[test]
    fn hand_mgs() {
        let y = DenseMatrix::from_rows(&[&[1.0, 1.0], &[0.0, 1.0]]);
        let q = orthonormalize_columns(&y, &WeightVector::ones(2)).unwrap();
        assert_eq!(q.cols(), 2);
        assert!((q[(0, 0)] - 1.0).abs() < 1e-15 && q[(1, 0)].abs() < 1e-15);
        assert!(q[(0, 1)].abs() < 1e-15 && (q[(1, 1)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn orthonormal_input_unchanged() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let y = DenseMatrix::from_rows(&[&[s, -s], &[s, s], &[0.0, 0.0]]);
        let q = orthonormalize_columns(&y, &WeightVector::ones(3)).unwrap();
        for i in 0..3 {
            for j in 0..2 {
                assert!((q[(i, j)] - y[(i, j)]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn duplicate_column_dropped() {
        let y = DenseMatrix::from_rows(&[&[1.0, 1.0, 0.0], &[2.0, 2.0, 1.0]]);
        let q = orthonormalize_columns(&y, &WeightVector::ones(2)).unwrap();
        assert_eq!(q.cols(), 2);
        assert!(orthonormalize_columns(&DenseMatrix::zeros(2, 2), &WeightVector::ones(2))
            .unwrap()
            .cols()
            == 0);
    }

    #[test]
    fn weighted_orthonormality() {
        let w = WeightVector::new(vec![0.5, 2.0, 1e-3]).unwrap();
        let y = DenseMatrix::from_rows(&[&[1.0, 2.0, 0.1], &[1.0, -1.0, 3.0], &[4.0, 0.5, 1.0]]);
        let q = orthonormalize_columns(&y, &w).unwrap();
        for a in 0..q.cols() {
            for b in 0..q.cols() {
                let d = weighted_dot(&q.column(a), &q.column(b), &w).unwrap();
                let target = if a == b { 1.0 } else { 0.0 };
                assert!((d - target).abs() < 1e-12);
            }
        }
    }
}
