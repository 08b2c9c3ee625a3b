//! Eigenpairs of small upper Hessenberg matrices.
//!
//! Eigenvalues come from the Francis implicit double-shift QR iteration, the
//! eigenvectors from inverse iteration with `H − λI` in complex arithmetic.

use std::cmp::Ordering;

use num_complex::Complex64;

use super::DenseMatrix;
use crate::error::{Error, Result};

/// Largest Hessenberg order accepted by [`hessenberg_eigs`].
pub const MAX_ORDER: usize = 64;

const DEFLATION_TOL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub value: Complex64,
    /// Unit 2-norm; the largest-magnitude component is real and positive.
    pub vector: Vec<Complex64>,
}

impl EigenPair {
    pub fn is_real(&self) -> bool {
        self.value.im == 0.0
    }
}

/// Reduces a square matrix to upper Hessenberg form by Householder
/// similarity transforms.
pub fn reduce_to_hessenberg(a: &DenseMatrix) -> Result<DenseMatrix> {
    if a.rows() != a.cols() {
        return Err(Error::Dimension {
            expected: a.rows(),
            got: a.cols(),
        });
    }
    let n = a.rows();
    let mut h = a.clone();
    let mut u = vec![0.0; n];
    for k in 0..n.saturating_sub(2) {
        let alpha_sq: f64 = (k + 1..n).map(|i| h[(i, k)] * h[(i, k)]).sum();
        let norm = alpha_sq.sqrt();
        if norm == 0.0 {
            continue;
        }
        let x0 = h[(k + 1, k)];
        let alpha = if x0 >= 0.0 { -norm } else { norm };
        for i in 0..n {
            u[i] = if i > k { h[(i, k)] } else { 0.0 };
        }
        u[k + 1] -= alpha;
        let unorm_sq: f64 = u[k + 1..].iter().map(|x| x * x).sum();
        if unorm_sq == 0.0 {
            continue;
        }
        // H <- (I − 2uuᵀ/uᵀu) H (I − 2uuᵀ/uᵀu)
        for j in 0..n {
            let s: f64 = (k + 1..n).map(|i| u[i] * h[(i, j)]).sum();
            let f = 2.0 * s / unorm_sq;
            for i in k + 1..n {
                h[(i, j)] -= f * u[i];
            }
        }
        for i in 0..n {
            let s: f64 = (k + 1..n).map(|j| h[(i, j)] * u[j]).sum();
            let f = 2.0 * s / unorm_sq;
            for j in k + 1..n {
                h[(i, j)] -= f * u[j];
            }
        }
        h[(k + 1, k)] = alpha;
        for i in k + 2..n {
            h[(i, k)] = 0.0;
        }
    }
    Ok(h)
}

fn sign(a: f64, b: f64) -> f64 {
    if b >= 0.0 {
        a.abs()
    } else {
        -a.abs()
    }
}

/// All eigenvalues of an upper Hessenberg matrix, unsorted, with conjugate
/// pairs adjacent (positive imaginary part first).
pub fn hessenberg_eigenvalues(h: &DenseMatrix) -> Result<Vec<Complex64>> {
    let n = h.rows();
    if h.cols() != n {
        return Err(Error::Dimension {
            expected: n,
            got: h.cols(),
        });
    }
    if !h.is_finite() {
        return Err(Error::Kernel("non-finite entry in Hessenberg matrix".into()));
    }
    let mut a = h.clone();
    let mut wr = vec![0.0; n];
    let mut wi = vec![0.0; n];
    let anorm: f64 = (0..n)
        .map(|i| (i.saturating_sub(1)..n).map(|j| a[(i, j)].abs()).sum::<f64>())
        .sum();
    let max_sweeps = 30 * n.max(1);
    let mut sweeps = 0usize;
    let mut shift_total = 0.0;

    // `hi` is one past the last row of the active block
    let mut hi = n;
    while hi > 0 {
        let nn = hi - 1;
        let mut its = 0usize;
        loop {
            let mut l = nn;
            while l >= 1 {
                let mut s = a[(l - 1, l - 1)].abs() + a[(l, l)].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a[(l, l - 1)].abs() <= DEFLATION_TOL * s {
                    a[(l, l - 1)] = 0.0;
                    break;
                }
                l -= 1;
            }
            let mut x = a[(nn, nn)];
            if l == nn {
                wr[nn] = x + shift_total;
                wi[nn] = 0.0;
                hi -= 1;
                break;
            }
            let mut y = a[(nn - 1, nn - 1)];
            let mut w = a[(nn, nn - 1)] * a[(nn - 1, nn)];
            if l == nn - 1 {
                let p = 0.5 * (y - x);
                let q = p * p + w;
                let z = q.abs().sqrt();
                x += shift_total;
                if q >= 0.0 {
                    let z = p + sign(z, p);
                    wr[nn - 1] = x + z;
                    wr[nn] = if z != 0.0 { x - w / z } else { x + z };
                    wi[nn - 1] = 0.0;
                    wi[nn] = 0.0;
                } else {
                    wr[nn - 1] = x + p;
                    wr[nn] = x + p;
                    wi[nn - 1] = z;
                    wi[nn] = -z;
                }
                hi -= 2;
                break;
            }
            if sweeps >= max_sweeps {
                return Err(Error::Kernel(format!(
                    "QR iteration did not converge in {max_sweeps} sweeps"
                )));
            }
            if its > 0 && its.is_multiple_of(10) {
                // exceptional shift
                shift_total += x;
                for i in 0..=nn {
                    a[(i, i)] -= x;
                }
                let s = a[(nn, nn - 1)].abs() + a[(nn - 1, nn - 2)].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;
            sweeps += 1;

            // look for two consecutive small subdiagonal elements
            let mut m = nn - 2;
            let (mut p, mut q, mut r);
            loop {
                let z = a[(m, m)];
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - w) / a[(m + 1, m)] + a[(m, m + 1)];
                q = a[(m + 1, m + 1)] - z - rr - ss;
                r = a[(m + 2, m + 1)];
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = a[(m, m - 1)].abs() * (q.abs() + r.abs());
                let v = p.abs() * (a[(m - 1, m - 1)].abs() + z.abs() + a[(m + 1, m + 1)].abs());
                if u <= f64::EPSILON * v {
                    break;
                }
                m -= 1;
            }
            for i in m + 2..=nn {
                a[(i, i - 2)] = 0.0;
                if i != m + 2 {
                    a[(i, i - 3)] = 0.0;
                }
            }

            // double-shift QR step on rows l..=nn, columns m..=nn
            let mut k = m;
            while k < nn {
                if k != m {
                    p = a[(k, k - 1)];
                    q = a[(k + 1, k - 1)];
                    r = if k != nn - 1 { a[(k + 2, k - 1)] } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x != 0.0 {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = sign((p * p + q * q + r * r).sqrt(), p);
                if s != 0.0 {
                    if k == m {
                        if l != m {
                            a[(k, k - 1)] = -a[(k, k - 1)];
                        }
                    } else {
                        a[(k, k - 1)] = -s * x;
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    let z = r / s;
                    q /= p;
                    r /= p;
                    for j in k..=nn {
                        let mut pp = a[(k, j)] + q * a[(k + 1, j)];
                        if k != nn - 1 {
                            pp += r * a[(k + 2, j)];
                            a[(k + 2, j)] -= pp * z;
                        }
                        a[(k + 1, j)] -= pp * y;
                        a[(k, j)] -= pp * x;
                    }
                    let mmin = if nn < k + 3 { nn } else { k + 3 };
                    for i in l..=mmin {
                        let mut pp = x * a[(i, k)] + y * a[(i, k + 1)];
                        if k != nn - 1 {
                            pp += z * a[(i, k + 2)];
                            a[(i, k + 2)] -= pp * r;
                        }
                        a[(i, k + 1)] -= pp * q;
                        a[(i, k)] -= pp;
                    }
                }
                k += 1;
            }
        }
    }
    Ok(wr
        .into_iter()
        .zip(wi)
        .map(|(re, im)| Complex64::new(re, im))
        .collect())
}

/// Modulus descending, then real part descending, then imaginary part
/// descending. Conjugate pairs end up adjacent with `+im` first.
pub fn sort_eigenvalues(values: &mut [Complex64]) {
    values.sort_by(|a, b| compare_eigenvalues(*a, *b));
}

fn compare_eigenvalues(a: Complex64, b: Complex64) -> Ordering {
    b.norm()
        .total_cmp(&a.norm())
        .then(b.re.total_cmp(&a.re))
        .then(b.im.total_cmp(&a.im))
}

/// Largest eigenvalue modulus of a general square matrix.
pub fn spectral_radius(a: &DenseMatrix) -> Result<f64> {
    let h = reduce_to_hessenberg(a)?;
    let values = hessenberg_eigenvalues(&h)?;
    Ok(values.iter().fold(0.0, |m, v| m.max(v.norm())))
}

/// All eigenpairs of an upper Hessenberg matrix, sorted by
/// [`sort_eigenvalues`] order.
pub fn hessenberg_eigs(h: &DenseMatrix) -> Result<Vec<EigenPair>> {
    let m = h.rows();
    if m > MAX_ORDER {
        return Err(Error::Kernel(format!(
            "Hessenberg order {m} exceeds {MAX_ORDER}"
        )));
    }
    let values = hessenberg_eigenvalues(h)?;
    Ok(pairs_for(h, values))
}

/// All eigenpairs of a general square matrix. Eigenvalues come from its
/// Hessenberg form, eigenvectors from inverse iteration on `a` itself.
pub fn eigs(a: &DenseMatrix) -> Result<Vec<EigenPair>> {
    if a.rows() > MAX_ORDER {
        return Err(Error::Kernel(format!(
            "matrix order {} exceeds {MAX_ORDER}",
            a.rows()
        )));
    }
    if a.is_upper_hessenberg() {
        return hessenberg_eigs(a);
    }
    let values = hessenberg_eigenvalues(&reduce_to_hessenberg(a)?)?;
    Ok(pairs_for(a, values))
}

fn pairs_for(h: &DenseMatrix, mut values: Vec<Complex64>) -> Vec<EigenPair> {
    let m = h.rows();
    // the two members of a conjugate pair share modulus and real part
    let mut k = 0;
    while k < values.len() {
        if values[k].im != 0.0 {
            values[k].im = values[k].im.abs();
            if k + 1 < values.len() && values[k + 1].im != 0.0 && values[k].re == values[k + 1].re {
                values[k + 1] = values[k].conj();
                k += 1;
            }
        }
        k += 1;
    }
    sort_eigenvalues(&mut values);

    let scale = h.frobenius_norm().max(f64::MIN_POSITIVE);
    let mut pairs: Vec<EigenPair> = Vec::with_capacity(m);
    let mut k = 0;
    while k < values.len() {
        let value = values[k];
        let seed = pairs.iter().filter(|p| (p.value - value).norm() <= 1e-10 * scale).count();
        let vector = inverse_iteration(h, value, seed, scale);
        if value.im != 0.0 && k + 1 < values.len() && values[k + 1] == value.conj() {
            let conj: Vec<Complex64> = vector.iter().map(|c| c.conj()).collect();
            pairs.push(EigenPair { value, vector });
            pairs.push(EigenPair {
                value: value.conj(),
                vector: conj,
            });
            k += 2;
        } else {
            pairs.push(EigenPair { value, vector });
            k += 1;
        }
    }
    pairs
}

/// Approximate null vector of `H − λI`. `seed` varies the start vector so
/// repeated eigenvalues get distinct vectors when the eigenspace allows.
fn inverse_iteration(h: &DenseMatrix, lambda: Complex64, seed: usize, scale: f64) -> Vec<Complex64> {
    let m = h.rows();
    let real = lambda.im == 0.0;
    let mut a: Vec<Vec<Complex64>> = (0..m)
        .map(|i| {
            (0..m)
                .map(|j| {
                    let d = if i == j { lambda } else { Complex64::new(0.0, 0.0) };
                    Complex64::new(h[(i, j)], 0.0) - d
                })
                .collect()
        })
        .collect();

    // LU with partial pivoting; tiny pivots are replaced so the solve
    // amplifies the null direction instead of failing
    let tiny = f64::EPSILON * scale;
    let mut perm: Vec<usize> = (0..m).collect();
    for k in 0..m {
        let piv = (k..m)
            .max_by(|&i, &j| a[i][k].norm().total_cmp(&a[j][k].norm()))
            .unwrap();
        a.swap(k, piv);
        perm.swap(k, piv);
        if a[k][k].norm() < tiny {
            a[k][k] = Complex64::new(tiny, 0.0);
        }
        for i in k + 1..m {
            let f = a[i][k] / a[k][k];
            a[i][k] = f;
            for j in k + 1..m {
                let t = a[k][j];
                a[i][j] -= f * t;
            }
        }
    }

    let mut x: Vec<Complex64> = (0..m)
        .map(|i| {
            let t = ((i * (seed + 1) + seed) % (m + 1)) as f64;
            Complex64::new(1.0 + t / (m as f64 + 1.0), 0.0)
        })
        .collect();
    for _ in 0..3 {
        let mut b: Vec<Complex64> = perm.iter().map(|&p| x[p]).collect();
        // the pivoting permutes rows of the system, so the right-hand side
        // is permuted the same way
        for i in 0..m {
            for j in 0..i {
                let t = a[i][j] * b[j];
                b[i] -= t;
            }
        }
        for i in (0..m).rev() {
            for j in i + 1..m {
                let t = a[i][j] * b[j];
                b[i] -= t;
            }
            b[i] /= a[i][i];
        }
        normalize_phase(&mut b);
        x = b;
    }
    if real {
        for c in &mut x {
            c.im = 0.0;
        }
        normalize_phase(&mut x);
    }
    x
}

fn normalize_phase(x: &mut [Complex64]) {
    let norm = x.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return;
    }
    let (_, big) = x
        .iter()
        .enumerate()
        .fold((0.0, Complex64::new(1.0, 0.0)), |(m, b), (_, c)| {
            if c.norm() > m {
                (c.norm(), *c)
            } else {
                (m, b)
            }
        });
    let phase = big.conj() / big.norm();
    for c in x.iter_mut() {
        *c = *c * phase / norm;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn residual(h: &DenseMatrix, pair: &EigenPair) -> f64 {
        let m = h.rows();
        (0..m)
            .map(|i| {
                let hy: Complex64 = (0..m).map(|j| pair.vector[j] * h[(i, j)]).sum();
                (hy - pair.value * pair.vector[i]).norm_sqr()
            })
            .sum::<f64>()
            .sqrt()
    }

    #[test]
    fn symmetric_permutation() {
        let h = DenseMatrix::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let pairs = hessenberg_eigs(&h).unwrap();
        assert!((pairs[0].value.re - 1.0).abs() < 1e-14);
        assert!((pairs[1].value.re + 1.0).abs() < 1e-14);
        for p in &pairs {
            assert!(residual(&h, p) < 1e-12);
        }
    }

    #[test]
    fn two_by_two_symmetric() {
        let h = DenseMatrix::from_rows(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let pairs = hessenberg_eigs(&h).unwrap();
        assert!((pairs[0].value - Complex64::new(3.0, 0.0)).norm() < 1e-14);
        assert!((pairs[1].value - Complex64::new(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn cube_roots_of_unity() {
        // cyclic shift: e1 -> e2 -> e3 -> e1
        let h = DenseMatrix::from_rows(&[&[0.0, 0.0, 1.0], &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]]);
        let pairs = hessenberg_eigs(&h).unwrap();
        assert_eq!(pairs.len(), 3);
        assert!((pairs[0].value - Complex64::new(1.0, 0.0)).norm() < 1e-13);
        let s = 3f64.sqrt() / 2.0;
        assert!((pairs[1].value - Complex64::new(-0.5, s)).norm() < 1e-13);
        assert!((pairs[2].value - Complex64::new(-0.5, -s)).norm() < 1e-13);
        for p in &pairs {
            assert!((p.value.norm() - 1.0).abs() < 1e-13);
            assert!(residual(&h, p) < 1e-12);
            let n: f64 = p.vector.iter().map(|c| c.norm_sqr()).sum();
            assert!((n - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn hessenberg_reduction_preserves_spectrum() {
        let a = DenseMatrix::from_rows(&[
            &[4.0, 1.0, -2.0, 2.0],
            &[1.0, 2.0, 0.0, 1.0],
            &[-2.0, 0.0, 3.0, -2.0],
            &[2.0, 1.0, -2.0, -1.0],
        ]);
        let h = reduce_to_hessenberg(&a).unwrap();
        assert!(h.is_upper_hessenberg());
        assert!((h.trace() - a.trace()).abs() < 1e-12);
        assert!((h.frobenius_norm() - a.frobenius_norm()).abs() < 1e-12);
        let rho = spectral_radius(&a).unwrap();
        // Householder's classic example has eigenvalues 6.844, 2.268, 1.084, -2.197
        assert!((rho - 6.844621).abs() < 1e-5, "{rho}");
    }

    #[test]
    fn rejects_oversized() {
        let h = DenseMatrix::identity(65);
        assert!(hessenberg_eigs(&h).is_err());
    }

    #[test]
    fn identity_has_unit_eigenvalues() {
        let h = DenseMatrix::identity(4);
        let pairs = hessenberg_eigs(&h).unwrap();
        for p in &pairs {
            assert_eq!(p.value, Complex64::new(1.0, 0.0));
            assert!(residual(&h, p) < 1e-14);
        }
    }

    #[test]
    fn general_matrix_pairs() {
        let a = DenseMatrix::from_rows(&[
            &[4.0, 1.0, -2.0, 2.0],
            &[1.0, 2.0, 0.0, 1.0],
            &[-2.0, 0.0, 3.0, -2.0],
            &[2.0, 1.0, -2.0, -1.0],
        ]);
        let pairs = eigs(&a).unwrap();
        let sum: f64 = pairs.iter().map(|p| p.value.re).sum();
        assert!((sum - a.trace()).abs() < 1e-10);
        for p in &pairs {
            let mut r = 0.0;
            for i in 0..4 {
                let mut acc = -p.value * p.vector[i];
                for j in 0..4 {
                    acc += p.vector[j] * a[(i, j)];
                }
                r += acc.norm_sqr();
            }
            assert!(r.sqrt() < 1e-9 * a.frobenius_norm());
        }
    }
}
