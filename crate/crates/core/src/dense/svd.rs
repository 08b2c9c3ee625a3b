//! Minimal singular triplet of a small tall matrix.
//!
//! Householder bidiagonalization (Golub–Kahan) followed by implicit-shift QR
//! sweeps on the bidiagonal (Golub–Reinsch).

use super::DenseMatrix;
use crate::error::{Error, Result};

pub const MAX_COLS: usize = 64;
const MAX_SWEEPS: usize = 75;

#[derive(Debug, Clone, PartialEq)]
pub struct SvdTriplet {
    pub sigma_min: f64,
    /// Right singular vector, length `cols`; largest-magnitude entry positive.
    pub right: Vec<f64>,
    /// Left singular vector, length `rows`.
    pub left: Vec<f64>,
}

fn sign(a: f64, b: f64) -> f64 {
    if b >= 0.0 {
        a.abs()
    } else {
        -a.abs()
    }
}

/// Full thin decomposition `B = U diag(w) Vᵀ`, returned as `(U, w, V)` with
/// `U` rows x cols and `V` cols x cols. Requires rows ≥ cols.
pub(crate) fn thin_svd(b: &DenseMatrix) -> Result<(DenseMatrix, Vec<f64>, DenseMatrix)> {
    let m = b.rows();
    let n = b.cols();
    if m < n || n == 0 {
        return Err(Error::Kernel(format!("svd needs rows >= cols > 0, got {m}x{n}")));
    }
    if !b.is_finite() {
        return Err(Error::Kernel("non-finite entry in svd input".into()));
    }
    let mut a = b.clone();
    let mut w = vec![0.0; n];
    let mut v = DenseMatrix::zeros(n, n);
    let mut rv1 = vec![0.0; n];
    let (mut g, mut scale, mut anorm) = (0.0f64, 0.0f64, 0.0f64);
    let mut l = 0;

    for i in 0..n {
        l = i + 1;
        rv1[i] = scale * g;
        g = 0.0;
        let mut s = 0.0;
        scale = 0.0;
        if i < m {
            for k in i..m {
                scale += a[(k, i)].abs();
            }
            if scale != 0.0 {
                for k in i..m {
                    a[(k, i)] /= scale;
                    s += a[(k, i)] * a[(k, i)];
                }
                let f = a[(i, i)];
                g = -sign(s.sqrt(), f);
                let h = f * g - s;
                a[(i, i)] = f - g;
                for j in l..n {
                    let s: f64 = (i..m).map(|k| a[(k, i)] * a[(k, j)]).sum();
                    let f = s / h;
                    for k in i..m {
                        a[(k, j)] += f * a[(k, i)];
                    }
                }
                for k in i..m {
                    a[(k, i)] *= scale;
                }
            }
        }
        w[i] = scale * g;
        g = 0.0;
        s = 0.0;
        scale = 0.0;
        if i < m && i + 1 != n {
            for k in l..n {
                scale += a[(i, k)].abs();
            }
            if scale != 0.0 {
                for k in l..n {
                    a[(i, k)] /= scale;
                    s += a[(i, k)] * a[(i, k)];
                }
                let f = a[(i, l)];
                g = -sign(s.sqrt(), f);
                let h = f * g - s;
                a[(i, l)] = f - g;
                for k in l..n {
                    rv1[k] = a[(i, k)] / h;
                }
                for j in l..m {
                    let s: f64 = (l..n).map(|k| a[(j, k)] * a[(i, k)]).sum();
                    for k in l..n {
                        a[(j, k)] += s * rv1[k];
                    }
                }
                for k in l..n {
                    a[(i, k)] *= scale;
                }
            }
        }
        anorm = anorm.max(w[i].abs() + rv1[i].abs());
    }

    // right-hand transformations
    for i in (0..n).rev() {
        if i + 1 < n {
            if g != 0.0 {
                for j in l..n {
                    v[(j, i)] = (a[(i, j)] / a[(i, l)]) / g;
                }
                for j in l..n {
                    let s: f64 = (l..n).map(|k| a[(i, k)] * v[(k, j)]).sum();
                    for k in l..n {
                        v[(k, j)] += s * v[(k, i)];
                    }
                }
            }
            for j in l..n {
                v[(i, j)] = 0.0;
                v[(j, i)] = 0.0;
            }
        }
        v[(i, i)] = 1.0;
        g = rv1[i];
        l = i;
    }

    // left-hand transformations
    for i in (0..m.min(n)).rev() {
        let l = i + 1;
        let mut g = w[i];
        for j in l..n {
            a[(i, j)] = 0.0;
        }
        if g != 0.0 {
            g = 1.0 / g;
            for j in l..n {
                let s: f64 = (l..m).map(|k| a[(k, i)] * a[(k, j)]).sum();
                let f = (s / a[(i, i)]) * g;
                for k in i..m {
                    a[(k, j)] += f * a[(k, i)];
                }
            }
            for j in i..m {
                a[(j, i)] *= g;
            }
        } else {
            for j in i..m {
                a[(j, i)] = 0.0;
            }
        }
        a[(i, i)] += 1.0;
    }

    // diagonalize the bidiagonal form
    let negligible = |x: f64| x.abs() <= f64::EPSILON * anorm;
    for k in (0..n).rev() {
        let mut sweep = 0;
        loop {
            let mut flag = true;
            let mut l = k;
            loop {
                if negligible(rv1[l]) {
                    flag = false;
                    break;
                }
                // rv1[0] is always zero, so l >= 1 here
                if negligible(w[l - 1]) {
                    break;
                }
                l -= 1;
            }
            if flag {
                // cancel rv1[l]
                let nm = l - 1;
                let mut c = 0.0;
                let mut s = 1.0;
                for i in l..=k {
                    let f = s * rv1[i];
                    rv1[i] *= c;
                    if negligible(f) {
                        break;
                    }
                    let g = w[i];
                    let h = f.hypot(g);
                    w[i] = h;
                    let hinv = 1.0 / h;
                    c = g * hinv;
                    s = -f * hinv;
                    for j in 0..m {
                        let y = a[(j, nm)];
                        let z = a[(j, i)];
                        a[(j, nm)] = y * c + z * s;
                        a[(j, i)] = z * c - y * s;
                    }
                }
            }
            let z = w[k];
            if l == k {
                if z < 0.0 {
                    w[k] = -z;
                    for j in 0..n {
                        v[(j, k)] = -v[(j, k)];
                    }
                }
                break;
            }
            if sweep == MAX_SWEEPS {
                return Err(Error::Kernel("bidiagonal QR did not converge".into()));
            }
            sweep += 1;

            // shift from the bottom 2x2 minor
            let mut x = w[l];
            let nm = k - 1;
            let mut y = w[nm];
            let mut g = rv1[nm];
            let mut h = rv1[k];
            let mut f = ((y - z) * (y + z) + (g - h) * (g + h)) / (2.0 * h * y);
            g = f.hypot(1.0);
            f = ((x - z) * (x + z) + h * ((y / (f + sign(g, f))) - h)) / x;

            // next QR transformation
            let mut c = 1.0;
            let mut s = 1.0;
            for j in l..=nm {
                let i = j + 1;
                g = rv1[i];
                y = w[i];
                h = s * g;
                g *= c;
                let mut z = f.hypot(h);
                rv1[j] = z;
                c = f / z;
                s = h / z;
                f = x * c + g * s;
                g = g * c - x * s;
                h = y * s;
                y *= c;
                for jj in 0..n {
                    let xv = v[(jj, j)];
                    let zv = v[(jj, i)];
                    v[(jj, j)] = xv * c + zv * s;
                    v[(jj, i)] = zv * c - xv * s;
                }
                z = f.hypot(h);
                w[j] = z;
                if z != 0.0 {
                    let zinv = 1.0 / z;
                    c = f * zinv;
                    s = h * zinv;
                }
                f = c * g + s * y;
                x = c * y - s * g;
                for jj in 0..m {
                    let ya = a[(jj, j)];
                    let za = a[(jj, i)];
                    a[(jj, j)] = ya * c + za * s;
                    a[(jj, i)] = za * c - ya * s;
                }
            }
            rv1[l] = 0.0;
            rv1[k] = f;
            w[k] = x;
        }
    }
    Ok((a, w, v))
}

/// Smallest singular value of `b` (rows ≥ cols) with its singular vectors.
pub fn small_svd(b: &DenseMatrix) -> Result<SvdTriplet> {
    if b.cols() > MAX_COLS {
        return Err(Error::Kernel(format!(
            "svd width {} exceeds {MAX_COLS}",
            b.cols()
        )));
    }
    let (u, w, v) = thin_svd(b)?;
    let k = (0..w.len())
        .min_by(|&i, &j| w[i].total_cmp(&w[j]))
        .expect("at least one column");
    let mut right = v.column(k);
    let mut left = u.column(k);
    let big = right
        .iter()
        .fold(0.0f64, |m, &x| if x.abs() > m.abs() { x } else { m });
    if big < 0.0 {
        right.iter_mut().for_each(|x| *x = -*x);
        left.iter_mut().for_each(|x| *x = -*x);
    }
    Ok(SvdTriplet {
        sigma_min: w[k],
        right,
        left,
    })
}
