//! Fixed-order reductions and small vector helpers.
//!
//! Every reduction here is sequential, left to right, so results are bitwise
//! reproducible run to run.

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|a| a * a).sum::<f64>().sqrt()
}

pub fn norm1(x: &[f64]) -> f64 {
    x.iter().map(|a| a.abs()).sum()
}

pub fn norm_inf(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, a| m.max(a.abs()))
}

pub fn sum(x: &[f64]) -> f64 {
    x.iter().sum()
}

/// `y += a * x`
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub fn scale(a: f64, x: &mut [f64]) {
    for xi in x {
        *xi *= a;
    }
}

/// `‖a·x + b·y − w‖₂` without allocating.
pub fn combo_residual(a: f64, x: &[f64], b: f64, y: &[f64], w: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .zip(w)
        .map(|((xi, yi), wi)| {
            let r = a * xi + b * yi - wi;
            r * r
        })
        .sum::<f64>()
        .sqrt()
}

/// Infinity-norm distance.
pub fn max_abs_diff(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
}

/// Rescales `x` to unit sum. Returns false if the sum is zero or not finite.
pub fn normalize_sum(x: &mut [f64]) -> bool {
    let s = sum(x);
    if s == 0.0 || !s.is_finite() {
        return false;
    }
    scale(1.0 / s, x);
    true
}
