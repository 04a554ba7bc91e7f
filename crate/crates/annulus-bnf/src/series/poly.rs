//! Truncated power series in one variable with complex coefficients.
//!
//! These are the Fourier columns `r ↦ c_{·,k}` of a [`super::FourierTaylorSeries`];
//! the routines here keep every result exact modulo `r^(len)`.

use num_complex::Complex64;

/// Product of two truncated series, keeping `len` coefficients.
pub fn mul(a: &[Complex64], b: &[Complex64], len: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); len];
    for (i, &ai) in a.iter().enumerate().take(len) {
        if ai == Complex64::new(0.0, 0.0) {
            continue;
        }
        for (j, &bj) in b.iter().enumerate().take(len - i) {
            out[i + j] += ai * bj;
        }
    }
    out
}

/// Multiplicative inverse, `None` when the constant term vanishes.
pub fn recip(a: &[Complex64], len: usize) -> Option<Vec<Complex64>> {
    let a0 = *a.first()?;
    if a0.norm() == 0.0 {
        return None;
    }
    let inv0 = a0.inv();
    let mut out = vec![Complex64::new(0.0, 0.0); len];
    if len == 0 {
        return Some(out);
    }
    out[0] = inv0;
    for n in 1..len {
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 1..=n.min(a.len().saturating_sub(1)) {
            acc += a[j] * out[n - j];
        }
        out[n] = -acc * inv0;
    }
    Some(out)
}

/// `exp(a(r))` by the recursion `n E_n = Σ_{j=1}^{n} j a_j E_{n-j}`, which is
/// exact in exact arithmetic.
pub fn exp(a: &[Complex64], len: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); len];
    if len == 0 {
        return out;
    }
    out[0] = a.first().copied().unwrap_or_default().exp();
    for n in 1..len {
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 1..=n.min(a.len().saturating_sub(1)) {
            acc += a[j] * (j as f64) * out[n - j];
        }
        out[n] = acc / (n as f64);
    }
    out
}
