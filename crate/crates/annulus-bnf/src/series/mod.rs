//! Real-symmetric Fourier–Taylor series `Σ c_{n,k} e^{2πikθ} r^n`.
//!
//! Every analytic object the crate manipulates (generating functions,
//! conjugators, Hamiltonians, normal forms) is one of the two types here:
//! [`FourierTaylorSeries`] for functions of `(θ, r)` and [`RadialSeries`] for
//! functions of `r` alone.
//!
//! Storage is a dense box `0 ≤ n ≤ n_r_max`, `|k| ≤ n_theta_max`. Products are
//! truncated back to the box, so all operations are exact modulo `r^{n_r_max+1}`
//! and modes beyond `n_theta_max`. The reality symmetry
//! `c_{n,-k} = conj(c_{n,k})` is enforced by computing the `k ≥ 0` half and
//! mirroring it, which keeps it bit-exact rather than approximately true.

pub mod poly;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Default Taylor order in `r`.
pub const DEFAULT_N_R: usize = 16;
/// Default Fourier cutoff `|k|`.
pub const DEFAULT_N_THETA: usize = 32;
/// Magnitudes below this are flushed to zero after products.
pub const FLUSH: f64 = 1e-300;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const TWO_PI: f64 = 2.0 * PI;

/// Half-width `h` of the complex θ-strip and radius `rho` of the r-disk on
/// which weighted norms are taken.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StripParams {
    pub h: f64,
    pub rho: f64,
}

impl StripParams {
    pub fn new(h: f64, rho: f64) -> Result<Self> {
        if !(h > 0.0 && rho > 0.0) {
            return Err(Error::InvalidInput(format!("strip needs h>0, rho>0 (got {h}, {rho})")));
        }
        Ok(Self { h, rho })
    }

    /// Shrink the strip by `delta` in θ and by the factor `e^{-delta}` in r.
    pub fn shrink(&self, delta: f64) -> Self {
        Self { h: self.h - delta, rho: self.rho * (-delta).exp() }
    }
}

/// Which variable a derivative is taken in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    Theta,
    R,
}

/// A real polynomial in `r` (frequency maps, normal forms, twists).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialSeries {
    coeffs: Vec<f64>,
}

impl RadialSeries {
    pub fn new(coeffs: Vec<f64>) -> Self {
        let coeffs = if coeffs.is_empty() { vec![0.0] } else { coeffs };
        Self { coeffs }
    }

    pub fn zeros(n_r_max: usize) -> Self {
        Self { coeffs: vec![0.0; n_r_max + 1] }
    }

    /// `ω₀ r + r²/2`, the golden-style twist used across the examples.
    pub fn twist(omega0: f64, curvature: f64, n_r_max: usize) -> Self {
        let mut s = Self::zeros(n_r_max.max(2));
        s.coeffs[1] = omega0;
        s.coeffs[2] = 0.5 * curvature;
        s
    }

    pub fn n_r_max(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeff(&self, n: usize) -> f64 {
        self.coeffs.get(n).copied().unwrap_or(0.0)
    }

    pub fn set_coeff(&mut self, n: usize, v: f64) {
        if n >= self.coeffs.len() {
            self.coeffs.resize(n + 1, 0.0);
        }
        self.coeffs[n] = v;
    }

    pub fn resized(&self, n_r_max: usize) -> Self {
        let mut c = self.coeffs.clone();
        c.resize(n_r_max + 1, 0.0);
        Self { coeffs: c }
    }

    pub fn eval(&self, r: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * r + c)
    }

    pub fn eval_complex(&self, r: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(ZERO, |acc, &c| acc * r + c)
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() <= 1 {
            return Self::new(vec![0.0]);
        }
        Self::new(self.coeffs.iter().enumerate().skip(1).map(|(n, &c)| n as f64 * c).collect())
    }

    /// Antiderivative vanishing at `r = 0`.
    pub fn antiderivative(&self) -> Self {
        let mut c = vec![0.0];
        c.extend(self.coeffs.iter().enumerate().map(|(n, &v)| v / (n as f64 + 1.0)));
        Self::new(c)
    }

    pub fn add(&self, other: &Self) -> Self {
        let len = self.coeffs.len().max(other.coeffs.len());
        Self::new((0..len).map(|n| self.coeff(n) + other.coeff(n)).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    /// Re-expand around `r0`: returns `s ↦ self(r0 + s)`, exact for polynomials.
    pub fn recentre(&self, r0: f64) -> Self {
        let n = self.coeffs.len();
        let mut out = vec![0.0; n];
        for (m, &c) in self.coeffs.iter().enumerate() {
            let mut binom = 1.0;
            for (j, slot) in out.iter_mut().enumerate().take(m + 1) {
                *slot += c * binom * r0.powi((m - j) as i32);
                binom *= (m - j) as f64 / (j + 1) as f64;
            }
        }
        Self::new(out)
    }

    /// Embed as a θ-independent Fourier–Taylor series.
    pub fn to_series(&self, n_r_max: usize, n_theta_max: usize) -> FourierTaylorSeries {
        let mut s = FourierTaylorSeries::zeros(n_r_max, n_theta_max);
        for (n, &c) in self.coeffs.iter().enumerate().take(n_r_max + 1) {
            s.set(n, 0, Complex64::new(c, 0.0));
        }
        s
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }
}

/// Truncated bivariate series with the reality symmetry enforced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "SeriesFile", try_from = "SeriesFile")]
pub struct FourierTaylorSeries {
    n_r_max: usize,
    n_theta_max: usize,
    c: Vec<Complex64>,
}

impl FourierTaylorSeries {
    pub fn zeros(n_r_max: usize, n_theta_max: usize) -> Self {
        Self { n_r_max, n_theta_max, c: vec![ZERO; (n_r_max + 1) * (2 * n_theta_max + 1)] }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.n_r_max, self.n_theta_max)
    }

    /// `amp · r^n · cos(2πkθ)`.
    pub fn cos_term(n_r_max: usize, n_theta_max: usize, n: usize, k: usize, amp: f64) -> Self {
        let mut s = Self::zeros(n_r_max, n_theta_max);
        s.add_cos(n, k, amp);
        s
    }

    /// `amp · r^n · sin(2πkθ)`.
    pub fn sin_term(n_r_max: usize, n_theta_max: usize, n: usize, k: usize, amp: f64) -> Self {
        let mut s = Self::zeros(n_r_max, n_theta_max);
        s.add_sin(n, k, amp);
        s
    }

    /// Accumulate `amp · r^n · cos(2πkθ)` in place.
    pub fn add_cos(&mut self, n: usize, k: usize, amp: f64) {
        if k == 0 {
            let v = self.get(n, 0) + amp;
            self.set(n, 0, v);
        } else {
            let v = self.get(n, k as i64) + Complex64::new(0.5 * amp, 0.0);
            self.set(n, k as i64, v);
        }
    }

    /// Accumulate `amp · r^n · sin(2πkθ)` in place.
    pub fn add_sin(&mut self, n: usize, k: usize, amp: f64) {
        if k > 0 {
            let v = self.get(n, k as i64) + Complex64::new(0.0, -0.5 * amp);
            self.set(n, k as i64, v);
        }
    }

    pub fn n_r_max(&self) -> usize {
        self.n_r_max
    }

    pub fn n_theta_max(&self) -> usize {
        self.n_theta_max
    }

    #[inline]
    fn idx(&self, n: usize, k: i64) -> usize {
        n * (2 * self.n_theta_max + 1) + (k + self.n_theta_max as i64) as usize
    }

    /// Coefficient `c_{n,k}`; zero outside the box.
    #[inline]
    pub fn get(&self, n: usize, k: i64) -> Complex64 {
        if n > self.n_r_max || k.unsigned_abs() as usize > self.n_theta_max {
            return ZERO;
        }
        self.c[self.idx(n, k)]
    }

    /// Set `c_{n,k}` and its mirror `c_{n,-k}`; out-of-box writes are dropped.
    pub fn set(&mut self, n: usize, k: i64, v: Complex64) {
        if n > self.n_r_max || k.unsigned_abs() as usize > self.n_theta_max {
            return;
        }
        let v = if v.norm() < FLUSH { ZERO } else { v };
        if k == 0 {
            let i = self.idx(n, 0);
            self.c[i] = Complex64::new(v.re, 0.0);
        } else {
            let (i, j) = (self.idx(n, k), self.idx(n, -k));
            self.c[i] = v;
            self.c[j] = v.conj();
        }
    }

    /// Nonzero `(n, k, c)` with `k ≥ 0`.
    pub fn nonzero_half(&self) -> Vec<(usize, i64, Complex64)> {
        let mut out = Vec::new();
        for n in 0..=self.n_r_max {
            for k in 0..=self.n_theta_max as i64 {
                let c = self.get(n, k);
                if c != ZERO {
                    out.push((n, k, c));
                }
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(|c| *c == ZERO)
    }

    /// Lowest Taylor index carrying a nonzero coefficient.
    pub fn valuation(&self) -> Option<usize> {
        (0..=self.n_r_max).find(|&n| (0..=self.n_theta_max as i64).any(|k| self.get(n, k) != ZERO))
    }

    /// Largest |c_{n,k}|.
    pub fn max_abs(&self) -> f64 {
        self.c.iter().fold(0.0, |m, c| m.max(c.norm()))
    }

    /// True when every stored pair satisfies `c_{n,-k} = conj(c_{n,k})` within `tol`.
    pub fn is_real_symmetric(&self, tol: f64) -> bool {
        (0..=self.n_r_max).all(|n| {
            self.get(n, 0).im.abs() <= tol
                && (1..=self.n_theta_max as i64).all(|k| (self.get(n, -k) - self.get(n, k).conj()).norm() <= tol)
        })
    }

    /// Same coefficients in a (possibly different) box; entries outside it are dropped.
    pub fn resized(&self, n_r_max: usize, n_theta_max: usize) -> Self {
        let mut out = Self::zeros(n_r_max, n_theta_max);
        for n in 0..=n_r_max.min(self.n_r_max) {
            for k in 0..=n_theta_max.min(self.n_theta_max) as i64 {
                out.set(n, k, self.get(n, k));
            }
        }
        out
    }

    fn common_box(&self, other: &Self) -> (usize, usize) {
        (self.n_r_max.max(other.n_r_max), self.n_theta_max.max(other.n_theta_max))
    }

    fn map_half(&self, mut f: impl FnMut(usize, i64, Complex64) -> Complex64) -> Self {
        let mut out = self.zeros_like();
        for n in 0..=self.n_r_max {
            for k in 0..=self.n_theta_max as i64 {
                let c = self.get(n, k);
                if c != ZERO {
                    out.set(n, k, f(n, k, c));
                }
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let (nr, nk) = self.common_box(other);
        let mut out = Self::zeros(nr, nk);
        for n in 0..=nr {
            for k in 0..=nk as i64 {
                out.set(n, k, self.get(n, k) + other.get(n, k));
            }
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map_half(|_, _, c| c * s)
    }

    /// Truncated product, convolving in both indices.
    pub fn mul(&self, other: &Self) -> Self {
        let (nr, nk) = self.common_box(other);
        let nk_i = nk as i64;
        let rows = |s: &Self| -> Vec<Vec<(i64, Complex64)>> {
            (0..=s.n_r_max)
                .map(|n| {
                    let kk = s.n_theta_max as i64;
                    (-kk..=kk).filter_map(|k| {
                        let c = s.c[s.idx(n, k)];
                        (c != ZERO).then_some((k, c))
                    })
                    .collect()
                })
                .collect()
        };
        let (ra, rb) = (rows(self), rows(other));
        let width = nk + 1;
        let mut acc = vec![ZERO; (nr + 1) * width];
        for (n1, row_a) in ra.iter().enumerate() {
            if row_a.is_empty() {
                continue;
            }
            for (n2, row_b) in rb.iter().enumerate().take(nr + 1 - n1.min(nr + 1)) {
                if n1 + n2 > nr || row_b.is_empty() {
                    continue;
                }
                let base = (n1 + n2) * width;
                for &(k1, c1) in row_a {
                    for &(k2, c2) in row_b {
                        let k = k1 + k2;
                        if (0..=nk_i).contains(&k) {
                            acc[base + k as usize] += c1 * c2;
                        }
                    }
                }
            }
        }
        let mut out = Self::zeros(nr, nk);
        for n in 0..=nr {
            for k in 0..=nk {
                out.set(n, k as i64, acc[n * width + k]);
            }
        }
        out
    }

    /// `order`-th derivative in θ (`(2πik)^order`) or r (shift with factorials).
    pub fn differentiate(&self, axis: Axis, order: usize) -> Self {
        match axis {
            Axis::Theta => self.map_half(|_, k, c| c * Complex64::new(0.0, TWO_PI * k as f64).powu(order as u32)),
            Axis::R => {
                let mut out = self.zeros_like();
                for n in order..=self.n_r_max {
                    let fall: f64 = (n - order + 1..=n).map(|v| v as f64).product();
                    for k in 0..=self.n_theta_max as i64 {
                        let c = self.get(n, k);
                        if c != ZERO {
                            out.set(n - order, k, c * fall);
                        }
                    }
                }
                out
            }
        }
    }

    pub fn d_theta(&self) -> Self {
        self.differentiate(Axis::Theta, 1)
    }

    pub fn d_r(&self) -> Self {
        self.differentiate(Axis::R, 1)
    }

    /// θ-antiderivative of the non-constant modes; the mean is discarded.
    pub fn integrate_theta(&self) -> Self {
        self.map_half(|_, k, c| if k == 0 { ZERO } else { c / Complex64::new(0.0, TWO_PI * k as f64) })
    }

    /// Split into the modes `|k| ≤ N` and the remainder; the two sum to `self` exactly.
    pub fn truncate_fourier(&self, n: usize) -> (Self, Self) {
        let mut low = self.zeros_like();
        let mut high = self.zeros_like();
        for (m, k, c) in self.nonzero_half() {
            if k as usize <= n {
                low.set(m, k, c);
            } else {
                high.set(m, k, c);
            }
        }
        (low, high)
    }

    /// Modes with Taylor index `n ≥ lo` only.
    pub fn r_tail(&self, lo: usize) -> Self {
        let mut out = self.zeros_like();
        for (n, k, c) in self.nonzero_half() {
            if n >= lo {
                out.set(n, k, c);
            }
        }
        out
    }

    /// Keep only Taylor index `n` (as a series of the same box).
    pub fn r_slice(&self, n: usize) -> Self {
        let mut out = self.zeros_like();
        for k in 0..=self.n_theta_max as i64 {
            out.set(n, k, self.get(n, k));
        }
        out
    }

    /// `{F, G} = ∂θF ∂rG − ∂rF ∂θG`.
    pub fn poisson_bracket(&self, other: &Self) -> Self {
        self.d_theta().mul(&other.d_r()).sub(&self.d_r().mul(&other.d_theta()))
    }

    /// Coefficient majorant `Σ |c_{n,k}| e^{2π|k|h} ρ^n`, an upper bound for the
    /// sup norm on the complex strip.
    pub fn weighted_norm(&self, p: StripParams) -> f64 {
        let mut total = 0.0;
        for n in 0..=self.n_r_max {
            let rn = p.rho.powi(n as i32);
            for k in -(self.n_theta_max as i64)..=self.n_theta_max as i64 {
                let c = self.c[self.idx(n, k)];
                if c != ZERO {
                    total += c.norm() * (TWO_PI * k.abs() as f64 * p.h).exp() * rn;
                }
            }
        }
        total
    }

    /// The `k = 0` column as a real radial series.
    pub fn theta_mean(&self) -> Result<RadialSeries> {
        let mut out = vec![0.0; self.n_r_max + 1];
        for (n, slot) in out.iter_mut().enumerate() {
            let c = self.c[self.idx(n, 0)];
            if c.im.abs() > 1e-14 {
                return Err(Error::RealityViolation { imag: c.im });
            }
            *slot = c.re;
        }
        Ok(RadialSeries::new(out))
    }

    /// Remove the θ-mean.
    pub fn without_mean(&self) -> Self {
        let mut out = self.clone();
        for n in 0..=self.n_r_max {
            out.set(n, 0, ZERO);
        }
        out
    }

    /// The Fourier column `r ↦ c_{·,k}` as a coefficient vector.
    pub fn column(&self, k: i64) -> Vec<Complex64> {
        (0..=self.n_r_max).map(|n| self.get(n, k)).collect()
    }

    /// Overwrite the Fourier column `k ≥ 0` (and its mirror).
    pub fn set_column(&mut self, k: i64, col: &[Complex64]) {
        for n in 0..=self.n_r_max {
            self.set(n, k, col.get(n).copied().unwrap_or(ZERO));
        }
    }

    /// `(θ, r) ↦ F(θ + ω(r), r)`, multiplying each mode by the exact Taylor
    /// expansion of `e^{2πikω(r)}`.
    pub fn compose_shift(&self, omega: &RadialSeries) -> Self {
        let len = self.n_r_max + 1;
        let mut out = self.zeros_like();
        out.set_column(0, &self.column(0));
        for k in 1..=self.n_theta_max as i64 {
            let col = self.column(k);
            if col.iter().all(|c| *c == ZERO) {
                continue;
            }
            let arg: Vec<Complex64> =
                (0..len).map(|n| Complex64::new(0.0, TWO_PI * k as f64 * omega.coeff(n))).collect();
            let e = poly::exp(&arg, len);
            out.set_column(k, &poly::mul(&col, &e, len));
        }
        out
    }

    /// `F(θ + a(θ,r), r + b(θ,r))` by the two-variable Taylor formula, keeping
    /// θ-shift powers up to `order`. Exact in `r` when `a, b = O(r)`.
    pub fn substitute(&self, a: &Self, b: &Self, order: usize) -> Self {
        let (nr, nk) = self.common_box(a);
        let (nr, nk) = (nr.max(b.n_r_max), nk.max(b.n_theta_max));
        let base = self.resized(nr, nk);
        let a_zero = a.is_zero();
        let b_zero = b.is_zero();

        // Powers a^i / i!, stopping once they vanish identically.
        let mut a_pows = vec![Self::zeros(nr, nk)];
        a_pows[0].set(0, 0, Complex64::new(1.0, 0.0));
        if !a_zero {
            for i in 1..=order {
                let next = a_pows[i - 1].mul(a).scale(1.0 / i as f64);
                if next.is_zero() {
                    break;
                }
                a_pows.push(next);
            }
        }

        let mut out = Self::zeros(nr, nk);
        let mut b_pow = a_pows[0].clone();
        let mut d_r = base;
        for j in 0..=nr {
            if d_r.is_zero() || b_pow.is_zero() {
                break;
            }
            // Σ_i (a^i/i!) ∂θ^i (∂r^j F / j!)
            let mut inner = d_r.clone();
            let mut d_th = d_r.clone();
            for ap in a_pows.iter().skip(1) {
                d_th = d_th.d_theta();
                inner = inner.add(&ap.mul(&d_th));
            }
            out = out.add(&if j == 0 { inner } else { inner.mul(&b_pow) });
            if b_zero {
                break;
            }
            b_pow = b_pow.mul(b);
            d_r = d_r.d_r().scale(1.0 / (j + 1) as f64);
        }
        out
    }

    /// Re-expand around `r0`: returns the series of `(θ, s) ↦ F(θ, r0 + s)`.
    pub fn recentre(&self, r0: f64) -> Self {
        let mut out = self.zeros_like();
        for k in 0..=self.n_theta_max as i64 {
            for m in 0..=self.n_r_max {
                let c = self.get(m, k);
                if c == ZERO {
                    continue;
                }
                let mut binom = 1.0;
                for j in 0..=m {
                    let v = out.get(j, k) + c * binom * r0.powi((m - j) as i32);
                    out.set(j, k, v);
                    binom *= (m - j) as f64 / (j + 1) as f64;
                }
            }
        }
        out
    }

    /// Point evaluation for real `(θ, r)`.
    pub fn eval(&self, theta: f64, r: f64) -> f64 {
        let mut total = 0.0;
        let w = Complex64::from_polar(1.0, TWO_PI * theta);
        let mut rn = 1.0;
        for n in 0..=self.n_r_max {
            let mut row = self.get(n, 0).re;
            let mut wk = Complex64::new(1.0, 0.0);
            for k in 1..=self.n_theta_max as i64 {
                wk *= w;
                let c = self.get(n, k);
                if c != ZERO {
                    row += 2.0 * (c * wk).re;
                }
            }
            total += row * rn;
            rn *= r;
        }
        total
    }

    /// Point evaluation for complex `(θ, r)` (the analytic continuation).
    pub fn eval_complex(&self, theta: Complex64, r: Complex64) -> Complex64 {
        let w = (Complex64::new(0.0, TWO_PI) * theta).exp();
        let winv = w.inv();
        let mut total = ZERO;
        let mut rn = Complex64::new(1.0, 0.0);
        for n in 0..=self.n_r_max {
            let mut row = self.get(n, 0);
            let (mut wk, mut wkm) = (Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0));
            for k in 1..=self.n_theta_max as i64 {
                wk *= w;
                wkm *= winv;
                row += self.get(n, k) * wk + self.get(n, -k) * wkm;
            }
            total += row * rn;
            rn *= r;
        }
        total
    }

    /// Precompiled evaluator over the nonzero coefficients.
    pub fn evaluator(&self) -> Evaluator {
        Evaluator::new(self)
    }

    pub fn to_file(&self) -> SeriesFile {
        SeriesFile {
            n_r_max: self.n_r_max,
            n_theta_max: self.n_theta_max,
            coeffs: self
                .nonzero_half()
                .into_iter()
                .map(|(n, k, c)| SeriesEntry { n, k, re: c.re, im: c.im })
                .collect(),
        }
    }

    pub fn from_file(f: &SeriesFile) -> Result<Self> {
        let mut s = Self::zeros(f.n_r_max, f.n_theta_max);
        for e in &f.coeffs {
            if e.k < 0 || e.n > f.n_r_max || e.k as usize > f.n_theta_max {
                return Err(Error::InvalidInput(format!("coefficient (n={}, k={}) outside the box", e.n, e.k)));
            }
            if e.k == 0 && e.im != 0.0 {
                return Err(Error::RealityViolation { imag: e.im });
            }
            if !(e.re.is_finite() && e.im.is_finite()) {
                return Err(Error::InvalidInput(format!("non-finite coefficient at (n={}, k={})", e.n, e.k)));
            }
            s.set(e.n, e.k, Complex64::new(e.re, e.im));
        }
        Ok(s)
    }
}

impl From<FourierTaylorSeries> for SeriesFile {
    fn from(s: FourierTaylorSeries) -> Self {
        s.to_file()
    }
}

impl TryFrom<SeriesFile> for FourierTaylorSeries {
    type Error = Error;

    fn try_from(f: SeriesFile) -> Result<Self> {
        Self::from_file(&f)
    }
}

/// On-disk layout: only `k ≥ 0` entries are stored.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeriesFile {
    pub n_r_max: usize,
    pub n_theta_max: usize,
    pub coeffs: Vec<SeriesEntry>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeriesEntry {
    pub n: usize,
    pub k: i64,
    pub re: f64,
    pub im: f64,
}

/// Value and first/second partials of a series at a real point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Derivs {
    pub f: f64,
    pub t: f64,
    pub r: f64,
    pub tt: f64,
    pub tr: f64,
    pub rr: f64,
}

/// Fast repeated evaluation of a fixed series (orbit iteration, flows).
#[derive(Clone, Debug)]
pub struct Evaluator {
    terms: Vec<(usize, usize, Complex64)>,
    max_k: usize,
    max_n: usize,
}

impl Evaluator {
    fn new(s: &FourierTaylorSeries) -> Self {
        let terms: Vec<_> = s.nonzero_half().into_iter().map(|(n, k, c)| (n, k as usize, c)).collect();
        let max_k = terms.iter().map(|t| t.1).max().unwrap_or(0);
        let max_n = terms.iter().map(|t| t.0).max().unwrap_or(0);
        Self { terms, max_k, max_n }
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// True when no term depends on r.
    pub fn r_independent(&self) -> bool {
        self.terms.iter().all(|t| t.0 == 0)
    }

    pub fn derivs(&self, theta: f64, r: f64) -> Derivs {
        let mut d = Derivs::default();
        if self.terms.is_empty() {
            return d;
        }
        let w = Complex64::from_polar(1.0, TWO_PI * theta);
        let mut wk = Vec::with_capacity(self.max_k + 1);
        wk.push(Complex64::new(1.0, 0.0));
        for k in 1..=self.max_k {
            let prev = wk[k - 1];
            wk.push(prev * w);
        }
        let mut rp = Vec::with_capacity(self.max_n + 1);
        rp.push(1.0);
        for n in 1..=self.max_n {
            rp.push(rp[n - 1] * r);
        }
        for &(n, k, c) in &self.terms {
            let mult = if k == 0 { 1.0 } else { 2.0 };
            let e = c * wk[k];
            let ik = Complex64::new(0.0, TWO_PI * k as f64);
            let nf = n as f64;
            let rn = rp[n];
            let rn1 = if n >= 1 { rp[n - 1] } else { 0.0 };
            let rn2 = if n >= 2 { rp[n - 2] } else { 0.0 };
            d.f += mult * e.re * rn;
            d.t += mult * (e * ik).re * rn;
            d.tt += mult * (e * ik * ik).re * rn;
            d.r += mult * e.re * nf * rn1;
            d.tr += mult * (e * ik).re * nf * rn1;
            d.rr += mult * e.re * nf * (nf - 1.0) * rn2;
        }
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn add_examples() {
        let r2 = FourierTaylorSeries::cos_term(4, 4, 2, 0, 1.0);
        assert_eq!(r2.add(&FourierTaylorSeries::zeros(4, 4)), r2);
        let c = FourierTaylorSeries::cos_term(4, 4, 0, 1, 1.0);
        assert!(c.add(&c.scale(-1.0)).is_zero());
        let rc = FourierTaylorSeries::cos_term(4, 4, 1, 1, 1.0);
        assert_eq!(rc.add(&rc), FourierTaylorSeries::cos_term(4, 4, 1, 1, 2.0));
    }

    #[test]
    fn mul_examples() {
        let r = FourierTaylorSeries::cos_term(4, 4, 1, 0, 1.0);
        assert_eq!(r.mul(&r), FourierTaylorSeries::cos_term(4, 4, 2, 0, 1.0));
        let c = FourierTaylorSeries::cos_term(4, 4, 0, 1, 1.0);
        let mut expect = FourierTaylorSeries::cos_term(4, 4, 0, 0, 0.5);
        expect.add_cos(0, 2, 0.5);
        assert!(c.mul(&c).sub(&expect).max_abs() < 1e-16);
    }

    #[test]
    fn differentiate_examples() {
        let c = FourierTaylorSeries::cos_term(4, 4, 0, 1, 1.0);
        let expect = FourierTaylorSeries::sin_term(4, 4, 0, 1, -TWO_PI);
        assert!(c.d_theta().sub(&expect).max_abs() < 1e-15);
        let r2 = FourierTaylorSeries::cos_term(4, 4, 2, 0, 1.0);
        assert_eq!(r2.d_r(), FourierTaylorSeries::cos_term(4, 4, 1, 0, 2.0));
        let radial = RadialSeries::new(vec![0.1, 0.2, 0.3]).to_series(4, 4);
        assert!(radial.d_theta().is_zero());
    }

    #[test]
    fn truncate_examples() {
        let mut f = FourierTaylorSeries::cos_term(2, 4, 0, 1, 1.0);
        f.add_cos(0, 3, 1.0);
        let (t, r) = f.truncate_fourier(1);
        assert_eq!(t, FourierTaylorSeries::cos_term(2, 4, 0, 1, 1.0));
        assert_eq!(r, FourierTaylorSeries::cos_term(2, 4, 0, 3, 1.0));
        let (t, r) = f.truncate_fourier(4);
        assert_eq!(t, f);
        assert!(r.is_zero());
    }

    #[test]
    fn poisson_bracket_example() {
        let f = FourierTaylorSeries::cos_term(4, 4, 2, 0, 0.5);
        let g = FourierTaylorSeries::sin_term(4, 4, 0, 1, 1.0);
        let expect = FourierTaylorSeries::cos_term(4, 4, 1, 1, -TWO_PI);
        assert!(f.poisson_bracket(&g).sub(&expect).max_abs() < 1e-15);
        assert!(g.poisson_bracket(&g).is_zero());
    }

    #[test]
    fn weighted_norm_example() {
        let mut f = FourierTaylorSeries::zeros(4, 4);
        f.set(2, 1, Complex64::new(1.0, 0.0));
        let v = f.weighted_norm(StripParams { h: 0.1, rho: 0.5 });
        assert!(close(v, 2.0 * (0.2 * PI).exp() * 0.25, 1e-14));
        assert!(close(v, 0.9372, 1e-4));
        // Grid sup of |F| on the strip boundary Im θ = -h, |r| = ρ is attained
        // by the single mode, so the majorant is tight there.
        let th = Complex64::new(0.0, -0.1);
        let sup = (0..64)
            .map(|j| {
                let t = th + j as f64 / 64.0;
                f.eval_complex(t, Complex64::new(0.5, 0.0)).norm()
            })
            .fold(0.0, f64::max);
        assert!(sup <= v + 1e-12);
        assert!(FourierTaylorSeries::zeros(2, 2).weighted_norm(StripParams { h: 0.1, rho: 0.5 }) == 0.0);
    }

    #[test]
    fn theta_mean_examples() {
        let c = FourierTaylorSeries::cos_term(4, 4, 0, 1, 1.0);
        assert_eq!(c.theta_mean().unwrap().max_abs(), 0.0);
        let mut f = FourierTaylorSeries::cos_term(4, 4, 2, 0, 1.0);
        f.add_cos(1, 1, 1.0);
        assert_eq!(f.theta_mean().unwrap().coeffs(), &[0.0, 0.0, 1.0, 0.0, 0.0]);
        let mut bad = FourierTaylorSeries::zeros(2, 2);
        let i = bad.idx(0, 0);
        bad.c[i] = Complex64::new(0.0, 1e-10);
        assert!(matches!(bad.theta_mean(), Err(Error::RealityViolation { .. })));
    }

    #[test]
    fn compose_shift_examples() {
        let mut f = FourierTaylorSeries::zeros(4, 4);
        f.set(0, 1, Complex64::new(1.0, 0.0));
        assert_eq!(f.compose_shift(&RadialSeries::zeros(4)), f);
        let w0 = 0.3;
        let g = f.compose_shift(&RadialSeries::new(vec![w0]));
        assert!((g.get(0, 1) - Complex64::from_polar(1.0, TWO_PI * w0)).norm() < 1e-15);

        // ω(r) = r against direct evaluation of cos(2π(θ+r)). The Taylor tail
        // (2π|r|)^{N+1}/(N+1)! caps the attainable accuracy: order 12 reaches
        // 1e-10 only for |r| ≤ 0.15, order 14 covers |r| ≤ 0.2.
        for (order, reach) in [(12, 0.15), (14, 0.2)] {
            let c = FourierTaylorSeries::cos_term(order, 4, 0, 1, 1.0);
            let s = c.compose_shift(&RadialSeries::new(vec![0.0, 1.0]));
            for i in 0..32 {
                for j in 0..=8 {
                    let th = i as f64 / 32.0;
                    let r = -reach + reach * j as f64 / 4.0;
                    assert!(close(s.eval(th, r), (TWO_PI * (th + r)).cos(), 1e-10));
                }
            }
        }
    }

    #[test]
    fn substitute_matches_point_evaluation() {
        let mut f = FourierTaylorSeries::cos_term(10, 16, 2, 1, 0.7);
        f.add_sin(1, 2, 0.3);
        f.add_cos(3, 0, 0.2);
        let a = FourierTaylorSeries::cos_term(10, 16, 0, 1, 1e-3);
        let b = FourierTaylorSeries::sin_term(10, 16, 1, 1, 1e-3);
        let s = f.substitute(&a, &b, 10);
        for i in 0..8 {
            let th = i as f64 / 8.0;
            let r = 0.1;
            let direct = f.eval(th + a.eval(th, r), r + b.eval(th, r));
            assert!(close(s.eval(th, r), direct, 1e-13));
        }
    }

    #[test]
    fn recentre_matches_point_evaluation() {
        let mut f = FourierTaylorSeries::cos_term(6, 4, 3, 1, 0.7);
        f.add_cos(5, 0, 0.2);
        let g = f.recentre(0.3);
        assert!(close(g.eval(0.2, 0.1), f.eval(0.2, 0.4), 1e-14));
        let w = RadialSeries::new(vec![0.1, 0.5, -0.3, 0.2]);
        assert!(close(w.recentre(0.3).eval(0.1), w.eval(0.4), 1e-15));
    }

    #[test]
    fn evaluator_derivatives_match_series() {
        let mut f = FourierTaylorSeries::cos_term(6, 4, 3, 1, 0.7);
        f.add_sin(2, 2, 0.2);
        f.add_cos(1, 0, 0.1);
        let d = f.evaluator().derivs(0.3, 0.2);
        assert!(close(d.f, f.eval(0.3, 0.2), 1e-14));
        assert!(close(d.t, f.d_theta().eval(0.3, 0.2), 1e-13));
        assert!(close(d.r, f.d_r().eval(0.3, 0.2), 1e-14));
        assert!(close(d.tt, f.d_theta().d_theta().eval(0.3, 0.2), 1e-12));
        assert!(close(d.tr, f.d_theta().d_r().eval(0.3, 0.2), 1e-13));
        assert!(close(d.rr, f.d_r().d_r().eval(0.3, 0.2), 1e-13));
    }

    #[test]
    fn json_round_trip() {
        let mut f = FourierTaylorSeries::cos_term(3, 2, 1, 1, 0.5);
        f.add_sin(2, 2, 0.25);
        let text = serde_json::to_string(&f.to_file()).unwrap();
        let back = FourierTaylorSeries::from_file(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back, f);
    }
}
