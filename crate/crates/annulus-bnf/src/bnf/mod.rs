//! Birkhoff normal form of a map `f_{Ω+F}` with `F = O(r²)`: the formal
//! frequency map `Ξ(r)` with `f` formally conjugate to `(θ, r) ↦ (θ + Ξ′(r), r)`.
//!
//! Two engines are provided. [`bnf_direct`] removes one degree in `r` at a
//! time. [`bnf_quantified`] runs a few such steps and then repeatedly
//! conjugates away the whole oscillating part with constant divisors, gaining
//! one degree per step. [`lindstedt_normal_form`] is an independent check.

pub mod lindstedt;

pub use lindstedt::lindstedt_normal_form;

use serde::{Deserialize, Serialize};

use crate::divisors::solve_cohomological;
use crate::error::{Error, Result};
use crate::maps::{conjugate_generating, GeneratingMap};
use crate::series::{FourierTaylorSeries, RadialSeries};

/// Number of degree-by-degree steps before the quantified iteration starts.
pub const DEFAULT_PRE_STEPS: usize = 5;

/// Smallest admissible `|1 − e^{−2πikω₀}|`.
const RESONANCE_FLOOR: f64 = 1e-10;

/// Relative size below which a cancelled row is treated as rounding noise.
const ROUNDING_REL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BnfResult {
    /// `Ξ_0..Ξ_M` with `Ξ_0 = 0`.
    pub xi: RadialSeries,
    pub step_norms: Vec<f64>,
    /// Lowest Taylor degree of the remainder after each step.
    pub valuations: Vec<usize>,
    #[serde(skip)]
    pub conjugators: Vec<FourierTaylorSeries>,
}

struct Work {
    omega: RadialSeries,
    f: FourierTaylorSeries,
    strip: crate::series::StripParams,
    omega0: f64,
    order: usize,
}

impl Work {
    fn new(m: &GeneratingMap, order: usize, n_theta_max: Option<usize>) -> Result<Self> {
        let nk = n_theta_max.unwrap_or(m.f().n_theta_max());
        let f = m.f().resized(order, nk);
        if f.valuation().is_some_and(|v| v < 2) {
            return Err(Error::InvalidInput("the perturbation must vanish to second order at r = 0".into()));
        }
        let mut omega = m.omega().resized(order);
        omega.set_coeff(0, 0.0);
        let omega0 = omega.coeff(1);
        Ok(Self { omega, f, strip: m.strip(), omega0, order })
    }

    fn twist_free(&self) -> RadialSeries {
        RadialSeries::new(vec![0.0, self.omega0])
    }

    /// Move the mean of `part` into `Ω`, then conjugate away its oscillating
    /// part using constant divisors. Returns the conjugator.
    fn eliminate(&mut self, part: &FourierTaylorSeries) -> Result<FourierTaylorSeries> {
        let mean = part.theta_mean()?;
        self.omega = self.omega.add(&mean);
        self.f = self.f.sub(&mean.to_series(self.order, self.f.n_theta_max()));
        let nk = part.n_theta_max();
        let y = solve_cohomological(&self.twist_free(), part, nk, RESONANCE_FLOOR).map_err(|e| match e {
            Error::SmallDivisorBreach { offending } => Error::ResonantFrequency { k: offending[0].0 },
            other => other,
        })?;
        let y = y.scale(-1.0);
        if !y.is_zero() {
            let m = GeneratingMap::unchecked(self.omega.clone(), self.f.clone(), self.strip);
            self.f = conjugate_generating(&m, &y, self.order + 1)?.f().clone();
            self.clear_rounding(part.max_abs());
        }
        Ok(y)
    }

    /// Rows that cancel in exact arithmetic come out at rounding level;
    /// rows below the first one above `ROUNDING_REL · scale` are cleared.
    fn clear_rounding(&mut self, scale: f64) {
        let nk = self.f.n_theta_max() as i64;
        for n in 0..=self.order {
            let row = (0..=nk).map(|k| self.f.get(n, k).norm()).fold(0.0, f64::max);
            if row > ROUNDING_REL * scale {
                break;
            }
            for k in 0..=nk {
                self.f.set(n, k, num_complex::Complex64::new(0.0, 0.0));
            }
        }
    }

    fn remainder_valuation(&self) -> usize {
        self.f.valuation().unwrap_or(self.order + 1)
    }
}

/// Degree-by-degree normal form through order `order`.
pub fn bnf_direct(m: &GeneratingMap, order: usize) -> Result<BnfResult> {
    bnf_direct_with_box(m, order, None)
}

/// [`bnf_direct`] with an explicit Fourier box for the intermediate series.
pub fn bnf_direct_with_box(m: &GeneratingMap, order: usize, n_theta_max: Option<usize>) -> Result<BnfResult> {
    let mut w = Work::new(m, order, n_theta_max)?;
    let mut out = BnfResult { xi: RadialSeries::zeros(order), step_norms: vec![], valuations: vec![], conjugators: vec![] };
    for d in 2..=order {
        let part = w.f.r_slice(d);
        if part.is_zero() {
            continue;
        }
        let y = w.eliminate(&part)?;
        out.conjugators.push(y);
        out.step_norms.push(w.f.weighted_norm(w.strip));
        out.valuations.push(w.remainder_valuation());
    }
    out.xi = w.omega;
    Ok(out)
}

/// Normal form by `pre_steps` degree-by-degree steps followed by whole-remainder
/// steps `Ξ_{k+1} = Ξ_k + ⟨G_k⟩`, `−[Ω₀]·Y_k = G_k − ⟨G_k⟩`.
pub fn bnf_quantified(m: &GeneratingMap, order: usize, pre_steps: usize) -> Result<BnfResult> {
    bnf_quantified_with_box(m, order, pre_steps, None)
}

pub fn bnf_quantified_with_box(
    m: &GeneratingMap,
    order: usize,
    pre_steps: usize,
    n_theta_max: Option<usize>,
) -> Result<BnfResult> {
    let mut w = Work::new(m, order, n_theta_max)?;
    let mut out = BnfResult { xi: RadialSeries::zeros(order), step_norms: vec![], valuations: vec![], conjugators: vec![] };
    for d in 2..(2 + pre_steps).min(order + 1) {
        let part = w.f.r_slice(d);
        let y = w.eliminate(&part)?;
        out.conjugators.push(y);
    }
    let mut last_val = w.remainder_valuation();
    while !w.f.is_zero() && last_val <= order {
        let g = w.f.clone();
        out.step_norms.push(g.weighted_norm(w.strip));
        let y = w.eliminate(&g)?;
        out.conjugators.push(y);
        let val = w.remainder_valuation();
        if val <= last_val {
            return Err(Error::SmallnessViolation { quantity: val as f64, limit: last_val as f64 + 1.0 });
        }
        out.valuations.push(val);
        last_val = val;
    }
    out.xi = w.omega;
    Ok(out)
}

/// Largest coefficient discrepancy over the leading block shared by two
/// normal forms. When `rho` is given the block is further limited to the
/// first `⌊ρ^{−3}⌋` coefficients.
pub fn bnf_truncation_compare(a: &BnfResult, b: &BnfResult, rho: Option<f64>) -> f64 {
    let mut len = a.xi.coeffs().len().min(b.xi.coeffs().len());
    if let Some(rho) = rho {
        len = len.min(rho.powi(-3).floor() as usize);
    }
    (0..len).map(|i| (a.xi.coeff(i) - b.xi.coeff(i)).abs()).fold(0.0, f64::max)
}

/// `sup |Ω₁′ − Ω₂′|` over 201 equispaced points of `annulus`.
pub fn compare_frequency_maps(omega1: &RadialSeries, omega2: &RadialSeries, annulus: (f64, f64)) -> f64 {
    let (d1, d2) = (omega1.derivative(), omega2.derivative());
    (0..=200)
        .map(|i| {
            let r = annulus.0 + (annulus.1 - annulus.0) * i as f64 / 200.0;
            (d1.eval(r) - d2.eval(r)).abs()
        })
        .fold(0.0, f64::max)
}
