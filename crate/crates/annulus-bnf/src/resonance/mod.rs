//! Local analysis near a resonance `Ω′(r₀) = p/q`.
//!
//! The chain is: split the perturbation into its `1/q`-periodic part and the
//! rest, conjugate the rest away with the locally bounded divisors, take the
//! autonomous Hamiltonian of the remaining map (with the rotation `p/q`
//! removed), unfold it `q` times and read off the pendulum profiles.
//! [`hole`] then studies the square-root coordinates built on those profiles.

pub mod hole;

pub use hole::{
    flatness_bound, flatness_bound_value, gamma_and_h, laurent_coefficients, residue_check, solve_g, sqrt_branch,
    CircleSamples, ResidueCheck,
};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::divisors::{solve_cohomological, ResonanceZone, DEFAULT_DIVISOR_FLOOR};
use crate::error::{Error, Result};
use crate::maps::{conjugate_generating, interpolate_flow, GeneratingMap};
use crate::series::{FourierTaylorSeries, RadialSeries, StripParams};

/// Default inner-cutoff factor in `λ = L ε₁^{1/2}`.
pub const DEFAULT_L: f64 = 10.0;
/// Default number of samples of the unfolded angle.
pub const DEFAULT_GRID: usize = 64;

/// Split into the modes divisible by `q` and the others.
pub fn resonant_split(f: &FourierTaylorSeries, q: usize) -> Result<(FourierTaylorSeries, FourierTaylorSeries)> {
    if q == 0 {
        return Err(Error::InvalidInput("q must be at least 1".into()));
    }
    let mut res = f.zeros_like();
    let mut nonres = f.zeros_like();
    for k in 0..=f.n_theta_max() as i64 {
        let target = if k % q as i64 == 0 { &mut res } else { &mut nonres };
        target.set_column(k, &f.column(k));
    }
    Ok((res, nonres))
}

/// Outcome of [`eliminate_nonresonant`], in coordinates centred at the zone.
#[derive(Clone, Debug, Serialize)]
pub struct Elimination {
    pub f_per: FourierTaylorSeries,
    pub f_nper: FourierTaylorSeries,
    /// Frequency map re-expanded around the zone centre.
    pub omega: RadialSeries,
    /// Norm of the non-resonant part before the first and after each step.
    pub nonresonant_norms: Vec<f64>,
    /// Conjugators applied, in order.
    pub conjugators: Vec<FourierTaylorSeries>,
}

/// Strip used for the local problem: the map's width, the zone's radius.
fn local_strip(m: &GeneratingMap, zone: &ResonanceZone) -> StripParams {
    StripParams { h: m.strip().h, rho: zone.radius }
}

/// Conjugate away the modes `k ≤ n_hat` with `q ∤ k` for `steps` rounds.
pub fn eliminate_nonresonant(m: &GeneratingMap, zone: &ResonanceZone, n_hat: usize, steps: usize) -> Result<Elimination> {
    let q = zone.q as usize;
    let omega = m.omega().recentre(zone.center);
    let strip = local_strip(m, zone);
    let mut f = m.f().recentre(zone.center);
    let order = f.n_r_max();
    let (_, mut nonres) = resonant_split(&f, q)?;
    let mut out = Elimination {
        f_per: f.zeros_like(),
        f_nper: f.zeros_like(),
        omega: omega.clone(),
        nonresonant_norms: vec![nonres.weighted_norm(strip)],
        conjugators: Vec::new(),
    };
    for _ in 0..steps {
        if nonres.is_zero() {
            break;
        }
        let y = solve_cohomological(&omega, &nonres, n_hat, DEFAULT_DIVISOR_FLOOR)?.scale(-1.0);
        let local = GeneratingMap::unchecked(omega.clone(), f.clone(), strip);
        f = conjugate_generating(&local, &y, order + 2)?.f().clone();
        nonres = resonant_split(&f, q)?.1;
        out.nonresonant_norms.push(nonres.weighted_norm(strip));
        out.conjugators.push(y);
    }
    let (res, nonres) = resonant_split(&f, q)?;
    out.f_per = res;
    out.f_nper = nonres;
    Ok(out)
}

/// Settings of [`pendulum_reduce_with`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReductionConfig {
    pub l: f64,
    pub grid: usize,
    pub eliminate_steps: usize,
    pub interpolate_steps: usize,
}

impl Default for ReductionConfig {
    fn default() -> Self {
        Self { l: DEFAULT_L, grid: DEFAULT_GRID, eliminate_steps: 3, interpolate_steps: 6 }
    }
}

/// Pendulum model `Π_q(θ̃, r̃) = f0 + f1 r̃ + (1 + f2) r̃² + r̃³ f(θ̃, r̃)` sampled
/// on the grid `θ̃_j = j / grid`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PendulumReduction {
    pub p: i64,
    pub q: i64,
    pub center: f64,
    pub f0: Vec<f64>,
    pub f1: Vec<f64>,
    pub f2: Vec<f64>,
    /// Taylor coefficients in `r̃` of the cubic remainder `f`, per grid point.
    pub tail: Vec<Vec<f64>>,
    pub e0: Vec<f64>,
    pub e1: Vec<f64>,
    /// `c = ½ Ω″(r₀)`, by which the model is divided.
    pub curvature: f64,
    pub rho_q: f64,
    pub lambda: f64,
    pub l: f64,
    pub eps0: f64,
    pub eps1: f64,
    /// Flow-interpolation residual when built from a map.
    pub interpolation_residual: Option<f64>,
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

impl PendulumReduction {
    /// Build from the profiles `f0, f1, f2` and the cubic remainder, shifting
    /// `f0` by the constant that makes `∫(1 + f2)^{−1/2} e1 = 0`.
    #[allow(clippy::too_many_arguments)]
    pub fn from_profiles(
        (p, q, center): (i64, i64, f64),
        f0: Vec<f64>,
        f1: Vec<f64>,
        f2: Vec<f64>,
        tail: Vec<Vec<f64>>,
        curvature: f64,
        rho_q: f64,
        l: f64,
    ) -> Result<Self> {
        let mut red = Self::from_profiles_unnormalized((p, q, center), f0, f1, f2, tail, curvature, rho_q, l)?;
        let w = red.weights();
        let shift = red.e1.iter().zip(&w).map(|(e, w)| e * w).sum::<f64>() / w.iter().sum::<f64>();
        for v in red.f0.iter_mut() {
            *v += shift;
        }
        red.refresh();
        Ok(red)
    }

    /// As [`Self::from_profiles`] but leaving the additive constant alone.
    #[allow(clippy::too_many_arguments)]
    pub fn from_profiles_unnormalized(
        (p, q, center): (i64, i64, f64),
        f0: Vec<f64>,
        f1: Vec<f64>,
        f2: Vec<f64>,
        tail: Vec<Vec<f64>>,
        curvature: f64,
        rho_q: f64,
        l: f64,
    ) -> Result<Self> {
        let n = f0.len();
        if n == 0 || f1.len() != n || f2.len() != n || tail.len() != n {
            return Err(Error::InvalidInput("profiles must share one non-empty grid".into()));
        }
        if f2.iter().any(|v| *v <= -1.0) {
            return Err(Error::NoTwist);
        }
        let mut red = Self {
            p,
            q,
            center,
            f0,
            f1,
            f2,
            tail,
            e0: vec![],
            e1: vec![],
            curvature,
            rho_q,
            lambda: 0.0,
            l,
            eps0: 0.0,
            eps1: 0.0,
            interpolation_residual: None,
        };
        red.refresh();
        Ok(red)
    }

    fn refresh(&mut self) {
        self.e0 = self.f1.iter().zip(&self.f2).map(|(f1, f2)| -0.5 * f1 / (1.0 + f2)).collect();
        self.e1 = self
            .f0
            .iter()
            .zip(&self.f1)
            .zip(&self.f2)
            .map(|((f0, f1), f2)| -f0 + 0.25 * f1 * f1 / (1.0 + f2))
            .collect();
        self.eps0 = sup(&self.e0);
        self.eps1 = sup(&self.e1);
        self.lambda = self.l * self.eps1.sqrt();
    }

    pub fn grid_len(&self) -> usize {
        self.f0.len()
    }

    /// `(1 + f2)^{−1/2}` on the grid.
    pub fn weights(&self) -> Vec<f64> {
        self.f2.iter().map(|f2| (1.0 + f2).powf(-0.5)).collect()
    }

    /// `γ = ∫(1 + f2)^{−1/2}`.
    pub fn gamma(&self) -> f64 {
        mean(&self.weights())
    }

    /// `∫(1 + f2)^{−1/2} e1`, zero after normalisation.
    pub fn normalization_defect(&self) -> f64 {
        mean(&self.weights().iter().zip(&self.e1).map(|(w, e)| w * e).collect::<Vec<_>>())
    }

    /// Cubic remainder `f(θ̃_j, r̃)` at complex `r̃`.
    pub fn tail_at(&self, j: usize, r: Complex64) -> Complex64 {
        self.tail[j].iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * r + c)
    }

    /// `∂_r̃ f(θ̃_j, r̃)`.
    pub fn tail_derivative_at(&self, j: usize, r: Complex64) -> Complex64 {
        self.tail[j]
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, (n, &c)| acc * r + c * n as f64)
    }

    /// `Π_q(θ̃_j, r̃)` from the profiles.
    pub fn model_at(&self, j: usize, r: Complex64) -> Complex64 {
        self.f0[j] + self.f1[j] * r + (1.0 + self.f2[j]) * r * r + r * r * r * self.tail_at(j, r)
    }

    /// `ε̄ = max(sup|f0|, sup|f1|, sup_{|r̃|≤ρ_q}|f|)`, the last bounded by
    /// the sum of absolute coefficients.
    pub fn eps_bar(&self) -> f64 {
        let tail = self
            .tail
            .iter()
            .map(|c| c.iter().enumerate().map(|(n, v)| v.abs() * self.rho_q.powi(n as i32)).sum::<f64>())
            .fold(0.0, f64::max);
        sup(&self.f0).max(sup(&self.f1)).max(tail)
    }
}

/// [`pendulum_reduce_with`] under the default configuration.
pub fn pendulum_reduce(m: &GeneratingMap, zone: &ResonanceZone) -> Result<PendulumReduction> {
    pendulum_reduce_with(m, zone, &ReductionConfig::default())
}

pub fn pendulum_reduce_with(m: &GeneratingMap, zone: &ResonanceZone, cfg: &ReductionConfig) -> Result<PendulumReduction> {
    if zone.q < 1 {
        return Err(Error::InvalidInput("zone denominator must be positive".into()));
    }
    let q = zone.q as usize;
    let local_omega = m.omega().recentre(zone.center);
    let curvature = local_omega.coeff(2);
    if curvature <= 0.0 {
        return Err(Error::NoTwist);
    }
    let elim = eliminate_nonresonant(m, zone, m.f().n_theta_max(), cfg.eliminate_steps)?;

    // Remove the constant and the rotation p/q from the integrable part.
    let mut reduced = elim.omega.clone();
    reduced.set_coeff(0, 0.0);
    reduced.set_coeff(1, reduced.coeff(1) - zone.p as f64 / zone.q as f64);
    let strip = local_strip(m, zone);
    let local = GeneratingMap::unchecked(reduced, elim.f_per.clone(), strip);
    let (pi, residual) = interpolate_flow(&local, cfg.interpolate_steps)?;

    // Unfold θ̃ = qθ, r̃ = qs and divide by the curvature.
    let nr = pi.n_r_max();
    let grid = cfg.grid;
    let mut rows = vec![vec![0.0; grid]; nr + 1];
    for (n, row) in rows.iter_mut().enumerate() {
        let scale = (q as f64).powi(2 - n as i32) / curvature;
        for (j, slot) in row.iter_mut().enumerate() {
            let theta = j as f64 / (grid as f64 * q as f64);
            let mut v = pi.get(n, 0).re;
            for k in 1..=pi.n_theta_max() as i64 {
                let c = pi.get(n, k);
                if c.norm() > 0.0 {
                    v += 2.0 * (c * Complex64::from_polar(1.0, TAU * k as f64 * theta)).re;
                }
            }
            *slot = scale * v;
        }
    }
    let f0 = rows[0].clone();
    let f1 = rows[1].clone();
    let f2 = rows[2].iter().map(|v| v - 1.0).collect();
    let tail = (0..grid).map(|j| rows.iter().skip(3).map(|row| row[j]).collect()).collect();
    let mut red = PendulumReduction::from_profiles(
        (zone.p, zone.q, zone.center),
        f0,
        f1,
        f2,
        tail,
        curvature,
        q as f64 * zone.radius,
        cfg.l,
    )?;
    red.interpolation_residual = Some(residual);
    Ok(red)
}
