//! Exact-symplectic annulus maps given by generating functions.
//!
//! A [`GeneratingMap`] with data `(Ω, F)` defines `f: (θ, r) ↦ (φ, R)` through
//!
//! ```text
//! R = r − ∂φF(φ, r),        θ = φ − Ω′(r) − ∂rF(φ, r).
//! ```
//!
//! The θ-equation is solved for `φ` by fixed-point iteration on the small
//! displacement `φ − θ`, so lifts can grow without losing precision in the
//! periodic evaluations.

pub mod compose;
pub mod flow;
pub mod interpolate;

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::series::{Evaluator, FourierTaylorSeries, RadialSeries, SeriesFile, StripParams};

pub use compose::{compose_generating, conjugate_generating, inverse_generating};
pub use flow::{flow, Hamiltonian};
pub use interpolate::interpolate_flow;

/// Convergence threshold of the implicit solves.
pub const IMPLICIT_TOL: f64 = 1e-14;
/// Iteration cap of the implicit solves.
pub const IMPLICIT_MAX_ITER: usize = 100;

/// A point of the annulus; `theta` is a real lift.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub theta: f64,
    pub r: f64,
}

impl PhasePoint {
    pub fn new(theta: f64, r: f64) -> Self {
        Self { theta, r }
    }
}

/// `f_{Ω+F}` together with the strip on which its data is declared analytic.
#[derive(Clone, Debug)]
pub struct GeneratingMap {
    omega: RadialSeries,
    f: FourierTaylorSeries,
    strip: StripParams,
    d_omega: RadialSeries,
    dd_omega: RadialSeries,
    eval_f: Evaluator,
}

impl PartialEq for GeneratingMap {
    fn eq(&self, other: &Self) -> bool {
        self.omega == other.omega && self.f == other.f && self.strip == other.strip
    }
}

impl GeneratingMap {
    /// Build and check the contraction condition `‖∂rF‖ < h`, `‖∂²rθF‖ < 1`.
    pub fn new(omega: RadialSeries, f: FourierTaylorSeries, strip: StripParams) -> Result<Self> {
        let fr = f.d_r().weighted_norm(strip);
        let frt = f.d_r().d_theta().weighted_norm(strip);
        if fr >= strip.h {
            return Err(Error::SmallnessViolation { quantity: fr, limit: strip.h });
        }
        if frt >= 1.0 {
            return Err(Error::SmallnessViolation { quantity: frt, limit: 1.0 });
        }
        Ok(Self::unchecked(omega, f, strip))
    }

    /// Build without the contraction check (formal manipulations only).
    pub fn unchecked(omega: RadialSeries, f: FourierTaylorSeries, strip: StripParams) -> Self {
        let d_omega = omega.derivative();
        let dd_omega = d_omega.derivative();
        let eval_f = f.evaluator();
        Self { omega, f, strip, d_omega, dd_omega, eval_f }
    }

    /// Chirikov standard map `φ = θ + r`, `R = r + (K/2π) sin 2πφ`.
    pub fn standard_map(k: f64, n_r_max: usize, n_theta_max: usize) -> Self {
        let omega = RadialSeries::twist(0.0, 1.0, n_r_max);
        let f = FourierTaylorSeries::cos_term(n_r_max, n_theta_max, 0, 1, k / (4.0 * PI * PI));
        Self::unchecked(omega, f, StripParams { h: 0.5, rho: 2.0 })
    }

    /// The integrable twist `f_Ω`.
    pub fn integrable(omega: RadialSeries, n_theta_max: usize, strip: StripParams) -> Self {
        let nr = omega.n_r_max();
        Self::unchecked(omega, FourierTaylorSeries::zeros(nr, n_theta_max), strip)
    }

    pub fn omega(&self) -> &RadialSeries {
        &self.omega
    }

    pub fn f(&self) -> &FourierTaylorSeries {
        &self.f
    }

    pub fn strip(&self) -> StripParams {
        self.strip
    }

    pub fn with_f(&self, f: FourierTaylorSeries) -> Self {
        Self::unchecked(self.omega.clone(), f, self.strip)
    }

    pub fn with_omega(&self, omega: RadialSeries) -> Self {
        Self::unchecked(omega, self.f.clone(), self.strip)
    }

    /// Rotation `Ω′(r)` of the unperturbed twist.
    pub fn frequency(&self, r: f64) -> f64 {
        self.d_omega.eval(r)
    }

    pub fn twist_at(&self, r: f64) -> f64 {
        self.dd_omega.eval(r)
    }

    fn check_domain(&self, theta: f64, r: f64) -> Result<()> {
        if !(r.abs() <= self.strip.rho && theta.is_finite()) {
            return Err(Error::OutOfDomain { theta, r });
        }
        Ok(())
    }

    /// Solve `φ − θ = Ω′(r) + ∂rF(φ, r)` for the displacement `φ − θ`.
    fn solve_phi(&self, theta: f64, r: f64) -> Result<f64> {
        let base = theta.rem_euclid(1.0);
        let w = self.d_omega.eval(r);
        if self.eval_f.r_independent() {
            return Ok(w);
        }
        let mut disp = w + self.eval_f.derivs(base + w, r).r;
        let mut last = f64::INFINITY;
        for _ in 0..IMPLICIT_MAX_ITER {
            let next = w + self.eval_f.derivs(base + disp, r).r;
            let step = (next - disp).abs();
            // Damp when the plain iteration stops contracting.
            disp = if step > last { 0.5 * (disp + next) } else { next };
            if step <= IMPLICIT_TOL {
                return Ok(disp);
            }
            if (disp).abs() > self.strip.h + 1.0 + w.abs() {
                return Err(Error::OutOfDomain { theta, r });
            }
            last = step;
        }
        Err(Error::NoContraction { iterations: IMPLICIT_MAX_ITER, last_step: last })
    }

    /// Image `(φ, R)` of a point; the returned φ continues the lift of θ.
    pub fn eval_map(&self, x: PhasePoint) -> Result<PhasePoint> {
        self.check_domain(x.theta, x.r)?;
        let disp = self.solve_phi(x.theta, x.r)?;
        let phi_base = x.theta.rem_euclid(1.0) + disp;
        let big_r = x.r - self.eval_f.derivs(phi_base, x.r).t;
        Ok(PhasePoint { theta: x.theta + disp, r: big_r })
    }

    /// Image and Jacobian `Df(x)` by implicit differentiation.
    pub fn eval_with_jacobian(&self, x: PhasePoint) -> Result<(PhasePoint, [[f64; 2]; 2])> {
        self.check_domain(x.theta, x.r)?;
        let disp = self.solve_phi(x.theta, x.r)?;
        let phi_base = x.theta.rem_euclid(1.0) + disp;
        let d = self.eval_f.derivs(phi_base, x.r);
        let a = 1.0 / (1.0 - d.tr);
        let w2 = self.dd_omega.eval(x.r) + d.rr;
        let dphi_dth = a;
        let dphi_dr = w2 * a;
        let dr_dth = -d.tt * a;
        let dr_dr = 1.0 - d.tr - d.tt * w2 * a;
        let y = PhasePoint { theta: x.theta + disp, r: x.r - d.t };
        Ok((y, [[dphi_dth, dphi_dr], [dr_dth, dr_dr]]))
    }

    pub fn jacobian(&self, x: PhasePoint) -> Result<[[f64; 2]; 2]> {
        Ok(self.eval_with_jacobian(x)?.1)
    }

    /// Preimage of `y = (φ, R)`: solve `r = R + ∂φF(φ, r)`, then read off θ.
    pub fn invert_map(&self, y: PhasePoint) -> Result<PhasePoint> {
        let base = y.theta.rem_euclid(1.0);
        let mut r = y.r;
        let mut last = f64::INFINITY;
        let mut converged = self.eval_f.is_empty();
        for _ in 0..IMPLICIT_MAX_ITER {
            if converged {
                break;
            }
            let next = y.r + self.eval_f.derivs(base, r).t;
            let step = (next - r).abs();
            r = if step > last { 0.5 * (r + next) } else { next };
            if step <= IMPLICIT_TOL {
                converged = true;
            }
            last = step;
        }
        if !converged {
            return Err(Error::NoContraction { iterations: IMPLICIT_MAX_ITER, last_step: last });
        }
        self.check_domain(y.theta, r)?;
        let disp = self.d_omega.eval(r) + self.eval_f.derivs(base, r).r;
        Ok(PhasePoint { theta: y.theta - disp, r })
    }

    /// `n`-fold iterate.
    pub fn iterate(&self, mut x: PhasePoint, n: usize) -> Result<PhasePoint> {
        for _ in 0..n {
            x = self.eval_map(x)?;
        }
        Ok(x)
    }

    pub fn to_file(&self) -> MapFile {
        MapFile { omega: self.omega.coeffs().to_vec(), f: self.f.to_file(), h: self.strip.h, rho: self.strip.rho }
    }

    pub fn from_file(m: &MapFile) -> Result<Self> {
        let strip = StripParams::new(m.h, m.rho)?;
        let f = FourierTaylorSeries::from_file(&m.f)?;
        if m.omega.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("non-finite Ω coefficient".into()));
        }
        Self::new(RadialSeries::new(m.omega.clone()), f, strip)
    }
}

/// On-disk layout `{"omega": [...], "f": <series>, "h": .., "rho": ..}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MapFile {
    pub omega: Vec<f64>,
    pub f: SeriesFile,
    pub h: f64,
    pub rho: f64,
}

/// Determinant of a 2×2 matrix.
pub fn det2(m: &[[f64; 2]; 2]) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

/// Product `a · b` of 2×2 matrices.
pub fn matmul2(a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn twist_only() -> GeneratingMap {
        GeneratingMap::integrable(RadialSeries::twist(0.0, 1.0, 4), 4, StripParams { h: 0.5, rho: 1.0 })
    }

    #[test]
    fn integrable_twist_examples() {
        let m = twist_only();
        let y = m.eval_map(PhasePoint::new(0.2, 0.3)).unwrap();
        assert!((y.theta - 0.5).abs() < 1e-15 && (y.r - 0.3).abs() < 1e-15);
        let j = m.jacobian(PhasePoint::new(0.2, 0.3)).unwrap();
        assert_eq!(j, [[1.0, 1.0], [0.0, 1.0]]);
        let x = m.invert_map(PhasePoint::new(0.5, 0.3)).unwrap();
        assert!((x.theta - 0.2).abs() < 1e-15);
    }

    #[test]
    fn standard_map_examples() {
        let m = GeneratingMap::standard_map(1.0, 4, 4);
        let y = m.eval_map(PhasePoint::new(0.0, 0.5)).unwrap();
        assert!((y.theta - 0.5).abs() < 1e-15 && (y.r - 0.5).abs() < 1e-15);
        let y = m.eval_map(PhasePoint::new(0.0, 0.25)).unwrap();
        assert!((y.theta - 0.25).abs() < 1e-15);
        assert!((y.r - (0.25 + 1.0 / (2.0 * PI))).abs() < 1e-14);
        assert!((y.r - 0.409155).abs() < 1e-6);

        let m = GeneratingMap::standard_map(0.5, 4, 4);
        let j = m.jacobian(PhasePoint::new(0.0, 0.0)).unwrap();
        let expect = [[1.0, 1.0], [0.5, 1.5]];
        for i in 0..2 {
            for k in 0..2 {
                assert!((j[i][k] - expect[i][k]).abs() < 1e-14);
            }
        }
        assert!((det2(&j) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn r_dependent_map_round_trip_and_jacobian() {
        let mut f = FourierTaylorSeries::cos_term(6, 6, 2, 1, 0.02);
        f.add_sin(1, 2, 0.01);
        f.add_cos(3, 0, 0.05);
        let m = GeneratingMap::new(RadialSeries::twist(0.3, 1.0, 6), f, StripParams { h: 0.1, rho: 0.45 }).unwrap();
        for i in 0..10 {
            let x = PhasePoint::new(0.1 * i as f64, -0.4 + 0.08 * i as f64);
            let (y, j) = m.eval_with_jacobian(x).unwrap();
            let back = m.invert_map(y).unwrap();
            assert!((back.theta - x.theta).abs() < 1e-12 && (back.r - x.r).abs() < 1e-12);
            assert!((det2(&j) - 1.0).abs() < 1e-11);
            // Jacobian against central differences.
            let e = 1e-6;
            let px = m.eval_map(PhasePoint::new(x.theta + e, x.r)).unwrap();
            let mx = m.eval_map(PhasePoint::new(x.theta - e, x.r)).unwrap();
            assert!(((px.theta - mx.theta) / (2.0 * e) - j[0][0]).abs() < 1e-7);
            assert!(((px.r - mx.r) / (2.0 * e) - j[1][0]).abs() < 1e-7);
        }
    }

    #[test]
    fn out_of_domain_is_reported() {
        let m = twist_only();
        assert!(matches!(m.eval_map(PhasePoint::new(0.0, 3.0)), Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn map_file_round_trip() {
        let m = GeneratingMap::standard_map(0.5, 4, 4);
        let text = serde_json::to_string(&m.to_file()).unwrap();
        let back = GeneratingMap::from_file(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back, m);
    }
}
