//! Square-root coordinates around the pendulum hole and the residue that
//! obstructs extending them inside.
//!
//! `g(θ̃, z)` solves `Π_q(θ̃, g) = z²`, `Γ(u) = ∫ g(θ̃, u) dθ̃` and `h = Γ^{−1}`.
//! The truncated versions `g̃, Γ̃, h̃` drop the cubic remainder. Functions of `z`
//! are handled through their samples on circles; Laurent coefficients come
//! from trapezoid sums, which are spectrally accurate for analytic data.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::TAU;

use super::PendulumReduction;
use crate::error::{Error, Result};

/// Default number of nodes on each circle.
pub const DEFAULT_NODES: usize = 256;
/// Laurent window used by [`laurent_coefficients`] callers.
pub const LAURENT_WINDOW: i32 = 9;

const FIXED_POINT_MAX_ITER: usize = 200;
const NEWTON_MAX_ITER: usize = 60;
const NEWTON_TOL: f64 = 1e-12;

/// `m_a(z)` with `m_a(z)² = z² + a` and `m_a(z) ~ z` at infinity.
pub fn sqrt_branch(z: Complex64, a: Complex64) -> Result<Complex64> {
    let (z_abs, a_root) = (z.norm(), a.norm().sqrt());
    if z_abs <= a_root {
        return Err(Error::BranchViolation { z_abs, a_root });
    }
    Ok(z * (1.0 + a / (z * z)).sqrt())
}

#[derive(Clone, Copy, PartialEq)]
enum Model {
    Full,
    Truncated,
}

/// `g(θ̃_j, z)` and `∂_z g` at one grid point, by fixed-point iteration.
fn g_at(red: &PendulumReduction, j: usize, z: Complex64, model: Model) -> Result<(Complex64, Complex64)> {
    let w = (1.0 + red.f2[j]).powf(-0.5);
    let e0 = Complex64::new(red.e0[j], 0.0);
    let e1 = Complex64::new(red.e1[j], 0.0);
    let mut g = e0 + w * sqrt_branch(z, e1)?;
    if model == Model::Full && red.tail[j].iter().any(|c| *c != 0.0) {
        let mut converged = false;
        let mut last = f64::NAN;
        for _ in 0..FIXED_POINT_MAX_ITER {
            let next = e0 + w * sqrt_branch(z, e1 - g * g * g * red.tail_at(j, g))?;
            last = (next - g).norm();
            g = next;
            if last <= 1e-15 * z.norm() {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NoContraction { iterations: FIXED_POINT_MAX_ITER, last_step: last });
        }
    }
    // Differentiate (g − e0)²/w² = z² + e1 − g³ f(g).
    let m = (g - e0) / w;
    let cubic = match model {
        Model::Full => 3.0 * g * g * red.tail_at(j, g) + g * g * g * red.tail_derivative_at(j, g),
        Model::Truncated => Complex64::new(0.0, 0.0),
    };
    let dm = 2.0 * z / (2.0 * m + w * cubic);
    Ok((g, w * dm))
}

fn check_annulus(red: &PendulumReduction, z: Complex64) -> Result<()> {
    if z.norm() < red.lambda / 8.0 || (red.rho_q > 0.0 && z.norm() > red.rho_q) {
        return Err(Error::InvalidInput(format!(
            "|z| = {} lies outside the annulus [{}, {}]",
            z.norm(),
            red.lambda / 8.0,
            red.rho_q
        )));
    }
    Ok(())
}

/// Samples of `θ̃ ↦ g(θ̃, z)` on the reduction grid.
pub fn solve_g(red: &PendulumReduction, z: Complex64) -> Result<Vec<Complex64>> {
    check_annulus(red, z)?;
    (0..red.grid_len()).map(|j| g_at(red, j, z, Model::Full).map(|(g, _)| g)).collect()
}

/// `Γ(u)` and `Γ′(u)` by the trapezoid rule over the grid.
fn gamma_with_derivative(red: &PendulumReduction, u: Complex64, model: Model) -> Result<(Complex64, Complex64)> {
    let n = red.grid_len() as f64;
    let mut total = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
    for j in 0..red.grid_len() {
        let (g, dg) = g_at(red, j, u, model)?;
        total.0 += g;
        total.1 += dg;
    }
    Ok((total.0 / n, total.1 / n))
}

/// Newton inversion of `Γ` at `z`.
fn invert_gamma(red: &PendulumReduction, z: Complex64, model: Model) -> Result<Complex64> {
    let e0_mean = red.e0.iter().sum::<f64>() / red.grid_len() as f64;
    let mut u = (z - e0_mean) / red.gamma();
    let mut residual = f64::INFINITY;
    for _ in 0..NEWTON_MAX_ITER {
        let (value, slope) = gamma_with_derivative(red, u, model)?;
        residual = (value - z).norm();
        if residual <= 0.1 * NEWTON_TOL * z.norm().max(1e-3) {
            return Ok(u);
        }
        let step = (value - z) / slope;
        if !step.re.is_finite() || !step.im.is_finite() {
            break;
        }
        u -= step;
    }
    if residual <= NEWTON_TOL {
        Ok(u)
    } else {
        Err(Error::NewtonDiverged { residual })
    }
}

/// `Γ` and `h = Γ^{−1}` on a set of sample points, with the inversion residual.
#[derive(Clone, Debug, Serialize)]
pub struct CircleSamples {
    pub z: Vec<Complex64>,
    pub gamma: Vec<Complex64>,
    pub h: Vec<Complex64>,
    pub max_residual: f64,
}

pub fn gamma_and_h(red: &PendulumReduction, grid: &[Complex64]) -> Result<CircleSamples> {
    let rows: Vec<(Complex64, Complex64, f64)> = grid
        .par_iter()
        .map(|&z| {
            check_annulus(red, z)?;
            let (gamma, _) = gamma_with_derivative(red, z, Model::Full)?;
            let h = invert_gamma(red, z, Model::Full)?;
            let back = gamma_with_derivative(red, h, Model::Full)?.0;
            Ok((gamma, h, (back - z).norm()))
        })
        .collect::<Result<_>>()?;
    Ok(CircleSamples {
        z: grid.to_vec(),
        gamma: rows.iter().map(|r| r.0).collect(),
        h: rows.iter().map(|r| r.1).collect(),
        max_residual: rows.iter().map(|r| r.2).fold(0.0, f64::max),
    })
}

/// `n` equispaced nodes on the circle of radius `t`.
pub fn circle(t: f64, n: usize) -> Vec<Complex64> {
    (0..n).map(|j| Complex64::from_polar(t, TAU * j as f64 / n as f64)).collect()
}

/// Laurent coefficients `c_n`, `n ∈ powers`, of a function analytic near the
/// circle of radius `t`, from its values at [`circle`] nodes.
pub fn laurent_coefficients(values: &[Complex64], t: f64, powers: std::ops::RangeInclusive<i32>) -> Vec<Complex64> {
    let nodes = circle(t, values.len());
    powers
        .map(|p| {
            let s: Complex64 = values.iter().zip(&nodes).map(|(v, z)| v * z.powi(-p)).sum();
            s / values.len() as f64
        })
        .collect()
}

/// `Γ̃` on the nodes of a circle.
pub fn gamma_tilde_on_circle(red: &PendulumReduction, t: f64, n_nodes: usize) -> Result<Vec<Complex64>> {
    circle(t, n_nodes)
        .par_iter()
        .map(|&z| gamma_with_derivative(red, z, Model::Truncated).map(|v| v.0))
        .collect()
}

/// `h̃` on the nodes of a circle.
pub fn h_tilde_on_circle(red: &PendulumReduction, t: f64, n_nodes: usize) -> Result<Vec<Complex64>> {
    circle(t, n_nodes).par_iter().map(|&z| invert_gamma(red, z, Model::Truncated)).collect()
}

/// Contour value and closed form for the residue of `h̃`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ResidueCheck {
    /// `(1/2πi) ∮ z² h̃(z) dz`.
    pub contour: Complex64,
    /// `(1/8) γ² ∫(1 + f2)^{−1/2} e1²`.
    pub formula: f64,
    /// `(1/2πi) ∮ z² h̃(z)² dz`, which vanishes once `⟨e0⟩ = 0`.
    pub squared_contour: Complex64,
}

pub fn residue_check(red: &PendulumReduction, t: f64, n_nodes: usize) -> Result<ResidueCheck> {
    if t < red.lambda {
        return Err(Error::InvalidInput(format!("radius {t} is inside the cutoff {}", red.lambda)));
    }
    if n_nodes < 64 {
        return Err(Error::InvalidInput("at least 64 nodes are needed".into()));
    }
    let h = h_tilde_on_circle(red, t, n_nodes)?;
    let nodes = circle(t, n_nodes);
    let n = n_nodes as f64;
    let contour = nodes.iter().zip(&h).map(|(z, h)| z.powi(3) * h).sum::<Complex64>() / n;
    let squared_contour = nodes.iter().zip(&h).map(|(z, h)| z.powi(3) * h * h).sum::<Complex64>() / n;
    let w = red.weights();
    let weighted_sq = w.iter().zip(&red.e1).map(|(w, e)| w * e * e).sum::<f64>() / red.grid_len() as f64;
    let formula = 0.125 * red.gamma().powi(2) * weighted_sq;
    Ok(ResidueCheck { contour, formula, squared_contour })
}

/// `ν^{1/6} L^{−1} + h^{−1} e^{−h/(2L⁴ε̄)}`.
pub fn flatness_bound_value(nu: f64, l: f64, h: f64, eps_bar: f64) -> Result<f64> {
    if !(nu >= 0.0 && l > 0.0 && h > 0.0 && eps_bar >= 0.0) {
        return Err(Error::InvalidInput("flatness bound needs nonnegative inputs and positive L, h".into()));
    }
    let tail = if eps_bar == 0.0 { 0.0 } else { (-h / (2.0 * l.powi(4) * eps_bar)).exp() / h };
    Ok(nu.powf(1.0 / 6.0) / l + tail)
}

/// [`flatness_bound_value`] with `L` and `ε̄` taken from the reduction.
pub fn flatness_bound(nu: f64, red: &PendulumReduction, h: f64) -> Result<f64> {
    flatness_bound_value(nu, red.l, h, red.eps_bar())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::resonance::DEFAULT_L;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn reduction(f0: Vec<f64>, f1: Vec<f64>, f2: Vec<f64>, tail: Vec<Vec<f64>>, normalize: bool) -> PendulumReduction {
        let build = if normalize { PendulumReduction::from_profiles } else { PendulumReduction::from_profiles_unnormalized };
        build((1, 2, 0.0), f0, f1, f2, tail, 1.0, 10.0, DEFAULT_L).unwrap()
    }

    fn zeros(n: usize) -> Vec<f64> {
        vec![0.0; n]
    }

    fn cosine(n: usize, amp: f64) -> Vec<f64> {
        (0..n).map(|j| amp * (TAU * j as f64 / n as f64).cos()).collect()
    }

    /// Potential `ε cos`, weight `0.05 sin`, drift `0.1 ε cos` and a cubic tail.
    fn generic(n: usize, eps: f64) -> PendulumReduction {
        let f0 = cosine(n, -eps);
        let f1: Vec<f64> = cosine(n, 0.1 * eps);
        let f2: Vec<f64> = (0..n).map(|j| 0.05 * (TAU * j as f64 / n as f64).sin()).collect();
        let tail = (0..n).map(|j| vec![1e-3 * (1.0 + (TAU * j as f64 / n as f64).cos()), 1e-4]).collect();
        reduction(f0, f1, f2, tail, true)
    }

    #[test]
    fn branch_basics() {
        assert_eq!(sqrt_branch(c(0.3, -0.2), c(0.0, 0.0)).unwrap(), c(0.3, -0.2));
        let a = c(1e-4, 2e-4);
        let z = Complex64::from_polar(1e3 * a.norm().sqrt(), 0.7);
        let m = sqrt_branch(z, a).unwrap();
        assert!((m - (z + a / (2.0 * z))).norm() <= 1e-9 * z.norm());
        assert!(matches!(sqrt_branch(c(0.01, 0.0), c(1e-3, 0.0)), Err(Error::BranchViolation { .. })));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let a = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let z = Complex64::from_polar(a.norm().sqrt() * rng.gen_range(1.01..5.0), rng.gen_range(0.0..TAU));
            let m = sqrt_branch(z, a).unwrap();
            assert!((m * m - z * z - a).norm() <= 1e-14 * (z.norm_sqr() + a.norm()));
        }
    }

    #[test]
    fn g_for_trivial_and_constant_data() {
        let n = 32;
        let red = reduction(zeros(n), zeros(n), zeros(n), vec![vec![]; n], true);
        let z = c(0.3, 0.4);
        assert!(solve_g(&red, z).unwrap().iter().all(|g| *g == z));

        let eps = 1e-3;
        let red = reduction(vec![-eps; n], zeros(n), zeros(n), vec![vec![]; n], false);
        let exact = (z * z + eps).sqrt();
        assert!(solve_g(&red, z).unwrap().iter().all(|g| (g - exact).norm() <= 1e-15));
    }

    #[test]
    fn g_solves_the_defining_identity() {
        let red = generic(64, 1e-4);
        for z in circle(0.2, 16) {
            let g = solve_g(&red, z).unwrap();
            for (j, g) in g.iter().enumerate() {
                assert!((red.model_at(j, *g) - z * z).norm() <= 1e-10);
                assert!(g.norm() >= 0.9 * z.norm() && g.norm() <= 1.1 * z.norm());
            }
        }
    }

    #[test]
    fn gamma_and_h_closed_forms() {
        let n = 32;
        let red = reduction(zeros(n), zeros(n), zeros(n), vec![vec![]; n], true);
        let grid = circle(0.5, 64);
        let s = gamma_and_h(&red, &grid).unwrap();
        for i in 0..64 {
            assert!((s.gamma[i] - grid[i]).norm() <= 1e-15 && (s.h[i] - grid[i]).norm() <= 1e-14);
        }
        let eps = 1e-3;
        let red = reduction(vec![-eps; n], zeros(n), zeros(n), vec![vec![]; n], false);
        let s = gamma_and_h(&red, &grid).unwrap();
        // Principal root, flipped onto the branch asymptotic to z.
        let root = |w: Complex64, z: Complex64| if (w - z).norm() < (w + z).norm() { w } else { -w };
        for i in 0..64 {
            let z = grid[i];
            assert!((s.gamma[i] - root((z * z + eps).sqrt(), z)).norm() <= 1e-14);
            assert!((s.h[i] - root((z * z - eps).sqrt(), z)).norm() <= 1e-13);
        }
    }

    #[test]
    fn h_inverts_gamma_on_the_annulus() {
        let red = generic(64, 1e-4);
        let t = 0.25 * (2.0 * red.lambda + 0.5 * red.rho_q.min(1.0));
        let s = gamma_and_h(&red, &circle(t, 64)).unwrap();
        assert!(s.max_residual <= 1e-12, "{}", s.max_residual);
    }

    #[test]
    fn residue_matches_closed_form() {
        let n = 64;
        let eps = 1e-2;
        let red = reduction(cosine(n, -eps), zeros(n), zeros(n), vec![vec![]; n], true);
        assert!((red.lambda - 1.0).abs() < 1e-12);
        let r1 = residue_check(&red, red.lambda, DEFAULT_NODES).unwrap();
        let r2 = residue_check(&red, 2.0 * red.lambda, DEFAULT_NODES).unwrap();
        assert!((r1.formula - eps * eps / 16.0).abs() <= 1e-18);
        assert!((r1.contour.re - r1.formula).abs() <= 1e-6 * r1.formula, "{:?}", r1);
        assert!((r1.contour - r2.contour).norm() <= 1e-8);
        assert!(r1.squared_contour.norm() <= 1e-12);
    }

    #[test]
    fn residue_with_variable_weight() {
        let red = generic(64, 1e-4);
        let r1 = residue_check(&red, red.lambda, DEFAULT_NODES).unwrap();
        let r2 = residue_check(&red, 2.0 * red.lambda, DEFAULT_NODES).unwrap();
        assert!((r1.contour.re - r1.formula).abs() <= 1e-6 * r1.formula, "{:?}", r1);
        assert!((r1.contour - r2.contour).norm() <= 1e-6 * r1.formula);
    }

    #[test]
    fn laurent_structure_of_gamma_tilde() {
        let red = generic(64, 1e-4);
        for t in [red.lambda, 2.0 * red.lambda] {
            let values = gamma_tilde_on_circle(&red, t, DEFAULT_NODES).unwrap();
            let coeffs = laurent_coefficients(&values, t, -LAURENT_WINDOW..=LAURENT_WINDOW);
            let at = |p: i32| coeffs[(p + LAURENT_WINDOW) as usize];
            assert!((at(1).re - red.gamma()).abs() <= 1e-12);
            for p in [-1, -2, -4] {
                assert!(at(p).norm() <= 1e-14, "power {p}: {}", at(p));
            }
            assert!(at(-3).norm() > 1e-12);
        }
    }

    #[test]
    fn flatness_examples() {
        let b = flatness_bound_value(1e-12, 10.0, 0.5, 1e-4).unwrap();
        assert!((b - (1e-3 + 2.0 * (-0.25f64).exp())).abs() <= 1e-15);
        let b = flatness_bound_value(1e-12, 10.0, 0.5, 1e-7).unwrap();
        assert!((b - 1e-3).abs() <= 1e-15);
        let limit = flatness_bound_value(0.0, 10.0, 0.5, 1e-5).unwrap();
        assert_eq!(limit, (-0.5f64 / (2.0 * 1e4 * 1e-5)).exp() / 0.5);
    }

    #[test]
    fn flat_data_has_no_obstruction() {
        let n = 64;
        let red = reduction(zeros(n), zeros(n), cosine(n, 0.3), vec![vec![]; n], true);
        assert_eq!(red.eps1, 0.0);
        let r = residue_check(&red, 0.1, DEFAULT_NODES).unwrap();
        assert!(r.contour.norm() <= 1e-10 && r.formula == 0.0);
    }
}
