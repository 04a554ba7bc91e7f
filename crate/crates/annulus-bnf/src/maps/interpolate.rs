//! Autonomous Hamiltonians whose time-one map is a given near-integrable map.
//!
//! For a candidate `Π = Ω + P` the time-one map is expanded as a Lie series
//! `exp(L_Π)` acting on the coordinate functions, its generating function
//! relative to `Ω` is read off, and `P` is corrected by the mismatch with the
//! target `F`. The mismatch is second order in `F`, so a few corrections
//! reach the truncation floor.

use crate::error::{Error, Result};
use crate::maps::flow::{flow, Hamiltonian};
use crate::maps::{GeneratingMap, PhasePoint};
use num_complex::Complex64;
use std::f64::consts::TAU as TWO_PI;

use crate::series::{poly, FourierTaylorSeries, RadialSeries};

const LIE_MAX_TERMS: usize = 400;
const GRID_THETA: usize = 16;
const GRID_R: usize = 8;

/// `g ↦ g_θ Π_r − g_r Π_θ`, the derivative along the Hamiltonian field of `Π`.
fn lie(g: &FourierTaylorSeries, pi_r: &FourierTaylorSeries, pi_t: &FourierTaylorSeries) -> FourierTaylorSeries {
    g.d_theta().mul(pi_r).sub(&g.d_r().mul(pi_t))
}

/// `Σ_{n≥0} L^n(seed)/(n+1)!`
fn lie_sum(seed: &FourierTaylorSeries, pi_r: &FourierTaylorSeries, pi_t: &FourierTaylorSeries) -> Result<FourierTaylorSeries> {
    let mut term = seed.clone();
    let mut total = seed.clone();
    for n in 1..LIE_MAX_TERMS {
        term = lie(&term, pi_r, pi_t).scale(1.0 / (n + 1) as f64);
        let size = term.max_abs();
        total = total.add(&term);
        if size == 0.0 || size <= 1e-18 * total.max_abs() {
            return Ok(total);
        }
    }
    Err(Error::DivergedIteration { step: LIE_MAX_TERMS })
}

/// Generating function, relative to `omega`, of the time-one map of
/// `omega + p`.
pub(crate) fn time_one_generating(omega: &RadialSeries, p: &FourierTaylorSeries) -> Result<FourierTaylorSeries> {
    let nr = p.n_r_max();
    let nk = p.n_theta_max();
    let pi = omega.resized(nr).to_series(nr, nk).add(p);
    let pi_r = pi.d_r();
    let pi_t = pi.d_theta();
    // θ∘Φ − θ = Ω′(r) + a,  r∘Φ − r = b
    let d_omega = omega.derivative();
    let a = lie_sum(&pi_r, &pi_r, &pi_t)?.sub(&d_omega.resized(nr).to_series(nr, nk));
    let b = lie_sum(&pi_t.scale(-1.0), &pi_r, &pi_t)?;
    if a.is_zero() && b.is_zero() {
        return Ok(p.zeros_like());
    }

    // In the image angle φ: θ = φ − Ω′(r) − α, with α(φ, r) = a(φ − Ω′(r) − α, r).
    let back = d_omega.scale(-1.0);
    let a_hat = a.compose_shift(&back);
    let b_hat = b.compose_shift(&back);
    let zero = p.zeros_like();
    let order = nr + 4;
    let mut alpha = a_hat.clone();
    let mut converged = false;
    for _ in 0..(nr + order + 5) {
        let next = a_hat.substitute(&alpha.scale(-1.0), &zero, order);
        let delta = next.sub(&alpha).max_abs();
        alpha = next;
        if delta == 0.0 || delta <= 1e-16 * alpha.max_abs() {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoContraction { iterations: nr + order + 5, last_step: f64::NAN });
    }
    // F_φ = −(R − r) and F_r = α.
    let beta = b_hat.substitute(&alpha.scale(-1.0), &zero, order);
    let mut f = beta.scale(-1.0).integrate_theta();
    let mean_alpha = alpha.theta_mean()?;
    f = f.add(&mean_alpha.antiderivative().resized(nr).to_series(nr, nk));
    Ok(f)
}

/// Inverse of the linearised time-one map `P ↦ S`, which averages each
/// Fourier mode along the twist: `Ŝ_k = P̂_k (1 − e^{−x})/x` with
/// `x = 2πikΩ′(r)`.
fn precondition(omega: &RadialSeries, u: &FourierTaylorSeries) -> FourierTaylorSeries {
    let nr = u.n_r_max();
    let len = nr + 1;
    let d_omega = omega.derivative().resized(nr);
    let mut out = u.clone();
    for k in 1..=u.n_theta_max() as i64 {
        let col = u.column(k);
        if col.iter().all(|c| *c == Complex64::new(0.0, 0.0)) {
            continue;
        }
        let minus_x: Vec<Complex64> = (0..len)
            .map(|n| Complex64::new(0.0, -TWO_PI * k as f64 * d_omega.coeff(n)))
            .collect();
        // Σ (−x)^j / (j+1)!
        let mut avg = vec![Complex64::new(0.0, 0.0); len];
        let mut term = vec![Complex64::new(0.0, 0.0); len];
        term[0] = Complex64::new(1.0, 0.0);
        for j in 0..400 {
            let size: f64 = term.iter().map(|c| c.norm()).fold(0.0, f64::max);
            for (a, t) in avg.iter_mut().zip(&term) {
                *a += *t;
            }
            if size < 1e-18 {
                break;
            }
            term = poly::mul(&term, &minus_x, len).into_iter().map(|c| c / (j + 2) as f64).collect();
        }
        if let Some(inv) = poly::recip(&avg, len) {
            out.set_column(k, &poly::mul(&col, &inv, len));
        }
    }
    out
}

/// Sup over a `16 × 8` grid in `|r| ≤ ρ/2` of the distance between the map
/// and the time-one flow of `omega + p`.
pub fn flow_residual(m: &GeneratingMap, p: &FourierTaylorSeries) -> Result<f64> {
    let ham = Hamiltonian::new(m.omega().clone(), p.clone());
    let half = 0.5 * m.strip().rho;
    let mut worst = 0.0f64;
    for i in 0..GRID_THETA {
        for j in 0..GRID_R {
            let x = PhasePoint::new(i as f64 / GRID_THETA as f64, -half + 2.0 * half * j as f64 / (GRID_R - 1) as f64);
            let y_map = m.eval_map(x)?;
            let y_flow = flow(&ham, x, 1.0)?;
            worst = worst.max((y_map.theta - y_flow.theta).abs()).max((y_map.r - y_flow.r).abs());
        }
    }
    Ok(worst)
}

/// Hamiltonian `Π` (returned in full, integrable part included) whose time-one
/// flow approximates `m`, together with the measured grid residual.
///
/// `steps` correction rounds are applied after the initial guess `Ω + F`.
/// The best candidate seen is returned.
pub fn interpolate_flow(m: &GeneratingMap, steps: usize) -> Result<(FourierTaylorSeries, f64)> {
    let target = m.f().clone();
    let nr = target.n_r_max();
    let nk = target.n_theta_max();
    let mut p = target.clone();
    let mut residual = flow_residual(m, &p)?;
    let mut best = (p.clone(), residual);
    let mut growth = 0;
    for step in 0..steps {
        let s = time_one_generating(m.omega(), &p)?;
        let update = target.sub(&s);
        if update.max_abs() <= 1e-17 * p.max_abs().max(1e-300) {
            break;
        }
        p = p.add(&precondition(m.omega(), &update));
        let next = flow_residual(m, &p)?;
        growth = if next > residual { growth + 1 } else { 0 };
        if growth >= 3 {
            return Err(Error::DivergedIteration { step });
        }
        residual = next;
        if residual < best.1 {
            best = (p.clone(), residual);
        }
    }
    let pi = m.omega().resized(nr).to_series(nr, nk).add(&best.0);
    Ok((pi, best.1))
}
