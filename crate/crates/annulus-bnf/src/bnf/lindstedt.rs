//! Lindstedt-type computation of the normal form, used as an oracle.
//!
//! Rather than conjugating the map, this solves directly for the family of
//! invariant circles `θ ↦ (θ + U(θ, A), A + V(θ, A))` on which the map acts
//! as the rotation by `ω(A)`, as formal series in the action `A`. The action
//! is normalised so that the circle bounds area `A` above the zero circle;
//! the frequency map is then `Ξ′(A) = ω(A)`.
//!
//! Writing the map as `R = r − F_φ(φ, r)`, `θ = φ − Ω′(r) − F_r(φ, r)` and
//! `Ũ = U(θ + ω)`, the unknowns satisfy
//!
//! ```text
//! V(θ + ω) − V(θ) = −F_φ(θ + ω + Ũ, A + V)
//! U(θ + ω) − U(θ) = Ω′(A + V) − ω + F_r(θ + ω + Ũ, A + V)
//! ```
//!
//! with `⟨U⟩ = 0` and `⟨V⟩ = −⟨(V − ⟨V⟩) ∂θU⟩`. Each Gauss–Seidel sweep fixes
//! at least one more order in `A`.

use num_complex::Complex64;
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::series::{poly, FourierTaylorSeries, RadialSeries};

/// Reciprocal series in `A` of `e^{2πikω(A)} − 1`.
fn circle_divisor_inverse(omega: &RadialSeries, k: i64, len: usize) -> Result<Vec<Complex64>> {
    let arg: Vec<Complex64> = (0..len).map(|n| Complex64::new(0.0, TAU * k as f64 * omega.coeff(n))).collect();
    let mut d = poly::exp(&arg, len);
    d[0] -= 1.0;
    if d[0].norm() < 1e-10 {
        return Err(Error::ResonantFrequency { k });
    }
    Ok(poly::recip(&d, len).expect("nonzero constant term"))
}

/// Solve `X(θ + ω) − X(θ) = rhs` for the zero-mean part of `X`.
fn solve_shift_equation(omega: &RadialSeries, rhs: &FourierTaylorSeries) -> Result<FourierTaylorSeries> {
    let len = rhs.n_r_max() + 1;
    let mut out = rhs.zeros_like();
    for k in 1..=rhs.n_theta_max() as i64 {
        let col = rhs.column(k);
        if col.iter().all(|c| *c == Complex64::new(0.0, 0.0)) {
            continue;
        }
        let inv = circle_divisor_inverse(omega, k, len)?;
        out.set_column(k, &poly::mul(&col, &inv, len));
    }
    Ok(out)
}

/// Normal-form coefficients `Ξ_0..Ξ_M` (with `Ξ_0 = 0`) of `f_{Ω+F}` for
/// `F = O(r²)`.
pub fn lindstedt_normal_form(omega: &RadialSeries, f: &FourierTaylorSeries, order: usize) -> Result<RadialSeries> {
    let nr = order;
    let nk = f.n_theta_max();
    let f = f.resized(nr, nk);
    if f.valuation().is_some_and(|v| v < 2) {
        return Err(Error::InvalidInput("the perturbation must vanish to second order at r = 0".into()));
    }
    let omega0 = omega.coeff(1);
    let d_omega = omega.derivative().resized(nr).to_series(nr, nk);
    let rigid = RadialSeries::new(vec![omega0]);
    let f_phi = f.d_theta().compose_shift(&rigid);
    let f_r = f.d_r().compose_shift(&rigid);
    let sub_order = nr + 2;

    let mut u = FourierTaylorSeries::zeros(nr, nk);
    let mut v = FourierTaylorSeries::zeros(nr, nk);
    let mut freq = RadialSeries::new(vec![omega0]).resized(nr);
    for _ in 0..(2 * nr + 10) {
        let u_shift = u.compose_shift(&freq);
        let drift = freq.sub(&rigid).resized(nr).to_series(nr, nk);
        let angle = drift.add(&u_shift);

        let rhs_v = f_phi.substitute(&angle, &v, sub_order).scale(-1.0);
        let v_osc = solve_shift_equation(&freq, &rhs_v)?;
        let v_mean = v_osc.mul(&u.d_theta()).theta_mean()?.scale(-1.0);
        let v_new = v_osc.add(&v_mean.to_series(nr, nk));

        let rhs_u = d_omega
            .substitute(&f.zeros_like(), &v_new, sub_order)
            .add(&f_r.substitute(&angle, &v_new, sub_order));
        let freq_new = rhs_u.theta_mean()?;
        let u_new = solve_shift_equation(&freq_new, &rhs_u.without_mean())?;

        let change = u_new.sub(&u).max_abs().max(v_new.sub(&v).max_abs()).max(freq_new.sub(&freq).max_abs());
        u = u_new;
        v = v_new;
        freq = freq_new;
        if change == 0.0 {
            break;
        }
    }
    let xi = freq.antiderivative();
    Ok(xi.resized(order))
}
