//! Composition of generating functions on truncated Fourier–Taylor series.
//! Inversion and conjugation are built on top of it.
//!
//! All three identities come from the same computation. If `f_F` sends
//! `(θ, r)` to `(φ, R)` then the composite generating function is the sum of
//! the two pieces evaluated at the intermediate point plus the bilinear term
//! `(φ − ψ)(R − r)`. The intermediate point is itself found by a fixed point
//! in series space, which contracts when the inputs are small.

use crate::error::{Error, Result};
use crate::maps::GeneratingMap;
use crate::series::{FourierTaylorSeries, RadialSeries};

/// Relative change below which a series fixed point counts as converged.
const SERIES_FP_TOL: f64 = 1e-16;

/// Tracks a fixed-point iteration on series and decides when to stop.
struct FixedPoint {
    cap: usize,
    iter: usize,
}

impl FixedPoint {
    fn new(n_r_max: usize, order: usize) -> Self {
        Self { cap: n_r_max + order + 5, iter: 0 }
    }

    /// Records one update; `Ok(true)` once converged.
    fn step(&mut self, change: f64, size: f64) -> Result<bool> {
        self.iter += 1;
        if change == 0.0 || change <= SERIES_FP_TOL * size {
            return Ok(true);
        }
        if !change.is_finite() || self.iter >= self.cap {
            // A change already at rounding level is accepted at the cap.
            if change.is_finite() && change <= 1e-13 * size.max(1e-300) {
                return Ok(true);
            }
            return Err(Error::NoContraction { iterations: self.iter, last_step: change });
        }
        Ok(false)
    }
}

fn change(new: &FourierTaylorSeries, old: &FourierTaylorSeries) -> f64 {
    new.sub(old).max_abs()
}

fn boxed(s: &FourierTaylorSeries, nr: usize, nk: usize) -> FourierTaylorSeries {
    if s.n_r_max() == nr && s.n_theta_max() == nk {
        s.clone()
    } else {
        s.resized(nr, nk)
    }
}

/// Generating function of `f_G ∘ f_{Ω+F}` relative to the same `Ω`. The
/// integrable part drops out of this identity, so it is not an argument.
///
/// `order` bounds the Taylor order in the θ-shift.
pub(crate) fn compose_after(
    f: &FourierTaylorSeries,
    g: &FourierTaylorSeries,
    order: usize,
) -> Result<FourierTaylorSeries> {
    let nr = f.n_r_max().max(g.n_r_max());
    let nk = f.n_theta_max().max(g.n_theta_max());
    let f = boxed(f, nr, nk);
    let g = boxed(g, nr, nk);
    if g.is_zero() {
        return Ok(f);
    }
    if f.is_zero() {
        return Ok(g);
    }
    let f_phi = f.d_theta();
    let g_r = g.d_r();
    let zero = f.zeros_like();
    // b = −F_φ(ψ + a, r),  a = −G_R(ψ, r + b)
    let mut a = zero.clone();
    let mut b = f_phi.scale(-1.0);
    let mut fp = FixedPoint::new(nr, order);
    loop {
        let a_new = g_r.substitute(&zero, &b, order).scale(-1.0);
        let b_new = f_phi.substitute(&a_new, &zero, order).scale(-1.0);
        let delta = change(&a_new, &a).max(change(&b_new, &b));
        let size = a_new.max_abs().max(b_new.max_abs());
        a = a_new;
        b = b_new;
        if fp.step(delta, size)? {
            break;
        }
    }
    Ok(f
        .substitute(&a, &zero, order)
        .add(&g.substitute(&zero, &b, order))
        .add(&a.mul(&b)))
}

/// Generating function of `f_{Ω+F} ∘ f_B` relative to the same `Ω`.
pub(crate) fn compose_before(
    omega: &RadialSeries,
    f: &FourierTaylorSeries,
    b_gen: &FourierTaylorSeries,
    order: usize,
) -> Result<FourierTaylorSeries> {
    let nr = f.n_r_max().max(b_gen.n_r_max());
    let nk = f.n_theta_max().max(b_gen.n_theta_max());
    let f = boxed(f, nr, nk);
    let b_gen = boxed(b_gen, nr, nk);
    if b_gen.is_zero() {
        return Ok(f);
    }
    let d_omega = omega.derivative();
    let back = d_omega.scale(-1.0);
    let omega_s = omega.resized(nr).to_series(nr, nk);
    let d_omega_s = d_omega.resized(nr).to_series(nr, nk);
    // B and B_θ seen from the far side of the twist: B(ψ − Ω′(r), r).
    let b_hat = b_gen.compose_shift(&back);
    let b_theta_hat = b_gen.d_theta().compose_shift(&back);
    let f_r = f.d_r();
    let zero = f.zeros_like();

    // c = φ − ψ + Ω′(r),  b = R − r:
    //   b = −B_θ(ψ − Ω′(r) + c, r),  c = −(Ω′(r + b) − Ω′(r)) − F_r(ψ, r + b)
    let mut c = zero.clone();
    let mut b = b_theta_hat.scale(-1.0);
    let mut fp = FixedPoint::new(nr, order);
    loop {
        let c_new = d_omega_s
            .substitute(&zero, &b, order)
            .sub(&d_omega_s)
            .add(&f_r.substitute(&zero, &b, order))
            .scale(-1.0);
        let b_new = b_theta_hat.substitute(&c_new, &zero, order).scale(-1.0);
        let delta = change(&c_new, &c).max(change(&b_new, &b));
        let size = c_new.max_abs().max(b_new.max_abs());
        c = c_new;
        b = b_new;
        if fp.step(delta, size)? {
            break;
        }
    }
    // H = B(φ, r) + F(ψ, R) + Ω(R) − Ω(r) + (φ − ψ)(R − r)
    let omega_jump = omega_s.substitute(&zero, &b, order).sub(&omega_s);
    let bilinear = c.sub(&d_omega_s).mul(&b);
    Ok(b_hat
        .substitute(&c, &zero, order)
        .add(&f.substitute(&zero, &b, order))
        .add(&omega_jump)
        .add(&bilinear))
}

/// Generating function `H` with `f_H = f_G ∘ f_F`, all three taken without
/// an integrable part.
///
/// When `G` does not depend on `r` the result is exactly `F + G`; the same
/// holds for `f_F ∘ f_G` when `F` does not depend on `r`.
pub fn compose_generating(
    f: &FourierTaylorSeries,
    g: &FourierTaylorSeries,
    order: usize,
) -> Result<FourierTaylorSeries> {
    compose_after(f, g, order)
}

/// Generating function of `f_Y^{-1}`.
pub fn inverse_generating(y: &FourierTaylorSeries, order: usize) -> Result<FourierTaylorSeries> {
    if y.is_zero() {
        return Ok(y.clone());
    }
    let y_theta = y.d_theta();
    let y_r = y.d_r();
    // a = φ − θ = Y_r(θ + a, R + b),  b = r − R = Y_φ(θ + a, R + b)
    let mut a = y_r.clone();
    let mut b = y_theta.clone();
    let mut fp = FixedPoint::new(y.n_r_max(), order);
    loop {
        let a_new = y_r.substitute(&a, &b, order);
        let b_new = y_theta.substitute(&a, &b, order);
        let delta = change(&a_new, &a).max(change(&b_new, &b));
        let size = a_new.max_abs().max(b_new.max_abs());
        a = a_new;
        b = b_new;
        if fp.step(delta, size)? {
            break;
        }
    }
    Ok(y.substitute(&a, &b, order).scale(-1.0).add(&a.mul(&b)))
}

/// The map `f_Y ∘ f_m ∘ f_Y^{-1}`, keeping the integrable part of `m`.
pub fn conjugate_generating(
    m: &GeneratingMap,
    y: &FourierTaylorSeries,
    order: usize,
) -> Result<GeneratingMap> {
    if y.is_zero() {
        return Ok(m.clone());
    }
    let z = inverse_generating(y, order)?;
    let inner = compose_before(m.omega(), m.f(), &z, order)?;
    let outer = compose_after(&inner, y, order)?;
    Ok(m.with_f(outer))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::PhasePoint;
    use crate::series::StripParams;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_series(rng: &mut ChaCha8Rng, nr: usize, nk: usize, deg: usize, modes: usize, amp: f64) -> FourierTaylorSeries {
        let mut s = FourierTaylorSeries::zeros(nr, nk);
        for n in 0..=deg {
            for k in 0..=modes {
                s.add_cos(n, k, amp * rng.gen_range(-1.0..1.0));
                if k > 0 {
                    s.add_sin(n, k, amp * rng.gen_range(-1.0..1.0));
                }
            }
        }
        s
    }

    fn grid() -> Vec<PhasePoint> {
        let mut pts = Vec::new();
        for i in 0..16 {
            for j in 0..8 {
                pts.push(PhasePoint::new(i as f64 / 16.0, -0.2 + 0.4 * j as f64 / 7.0));
            }
        }
        pts
    }

    fn strip() -> StripParams {
        StripParams::new(0.05, 0.25).unwrap()
    }

    fn zero_omega() -> RadialSeries {
        RadialSeries::new(vec![0.0])
    }

    #[test]
    fn composition_matches_pointwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let f = random_series(&mut rng, 12, 24, 2, 3, 1e-3);
        let g = random_series(&mut rng, 12, 24, 2, 3, 1e-3);
        let h = compose_generating(&f, &g, 12).unwrap();
        let mf = GeneratingMap::new(zero_omega(), f, strip()).unwrap();
        let mg = GeneratingMap::new(zero_omega(), g, strip()).unwrap();
        let mh = GeneratingMap::new(zero_omega(), h, strip()).unwrap();
        let mut worst = 0.0f64;
        for x in grid() {
            let lhs = mh.eval_map(x).unwrap();
            let rhs = mg.eval_map(mf.eval_map(x).unwrap()).unwrap();
            worst = worst.max((lhs.theta - rhs.theta).abs()).max((lhs.r - rhs.r).abs());
        }
        assert!(worst <= 1e-8, "worst {worst}");
    }

    #[test]
    fn zero_first_factor_gives_second() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = random_series(&mut rng, 8, 8, 2, 2, 1e-2);
        let h = compose_generating(&FourierTaylorSeries::zeros(8, 8), &g, 8).unwrap();
        assert_eq!(h, g);
    }

    #[test]
    fn additivity_when_outer_factor_is_r_independent() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = random_series(&mut rng, 8, 8, 2, 3, 1e-2);
        let g = random_series(&mut rng, 8, 8, 0, 3, 1e-2);
        let sum = f.add(&g);
        assert!(compose_generating(&f, &g, 8).unwrap().sub(&sum).max_abs() < 1e-17);
        // Same statement with the roles of the factors swapped.
        assert!(compose_generating(&g, &f, 8).unwrap().sub(&sum).max_abs() > 1e-8);
    }

    #[test]
    fn inverse_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let y = random_series(&mut rng, 12, 24, 2, 3, 1e-3);
        let z = inverse_generating(&y, 12).unwrap();
        let my = GeneratingMap::new(zero_omega(), y.clone(), strip()).unwrap();
        let mz = GeneratingMap::new(zero_omega(), z.clone(), strip()).unwrap();
        for x in grid() {
            let back = mz.eval_map(my.eval_map(x).unwrap()).unwrap();
            assert!((back.theta - x.theta).abs() < 1e-9 && (back.r - x.r).abs() < 1e-9);
        }
        assert!(compose_generating(&y, &z, 12).unwrap().max_abs() < 1e-9);
    }

    #[test]
    fn conjugation_by_zero_is_identity() {
        let m = GeneratingMap::standard_map(0.3, 8, 8);
        let out = conjugate_generating(&m, &FourierTaylorSeries::zeros(8, 8), 8).unwrap();
        assert_eq!(out, m);
    }

    #[test]
    fn conjugation_matches_pointwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let omega = RadialSeries::twist(0.31, 1.0, 12);
        let f = random_series(&mut rng, 12, 12, 2, 3, 1e-4);
        let y = random_series(&mut rng, 12, 12, 2, 3, 1e-4);
        let m = GeneratingMap::new(omega, f, strip()).unwrap();
        let conj = conjugate_generating(&m, &y, 12).unwrap();
        let my = GeneratingMap::new(zero_omega(), y, strip()).unwrap();
        let mut worst = 0.0f64;
        // The twisted shift has Taylor coefficients growing like (2πk)^n / n!,
        // so the truncated r-expansion is only faithful on a narrow band.
        for x in grid().into_iter().map(|p| PhasePoint::new(p.theta, p.r / 4.0)) {
            let lhs = conj.eval_map(x).unwrap();
            let rhs = my.eval_map(m.eval_map(my.invert_map(x).unwrap()).unwrap()).unwrap();
            worst = worst.max((lhs.theta - rhs.theta).abs()).max((lhs.r - rhs.r).abs());
        }
        assert!(worst <= 1e-8, "worst {worst}");
    }

    #[test]
    fn conjugation_is_linearly_the_twist_coboundary() {
        let omega = RadialSeries::twist(0.31, 1.0, 10);
        let m = GeneratingMap::integrable(omega.clone(), 8, strip());
        let residual = |amp: f64| {
            let y = FourierTaylorSeries::cos_term(10, 8, 1, 2, amp);
            let linear = y.sub(&y.compose_shift(&omega.derivative().scale(-1.0)));
            conjugate_generating(&m, &y, 10).unwrap().f().sub(&linear).max_abs()
        };
        let r1 = residual(1e-3);
        let r2 = residual(5e-4);
        let ratio = r1 / r2;
        assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
    }
}
