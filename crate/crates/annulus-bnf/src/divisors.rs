//! Small-divisor machinery: Diophantine estimates for the frequency and the
//! twisted cohomological equation solved mode by mode. Resonance zones on a
//! real action interval are located here as well.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::series::{poly, FourierTaylorSeries, RadialSeries};

/// Default guard on the constant term of each small divisor.
pub const DEFAULT_DIVISOR_FLOOR: f64 = 1e-10;

/// Largest denominator used when testing an input for rationality.
const RATIONAL_Q_LIMIT: i64 = 1_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiophantineWitness {
    pub omega0: f64,
    pub tau: f64,
    pub n_checked: usize,
    /// `max_{0<k≤N} k^{−τ} / dist(kω₀, ℤ)`.
    pub k: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResonanceZone {
    pub p: i64,
    pub q: i64,
    pub center: f64,
    pub radius: f64,
}

impl ResonanceZone {
    pub fn contains(&self, r: f64) -> bool {
        (r - self.center).abs() <= self.radius
    }
}

fn dist_to_int(x: f64) -> f64 {
    (x - x.round()).abs()
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Continued-fraction convergents `p/q` of `omega` with `q ≥ 2`, in
/// increasing order of `q`.
pub fn continued_fraction_convergents(omega: f64, count: usize) -> Result<Vec<(i64, i64)>> {
    if !omega.is_finite() {
        return Err(Error::InvalidInput(format!("frequency {omega} is not finite")));
    }
    let (mut p_prev, mut q_prev) = (1i64, 0i64);
    let (mut p, mut q) = (omega.floor() as i64, 1i64);
    let mut x = omega - omega.floor();
    let mut out = Vec::new();
    // Walk the full expansion up to the rationality horizon so that an input
    // which is rational to machine precision is rejected up front.
    while q <= RATIONAL_Q_LIMIT {
        if (omega - p as f64 / q as f64).abs() <= 1e-15 {
            return Err(Error::RationalInput { omega, p, q });
        }
        if x == 0.0 {
            break;
        }
        let inv = 1.0 / x;
        let a = inv.floor();
        x = inv - a;
        let a = a as i64;
        let (p_next, q_next) = (a * p + p_prev, a * q + q_prev);
        p_prev = p;
        q_prev = q;
        p = p_next;
        q = q_next;
        if q >= 2 && out.len() < count {
            out.push((p, q));
        }
    }
    Ok(out)
}

/// Exhaustive small-divisor scan over `0 < k ≤ n`.
pub fn diophantine_constant(omega: f64, n: usize, tau: f64) -> Result<DiophantineWitness> {
    if n == 0 {
        return Err(Error::InvalidInput("scan length must be at least 1".into()));
    }
    let mut worst = 0.0f64;
    for k in 1..=n {
        let d = dist_to_int(k as f64 * omega);
        if d == 0.0 {
            return Err(Error::ResonantFrequency { k: k as i64 });
        }
        worst = worst.max((k as f64).powf(-tau) / d);
    }
    Ok(DiophantineWitness { omega0: omega, tau, n_checked: n, k: worst })
}

/// The twisted coboundary `[Ω]·Y = Y − Y(θ − Ω′(r), r)`.
pub fn twisted_difference(omega: &RadialSeries, y: &FourierTaylorSeries) -> FourierTaylorSeries {
    y.sub(&y.compose_shift(&omega.derivative().scale(-1.0)))
}

/// Taylor series in `r` of `1 − e^{−2πikΩ′(r)}`, to `len` coefficients.
fn divisor_series(d_omega: &RadialSeries, k: i64, len: usize) -> Vec<Complex64> {
    let arg: Vec<Complex64> =
        (0..len).map(|n| Complex64::new(0.0, -TAU * k as f64 * d_omega.coeff(n))).collect();
    let mut out = poly::exp(&arg, len);
    for c in out.iter_mut() {
        *c = -*c;
    }
    out[0] += 1.0;
    out
}

/// Solve `[Ω]·Y = T_N F − ⟨F⟩` mode by mode. The returned `Y` has zero mean.
pub fn solve_cohomological(
    omega: &RadialSeries,
    f: &FourierTaylorSeries,
    n: usize,
    divisor_floor: f64,
) -> Result<FourierTaylorSeries> {
    let len = f.n_r_max() + 1;
    let d_omega = omega.derivative();
    let mut y = f.zeros_like();
    let mut offending = Vec::new();
    for k in 1..=(n.min(f.n_theta_max()) as i64) {
        let col = f.column(k);
        if col.iter().all(|c| *c == Complex64::new(0.0, 0.0)) {
            continue;
        }
        let div = divisor_series(&d_omega, k, len);
        if div[0].norm() < divisor_floor {
            offending.push((k, div[0].norm()));
            continue;
        }
        let inv = poly::recip(&div, len).expect("constant term checked above");
        y.set_column(k, &poly::mul(&col, &inv, len));
    }
    if !offending.is_empty() {
        return Err(Error::SmallDivisorBreach { offending });
    }
    Ok(y)
}

/// Coefficient residual `max |[Ω]·Y − (T_N F − ⟨F⟩)|`.
pub fn cohomological_residual(omega: &RadialSeries, f: &FourierTaylorSeries, y: &FourierTaylorSeries, n: usize) -> f64 {
    let (low, _) = f.truncate_fourier(n);
    twisted_difference(omega, y).sub(&low.without_mean()).max_abs()
}

/// Analytic-loss estimate `K Σ_{k≥1} k^τ e^{−2πkδ}` for the solution
/// operator measured from sup norms on a strip to sup norms on a strip `δ`
/// narrower. Its growth as `δ → 0` is `δ^{−(1+τ)}`.
pub fn cohomological_bound(witness: &DiophantineWitness, delta: f64) -> f64 {
    let mut total = 0.0;
    let mut k = 1.0f64;
    loop {
        let term = k.powf(witness.tau) * (-TAU * k * delta).exp();
        total += term;
        if term < 1e-17 * total && k * delta * TAU > witness.tau + 1.0 {
            break;
        }
        k += 1.0;
    }
    witness.k * total
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let num: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    num / den
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let f_lo = f(lo);
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == (f_lo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Resonance zones `|Ω′(r) − p/q| ≲ 2 q^{−(τ+1)} K^{−1}` for reduced `p/q`
/// with `1 ≤ q ≤ n` whose centre lies in `interval`. Sorted by centre.
pub fn locate_resonances(
    omega: &RadialSeries,
    n: usize,
    k_const: f64,
    tau: f64,
    interval: (f64, f64),
) -> Result<Vec<ResonanceZone>> {
    let (a, b) = interval;
    if !(a < b) {
        return Err(Error::InvalidInput(format!("empty interval ({a}, {b})")));
    }
    let d1 = omega.derivative();
    let d2 = d1.derivative();
    let samples = 1000;
    let mut min_twist = f64::INFINITY;
    for i in 0..=samples {
        let r = a + (b - a) * i as f64 / samples as f64;
        min_twist = min_twist.min(d2.eval(r));
    }
    if !(min_twist > 0.0) {
        return Err(Error::NoTwist);
    }
    let (wa, wb) = (d1.eval(a), d1.eval(b));
    let mut zones = Vec::new();
    for q in 1..=n as i64 {
        let p_lo = (wa * q as f64).ceil() as i64;
        let p_hi = (wb * q as f64).floor() as i64;
        for p in p_lo..=p_hi {
            if gcd(p, q) != 1 {
                continue;
            }
            let target = p as f64 / q as f64;
            if target <= wa || target >= wb {
                continue;
            }
            let center = bisect(|r| d1.eval(r) - target, a, b);
            let radius = 2.0 * (q as f64).powf(-(tau + 1.0)) / k_const / min_twist;
            zones.push(ResonanceZone { p, q, center, radius });
        }
    }
    zones.sort_by(|x, y| x.center.total_cmp(&y.center));
    Ok(zones)
}

/// CSV with columns `p,q,center,radius`.
pub fn zones_to_csv(zones: &[ResonanceZone]) -> String {
    let mut out = String::from("p,q,center,radius\n");
    for z in zones {
        out.push_str(&format!("{},{},{:.17e},{:.17e}\n", z.p, z.q, z.center, z.radius));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::StripParams;

    const GOLDEN: f64 = 0.618_033_988_749_894_9;

    #[test]
    fn golden_convergents_are_fibonacci_ratios() {
        let c = continued_fraction_convergents(GOLDEN, 5).unwrap();
        assert_eq!(c, vec![(1, 2), (2, 3), (3, 5), (5, 8), (8, 13)]);
    }

    /// Best approximations of the second kind by brute force.
    fn best_approximations(omega: f64, q_max: i64) -> Vec<(i64, i64)> {
        let mut best = f64::INFINITY;
        let mut out = Vec::new();
        for q in 1..=q_max {
            let p = (q as f64 * omega).round() as i64;
            let err = (q as f64 * omega - p as f64).abs();
            if err < best {
                best = err;
                if q >= 2 {
                    out.push((p, q));
                }
            }
        }
        out
    }

    #[test]
    fn convergents_match_brute_force_search() {
        let omega = std::f64::consts::PI - 3.0;
        let brute = best_approximations(omega, 200);
        assert_eq!(&brute[..3], &[(1, 7), (15, 106), (16, 113)]);
        let c = continued_fraction_convergents(omega, brute.len()).unwrap();
        assert_eq!(c, brute);
        for (p, q) in c {
            assert!((omega - p as f64 / q as f64).abs() < 1.0 / (q * q) as f64);
        }
    }

    #[test]
    fn rational_input_is_rejected() {
        assert!(matches!(continued_fraction_convergents(0.375, 4), Err(Error::RationalInput { .. })));
    }

    #[test]
    fn diophantine_scan() {
        assert!(matches!(diophantine_constant(0.5, 4, 1.0), Err(Error::ResonantFrequency { k: 2 })));
        let w100 = diophantine_constant(GOLDEN, 100, 1.0).unwrap();
        let w1000 = diophantine_constant(GOLDEN, 1000, 1.0).unwrap();
        assert!(w100.k.is_finite() && w1000.k >= w100.k && w1000.k / w100.k < 1.5);
        let s2 = diophantine_constant(2f64.sqrt() - 1.0, 100, 1.0).unwrap();
        assert!(s2.k.is_finite() && s2.k > 0.0);
    }

    fn golden_twist(nr: usize) -> RadialSeries {
        RadialSeries::twist(GOLDEN, 1.0, nr)
    }

    #[test]
    fn constant_source_has_zero_solution() {
        let mut f = FourierTaylorSeries::zeros(4, 4);
        f.add_cos(0, 0, 3.0);
        let y = solve_cohomological(&golden_twist(4), &f, 4, DEFAULT_DIVISOR_FLOOR).unwrap();
        assert!(y.is_zero());
    }

    #[test]
    fn residual_at_truncation_order() {
        let omega = RadialSeries::new(vec![0.0, GOLDEN]);
        let f = FourierTaylorSeries::cos_term(6, 8, 0, 1, 1.0);
        let y = solve_cohomological(&omega, &f, 8, DEFAULT_DIVISOR_FLOOR).unwrap();
        assert!(cohomological_residual(&omega, &f, &y, 8) <= 1e-12);

        let mut g = FourierTaylorSeries::cos_term(10, 8, 2, 3, 0.7);
        g.add_sin(1, 5, 0.2);
        g.add_cos(0, 0, 1.0);
        let omega = golden_twist(10);
        let y = solve_cohomological(&omega, &g, 8, DEFAULT_DIVISOR_FLOOR).unwrap();
        // With a twist the divisor reciprocals have poles near r = 0, so the
        // r-coefficients of Y are large; compare relative to them.
        assert!(cohomological_residual(&omega, &g, &y, 8) <= 1e-12 * y.max_abs().max(1.0));
        assert!(y.theta_mean().unwrap().max_abs() == 0.0);
    }

    #[test]
    fn solver_is_linear() {
        let omega = golden_twist(6);
        let a = FourierTaylorSeries::cos_term(6, 6, 1, 2, 0.3);
        let b = FourierTaylorSeries::sin_term(6, 6, 3, 5, 0.9);
        let ya = solve_cohomological(&omega, &a, 6, DEFAULT_DIVISOR_FLOOR).unwrap();
        let yb = solve_cohomological(&omega, &b, 6, DEFAULT_DIVISOR_FLOOR).unwrap();
        let yab = solve_cohomological(&omega, &a.add(&b.scale(2.0)), 6, DEFAULT_DIVISOR_FLOOR).unwrap();
        assert!(yab.sub(&ya.add(&yb.scale(2.0))).max_abs() < 1e-12);
    }

    #[test]
    fn small_divisor_is_reported() {
        let omega = RadialSeries::new(vec![0.0, 0.5]);
        let f = FourierTaylorSeries::cos_term(2, 4, 0, 2, 1.0);
        match solve_cohomological(&omega, &f, 4, DEFAULT_DIVISOR_FLOOR) {
            Err(Error::SmallDivisorBreach { offending }) => assert_eq!(offending[0].0, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn single_mode_ratios_respect_loss_bound() {
        let omega = RadialSeries::new(vec![0.0, GOLDEN]);
        let w = diophantine_constant(GOLDEN, 64, 1.0).unwrap();
        let deltas = [0.025, 0.05, 0.1];
        let bounds: Vec<f64> = deltas.iter().map(|d| cohomological_bound(&w, *d)).collect();
        let slope = -log_log_slope(&deltas, &bounds);
        assert!((slope - 2.0).abs() <= 0.2, "slope {slope}");
        let h = 0.3;
        for (delta, bound) in deltas.iter().zip(&bounds) {
            for k in 1..=64 {
                let f = FourierTaylorSeries::cos_term(0, 64, 0, k, 1.0);
                let y = solve_cohomological(&omega, &f, 64, DEFAULT_DIVISOR_FLOOR).unwrap();
                let ratio = y.weighted_norm(StripParams { h: h - delta, rho: 0.1 })
                    / f.weighted_norm(StripParams { h, rho: 0.1 });
                assert!(ratio <= *bound, "k {k} delta {delta}");
            }
        }
    }

    #[test]
    fn zones_for_quadratic_twist() {
        let omega = RadialSeries::twist(0.0, 1.0, 2);
        let zones = locate_resonances(&omega, 3, 100.0, 1.0, (0.1, 0.9)).unwrap();
        let centers: Vec<f64> = zones.iter().map(|z| z.center).collect();
        let expected = [1.0 / 3.0, 0.5, 2.0 / 3.0];
        assert_eq!(centers.len(), 3);
        for (c, e) in centers.iter().zip(expected) {
            assert!((c - e).abs() < 1e-12);
        }
        assert!(locate_resonances(&omega, 0, 100.0, 1.0, (0.1, 0.9)).unwrap().is_empty());
        let tight = locate_resonances(&omega, 3, 1e9, 1.0, (0.1, 0.9)).unwrap();
        for (z, t) in zones.iter().zip(&tight) {
            assert_eq!(z.center, t.center);
            assert!(t.radius < 1e-8);
        }
        let bent = RadialSeries::new(vec![0.0, 0.0, 0.0, 1.0]);
        assert!(matches!(locate_resonances(&bent, 3, 1.0, 1.0, (-0.5, 0.5)), Err(Error::NoTwist)));
    }

    #[test]
    fn zone_centres_are_separated() {
        let omega = RadialSeries::twist(0.0, 1.0, 2);
        let n = 12;
        let zones = locate_resonances(&omega, n, 1e3, 1.0, (0.0, 1.0)).unwrap();
        assert!(zones.len() <= n * n);
        for pair in zones.windows(2) {
            assert!(pair[1].center - pair[0].center >= 1.0 / (n * n) as f64 * 0.99);
        }
        assert!(zones_to_csv(&zones).starts_with("p,q,center,radius\n"));
    }
}
