//! Twist maps with one resonant term `ε̄ e^{−2πqh/10} r² cos(2πqθ)` added
//! per selected continued-fraction convergent `p/q` of the base frequency.
//! Each term opens a chain of islands whose hyperbolic orbits block every
//! invariant graph through the resonance.

use serde::{Deserialize, Serialize};

use crate::divisors::continued_fraction_convergents;
use crate::error::{Error, Result};
use crate::kam::{envelope, SCHEDULE_ENVELOPE_A, SCHEDULE_KAPPA};
use crate::maps::{GeneratingMap, PhasePoint};
use crate::measure::periodic::{find_periodic_orbit, PeriodicOrbit};
use crate::series::StripParams;

/// First truncation order `N₀` of the schedule `N_k = ⌈N₀ e^{κk}⌉` used to
/// pick the envelope level of each term.
pub const COUNTEREXAMPLE_N0: usize = 4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleTerm {
    pub p: i64,
    pub q: i64,
    /// Schedule order `N_n ≥ q` whose envelope sets the size.
    pub order: usize,
    pub eps_bar: f64,
    /// Coefficient of `r² cos(2πqθ)`.
    pub amplitude: f64,
    /// `p/q − ω₀`.
    pub offset: f64,
    /// Radius where the base frequency equals `p/q`.
    pub center: f64,
}

#[derive(Clone, Debug)]
pub struct Counterexample {
    pub map: GeneratingMap,
    pub terms: Vec<CounterexampleTerm>,
}

/// Smallest schedule order that is at least `q`.
fn schedule_order(q: usize) -> usize {
    (1..)
        .map(|k| (COUNTEREXAMPLE_N0 as f64 * (SCHEDULE_KAPPA * k as f64).exp()).ceil() as usize)
        .find(|&n| n >= q)
        .expect("schedule is unbounded")
}

/// Solve `Ω′(r) = target` by Newton from the linear guess.
fn resonant_radius(m: &GeneratingMap, target: f64) -> Result<f64> {
    let mut r = 0.0;
    for _ in 0..50 {
        let twist = m.twist_at(r);
        if twist == 0.0 {
            return Err(Error::NoTwist);
        }
        let step = (m.frequency(r) - target) / twist;
        r -= step;
        if step.abs() < 1e-15 {
            return Ok(r);
        }
    }
    Err(Error::NewtonDiverged { residual: (m.frequency(r) - target).abs() })
}

pub fn build_counterexample(omega0: f64, base: &GeneratingMap, k_list: &[usize], h: f64) -> Result<Counterexample> {
    if !(h > 0.0) {
        return Err(Error::InvalidInput(format!("strip width {h} must be positive")));
    }
    let count = k_list.iter().copied().max().map_or(0, |k| k + 1);
    let convergents = continued_fraction_convergents(omega0, count)?;
    let mut f = base.f().clone();
    let mut terms = Vec::with_capacity(k_list.len());
    for &k in k_list {
        let &(p, q) = convergents
            .get(k)
            .ok_or_else(|| Error::InvalidInput(format!("frequency has fewer than {} convergents", k + 1)))?;
        let qu = q as usize;
        let order = schedule_order(qu);
        let eps_bar = envelope(order, SCHEDULE_ENVELOPE_A);
        let amplitude = eps_bar * (-2.0 * std::f64::consts::PI * q as f64 * h / 10.0).exp();
        if f.n_theta_max() < qu || f.n_r_max() < 2 {
            f = f.resized(f.n_r_max().max(2), f.n_theta_max().max(qu));
        }
        f.add_cos(2, qu, amplitude);
        let target = p as f64 / q as f64;
        terms.push(CounterexampleTerm {
            p,
            q,
            order,
            eps_bar,
            amplitude,
            offset: target - omega0,
            center: resonant_radius(base, target)?,
        });
    }
    let strip = StripParams { h: base.strip().h.min(h), ..base.strip() };
    Ok(Counterexample { map: GeneratingMap::unchecked(base.omega().clone(), f, strip), terms })
}

/// Hyperbolic `(p, q)` orbit of one term, seeded on the resonant radius at
/// both candidate phases `0` and `1/(2q)`.
pub fn resonant_hyperbolic_orbit(m: &GeneratingMap, term: &CounterexampleTerm) -> Result<PeriodicOrbit> {
    let mut last = Err(Error::NewtonDiverged { residual: f64::INFINITY });
    for phase in [0.0, 0.5 / term.q as f64] {
        match find_periodic_orbit(m, term.p, term.q, PhasePoint::new(phase, term.center)) {
            Ok(PeriodicOrbit::Hyperbolic(o)) => return Ok(PeriodicOrbit::Hyperbolic(o)),
            other => last = other,
        }
    }
    last
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{classify_orbit, separatrix_box, ClassifierConfig, Verdict, DEFAULT_CONE_FACTOR};
    use crate::series::RadialSeries;

    const GOLDEN: f64 = 0.618_033_988_749_894_9;

    fn base() -> GeneratingMap {
        GeneratingMap::integrable(RadialSeries::twist(GOLDEN, 1.0, 2), 2, StripParams { h: 0.5, rho: 1.0 })
    }

    #[test]
    fn empty_list_keeps_base() {
        let ce = build_counterexample(GOLDEN, &base(), &[], 0.5).unwrap();
        assert!(ce.terms.is_empty() && ce.map.f().is_zero());
        assert_eq!(ce.map.omega(), base().omega());
    }

    #[test]
    fn terms_respect_quarter_envelope() {
        let h = 0.5;
        let ce = build_counterexample(GOLDEN, &base(), &[2, 3, 4], h).unwrap();
        for t in &ce.terms {
            let mut g = crate::series::FourierTaylorSeries::zeros(2, t.q as usize);
            g.add_cos(2, t.q as usize, t.amplitude);
            let norm = g.weighted_norm(StripParams { h: h / 10.0, rho: 0.5 });
            assert!(norm <= t.eps_bar / 4.0 * (1.0 + 1e-12), "q={} norm {norm} eps {}", t.q, t.eps_bar);
            assert!(t.order >= t.q as usize);
            assert!((t.center - t.offset).abs() < 1e-15);
        }
    }

    #[test]
    fn golden_thirteen_has_blocking_hyperbolic_orbit() {
        let ce = build_counterexample(GOLDEN, &base(), &[4], 0.5).unwrap();
        let term = &ce.terms[0];
        assert_eq!((term.p, term.q), (8, 13));
        let PeriodicOrbit::Hyperbolic(orb) = resonant_hyperbolic_orbit(&ce.map, term).unwrap() else {
            panic!("expected a hyperbolic orbit")
        };
        assert!((orb.points[0].r - term.center).abs() < term.offset.abs());
        assert!((orb.eigenvalues.0 * orb.eigenvalues.1 - 1.0).abs() <= 1e-9);
        let bx = separatrix_box(&orb, DEFAULT_CONE_FACTOR);
        assert!(bx.area > 0.0);
        let samples = bx.samples(8);
        assert!(!samples.is_empty());
        for x in samples {
            let d = classify_orbit(&ce.map, x, &ClassifierConfig::default());
            assert_eq!(d.classification, Verdict::NonRegular, "{d:?}");
        }
    }

    #[test]
    fn box_area_shrinks_along_convergents() {
        let areas: Vec<f64> = [2, 3, 4]
            .iter()
            .map(|&k| {
                let ce = build_counterexample(GOLDEN, &base(), &[k], 0.5).unwrap();
                match resonant_hyperbolic_orbit(&ce.map, &ce.terms[0]).unwrap() {
                    PeriodicOrbit::Hyperbolic(o) => o.box_area,
                    PeriodicOrbit::Elliptic(_) => panic!("expected a hyperbolic orbit"),
                }
            })
            .collect();
        assert!(areas.iter().all(|a| *a > 0.0));
        assert!(areas.windows(2).all(|w| w[1] < w[0]), "{areas:?}");
    }
}
