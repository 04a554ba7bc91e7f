//! Orbit classification and the measure `m(t)` of the part of the band
//! `T × (−t, t)` not covered by invariant circles. The submodules treat
//! hyperbolic periodic orbits and the resonant counterexample maps.
//!
//! Membership in an invariant graph cannot be decided from finitely many
//! iterates. The classifier first asks whether a weighted Birkhoff average
//! of the rotation has converged. A converged orbit is then rejected if its
//! rotation is a low-order rational with genuine radial motion, or left
//! `Undecided` if it wanders radially.

pub mod counterexample;
pub mod periodic;

pub use counterexample::{build_counterexample, resonant_hyperbolic_orbit, Counterexample, CounterexampleTerm};
pub use periodic::{
    find_periodic_orbit, pendulum_eigenvalue, DEFAULT_CONE_FACTOR, separatrix_box, EllipticOrbit, HyperbolicOrbit, PeriodicOrbit,
    SeparatrixBox,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::{GeneratingMap, PhasePoint};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Regular,
    NonRegular,
    Undecided,
}

/// Thresholds of the orbit classifier.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    pub iterations: usize,
    /// Required agreement of the rotation estimates.
    pub tol: f64,
    /// Disagreement above which the orbit is called non-regular outright.
    pub chaos_threshold: f64,
    /// Rotations within `tol` of `p/q`, `q ≤ q_max`, count as rational.
    pub q_max: i64,
    /// Radial spread below which a rational orbit is taken to lie on a circle.
    pub flat_tol: f64,
    /// Radial spread above which the band signal fails.
    pub band_threshold: f64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self { iterations: 100_000, tol: 1e-8, chaos_threshold: 1e-4, q_max: 20, flat_tol: 1e-10, band_threshold: 0.25 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitDiagnostics {
    pub initial: PhasePoint,
    pub iterations: usize,
    pub rotation_number: f64,
    pub convergence_error: f64,
    pub r_band: (f64, f64),
    pub classification: Verdict,
    /// Short machine-readable reason for the verdict.
    pub reason: String,
}

/// Bump weight `exp(−1/(s(1−s)))` on `(0, 1)`.
fn bump(s: f64) -> f64 {
    if s <= 0.0 || s >= 1.0 {
        0.0
    } else {
        (-1.0 / (s * (1.0 - s))).exp()
    }
}

/// Weighted Birkhoff average of `values`.
pub fn weighted_birkhoff(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let (mut num, mut den) = (0.0, 0.0);
    for (i, v) in values.iter().enumerate() {
        let w = bump((i as f64 + 0.5) / n);
        num += w * v;
        den += w;
    }
    num / den
}

/// Distance from `x` to the nearest `p/q` with `q ≤ q_max`.
pub fn rational_distance(x: f64, q_max: i64) -> f64 {
    (1..=q_max).map(|q| (x * q as f64 - (x * q as f64).round()).abs() / q as f64).fold(f64::INFINITY, f64::min)
}

pub fn classify_orbit(m: &GeneratingMap, x: PhasePoint, cfg: &ClassifierConfig) -> OrbitDiagnostics {
    let mut steps = Vec::with_capacity(cfg.iterations);
    let mut band = (x.r, x.r);
    let mut cur = x;
    let mut out = OrbitDiagnostics {
        initial: x,
        iterations: 0,
        rotation_number: f64::NAN,
        convergence_error: f64::INFINITY,
        r_band: band,
        classification: Verdict::NonRegular,
        reason: String::new(),
    };
    for _ in 0..cfg.iterations {
        match m.eval_map(cur) {
            Ok(next) if next.theta.is_finite() && next.r.is_finite() => {
                steps.push(next.theta - cur.theta);
                band = (band.0.min(next.r), band.1.max(next.r));
                cur = next;
            }
            _ => {
                out.iterations = steps.len();
                out.r_band = band;
                out.reason = "left_domain".into();
                return out;
            }
        }
    }
    let full = weighted_birkhoff(&steps);
    let half = weighted_birkhoff(&steps[..steps.len() / 2]);
    out.iterations = steps.len();
    out.rotation_number = full;
    out.convergence_error = (full - half).abs();
    out.r_band = band;
    let spread = band.1 - band.0;
    let (verdict, reason) = if !(out.convergence_error < cfg.chaos_threshold) {
        (Verdict::NonRegular, "no_convergence")
    } else if out.convergence_error >= cfg.tol {
        (Verdict::Undecided, "slow_convergence")
    } else if rational_distance(full, cfg.q_max) < cfg.tol && spread > cfg.flat_tol {
        (Verdict::NonRegular, "rational_rotation")
    } else if spread >= cfg.band_threshold {
        (Verdict::Undecided, "wide_band")
    } else {
        (Verdict::Regular, "converged")
    };
    out.classification = verdict;
    out.reason = reason.into();
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureReport {
    pub t_values: Vec<f64>,
    /// Non-regular area of `T × (−t, t)`.
    pub m_estimates: Vec<f64>,
    pub grid: (usize, usize),
    pub undecided_fraction: Vec<f64>,
    pub iterations: usize,
}

impl MeasureReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,m_estimate,undecided_fraction\n");
        for ((t, m), u) in self.t_values.iter().zip(&self.m_estimates).zip(&self.undecided_fraction) {
            s.push_str(&format!("{t},{m},{u}\n"));
        }
        s
    }
}

/// Classify the cell centres of an `n_theta × n_r` grid on each band.
pub fn measure_scan(m: &GeneratingMap, t_list: &[f64], grid: (usize, usize), cfg: &ClassifierConfig) -> Result<MeasureReport> {
    let (nt, nr) = grid;
    if nt == 0 || nr == 0 {
        return Err(Error::InvalidInput("grid must be non-empty".into()));
    }
    let mut report = MeasureReport {
        t_values: t_list.to_vec(),
        m_estimates: vec![],
        grid,
        undecided_fraction: vec![],
        iterations: cfg.iterations,
    };
    for &t in t_list {
        if !(t > 0.0 && t <= m.strip().rho) {
            return Err(Error::InvalidInput(format!("band half-width {t} outside (0, {}]", m.strip().rho)));
        }
        let verdicts: Vec<Verdict> = (0..nt * nr)
            .into_par_iter()
            .map(|cell| {
                let (i, j) = (cell / nr, cell % nr);
                let x = PhasePoint::new((i as f64 + 0.5) / nt as f64, -t + 2.0 * t * (j as f64 + 0.5) / nr as f64);
                classify_orbit(m, x, cfg).classification
            })
            .collect();
        let total = verdicts.len() as f64;
        let bad = verdicts.iter().filter(|v| **v == Verdict::NonRegular).count() as f64;
        let undecided = verdicts.iter().filter(|v| **v == Verdict::Undecided).count() as f64;
        report.m_estimates.push(2.0 * t * bad / total);
        report.undecided_fraction.push(undecided / total);
    }
    Ok(report)
}

/// Least-squares slope of `ln m` against `ln amplitude`.
pub fn scaling_exponent(amplitudes: &[f64], measures: &[f64]) -> f64 {
    crate::divisors::log_log_slope(amplitudes, measures)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{FourierTaylorSeries, RadialSeries, StripParams};
    use std::f64::consts::PI;

    const GOLDEN: f64 = 0.618_033_988_749_894_9;

    fn quick() -> ClassifierConfig {
        ClassifierConfig { iterations: 1000, tol: 1e-6, ..Default::default() }
    }

    #[test]
    fn integrable_orbits_are_regular() {
        let m = GeneratingMap::integrable(RadialSeries::twist(GOLDEN, 1.0, 4), 4, StripParams { h: 0.1, rho: 1.0 });
        for r in [-0.3, 0.0, 0.1, 0.2] {
            let d = classify_orbit(&m, PhasePoint::new(0.3, r), &quick());
            assert_eq!(d.classification, Verdict::Regular, "{d:?}");
            assert!((d.rotation_number - (GOLDEN + r)).abs() <= 1e-10);
        }
        // Rational rotation on a flat circle is still a circle.
        let d = classify_orbit(&m, PhasePoint::new(0.0, 0.5 - GOLDEN), &quick());
        assert_eq!(d.classification, Verdict::Regular);
    }

    #[test]
    fn golden_orbit_of_the_standard_map() {
        let m = GeneratingMap::standard_map(0.5, 4, 4);
        let d = classify_orbit(&m, PhasePoint::new(0.0, 0.618034), &ClassifierConfig::default());
        assert_eq!(d.classification, Verdict::Regular, "{d:?}");
        assert!(d.convergence_error < 1e-8);
        assert!((d.rotation_number - GOLDEN).abs() < 0.05);
    }

    #[test]
    fn separatrix_orbit_is_not_regular() {
        let m = GeneratingMap::standard_map(0.5, 4, 4);
        // Unstable direction of the fixed point (0, 0): eigenvector (1, λ − 1) with λ = 2.
        let d = classify_orbit(&m, PhasePoint::new(1e-6, 1e-6), &ClassifierConfig::default());
        assert_eq!(d.classification, Verdict::NonRegular, "{d:?}");
    }

    #[test]
    fn integrable_band_has_zero_measure() {
        let m = GeneratingMap::integrable(RadialSeries::twist(0.0, 1.0, 4), 4, StripParams { h: 0.1, rho: 1.0 });
        for grid in [(8, 16), (16, 32)] {
            let rep = measure_scan(&m, &[0.05, 0.2], grid, &quick()).unwrap();
            assert_eq!(rep.m_estimates, vec![0.0, 0.0]);
            assert_eq!(rep.undecided_fraction, vec![0.0, 0.0]);
        }
    }

    #[test]
    fn island_measure_follows_square_root_law() {
        // Shorter orbits leave the slowly librating cells of the small
        // island undecided and bias the exponent upwards.
        let amps = [0.32, 0.02];
        let cfg = ClassifierConfig { iterations: 5000, tol: 1e-6, ..Default::default() };
        let mut ms = vec![];
        for k in amps {
            let f = FourierTaylorSeries::cos_term(2, 2, 0, 1, k / (4.0 * PI * PI));
            let m = GeneratingMap::unchecked(RadialSeries::twist(0.0, 1.0, 2), f, StripParams { h: 0.5, rho: 2.0 });
            let rep = measure_scan(&m, &[0.25], (32, 80), &cfg).unwrap();
            assert!(rep.m_estimates[0] > 0.0 && rep.m_estimates[0] <= 0.5);
            ms.push(rep.m_estimates[0]);
        }
        let slope = scaling_exponent(&amps, &ms);
        assert!((slope - 0.5).abs() <= 0.15, "slope {slope} from {ms:?}");
    }
}
