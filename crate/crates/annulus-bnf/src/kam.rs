//! Quantified KAM conjugation steps with resonance-zone bookkeeping.
//!
//! One step conjugates `f_{Ω+F}` by `f_Y`, where `Y` solves the truncated
//! cohomological equation, after moving the mean of `F` into `Ω`. The
//! resonance zones of the new truncation are recorded as excluded from the
//! real domain.

use serde::{Deserialize, Serialize};

use crate::divisors::{locate_resonances, solve_cohomological, ResonanceZone, DEFAULT_DIVISOR_FLOOR};
use crate::error::{Error, Result};
use crate::maps::{conjugate_generating, GeneratingMap};
use crate::series::{FourierTaylorSeries, RadialSeries, StripParams};

/// Exponent of `δ` in the smallness test `K² δ^{−a₁} ‖F‖ ≤ C`.
pub const SMALLNESS_DELTA_EXPONENT: f64 = 2.0;
/// Constant `C` of the smallness test.
pub const SMALLNESS_CONSTANT: f64 = 1.0;
/// Exponent used by the default schedule for the Diophantine constant:
/// `K⁻¹ = ε̄^{0.45}`.
pub const SCHEDULE_K_EXPONENT: f64 = 0.45;
/// Growth rate `κ` in `N_k = ⌈N₀ e^{κk}⌉`.
pub const SCHEDULE_KAPPA: f64 = 0.5;
/// Envelope exponent `a` in `ε̄ = e^{−N/(ln N)^a}`.
pub const SCHEDULE_ENVELOPE_A: f64 = 2.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KamState {
    pub step: usize,
    pub omega: RadialSeries,
    pub f: FourierTaylorSeries,
    pub strip: StripParams,
    /// Exponent `τ` used for zone radii.
    pub tau: f64,
    pub excluded: Vec<ResonanceZone>,
    pub norms: Vec<f64>,
}

impl KamState {
    pub fn new(omega: RadialSeries, f: FourierTaylorSeries, strip: StripParams, tau: f64) -> Self {
        Self { step: 0, omega, f, strip, tau, excluded: Vec::new(), norms: Vec::new() }
    }

    pub fn from_map(m: &GeneratingMap, tau: f64) -> Self {
        Self::new(m.omega().clone(), m.f().clone(), m.strip(), tau)
    }

    pub fn map(&self) -> GeneratingMap {
        GeneratingMap::unchecked(self.omega.clone(), self.f.clone(), self.strip)
    }
}

/// One entry `(N, K, δ)` of a schedule, with the target envelope `ε̄`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleEntry {
    pub n: usize,
    pub k: f64,
    pub delta: f64,
    pub eps_bar: f64,
}

/// `ε̄ = e^{−N/(ln N)^a}`.
pub fn envelope(n: usize, a: f64) -> f64 {
    let n = n as f64;
    (-n / n.ln().powf(a)).exp()
}

/// Default schedule: `N_k = ⌈N₀ e^{κk}⌉`, `K_k⁻¹ = ε̄_k^{0.45}` and
/// `δ_k ∝ (ln N_k)^{−2}`, scaled so that the total strip loss is `h₀/2`.
pub fn default_schedule(n0: usize, steps: usize, h0: f64, a: f64) -> Vec<ScheduleEntry> {
    let ns: Vec<usize> = (1..=steps)
        .map(|k| (n0 as f64 * (SCHEDULE_KAPPA * k as f64).exp()).ceil() as usize)
        .collect();
    let raw: Vec<f64> = ns.iter().map(|&n| (n as f64).ln().powi(-2)).collect();
    let total: f64 = raw.iter().sum();
    ns.iter()
        .zip(&raw)
        .map(|(&n, &d)| {
            let eps_bar = envelope(n, a);
            ScheduleEntry { n, k: eps_bar.powf(-SCHEDULE_K_EXPONENT), delta: 0.5 * h0 * d / total, eps_bar }
        })
        .collect()
}

fn merge_zones(existing: &mut Vec<ResonanceZone>, fresh: Vec<ResonanceZone>) {
    for z in fresh {
        match existing.iter_mut().find(|e| e.p == z.p && e.q == z.q) {
            Some(e) => e.radius = e.radius.max(z.radius),
            None => existing.push(z),
        }
    }
    existing.sort_by(|a, b| a.center.total_cmp(&b.center));
}

/// The conjugator `Y` of one step: `[Ω]·Y = −(T_N F − ⟨F⟩)`.
pub fn kam_conjugator(state: &KamState, n: usize) -> Result<FourierTaylorSeries> {
    Ok(solve_cohomological(&state.omega, &state.f, n, DEFAULT_DIVISOR_FLOOR)?.scale(-1.0))
}

pub fn kam_step(state: &KamState, n: usize, k_const: f64, delta: f64) -> Result<KamState> {
    let mut next = state.clone();
    next.step += 1;
    if state.f.is_zero() {
        return Ok(next);
    }
    if !(delta > 0.0 && delta < state.strip.h) {
        return Err(Error::InvalidInput(format!("strip loss {delta} must lie in (0, {})", state.strip.h)));
    }
    let size = state.f.weighted_norm(state.strip);
    let smallness = k_const * k_const * delta.powf(-SMALLNESS_DELTA_EXPONENT) * size;
    if smallness > SMALLNESS_CONSTANT {
        return Err(Error::SmallnessViolation { quantity: smallness, limit: SMALLNESS_CONSTANT });
    }
    let rho = state.strip.rho;
    let zones = locate_resonances(&state.omega, n, k_const, state.tau, (-rho, rho))?;

    let y = kam_conjugator(state, n)?;
    let order = state.f.n_r_max() + 4;
    let conj = conjugate_generating(&state.map(), &y, order)?;
    let mean = state.f.theta_mean()?;
    let nr = state.f.n_r_max();
    next.omega = state.omega.resized(nr.max(state.omega.n_r_max())).add(&mean);
    next.f = conj.f().sub(&mean.resized(nr).to_series(nr, state.f.n_theta_max()));
    next.strip = state.strip.shrink(delta);
    merge_zones(&mut next.excluded, zones);
    next.norms.push(next.f.weighted_norm(next.strip));
    Ok(next)
}

/// Outcome of running a schedule: every state reached, and the error that
/// stopped the run early, if any.
#[derive(Clone, Debug, Serialize)]
pub struct KamHistory {
    pub states: Vec<KamState>,
    pub envelope: Vec<f64>,
    pub terminal_error: Option<String>,
}

pub fn kam_iterate(initial: &KamState, schedule: &[ScheduleEntry]) -> Result<KamHistory> {
    if schedule.is_empty() {
        return Err(Error::InvalidInput("empty schedule".into()));
    }
    let mut states = vec![initial.clone()];
    let mut terminal_error = None;
    for entry in schedule {
        let last = states.last().expect("history starts non-empty");
        match kam_step(last, entry.n, entry.k, entry.delta) {
            Ok(s) => states.push(s),
            Err(e) => {
                terminal_error = Some(e.tag().to_string());
                break;
            }
        }
    }
    Ok(KamHistory { states, envelope: schedule.iter().map(|e| e.eps_bar).collect(), terminal_error })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::PhasePoint;

    const GOLDEN: f64 = 0.618_033_988_749_894_9;

    fn golden_state(f: FourierTaylorSeries) -> KamState {
        KamState::new(RadialSeries::twist(GOLDEN, 1.0, 8), f, StripParams { h: 0.1, rho: 0.01 }, 1.0)
    }

    #[test]
    fn integrable_state_only_advances_counter() {
        let s = golden_state(FourierTaylorSeries::zeros(8, 16));
        let t = kam_step(&s, 8, 2.0, 0.02).unwrap();
        assert_eq!(t.step, 1);
        assert_eq!(t.omega, s.omega);
        assert!(t.f.is_zero());
    }

    #[test]
    fn frequency_absorbs_mean_exactly() {
        let mut f = FourierTaylorSeries::cos_term(8, 16, 0, 1, 1e-6);
        f.add_cos(0, 0, 3e-7);
        f.add_cos(2, 0, -2e-7);
        let s = golden_state(f.clone());
        let t = kam_step(&s, 8, 2.0, 0.02).unwrap();
        let mean = f.theta_mean().unwrap();
        assert_eq!(t.omega, s.omega.add(&mean));
    }

    #[test]
    fn remainder_is_quadratic() {
        let run = |eps: f64| {
            let s = golden_state(FourierTaylorSeries::cos_term(8, 16, 0, 1, eps));
            kam_step(&s, 8, 2.0, 0.02).unwrap().norms[0]
        };
        let ratio = run(1e-6) / run(5e-7);
        assert!((ratio - 4.0).abs() <= 0.8, "ratio {ratio}");
    }

    #[test]
    fn step_is_a_conjugacy() {
        let mut f = FourierTaylorSeries::cos_term(8, 16, 0, 1, 1e-5);
        f.add_sin(1, 2, 1e-5);
        let s = golden_state(f);
        let t = kam_step(&s, 8, 2.0, 0.02).unwrap();
        let y = kam_conjugator(&s, 8).unwrap();
        let my = GeneratingMap::unchecked(RadialSeries::new(vec![0.0]), y, s.strip);
        let (old, new) = (s.map(), t.map());
        let mut worst = 0.0f64;
        for i in 0..16 {
            for j in 0..5 {
                let x = PhasePoint::new(i as f64 / 16.0, -0.004 + 0.002 * j as f64);
                let a = new.eval_map(x).unwrap();
                let b = my.eval_map(old.eval_map(my.invert_map(x).unwrap()).unwrap()).unwrap();
                worst = worst.max((a.theta - b.theta).abs()).max((a.r - b.r).abs());
            }
        }
        assert!(worst <= 1e-8, "worst {worst}");
    }

    #[test]
    fn default_schedule_contracts_standard_map() {
        let f = FourierTaylorSeries::cos_term(8, 40, 0, 1, 1e-5 / (4.0 * std::f64::consts::PI.powi(2)));
        let s = KamState::new(RadialSeries::twist(GOLDEN, 1.0, 8), f, StripParams { h: 0.1, rho: 0.002 }, 1.0);
        let schedule = default_schedule(4, 4, 0.1, SCHEDULE_ENVELOPE_A);
        let hist = kam_iterate(&s, &schedule).unwrap();
        assert!(hist.terminal_error.is_none(), "{:?}", hist.terminal_error);
        let norms = &hist.states.last().unwrap().norms;
        assert_eq!(norms.len(), 4);
        assert!(norms[3] / norms[0] <= 1e-8, "norms {norms:?}");
        let bound: usize = schedule.iter().map(|e| e.n * e.n).sum();
        for st in &hist.states {
            assert!(st.excluded.len() <= bound);
        }
        for pair in hist.states.windows(2) {
            assert!(pair[1].excluded.len() >= pair[0].excluded.len());
        }
    }
}
