//! Time-t maps of Hamiltonian vector fields `θ̇ = ∂rH`, `ṙ = −∂θH`.

use crate::error::{Error, Result};
use crate::maps::PhasePoint;
use crate::series::{Evaluator, FourierTaylorSeries, RadialSeries};

/// Local error target of the adaptive integrator.
pub const FLOW_TOL: f64 = 1e-13;
const MAX_STEPS: usize = 2_000_000;

/// `H(θ, r) = radial(r) + f(θ, r)`.
#[derive(Clone, Debug)]
pub struct Hamiltonian {
    radial: RadialSeries,
    d_radial: RadialSeries,
    f: FourierTaylorSeries,
    eval_f: Evaluator,
}

impl Hamiltonian {
    pub fn new(radial: RadialSeries, f: FourierTaylorSeries) -> Self {
        let d_radial = radial.derivative();
        let eval_f = f.evaluator();
        Self { radial, d_radial, f, eval_f }
    }

    /// A Hamiltonian carried entirely by a Fourier–Taylor series.
    pub fn from_series(f: FourierTaylorSeries) -> Self {
        Self::new(RadialSeries::new(vec![0.0]), f)
    }

    pub fn radial(&self) -> &RadialSeries {
        &self.radial
    }

    pub fn f(&self) -> &FourierTaylorSeries {
        &self.f
    }

    pub fn value(&self, theta: f64, r: f64) -> f64 {
        self.radial.eval(r) + self.eval_f.derivs(theta.rem_euclid(1.0), r).f
    }

    fn field(&self, theta: f64, r: f64) -> [f64; 2] {
        let d = self.eval_f.derivs(theta.rem_euclid(1.0), r);
        [self.d_radial.eval(r) + d.r, -d.t]
    }
}

// Dormand–Prince 5(4) tableau. The nodes are implicit: the field is autonomous.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrate the Hamiltonian vector field of `h` from `x` for time `t`
/// (negative `t` runs backwards).
pub fn flow(h: &Hamiltonian, x: PhasePoint, t: f64) -> Result<PhasePoint> {
    if t == 0.0 {
        return Ok(x);
    }
    let dir = t.signum();
    let total = t.abs();
    let mut y = [x.theta, x.r];
    let mut s = 0.0;
    let mut step = (total / 16.0).min(0.05);
    let mut steps = 0;
    while s < total {
        if steps > MAX_STEPS {
            return Err(Error::StepFailure { t: s * dir });
        }
        steps += 1;
        let hstep = step.min(total - s);
        let mut k = [[0.0; 2]; 7];
        for i in 0..7 {
            let mut yi = y;
            for (j, kj) in k.iter().enumerate().take(i) {
                for d in 0..2 {
                    yi[d] += dir * hstep * A[i][j] * kj[d];
                }
            }
            k[i] = h.field(yi[0], yi[1]);
        }
        let mut y5 = y;
        let mut err = 0.0f64;
        for d in 0..2 {
            let mut inc5 = 0.0;
            let mut inc4 = 0.0;
            for i in 0..7 {
                inc5 += B5[i] * k[i][d];
                inc4 += B4[i] * k[i][d];
            }
            y5[d] += dir * hstep * inc5;
            let scale = FLOW_TOL * (1.0 + y[d].abs().max(y5[d].abs()));
            err = err.max((hstep * (inc5 - inc4)).abs() / scale);
        }
        if !err.is_finite() {
            return Err(Error::StepFailure { t: s * dir });
        }
        if err <= 1.0 {
            s += hstep;
            y = y5;
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        step = hstep * factor;
        if step < 1e-12 * total.max(1.0) {
            return Err(Error::StepFailure { t: s * dir });
        }
    }
    Ok(PhasePoint { theta: y[0], r: y[1] })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_hamiltonian_translates() {
        let h = Hamiltonian::new(RadialSeries::new(vec![0.0, 1.0]), FourierTaylorSeries::zeros(2, 2));
        let y = flow(&h, PhasePoint::new(0.1, 0.3), 0.7).unwrap();
        assert!((y.theta - 0.8).abs() < 1e-13 && (y.r - 0.3).abs() < 1e-15);
    }

    #[test]
    fn quadratic_hamiltonian_twists() {
        let h = Hamiltonian::new(RadialSeries::twist(0.0, 1.0, 2), FourierTaylorSeries::zeros(2, 2));
        let y = flow(&h, PhasePoint::new(0.0, 0.4), 1.0).unwrap();
        assert!((y.theta - 0.4).abs() < 1e-12 && (y.r - 0.4).abs() < 1e-15);
    }

    #[test]
    fn pendulum_conserves_energy() {
        let h = Hamiltonian::new(
            RadialSeries::twist(0.0, 1.0, 2),
            FourierTaylorSeries::cos_term(2, 2, 0, 1, 1e-4),
        );
        let x = PhasePoint::new(0.13, 0.02);
        let y = flow(&h, x, 10.0).unwrap();
        assert!((h.value(y.theta, y.r) - h.value(x.theta, x.r)).abs() <= 1e-10);
        let back = flow(&h, y, -10.0).unwrap();
        assert!((back.theta - x.theta).abs() < 1e-11 && (back.r - x.r).abs() < 1e-11);
    }
}
