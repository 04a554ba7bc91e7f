//! Periodic orbits by damped Newton on the lift with their monodromy.
//! For a hyperbolic orbit the region between its separatrix branches gives
//! a box that no invariant graph can cross.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::{flow, matmul2, GeneratingMap, Hamiltonian, PhasePoint};
use crate::series::{FourierTaylorSeries, RadialSeries};

const NEWTON_MAX_ITER: usize = 60;
const NEWTON_HALVINGS: usize = 20;
const NEWTON_TOL: f64 = 1e-12;

type Mat = [[f64; 2]; 2];

/// Orbit of `x` for `q` steps with the chained Jacobian.
fn orbit_with_monodromy(m: &GeneratingMap, x: PhasePoint, q: usize) -> Result<(Vec<PhasePoint>, PhasePoint, Mat)> {
    let mut pts = Vec::with_capacity(q);
    let mut mono = [[1.0, 0.0], [0.0, 1.0]];
    let mut cur = x;
    for _ in 0..q {
        pts.push(cur);
        let (next, jac) = m.eval_with_jacobian(cur)?;
        mono = matmul2(&jac, &mono);
        cur = next;
    }
    Ok((pts, cur, mono))
}

fn residual(end: PhasePoint, x: PhasePoint, p: i64) -> [f64; 2] {
    [end.theta - x.theta - p as f64, end.r - x.r]
}

fn norm2(v: [f64; 2]) -> f64 {
    v[0].hypot(v[1])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperbolicOrbit {
    pub period: i64,
    pub rotation: i64,
    pub points: Vec<PhasePoint>,
    /// `(λ₊, λ₋)` with `|λ₊| > 1`.
    pub eigenvalues: (f64, f64),
    /// Unit eigenvectors for `λ₊` and `λ₋`.
    pub eigendirections: ([f64; 2], [f64; 2]),
    pub trace: f64,
    pub determinant: f64,
    pub box_area: f64,
}

impl HyperbolicOrbit {
    /// Slopes `dr/dθ` of the unstable and stable directions.
    pub fn slopes(&self) -> (f64, f64) {
        let (u, s) = self.eigendirections;
        (u[1] / u[0], s[1] / s[0])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EllipticOrbit {
    pub period: i64,
    pub rotation: i64,
    pub points: Vec<PhasePoint>,
    pub trace: f64,
    pub determinant: f64,
}

/// Outcome of [`find_periodic_orbit`]: elliptic orbits are reported, not errors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PeriodicOrbit {
    Hyperbolic(HyperbolicOrbit),
    Elliptic(EllipticOrbit),
}

fn eigenvector(mono: &Mat, lambda: f64) -> [f64; 2] {
    // Rows of M − λI are orthogonal to the eigenvector; use the larger one.
    let rows = [[mono[0][0] - lambda, mono[0][1]], [mono[1][0], mono[1][1] - lambda]];
    let row = if norm2(rows[0]) >= norm2(rows[1]) { rows[0] } else { rows[1] };
    let v = [-row[1], row[0]];
    let n = norm2(v);
    let v = [v[0] / n, v[1] / n];
    if v[0] < 0.0 {
        [-v[0], -v[1]]
    } else {
        v
    }
}

/// Solve `f^q(x) − x − (p, 0) = 0` by Newton with step halving.
pub fn find_periodic_orbit(m: &GeneratingMap, p: i64, q: i64, seed: PhasePoint) -> Result<PeriodicOrbit> {
    if q < 1 {
        return Err(Error::InvalidInput("period must be positive".into()));
    }
    let qn = q as usize;
    let mut x = seed;
    let (_, end, mut mono) = orbit_with_monodromy(m, x, qn)?;
    let mut g = residual(end, x, p);
    let mut converged = norm2(g) < NEWTON_TOL;
    for _ in 0..NEWTON_MAX_ITER {
        if converged {
            break;
        }
        let a = [[mono[0][0] - 1.0, mono[0][1]], [mono[1][0], mono[1][1] - 1.0]];
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        if det.abs() < 1e-14 * (1.0 + a.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max)) {
            return Err(Error::NewtonDiverged { residual: norm2(g) });
        }
        let dx = [(a[1][1] * g[0] - a[0][1] * g[1]) / det, (a[0][0] * g[1] - a[1][0] * g[0]) / det];
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..=NEWTON_HALVINGS {
            let trial = PhasePoint::new(x.theta - scale * dx[0], x.r - scale * dx[1]);
            if let Ok((_, end_t, mono_t)) = orbit_with_monodromy(m, trial, qn) {
                let g_t = residual(end_t, trial, p);
                if norm2(g_t) < norm2(g) {
                    x = trial;
                    g = g_t;
                    mono = mono_t;
                    accepted = true;
                    break;
                }
            }
            scale *= 0.5;
        }
        if !accepted {
            return Err(Error::NewtonDiverged { residual: norm2(g) });
        }
        converged = norm2(g) < NEWTON_TOL;
    }
    if !converged {
        return Err(Error::NewtonDiverged { residual: norm2(g) });
    }
    let (points, _, mono) = orbit_with_monodromy(m, x, qn)?;
    let trace = mono[0][0] + mono[1][1];
    let determinant = mono[0][0] * mono[1][1] - mono[0][1] * mono[1][0];
    if trace.abs() <= 2.0 {
        return Ok(PeriodicOrbit::Elliptic(EllipticOrbit { period: q, rotation: p, points, trace, determinant }));
    }
    let disc = (trace * trace - 4.0 * determinant).sqrt();
    let big = 0.5 * (trace + trace.signum() * disc);
    let small = determinant / big;
    let mut orbit = HyperbolicOrbit {
        period: q,
        rotation: p,
        points,
        eigenvalues: (big, small),
        eigendirections: (eigenvector(&mono, big), eigenvector(&mono, small)),
        trace,
        determinant,
        box_area: 0.0,
    };
    orbit.box_area = separatrix_box(&orbit, DEFAULT_CONE_FACTOR).area;
    Ok(PeriodicOrbit::Hyperbolic(orbit))
}

/// Default half-width of the box in units of `1/q`.
pub const DEFAULT_CONE_FACTOR: f64 = 0.25;

/// Wedge `0 < |θ − θ_p| < a`, `|r − r_p| < ½ min(w₊, w₋)` around the first
/// orbit point, where `w± = ½|m±||θ − θ_p|` are the lower cone bounds on the
/// separatrix graphs and `a = cone_factor / q`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparatrixBox {
    pub center: PhasePoint,
    pub half_width: f64,
    /// `¼ min(|m₊|, |m₋|)`: the wedge is `|r − r_p| < slope · |θ − θ_p|`.
    pub slope: f64,
    pub area: f64,
    /// Bounding rectangle `(θ_min, θ_max, r_min, r_max)`.
    pub rectangle: (f64, f64, f64, f64),
}

impl SeparatrixBox {
    pub fn contains(&self, x: PhasePoint) -> bool {
        let dt = (x.theta - self.center.theta).abs();
        dt > 0.0 && dt < self.half_width && (x.r - self.center.r).abs() < self.slope * dt
    }

    /// Points on a `n × n` lattice of the bounding rectangle that fall inside.
    pub fn samples(&self, n: usize) -> Vec<PhasePoint> {
        let (t0, t1, r0, r1) = self.rectangle;
        let mut out = vec![];
        for i in 0..n {
            for j in 0..n {
                let x = PhasePoint::new(
                    t0 + (t1 - t0) * (i as f64 + 0.5) / n as f64,
                    r0 + (r1 - r0) * (j as f64 + 0.5) / n as f64,
                );
                if self.contains(x) {
                    out.push(x);
                }
            }
        }
        out
    }
}

pub fn separatrix_box(orb: &HyperbolicOrbit, cone_factor: f64) -> SeparatrixBox {
    let (mu, ms) = orb.slopes();
    let slope = 0.25 * mu.abs().min(ms.abs());
    let a = cone_factor / orb.period as f64;
    let c = orb.points[0];
    SeparatrixBox {
        center: c,
        half_width: a,
        slope,
        area: slope * a * a,
        rectangle: (c.theta - a, c.theta + a, c.r - slope * a, c.r + slope * a),
    }
}

/// Unstable eigenvalue of the time-one map of `r²/2 + ν cos 2πθ` at its
/// hyperbolic equilibrium `(0, 0)`, from a central-difference Jacobian of
/// the numerical flow.
pub fn pendulum_eigenvalue(nu: f64) -> Result<f64> {
    let ham = Hamiltonian::new(RadialSeries::new(vec![0.0, 0.0, 0.5]), FourierTaylorSeries::cos_term(2, 1, 0, 1, nu));
    let step = 1e-6;
    let mut jac = [[0.0; 2]; 2];
    for (col, e) in [[1.0, 0.0], [0.0, 1.0]].iter().enumerate() {
        let plus = flow(&ham, PhasePoint::new(step * e[0], step * e[1]), 1.0)?;
        let minus = flow(&ham, PhasePoint::new(-step * e[0], -step * e[1]), 1.0)?;
        jac[0][col] = (plus.theta - minus.theta) / (2.0 * step);
        jac[1][col] = (plus.r - minus.r) / (2.0 * step);
    }
    let trace = jac[0][0] + jac[1][1];
    let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
    let disc = trace * trace - 4.0 * det;
    if disc <= 0.0 {
        return Err(Error::InvalidInput("pendulum equilibrium is not hyperbolic".into()));
    }
    Ok(0.5 * (trace + disc.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{classify_orbit, ClassifierConfig, Verdict};
    use crate::series::StripParams;
    use std::f64::consts::TAU;

    #[test]
    fn standard_map_fixed_point() {
        let m = GeneratingMap::standard_map(0.5, 4, 4);
        let PeriodicOrbit::Hyperbolic(orb) = find_periodic_orbit(&m, 0, 1, PhasePoint::new(0.01, 0.01)).unwrap() else {
            panic!("expected a hyperbolic orbit");
        };
        assert!(orb.points[0].theta.abs() < 1e-12 && orb.points[0].r.abs() < 1e-12);
        assert!((orb.eigenvalues.0 - 2.0).abs() <= 1e-9 && (orb.eigenvalues.1 - 0.5).abs() <= 1e-9);
        assert!((orb.eigenvalues.0 * orb.eigenvalues.1 - 1.0).abs() <= 1e-9);
        assert!(orb.box_area > 0.0);
    }

    #[test]
    fn elliptic_point_is_tagged() {
        let m = GeneratingMap::standard_map(0.5, 4, 4);
        let out = find_periodic_orbit(&m, 0, 1, PhasePoint::new(0.49, 0.01)).unwrap();
        let PeriodicOrbit::Elliptic(e) = out else { panic!("expected elliptic") };
        assert!((e.points[0].theta - 0.5).abs() < 1e-12 && (e.determinant - 1.0).abs() < 1e-9);
    }

    #[test]
    fn integrable_twist_has_no_isolated_orbit() {
        let m = GeneratingMap::integrable(RadialSeries::twist(0.0, 1.0, 4), 4, StripParams { h: 0.1, rho: 1.0 });
        assert!(matches!(find_periodic_orbit(&m, 0, 1, PhasePoint::new(0.2, 0.01)), Err(Error::NewtonDiverged { .. })));
    }

    #[test]
    fn box_points_are_not_on_circles() {
        let m = GeneratingMap::standard_map(0.5, 4, 4);
        let PeriodicOrbit::Hyperbolic(orb) = find_periodic_orbit(&m, 0, 1, PhasePoint::new(0.01, 0.01)).unwrap() else {
            panic!()
        };
        let bx = separatrix_box(&orb, DEFAULT_CONE_FACTOR);
        let pts = bx.samples(12);
        assert!(!pts.is_empty());
        let cfg = ClassifierConfig { iterations: 20_000, ..Default::default() };
        for x in pts {
            let d = classify_orbit(&m, x, &cfg);
            assert_eq!(d.classification, Verdict::NonRegular, "{d:?}");
        }
    }

    #[test]
    fn pendulum_exponent_scales_with_square_root() {
        let nus = [1e-4, 1e-5, 1e-6];
        let xs: Vec<f64> = nus.iter().map(|n: &f64| n.sqrt()).collect();
        let ys: Vec<f64> = nus.iter().map(|&n| pendulum_eigenvalue(n).unwrap().ln()).collect();
        let (mx, my) = (xs.iter().sum::<f64>() / 3.0, ys.iter().sum::<f64>() / 3.0);
        let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
            / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
        assert!((slope / TAU - 1.0).abs() <= 0.1, "slope {slope}");
    }
}
