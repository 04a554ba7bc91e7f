//! Upper bounds for `ln|f|` on a disk with holes, from a bound on a central
//! disk, and a walk-on-spheres estimate of the harmonic measure that weights
//! them.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{Error, Result};

/// Version of the built-in test-function corpus.
pub const CORPUS_VERSION: u32 = 1;
/// Absorption distance of the walks, relative to the outer radius.
pub const DEFAULT_ABSORB_REL: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hole {
    pub re: f64,
    pub im: f64,
    pub eps: f64,
}

impl Hole {
    pub fn center(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

/// `D(0, ρ)` minus the closed disks `D(z_j, ε_j)`. When `clearances` is
/// present its entries are the `d_j`; otherwise `d_j = |z − z_j|` per query.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HoleDomain {
    pub rho: f64,
    #[serde(default)]
    pub holes: Vec<Hole>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clearances: Option<Vec<f64>>,
}

impl HoleDomain {
    pub fn new(rho: f64, holes: Vec<Hole>) -> Result<Self> {
        let dom = Self { rho, holes, clearances: None };
        dom.validate()?;
        Ok(dom)
    }

    pub fn disk(rho: f64) -> Self {
        Self { rho, holes: Vec::new(), clearances: None }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0) {
            return Err(Error::GeometryViolation("outer radius must be positive".into()));
        }
        for (j, h) in self.holes.iter().enumerate() {
            if !(h.eps > 0.0) || h.center().norm() + h.eps >= self.rho {
                return Err(Error::GeometryViolation(format!("hole {j} is empty or leaves the outer disk")));
            }
        }
        if let Some(d) = &self.clearances {
            if d.len() != self.holes.len() || d.iter().zip(&self.holes).any(|(d, h)| *d < h.eps) {
                return Err(Error::GeometryViolation("need one clearance d_j >= eps_j per hole".into()));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let dom: Self = serde_json::from_str(text)?;
        dom.validate()?;
        Ok(dom)
    }

    /// Whether `z` lies in the open holed disk.
    pub fn contains(&self, z: Complex64) -> bool {
        z.norm() < self.rho && self.holes.iter().all(|h| (z - h.center()).norm() > h.eps)
    }
}

/// Hole term scale: `ρ` in [`jensen_bound`], `2ρ` in [`jensen_bound_global`].
#[derive(Clone, Copy, PartialEq)]
enum HoleScale {
    Outer,
    Doubled,
}

fn bound_with(dom: &HoleDomain, sigma: f64, m: f64, z: Complex64, scale: HoleScale) -> Result<f64> {
    dom.validate()?;
    let geo = |msg: String| Err(Error::GeometryViolation(msg));
    if !(m > 0.0 && m <= 1.0) {
        return geo(format!("m = {m} must lie in (0, 1]"));
    }
    if !(sigma > 0.0 && sigma < dom.rho) {
        return geo(format!("sigma = {sigma} must lie in (0, rho)"));
    }
    let r = z.norm();
    if r >= dom.rho || r < sigma {
        return geo(format!("|z| = {r} must lie in [sigma, rho)"));
    }
    let hole_rho = match scale {
        HoleScale::Outer => dom.rho,
        HoleScale::Doubled => 2.0 * dom.rho,
    };
    let mut coefficient = (r / dom.rho).ln() / (sigma / dom.rho).ln();
    for (j, h) in dom.holes.iter().enumerate() {
        let dist = (z - h.center()).norm();
        if h.center().norm() - h.eps <= sigma {
            return geo(format!("hole {j} meets the central disk"));
        }
        let d = match &dom.clearances {
            Some(d) => d[j],
            None => dist,
        };
        if dist < d || d < h.eps {
            return geo(format!("z is within the clearance of hole {j}"));
        }
        if d > hole_rho {
            return geo(format!("clearance {d} of hole {j} exceeds {hole_rho}; the hole term would change sign"));
        }
        coefficient -= (d / hole_rho).ln() / (h.eps / hole_rho).ln();
    }
    Ok(coefficient * m.ln())
}

/// `(ln(|z|/ρ)/ln(σ/ρ) − Σ_j ln(d_j/ρ)/ln(ε_j/ρ)) · ln m`, an upper bound for
/// `ln|f(z)|` when `‖f‖ ≤ 1` on the holed disk and `‖f‖ ≤ m` on `|z| = σ`.
///
/// Requires `σ ≤ |z| < ρ` and `ε_j ≤ d_j ≤ ρ`. For `d_j > ρ` the hole term
/// changes sign and the formula can fail; [`jensen_bound_global`] covers
/// that range.
pub fn jensen_bound(dom: &HoleDomain, sigma: f64, m: f64, z: Complex64) -> Result<f64> {
    bound_with(dom, sigma, m, z, HoleScale::Outer)
}

/// The same bound with the hole terms measured against `2ρ`, which keeps
/// their harmonic majorants nonnegative on the whole outer circle. Valid for
/// every `z` of the holed disk with `|z| ≥ σ`, and weaker than
/// [`jensen_bound`] wherever both apply.
pub fn jensen_bound_global(dom: &HoleDomain, sigma: f64, m: f64, z: Complex64) -> Result<f64> {
    bound_with(dom, sigma, m, z, HoleScale::Doubled)
}

/// Boundary pieces of `D(0, ρ) ∖ (D(0, σ) ∪ holes)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Target {
    Inner,
    Outer,
    Hole(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub walks: usize,
}

/// Nearest boundary piece and the distance to it.
fn nearest(dom: &HoleDomain, sigma: f64, x: Complex64) -> (Target, f64) {
    let r = x.norm();
    let mut best = (Target::Outer, dom.rho - r);
    if r - sigma < best.1 {
        best = (Target::Inner, r - sigma);
    }
    for (j, h) in dom.holes.iter().enumerate() {
        let d = (x - h.center()).norm() - h.eps;
        if d < best.1 {
            best = (Target::Hole(j), d);
        }
    }
    best
}

fn walk(dom: &HoleDomain, sigma: f64, z: Complex64, absorb: f64, rng: &mut ChaCha8Rng) -> Target {
    let mut x = z;
    loop {
        let (piece, d) = nearest(dom, sigma, x);
        if d <= absorb {
            return piece;
        }
        x += Complex64::from_polar(d, rng.gen_range(0.0..TAU));
    }
}

/// Fraction of walk-on-spheres paths from `z` that end on `target`. Walk `i`
/// draws from stream `i` of the generator seeded with `seed`.
pub fn harmonic_measure_mc(
    dom: &HoleDomain,
    sigma: f64,
    z: Complex64,
    target: Target,
    walks: usize,
    seed: u64,
) -> Result<McEstimate> {
    dom.validate()?;
    if walks == 0 {
        return Err(Error::InvalidInput("need at least one walk".into()));
    }
    let absorb = DEFAULT_ABSORB_REL * dom.rho;
    let hits: usize = (0..walks)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            usize::from(walk(dom, sigma, z, absorb, &mut rng) == target)
        })
        .sum();
    let p = hits as f64 / walks as f64;
    Ok(McEstimate { estimate: p, stderr: (p * (1.0 - p) / walks as f64).sqrt(), walks })
}

/// `scale · e^{rate·z} · Π (z − a)^n`, a member of the test corpus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub name: String,
    pub scale: Complex64,
    pub rate: Complex64,
    pub factors: Vec<(Complex64, i32)>,
}

impl TestFunction {
    fn new(name: &str, factors: Vec<(Complex64, i32)>) -> Self {
        Self { name: name.into(), scale: Complex64::new(1.0, 0.0), rate: Complex64::new(0.0, 0.0), factors }
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.factors.iter().fold(self.scale * (self.rate * z).exp(), |acc, (a, n)| acc * (z - a).powi(*n))
    }

    fn with_rate(mut self, rate: f64) -> Self {
        self.rate = Complex64::new(rate, 0.0);
        self
    }
}

/// Maximum of `|f|` on a circle: dense sampling, then golden-section
/// refinement around the best sample.
fn circle_max(f: &TestFunction, center: Complex64, radius: f64) -> f64 {
    const SAMPLES: usize = 2048;
    let at = |t: f64| f.eval(center + Complex64::from_polar(radius, t)).norm();
    let (best_i, mut best) = (0..SAMPLES)
        .map(|i| (i, at(TAU * i as f64 / SAMPLES as f64)))
        .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    let h = TAU / SAMPLES as f64;
    let (mut lo, mut hi) = (TAU * best_i as f64 / SAMPLES as f64 - h, TAU * best_i as f64 / SAMPLES as f64 + h);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let (a, b) = (hi - g * (hi - lo), lo + g * (hi - lo));
        if at(a) > at(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    best = best.max(at(0.5 * (lo + hi)));
    best
}

/// `sup |f|` over the boundary of the holed disk, which bounds it on the domain.
pub fn sup_on_domain(f: &TestFunction, dom: &HoleDomain) -> f64 {
    dom.holes
        .iter()
        .map(|h| circle_max(f, h.center(), h.eps))
        .fold(circle_max(f, Complex64::new(0.0, 0.0), dom.rho), f64::max)
}

/// The versioned corpus: functions holomorphic on `dom`, each scaled so that
/// `sup_U |f| = 1`. Poles are placed at hole centres; hole-free domains get
/// entire functions in their place.
pub fn corpus(dom: &HoleDomain) -> Vec<TestFunction> {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let pole = |j: usize| dom.holes.get(j).map(|h| h.center());
    let rho = dom.rho;
    let mut out = vec![
        TestFunction::new("z^3", vec![(c(0.0, 0.0), 3)]),
        TestFunction::new("z^6", vec![(c(0.0, 0.0), 6)]),
        TestFunction::new("z^2 (z - 0.2 rho)", vec![(c(0.0, 0.0), 2), (c(0.2 * rho, 0.0), 1)]),
        TestFunction::new("z e^(2z/rho)", vec![(c(0.0, 0.0), 1)]).with_rate(2.0 / rho),
        TestFunction::new("(z - 0.3i rho)^2", vec![(c(0.0, 0.3 * rho), 2)]),
    ];
    let first = pole(0).unwrap_or(c(1.5 * rho, 0.0));
    let second = pole(1).unwrap_or(c(-1.3 * rho, 0.4 * rho));
    out.extend([
        TestFunction::new("1/(z - z1)", vec![(first, -1)]),
        TestFunction::new("z/(z - z2)", vec![(c(0.0, 0.0), 1), (second, -1)]),
        TestFunction::new("(z - 0.1 rho)/(z - z1)", vec![(c(0.1 * rho, 0.0), 1), (first, -1)]),
        TestFunction::new("z^2/((z - z1)(z - z2))", vec![(c(0.0, 0.0), 2), (first, -1), (second, -1)]),
        TestFunction::new("z (z - 0.3i rho)^2/(z - z2)^2", vec![(c(0.0, 0.0), 1), (c(0.0, 0.3 * rho), 2), (second, -2)]),
    ]);
    for f in out.iter_mut() {
        let s = sup_on_domain(f, dom);
        f.scale /= s;
    }
    out
}

/// Outcome of checking `ln|f| ≤ jensen_bound` on a grid.
#[derive(Clone, Debug, Serialize)]
pub struct BoundReport {
    pub name: String,
    pub m: f64,
    /// Grid points where [`jensen_bound`] applies (every `d_j ≤ ρ`).
    pub points: usize,
    pub violations: usize,
    /// `min (bound − ln|f|)` over those points.
    pub worst_slack: f64,
    /// All admissible grid points, checked against [`jensen_bound_global`].
    pub global_points: usize,
    pub global_violations: usize,
    pub global_worst_slack: f64,
}

/// Admissible polar grid of about `grid` points in `σ ≤ |z| < ρ` outside the holes.
pub fn polar_grid(dom: &HoleDomain, sigma: f64, grid: usize) -> Vec<Complex64> {
    let radial = ((grid as f64).sqrt() * 1.25).ceil() as usize;
    let angular = grid.div_ceil(radial);
    let mut pts = Vec::with_capacity(grid);
    for i in 0..radial {
        let r = sigma + (dom.rho - sigma) * (i as f64 + 0.5) / radial as f64;
        for j in 0..angular {
            let z = Complex64::from_polar(r, TAU * (j as f64 + 0.5 * (i % 2) as f64) / angular as f64);
            if dom.contains(z) {
                pts.push(z);
            }
        }
    }
    pts
}

/// Tolerance below which a negative slack is treated as rounding.
pub const SLACK_TOL: f64 = 1e-12;

pub fn verify_bound_on_function(dom: &HoleDomain, sigma: f64, f: &TestFunction, grid: usize) -> Result<BoundReport> {
    let m = circle_max(f, Complex64::new(0.0, 0.0), sigma).min(1.0);
    let pts = polar_grid(dom, sigma, grid);
    let mut rep = BoundReport {
        name: f.name.clone(),
        m,
        points: 0,
        violations: 0,
        worst_slack: f64::INFINITY,
        global_points: pts.len(),
        global_violations: 0,
        global_worst_slack: f64::INFINITY,
    };
    for z in &pts {
        let value = f.eval(*z).norm().ln();
        let global = jensen_bound_global(dom, sigma, m, *z)? - value;
        rep.global_violations += usize::from(global < -SLACK_TOL);
        rep.global_worst_slack = rep.global_worst_slack.min(global);
        let in_range = dom.holes.iter().all(|h| (z - h.center()).norm() <= dom.rho);
        if in_range {
            let slack = jensen_bound(dom, sigma, m, *z)? - value;
            rep.points += 1;
            rep.violations += usize::from(slack < -SLACK_TOL);
            rep.worst_slack = rep.worst_slack.min(slack);
        }
    }
    Ok(rep)
}

/// Two holes used by the examples and the acceptance suite.
pub fn reference_domain() -> HoleDomain {
    HoleDomain {
        rho: 1.0,
        holes: vec![Hole { re: 0.55, im: 0.1, eps: 0.05 }, Hole { re: -0.35, im: -0.45, eps: 0.08 }],
        clearances: None,
    }
}
