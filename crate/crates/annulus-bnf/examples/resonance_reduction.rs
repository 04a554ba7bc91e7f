//! Pendulum model of a 1/2 resonance and the residue identity on two circles.
//! With a path argument the map is also written there as JSON.

use annulus_bnf::divisors::ResonanceZone;
use annulus_bnf::maps::GeneratingMap;
use annulus_bnf::resonance::hole::DEFAULT_NODES;
use annulus_bnf::resonance::{flatness_bound, pendulum_reduce, residue_check};
use annulus_bnf::series::{FourierTaylorSeries, RadialSeries, StripParams};

fn main() -> annulus_bnf::Result<()> {
    let mut f = FourierTaylorSeries::cos_term(6, 8, 0, 2, 1e-5);
    f.add_cos(0, 1, 1e-6);
    f.add_sin(1, 3, 1e-6);
    let m = GeneratingMap::unchecked(RadialSeries::twist(0.5, 1.0, 6), f, StripParams::new(0.1, 0.05)?);
    if let Some(path) = std::env::args().nth(1) {
        std::fs::write(&path, serde_json::to_string_pretty(&m.to_file())?)?;
    }
    let red = pendulum_reduce(&m, &ResonanceZone { p: 1, q: 2, center: 0.0, radius: 0.02 })?;
    println!("potential size {:.3e}, cutoff radius {:.4}", red.eps1, red.lambda);
    for t in [red.lambda, 2.0 * red.lambda] {
        let check = residue_check(&red, t, DEFAULT_NODES)?;
        println!("t = {t:.4}: contour {:.12e}  closed form {:.12e}", check.contour.re, check.formula);
    }
    println!("flatness bound at ν = 1e-12: {:.4}", flatness_bound(1e-12, &red, 0.1)?);
    Ok(())
}
