//! Resonant counterexample at the 8/13 convergent of the golden mean. The
//! classifier is run on points of the separatrix box of its hyperbolic orbit.

use annulus_bnf::maps::GeneratingMap;
use annulus_bnf::measure::{
    build_counterexample, classify_orbit, resonant_hyperbolic_orbit, separatrix_box, ClassifierConfig, PeriodicOrbit,
    DEFAULT_CONE_FACTOR,
};
use annulus_bnf::series::{RadialSeries, StripParams};

fn main() -> annulus_bnf::Result<()> {
    let golden = (5f64.sqrt() - 1.0) / 2.0;
    let base = GeneratingMap::integrable(RadialSeries::twist(golden, 1.0, 2), 2, StripParams::new(0.5, 1.0)?);
    let ce = build_counterexample(golden, &base, &[4], 0.5)?;
    let term = &ce.terms[0];
    println!("{}/{}: amplitude {:.3e}, predicted centre {:.6}", term.p, term.q, term.amplitude, term.center);
    let PeriodicOrbit::Hyperbolic(orbit) = resonant_hyperbolic_orbit(&ce.map, term)? else {
        println!("only an elliptic orbit was found");
        return Ok(());
    };
    println!("hyperbolic orbit through {:?}, eigenvalues {:?}", orbit.points[0], orbit.eigenvalues);
    let bx = separatrix_box(&orbit, DEFAULT_CONE_FACTOR);
    println!("separatrix box area {:.3e}", bx.area);
    for x in bx.samples(4) {
        let d = classify_orbit(&ce.map, x, &ClassifierConfig::default());
        println!("  ({:.5}, {:.6}) -> {:?} ({})", x.theta, x.r, d.classification, d.reason);
    }
    Ok(())
}
