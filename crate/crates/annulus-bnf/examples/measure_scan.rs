//! Non-regular area around r = 0 for two standard-map strengths.

use annulus_bnf::maps::GeneratingMap;
use annulus_bnf::measure::{measure_scan, scaling_exponent, ClassifierConfig};

fn main() -> annulus_bnf::Result<()> {
    let cfg = ClassifierConfig { iterations: 5000, tol: 1e-6, ..Default::default() };
    let amps = [0.32, 0.02];
    let mut areas = vec![];
    for k in amps {
        let rep = measure_scan(&GeneratingMap::standard_map(k, 2, 2), &[0.1, 0.25], (32, 80), &cfg)?;
        print!("K = {k}\n{}", rep.to_csv());
        areas.push(rep.m_estimates[1]);
    }
    println!("exponent of m(0.25) in K: {:.3}", scaling_exponent(&amps, &areas));
    Ok(())
}
