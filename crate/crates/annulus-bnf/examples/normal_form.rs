//! Normal-form coefficients from both engines and the Lindstedt series.

use annulus_bnf::bnf::{bnf_direct_with_box, bnf_quantified_with_box, lindstedt_normal_form, DEFAULT_PRE_STEPS};
use annulus_bnf::maps::GeneratingMap;
use annulus_bnf::series::{FourierTaylorSeries, RadialSeries, StripParams};

fn main() -> annulus_bnf::Result<()> {
    let golden = (5f64.sqrt() - 1.0) / 2.0;
    let mut f = FourierTaylorSeries::cos_term(10, 24, 2, 1, 1e-3);
    f.add_sin(3, 2, 5e-4);
    let m = GeneratingMap::unchecked(RadialSeries::twist(golden, 1.0, 2), f.clone(), StripParams::new(0.05, 0.05)?);
    let direct = bnf_direct_with_box(&m, 10, Some(24))?;
    let quantified = bnf_quantified_with_box(&m, 10, DEFAULT_PRE_STEPS, Some(24))?;
    let oracle = lindstedt_normal_form(m.omega(), &f, 10)?;
    println!("{:>3} {:>22} {:>22} {:>22}", "n", "direct", "quantified", "lindstedt");
    for n in 0..=10 {
        println!("{n:>3} {:>22.15e} {:>22.15e} {:>22.15e}", direct.xi.coeff(n), quantified.xi.coeff(n), oracle.coeff(n));
    }
    println!("remainder valuations of the quantified run: {:?}", quantified.valuations);
    Ok(())
}
