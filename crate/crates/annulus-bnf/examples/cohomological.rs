//! Solve `[Ω]·Y = T_N F − ⟨F⟩` mode by mode and list the resonance zones
//! of a quadratic twist.

use annulus_bnf::divisors::{
    cohomological_residual, continued_fraction_convergents, locate_resonances, solve_cohomological, zones_to_csv,
    DEFAULT_DIVISOR_FLOOR,
};
use annulus_bnf::series::{FourierTaylorSeries, RadialSeries};

fn main() -> annulus_bnf::Result<()> {
    let golden = (5f64.sqrt() - 1.0) / 2.0;
    let omega = RadialSeries::new(vec![0.0, golden]);
    let mut f = FourierTaylorSeries::cos_term(4, 12, 0, 1, 1.0);
    f.add_sin(2, 7, 0.3);
    let y = solve_cohomological(&omega, &f, 12, DEFAULT_DIVISOR_FLOOR)?;
    println!("residual at truncation order 12: {:.2e}", cohomological_residual(&omega, &f, &y, 12));
    println!("convergents of the golden mean: {:?}", continued_fraction_convergents(golden, 6)?);

    let twist = RadialSeries::twist(0.0, 1.0, 2);
    let zones = locate_resonances(&twist, 5, 100.0, 1.0, (0.05, 0.95))?;
    print!("{}", zones_to_csv(&zones));
    Ok(())
}
