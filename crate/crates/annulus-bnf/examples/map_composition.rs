//! Generating-function maps evaluated pointwise and conjugated as series.
//! The last part finds the time-one flow behind a near-identity map.

use annulus_bnf::maps::{conjugate_generating, interpolate_flow, GeneratingMap, PhasePoint};
use annulus_bnf::series::{FourierTaylorSeries, RadialSeries, StripParams};

fn main() -> annulus_bnf::Result<()> {
    let m = GeneratingMap::standard_map(0.5, 8, 8);
    let x = PhasePoint::new(0.1, 0.2);
    let y = m.eval_map(x)?;
    println!("standard map K = 0.5: {x:?} -> {y:?}");
    println!("inverse recovers the start: {:?}", m.invert_map(y)?);

    let strip = StripParams::new(0.1, 0.05)?;
    let twist = GeneratingMap::unchecked(RadialSeries::twist(0.31, 1.0, 8), FourierTaylorSeries::cos_term(8, 8, 2, 1, 1e-4), strip);
    let y_conj = FourierTaylorSeries::sin_term(8, 8, 2, 2, 1e-4);
    let conj = conjugate_generating(&twist, &y_conj, 8)?;
    println!("conjugated perturbation size: {:.3e}", conj.f().weighted_norm(strip));

    let small = GeneratingMap::unchecked(RadialSeries::new(vec![0.0]), FourierTaylorSeries::cos_term(8, 8, 2, 1, 1e-4), strip);
    let (hamiltonian, residual) = interpolate_flow(&small, 6)?;
    println!("flow interpolation: {} nonzero modes, residual {residual:.3e}", hamiltonian.nonzero_half().len());
    Ok(())
}
