//! Default KAM schedule on a weak standard map near the golden circle.

use annulus_bnf::kam::{default_schedule, kam_iterate, KamState, SCHEDULE_ENVELOPE_A};
use annulus_bnf::series::{FourierTaylorSeries, RadialSeries, StripParams};

fn main() -> annulus_bnf::Result<()> {
    let golden = (5f64.sqrt() - 1.0) / 2.0;
    let f = FourierTaylorSeries::cos_term(8, 40, 0, 1, 1e-5 / (4.0 * std::f64::consts::PI.powi(2)));
    let start = KamState::new(RadialSeries::twist(golden, 1.0, 8), f, StripParams::new(0.1, 0.002)?, 1.0);
    let schedule = default_schedule(4, 4, 0.1, SCHEDULE_ENVELOPE_A);
    let history = kam_iterate(&start, &schedule)?;
    for (entry, state) in schedule.iter().zip(&history.states[1..]) {
        println!(
            "N = {:>3}  remainder {:.3e}  envelope {:.3e}  excluded zones {}",
            entry.n,
            state.norms.last().copied().unwrap_or(0.0),
            entry.eps_bar,
            state.excluded.len()
        );
    }
    Ok(())
}
