//! Products and Poisson brackets of Fourier-Taylor series, then a JSON round trip.

use annulus_bnf::series::{FourierTaylorSeries, StripParams};

fn main() -> annulus_bnf::Result<()> {
    let a = FourierTaylorSeries::cos_term(6, 8, 1, 1, 1.0);
    let b = FourierTaylorSeries::sin_term(6, 8, 2, 2, 0.5);
    let product = a.mul(&b);
    let (theta, r) = (0.3, 0.2);
    println!("(a b)(θ, r) = {:.12}", product.eval(theta, r));
    println!("a(θ, r) b(θ, r) = {:.12}", a.eval(theta, r) * b.eval(theta, r));

    let bracket = a.poisson_bracket(&b);
    println!("{{a, b}} at (θ, r) = {:.12}", bracket.eval(theta, r));

    let norm = product.weighted_norm(StripParams::new(0.1, 0.5)?);
    println!("weighted norm on h = 0.1, ρ = 0.5: {norm:.6}");

    let text = serde_json::to_string(&product.to_file())?;
    let back = FourierTaylorSeries::from_file(&serde_json::from_str(&text)?)?;
    println!("JSON round trip exact: {}", back == product);
    Ok(())
}
