//! Two-constants bound on a disk with holes, checked on the test corpus,
//! and a walk-on-spheres estimate of harmonic measure.

use annulus_bnf::potential::{corpus, harmonic_measure_mc, jensen_bound_global, reference_domain, verify_bound_on_function, HoleDomain, Target};
use num_complex::Complex64;

fn main() -> annulus_bnf::Result<()> {
    let dom = reference_domain();
    let z = Complex64::new(-0.2, 0.5);
    println!("ln bound at {z} with σ = 0.1, m = 1e-4: {:.4}", jensen_bound_global(&dom, 0.1, 1e-4, z)?);
    for f in corpus(&dom) {
        let rep = verify_bound_on_function(&dom, 0.1, &f, 1000)?;
        println!("{:<24} violations {} / {}  worst slack {:.3}", rep.name, rep.global_violations, rep.global_points, rep.global_worst_slack);
    }
    let disk = HoleDomain::disk(1.0);
    let est = harmonic_measure_mc(&disk, 0.1, Complex64::new(0.5, 0.0), Target::Inner, 100_000, 7)?;
    println!("harmonic measure of |z| = 0.1 from 0.5: {:.4} ± {:.4} (exact {:.4})", est.estimate, est.stderr, 0.5f64.ln() / 0.1f64.ln());
    Ok(())
}
