//! Property diagnostics: monotonicity, Lipschitz-resilience, the neutral
//! comparison and the sign structure of the inverse Hessian.
//!
//! Run with `cargo run --example diagnostics`.

use gbt_core::properties::{
    inverse_hessian_structure, measure_resilience, monotonicity_sweep, neutral_comparison, random_instance, ProbeConfig,
};
use gbt_core::solver::{hessian, map_estimate};
use gbt_core::{PriorConfig, RootLaw, SolverOptions};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> Result<bool, Box<dyn std::error::Error>> {
    let law = RootLaw::beta_two();
    let prior = PriorConfig::new(1.0)?;
    let opts = SolverOptions::default().with_tolerance(1e-10);

    let sweep = monotonicity_sweep(&law, &prior, 10, 1, &opts)?;
    println!("monotonicity: {}/{} strict, {} violated", sweep.strict, sweep.checks, sweep.violated);

    let probe = measure_resilience(&law, &prior, &ProbeConfig { probes: 50, ..ProbeConfig::default() })?;
    println!("resilience: worst ratio {:.3} against bound {:.3}", probe.observed_ratio, probe.bound);

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let r = random_instance(&law, 6, 0.0, &mut rng)?;
    let (a, b) = (0..6)
        .flat_map(|a| (a + 1..6).map(move |b| (a, b)))
        .find(|&(a, b)| !r.contains(a, b))
        .expect("a spanning tree on six nodes leaves pairs open");
    let neutral = neutral_comparison(&law, &prior, &r, a, b, &opts)?;
    println!("neutral comparison for ({a}, {b}): {:+.4}", neutral.value);

    let (theta, _) = map_estimate(&law, &prior, &r, &opts)?;
    let m = inverse_hessian_structure(&hessian(&law, &prior, &r, &theta)?)?;
    println!(
        "inverse Hessian: min off-diagonal {:.3e}, min diagonal gap {:.3e}",
        m.min_off_diagonal, m.min_diagonal_gap
    );
    Ok(sweep.passed() && probe.within_bound() && m.holds())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example().map(|_| ())
}
