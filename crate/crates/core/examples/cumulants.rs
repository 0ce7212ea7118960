//! Cumulant-generating function of every root law, with the tilted mean and
//! variance, and a few tilted draws.
//!
//! Run with `cargo run --example cumulants`.

use gbt_core::RootLaw;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> Result<usize, Box<dyn std::error::Error>> {
    let laws: Vec<RootLaw> = ["bernoulli", "knary:K=5", "poisson:lambda=1", "gaussian:sigma0sq=1", "uniform", "beta:beta=0.5", "beta2"]
        .iter()
        .map(|s| s.parse())
        .collect::<Result<_, _>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut rows = 0;
    println!("{:<22} {:>6} {:>10} {:>10} {:>10}  draws", "law", "theta", "Phi", "Phi'", "Phi''");
    for law in &laws {
        for theta in [0.0, 0.5, 2.0] {
            let c = law.cgf_triple(theta);
            let draws: Vec<String> = (0..4).map(|_| format!("{:+.2}", law.sample_comparison(theta, &mut rng))).collect();
            println!(
                "{:<22} {theta:>6.2} {:>10.5} {:>10.5} {:>10.5}  {}",
                law.to_string(),
                c.value,
                c.first,
                c.second,
                draws.join(" ")
            );
            rows += 1;
        }
    }
    Ok(rows)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example().map(|_| ())
}
