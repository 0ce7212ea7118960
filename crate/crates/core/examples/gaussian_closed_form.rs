//! The Gaussian root law makes the MAP estimate the solution of a linear
//! system. Compare it with Newton and show that it scales linearly with the
//! data, which is why it cannot be Lipschitz-resilient.
//!
//! Run with `cargo run --example gaussian_closed_form`.

use gbt_core::properties::gaussian_scaling_probe;
use gbt_core::sim::{erdos_renyi_graph, sample_ground_truth, stage_rng, synthesize_comparisons};
use gbt_core::solver::{map_estimate, map_estimate_gaussian};
use gbt_core::{PriorConfig, RootLaw, SolverOptions};

pub fn run_example() -> Result<f64, Box<dyn std::error::Error>> {
    let law = RootLaw::gaussian(1.0)?;
    let prior = PriorConfig::new(1.0)?;
    let truth = sample_ground_truth(40, 1.0, &mut stage_rng(5, 0))?;
    let pairs = erdos_renyi_graph(40, 0.2, &mut stage_rng(5, 1))?;
    let r = synthesize_comparisons(&law, &truth, &pairs, &mut stage_rng(5, 2))?;

    let closed = map_estimate_gaussian(1.0, &prior, &r)?;
    let (newton, report) = map_estimate(&law, &prior, &r, &SolverOptions::default())?;
    let gap = closed.distance(&newton)?;
    println!("linear solve vs {} Newton steps: distance {gap:.2e}", report.iterations);

    let points = gaussian_scaling_probe(&law, &prior, &r, &[10.0, 100.0, 1000.0], &SolverOptions::default())?;
    for p in &points {
        println!("data x{:<6} score change / edits {:.2}", p.lambda, p.ratio);
    }
    Ok(gap)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example().map(|_| ())
}
