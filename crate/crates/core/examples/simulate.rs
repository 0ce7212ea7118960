//! Draw a ground truth, synthesize comparisons on a random graph, refit and
//! measure the reconstruction error.
//!
//! Run with `cargo run --example simulate`.

use gbt_core::sim::{erdos_renyi_graph, norm_error, sample_ground_truth, stage_rng, synthesize_comparisons};
use gbt_core::solver::map_estimate;
use gbt_core::{PriorConfig, RootLaw, SolverOptions};

pub fn run_example() -> Result<Vec<(f64, f64)>, Box<dyn std::error::Error>> {
    let seed = 42;
    let law = RootLaw::knary(5)?;
    let prior = PriorConfig::new(1.0)?;
    let truth = sample_ground_truth(60, 1.0, &mut stage_rng(seed, 0))?;

    let mut curve = Vec::new();
    for p_c in [0.05, 0.2, 0.8] {
        let pairs = erdos_renyi_graph(truth.len(), p_c, &mut stage_rng(seed, 1))?;
        let r = synthesize_comparisons(&law, &truth, &pairs, &mut stage_rng(seed, 2))?;
        let (fit, _) = map_estimate(&law, &prior, &r, &SolverOptions::default())?;
        let err = norm_error(&fit, &truth)?;
        println!("p_c {p_c:<5} {:>5} comparisons  NormError {err:.4}", r.len());
        curve.push((p_c, err));
    }
    Ok(curve)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example().map(|_| ())
}
