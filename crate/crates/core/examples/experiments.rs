//! The three reconstruction experiments at a small scale: graph sparsity,
//! comparison granularity and prior strength.
//!
//! Run with `cargo run --release --example experiments`.

use gbt_core::sim::{run_experiment, Experiment, ExperimentConfig};

pub fn run_example() -> Result<usize, Box<dyn std::error::Error>> {
    let mut points = 0;
    for which in [Experiment::Sparsity, Experiment::Discretization, Experiment::Regularization] {
        let mut config = ExperimentConfig::desk(which);
        config.alternatives = 30;
        config.seeds = (1..=4).collect();
        let result = run_experiment(which, &config)?;
        println!("{}", which.name());
        for p in &result.points {
            println!("  {:<12} {:.4} ± {:.4}", p.param, p.mean, p.std_error());
        }
        for note in &result.notes {
            println!("  note: {note}");
        }
        points += result.points.len();
    }
    Ok(points)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example().map(|_| ())
}
