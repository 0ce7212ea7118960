//! Fit scores from a handful of graded comparisons and print the ranking.
//!
//! Run with `cargo run --example fit_scores`.

use gbt_core::solver::map_estimate;
use gbt_core::{ComparisonMatrix, PriorConfig, RootLaw, SolverOptions};

const DATA: &str = "\
a,b,r
espresso,latte,0.6
espresso,mocha,0.2
latte,mocha,-0.3
mocha,chai,0.9
latte,chai,0.4
";

pub fn run_example() -> Result<Vec<(String, f64)>, Box<dyn std::error::Error>> {
    let law = RootLaw::uniform();
    let r = ComparisonMatrix::read_csv(DATA.as_bytes(), Some(&law))?;
    let prior = PriorConfig::new(1.0)?;
    let (scores, report) = map_estimate(&law, &prior, &r, &SolverOptions::default())?;

    println!(
        "{} Newton steps, gradient norm {:.2e}, scores within {:.2e} of the optimum",
        report.iterations, report.final_gradient_norm, report.certified_error
    );
    let mut ranking: Vec<(String, f64)> =
        r.alternatives().ids().iter().cloned().zip(scores.values().iter().copied()).collect();
    ranking.sort_by(|x, y| y.1.total_cmp(&x.1));
    for (id, theta) in &ranking {
        println!("{id:>10} {theta:+.4}");
    }
    Ok(ranking)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example().map(|_| ())
}
