//! Synthetic data and the three reconstruction experiments.
//!
//! Every seed owns one [`ChaCha8Rng`] per purpose (ground truth, graph,
//! comparisons), so changing a sweep never shifts the random numbers of
//! another stage. Graphs draw one uniform per pair in a fixed order and keep
//! the pairs whose uniform falls below `p_c`; sweeps over `p_c` therefore
//! see nested graphs built from the same comparisons.

use std::io::Write;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::comparisons::{AlternativeSet, ComparisonMatrix};
use crate::error::{Error, Result};
use crate::rootlaw::RootLaw;
use crate::solver::{map_estimate, PriorConfig, ScoreVector, SolverOptions};

const STREAM_TRUTH: u64 = 0;
const STREAM_GRAPH: u64 = 1;
const STREAM_COMPARISONS: u64 = 2;

/// Random source for one stage of one seed.
pub fn stage_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn check_probability(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("edge probability must lie in [0, 1], got {p}")));
    }
    Ok(())
}

/// One uniform per unordered pair `(a, b)`, `a < b`, in lexicographic order.
fn pair_uniforms<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<(usize, usize, f64)> {
    let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for a in 0..n {
        for b in a + 1..n {
            out.push((a, b, rng.random::<f64>()));
        }
    }
    out
}

/// Erdős–Rényi comparison set: each unordered pair kept independently with probability `p_c`.
pub fn erdos_renyi_graph<R: Rng + ?Sized>(n: usize, p_c: f64, rng: &mut R) -> Result<Vec<(usize, usize)>> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("need at least two alternatives, got {n}")));
    }
    check_probability(p_c)?;
    Ok(pair_uniforms(n, rng)
        .into_iter()
        .filter(|&(_, _, u)| u < p_c)
        .map(|(a, b, _)| (a, b))
        .collect())
}

/// Connected comparison set: a random spanning tree plus Erdős–Rényi extras.
pub fn random_connected_graph<R: Rng + ?Sized>(n: usize, p_extra: f64, rng: &mut R) -> Result<Vec<(usize, usize)>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut pairs: Vec<(usize, usize)> = (1..n)
        .map(|i| {
            let j = rng.random_range(0..i);
            let (a, b) = (order[i], order[j]);
            (a.min(b), a.max(b))
        })
        .collect();
    for (a, b) in erdos_renyi_graph(n, p_extra, rng)? {
        if !pairs.contains(&(a, b)) {
            pairs.push((a, b));
        }
    }
    pairs.sort_unstable();
    Ok(pairs)
}

/// `n` i.i.d. draws from `N(0, σ†²)` over alternatives `"0".."n-1"`.
pub fn sample_ground_truth<R: Rng + ?Sized>(n: usize, sigma_dagger_sq: f64, rng: &mut R) -> Result<ScoreVector> {
    if !(sigma_dagger_sq.is_finite() && sigma_dagger_sq > 0.0) {
        return Err(Error::Parameter(format!("ground-truth variance must be positive, got {sigma_dagger_sq}")));
    }
    let normal = Normal::new(0.0, sigma_dagger_sq.sqrt()).map_err(|e| Error::Parameter(e.to_string()))?;
    let values = (0..n).map(|_| normal.sample(rng)).collect();
    ScoreVector::new(Arc::new(AlternativeSet::numbered(n)?), values)
}

/// One tilted draw per pair at `θ†_a - θ†_b`, in the order given.
pub fn synthesize_comparisons<R: Rng + ?Sized>(
    law: &RootLaw,
    truth: &ScoreVector,
    pairs: &[(usize, usize)],
    rng: &mut R,
) -> Result<ComparisonMatrix> {
    let theta = truth.values();
    let mut r = ComparisonMatrix::new(Arc::clone(truth.alternatives()));
    for &(a, b) in pairs {
        if a >= theta.len() || b >= theta.len() {
            return Err(Error::Dimension { expected: theta.len(), got: a.max(b) + 1 });
        }
        r.insert(a, b, law.sample_comparison(theta[a] - theta[b], rng))?;
    }
    Ok(r)
}

/// `‖Θ̂ - Θ†‖² / ‖Θ†‖²`.
pub fn norm_error(estimate: &ScoreVector, truth: &ScoreVector) -> Result<f64> {
    let denom: f64 = truth.values().iter().map(|v| v * v).sum();
    if denom == 0.0 {
        return Err(Error::Numeric("normalized error is undefined for zero ground truth".into()));
    }
    Ok(estimate.distance(truth)?.powi(2) / denom)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Sparsity,
    Discretization,
    Regularization,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Self::Sparsity => "sparsity",
            Self::Discretization => "discretization",
            Self::Regularization => "regularization",
        }
    }
}

impl std::str::FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sparsity" | "i" => Ok(Self::Sparsity),
            "discretization" | "ii" => Ok(Self::Discretization),
            "regularization" | "iii" => Ok(Self::Regularization),
            _ => Err(Error::InvalidArgument(format!("unknown experiment `{s}`"))),
        }
    }
}

pub const DESK_ALTERNATIVES: usize = 50;
pub const FULL_ALTERNATIVES: usize = 500;
pub const DESK_PC_SWEEP: [f64; 5] = [0.05, 0.1, 0.2, 0.4, 0.8];
pub const DESK_K_SWEEP: [u32; 5] = [2, 3, 5, 9, 21];
/// Prior precisions `1/σ²`; zero is the unregularized estimator.
pub const DESK_PRECISION_SWEEP: [f64; 7] = [0.0, 0.01, 0.03, 0.1, 0.3, 1.0, 3.0];

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub alternatives: usize,
    /// Edge probability; ignored by the sparsity sweep, which uses `sweep`.
    pub p_c: f64,
    pub sigma_dagger_sq: f64,
    pub gen_law: RootLaw,
    /// Estimation models; the discretization sweep runs over these.
    pub fit_laws: Vec<RootLaw>,
    pub prior: PriorConfig,
    pub seeds: Vec<u64>,
    /// Edge probabilities (sparsity) or prior precisions (regularization).
    pub sweep: Vec<f64>,
    pub solver: SolverOptions,
}

impl ExperimentConfig {
    /// Desk-scale defaults: 50 alternatives, seeds 1..=10, Uniform data, σ² = σ†² = 1.
    pub fn desk(which: Experiment) -> Self {
        let uniform = RootLaw::uniform();
        let mut config = Self {
            alternatives: DESK_ALTERNATIVES,
            p_c: 0.2,
            sigma_dagger_sq: 1.0,
            gen_law: uniform.clone(),
            fit_laws: vec![uniform],
            prior: PriorConfig::new(1.0).expect("unit prior"),
            seeds: (1..=10).collect(),
            sweep: Vec::new(),
            solver: SolverOptions::default(),
        };
        match which {
            Experiment::Sparsity => config.sweep = DESK_PC_SWEEP.to_vec(),
            Experiment::Discretization => {
                let mut laws: Vec<RootLaw> = DESK_K_SWEEP
                    .iter()
                    .map(|&k| RootLaw::knary(k).expect("valid K"))
                    .collect();
                laws.push(RootLaw::uniform());
                config.fit_laws = laws;
            }
            Experiment::Regularization => config.sweep = DESK_PRECISION_SWEEP.to_vec(),
        }
        config
    }

    fn validate(&self) -> Result<()> {
        if self.alternatives < 2 {
            return Err(Error::InvalidArgument("experiments need at least two alternatives".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidArgument("no seeds given".into()));
        }
        if self.fit_laws.is_empty() {
            return Err(Error::InvalidArgument("no fit model given".into()));
        }
        check_probability(self.p_c)
    }
}

/// One sweep point: per-seed errors and their mean and sample standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPoint {
    pub param: String,
    pub per_seed: Vec<(u64, f64)>,
    /// Seeds whose solve failed, with the error message.
    pub failures: Vec<(u64, String)>,
    pub mean: f64,
    pub std: f64,
}

impl ExperimentPoint {
    fn from_outcomes(param: String, outcomes: Vec<(u64, Result<f64>)>) -> Self {
        let mut per_seed = Vec::new();
        let mut failures = Vec::new();
        for (seed, outcome) in outcomes {
            match outcome {
                Ok(v) => per_seed.push((seed, v)),
                Err(e) => failures.push((seed, e.to_string())),
            }
        }
        let values: Vec<f64> = per_seed.iter().map(|&(_, v)| v).collect();
        let (mean, std) = mean_std(&values);
        Self { param, per_seed, failures, mean, std }
    }

    pub fn failed(&self) -> bool {
        !self.failures.is_empty()
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        self.std / (self.per_seed.len() as f64).sqrt()
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub experiment: Experiment,
    pub config: ExperimentConfig,
    pub points: Vec<ExperimentPoint>,
    pub notes: Vec<String>,
}

impl ExperimentResult {
    pub fn means(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.mean).collect()
    }

    pub fn point(&self, param: &str) -> Option<&ExperimentPoint> {
        self.points.iter().find(|p| p.param == param)
    }

    pub fn has_failures(&self) -> bool {
        self.points.iter().any(ExperimentPoint::failed)
    }

    /// `param,seed,norm_error`
    pub fn write_per_seed_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["param", "seed", "norm_error"])?;
        for p in &self.points {
            for (seed, v) in &p.per_seed {
                wtr.write_record([p.param.as_str(), &seed.to_string(), &v.to_string()])?;
            }
        }
        wtr.flush()?;
        Ok(())
    }

    /// `param,mean,std`
    pub fn write_summary_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["param", "mean", "std"])?;
        for p in &self.points {
            wtr.write_record([p.param.as_str(), &p.mean.to_string(), &p.std.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Ground truth, all pair uniforms and a full set of comparisons for one seed.
struct SeedData {
    truth: ScoreVector,
    uniforms: Vec<(usize, usize, f64)>,
    full: Vec<f64>,
}

impl SeedData {
    fn draw(config: &ExperimentConfig, seed: u64) -> Result<Self> {
        let truth = sample_ground_truth(config.alternatives, config.sigma_dagger_sq, &mut stage_rng(seed, STREAM_TRUTH))?;
        let uniforms = pair_uniforms(config.alternatives, &mut stage_rng(seed, STREAM_GRAPH));
        let mut rng = stage_rng(seed, STREAM_COMPARISONS);
        let theta = truth.values();
        let full = uniforms
            .iter()
            .map(|&(a, b, _)| config.gen_law.sample_comparison(theta[a] - theta[b], &mut rng))
            .collect();
        Ok(Self { truth, uniforms, full })
    }

    fn comparisons(&self, p_c: f64) -> Result<ComparisonMatrix> {
        ComparisonMatrix::from_triples(
            Arc::clone(self.truth.alternatives()),
            self.uniforms
                .iter()
                .zip(&self.full)
                .filter(|((_, _, u), _)| *u < p_c)
                .map(|(&(a, b, _), &r)| (a, b, r)),
        )
    }
}

fn fit_error(law: &RootLaw, prior: &PriorConfig, r: &ComparisonMatrix, truth: &ScoreVector, opts: &SolverOptions) -> Result<f64> {
    let estimate = if r.is_empty() {
        ScoreVector::zeros(Arc::clone(r.alternatives()))
    } else {
        map_estimate(law, prior, r, opts)?.0
    };
    norm_error(&estimate, truth)
}

fn run_seeds<F>(config: &ExperimentConfig, per_seed: F) -> Vec<Vec<Result<f64>>>
where
    F: Fn(u64) -> Vec<Result<f64>> + Sync,
{
    config.seeds.par_iter().map(|&seed| per_seed(seed)).collect()
}

fn collect_points(config: &ExperimentConfig, params: Vec<String>, by_seed: Vec<Vec<Result<f64>>>) -> Vec<ExperimentPoint> {
    let mut columns: Vec<Vec<(u64, Result<f64>)>> = params.iter().map(|_| Vec::new()).collect();
    for (&seed, row) in config.seeds.iter().zip(by_seed) {
        for (col, outcome) in columns.iter_mut().zip(row) {
            col.push((seed, outcome));
        }
    }
    params
        .into_iter()
        .zip(columns)
        .map(|(param, outcomes)| ExperimentPoint::from_outcomes(param, outcomes))
        .collect()
}

fn broadcast_err(n: usize, err: Error) -> Vec<Result<f64>> {
    let msg = err.to_string();
    (0..n).map(|_| Err(Error::Numeric(msg.clone()))).collect()
}

/// Experiment (i): error against edge probability, one fit model and prior.
pub fn run_experiment_sparsity(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    if config.sweep.is_empty() {
        return Err(Error::InvalidArgument("sparsity sweep needs edge probabilities".into()));
    }
    for &p in &config.sweep {
        check_probability(p)?;
    }
    let law = &config.fit_laws[0];
    let by_seed = run_seeds(config, |seed| match SeedData::draw(config, seed) {
        Ok(data) => config
            .sweep
            .iter()
            .map(|&p| fit_error(law, &config.prior, &data.comparisons(p)?, &data.truth, &config.solver))
            .collect(),
        Err(e) => broadcast_err(config.sweep.len(), e),
    });
    let params = config.sweep.iter().map(|p| p.to_string()).collect();
    Ok(ExperimentResult {
        experiment: Experiment::Sparsity,
        config: config.clone(),
        points: collect_points(config, params, by_seed),
        notes: Vec::new(),
    })
}

/// Experiment (ii): one data set per seed, fitted by every model in `fit_laws`.
///
/// Continuous comparisons are passed to discrete models unchanged: their loss
/// is linear in `r`, so any value in the hull is admissible.
pub fn run_experiment_discretization(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let by_seed = run_seeds(config, |seed| {
        let data = SeedData::draw(config, seed).and_then(|d| d.comparisons(config.p_c).map(|r| (d, r)));
        match data {
            Ok((data, r)) => config
                .fit_laws
                .iter()
                .map(|law| fit_error(law, &config.prior, &r, &data.truth, &config.solver))
                .collect(),
            Err(e) => broadcast_err(config.fit_laws.len(), e),
        }
    });
    let params = config.fit_laws.iter().map(|l| l.to_string()).collect();
    Ok(ExperimentResult {
        experiment: Experiment::Discretization,
        config: config.clone(),
        points: collect_points(config, params, by_seed),
        notes: Vec::new(),
    })
}

/// Experiment (iii): error against the prior precision `1/σ²`.
///
/// The zero-precision point fits the unregularized estimator on the largest
/// connected component only, scoring it against the ground truth restricted
/// to that component; the restriction is reported in `notes`.
pub fn run_experiment_regularization(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    if config.sweep.is_empty() {
        return Err(Error::InvalidArgument("regularization sweep needs prior precisions".into()));
    }
    let priors = config
        .sweep
        .iter()
        .map(|&p| PriorConfig::from_precision(p))
        .collect::<Result<Vec<_>>>()?;
    let law = &config.fit_laws[0];
    let outcomes: Vec<(Vec<Result<f64>>, Option<usize>)> = config
        .seeds
        .par_iter()
        .map(|&seed| {
            let data = SeedData::draw(config, seed).and_then(|d| d.comparisons(config.p_c).map(|r| (d, r)));
            let (data, r) = match data {
                Ok(x) => x,
                Err(e) => return (broadcast_err(priors.len(), e), None),
            };
            let mut restricted = None;
            let errors = priors
                .iter()
                .map(|prior| {
                    if prior.is_regularized() {
                        return fit_error(law, prior, &r, &data.truth, &config.solver);
                    }
                    let giant = r.components().into_iter().max_by_key(Vec::len).unwrap_or_default();
                    if giant.len() < r.num_alternatives() {
                        restricted = Some(giant.len());
                    }
                    let sub = r.restrict(&giant)?;
                    let truth_values = giant.iter().map(|&i| data.truth.values()[i]).collect();
                    let sub_truth = ScoreVector::new(Arc::clone(sub.alternatives()), truth_values)?;
                    fit_error(law, prior, &sub, &sub_truth, &config.solver)
                })
                .collect();
            (errors, restricted)
        })
        .collect();

    let mut notes = Vec::new();
    for (&seed, (_, restricted)) in config.seeds.iter().zip(&outcomes) {
        if let Some(size) = restricted {
            notes.push(format!(
                "seed {seed}: 1/sigma^2=0 fitted on the giant component ({size} of {} alternatives)",
                config.alternatives
            ));
        }
    }
    let by_seed = outcomes.into_iter().map(|(e, _)| e).collect();
    let params = config.sweep.iter().map(|p| p.to_string()).collect();
    Ok(ExperimentResult {
        experiment: Experiment::Regularization,
        config: config.clone(),
        points: collect_points(config, params, by_seed),
        notes,
    })
}

pub fn run_experiment(which: Experiment, config: &ExperimentConfig) -> Result<ExperimentResult> {
    match which {
        Experiment::Sparsity => run_experiment_sparsity(config),
        Experiment::Discretization => run_experiment_discretization(config),
        Experiment::Regularization => run_experiment_regularization(config),
    }
}
