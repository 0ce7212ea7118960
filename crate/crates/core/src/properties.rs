//! Executable checks of the estimator's guarantees: monotonicity,
//! Lipschitz-resilience, the neutral comparison, the M-matrix structure of
//! the Hessian and the moment identities of the tilted law.

use std::f64::consts::SQRT_2;
use std::fmt;
use std::io::Write;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::comparisons::{AlternativeSet, ComparisonEdit, ComparisonMatrix, EditKind};
use crate::error::{Error, Result};
use crate::rootlaw::{RootLaw, SupportKind};
use crate::sim::{erdos_renyi_graph, random_connected_graph, synthesize_comparisons};
use crate::solver::{map_estimate, PriorConfig, ScoreVector, SolveReport, SolverOptions, SparseHessian};

/// A certified strict increase needs a margin this many times the larger certified error.
pub const MARGIN_FACTOR: f64 = 10.0;

fn solve(law: &RootLaw, prior: &PriorConfig, r: &ComparisonMatrix, opts: &SolverOptions) -> Result<(ScoreVector, f64)> {
    if r.is_empty() {
        return Ok((ScoreVector::zeros(Arc::clone(r.alternatives())), 0.0));
    }
    let (s, report): (ScoreVector, SolveReport) = map_estimate(law, prior, r, opts)?;
    Ok((s, report.certified_error))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MonotoneOutcome {
    /// Both moves exceed the resolution threshold in the predicted direction.
    Strict,
    /// Some move is below numerical resolution.
    Inconclusive,
    /// A move in the wrong direction beyond resolution.
    Violated,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotoneCheck {
    pub outcome: MonotoneOutcome,
    /// `θ*_a(R′) - θ*_a(R)`.
    pub margin: f64,
    /// `θ*_b(R) - θ*_b(R′)`.
    pub margin_b: f64,
    /// `MARGIN_FACTOR` times the larger certified error of the two solves.
    pub threshold: f64,
}

impl MonotoneCheck {
    pub fn is_strict(&self) -> bool {
        self.outcome == MonotoneOutcome::Strict
    }
}

/// Raises `r_ab` by `delta` and re-solves.
///
/// Discrete laws must step to the next support point above `r_ab`; every
/// law must stay inside its support hull.
pub fn check_monotone_step(
    law: &RootLaw,
    prior: &PriorConfig,
    r: &ComparisonMatrix,
    a: usize,
    b: usize,
    delta: f64,
    opts: &SolverOptions,
) -> Result<MonotoneCheck> {
    let current = r
        .get(a, b)
        .ok_or_else(|| Error::InvalidArgument(format!("pair ({a}, {b}) is not compared")))?;
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::InvalidArgument(format!("step must be positive, got {delta}")));
    }
    let raised = current + delta;
    if law.support_kind() == SupportKind::Discrete {
        match law.next_support_point(current) {
            Some(next) if (next - raised).abs() <= 1e-9 => {}
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "step {delta} from {current} does not reach the next support point of {law}"
                )))
            }
        }
    }
    if !law.in_hull(raised) {
        return Err(Error::InvalidArgument(format!("raised value {raised} leaves the support of {law}")));
    }
    let edited = r.apply_edit(&ComparisonEdit::change(a, b, raised))?;
    let (before, err0) = solve(law, prior, r, opts)?;
    let (after, err1) = solve(law, prior, &edited, opts)?;
    let margin = after.values()[a] - before.values()[a];
    let margin_b = before.values()[b] - after.values()[b];
    let threshold = MARGIN_FACTOR * err0.max(err1);
    let outcome = if margin > threshold && margin_b > threshold {
        MonotoneOutcome::Strict
    } else if margin < -threshold || margin_b < -threshold {
        MonotoneOutcome::Violated
    } else {
        MonotoneOutcome::Inconclusive
    };
    Ok(MonotoneCheck { outcome, margin, margin_b, threshold })
}

/// Every admissible single-pair increase of `r` seen from either end,
/// as `(a, b, delta)`. Discrete laws step to the next support point,
/// bounded continuous laws halfway to `r_max` (at most 0.5), unbounded
/// continuous laws by 0.5.
pub fn admissible_increases(law: &RootLaw, r: &ComparisonMatrix) -> Vec<(usize, usize, f64)> {
    let mut out = Vec::new();
    for (lo, hi, _) in r.pairs() {
        for (a, b) in [(lo, hi), (hi, lo)] {
            let v = r.get(a, b).expect("present");
            let delta = match law.support_kind() {
                SupportKind::Discrete => law.next_support_point(v).map(|n| n - v),
                SupportKind::Continuous if law.is_bounded() => {
                    let room = law.r_max() - v;
                    (room > 1e-6).then(|| (0.5 * room).min(0.5))
                }
                SupportKind::Continuous => Some(0.5),
            };
            if let Some(d) = delta {
                out.push((a, b, d));
            }
        }
    }
    out
}

/// Random connected instance with data drawn from the law at `N(0, 1)` scores.
pub fn random_instance<R: Rng + ?Sized>(law: &RootLaw, n: usize, p_extra: f64, rng: &mut R) -> Result<ComparisonMatrix> {
    let alts = Arc::new(AlternativeSet::numbered(n)?);
    let truth: Vec<f64> = (0..n).map(|_| Normal::new(0.0, 1.0).expect("unit normal").sample(rng)).collect();
    let truth = ScoreVector::new(alts, truth)?;
    let pairs = random_connected_graph(n, p_extra, rng)?;
    synthesize_comparisons(law, &truth, &pairs, rng)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepSummary {
    pub checks: usize,
    pub strict: usize,
    pub inconclusive: usize,
    pub violated: usize,
    /// Smallest `min(margin, margin_b) / threshold` seen.
    pub worst_ratio: f64,
}

impl SweepSummary {
    pub fn passed(&self) -> bool {
        self.checks > 0 && self.strict == self.checks
    }
}

/// Checks every admissible increase on `instances` random connected
/// instances with 3 to 8 alternatives.
pub fn monotonicity_sweep(
    law: &RootLaw,
    prior: &PriorConfig,
    instances: usize,
    seed: u64,
    opts: &SolverOptions,
) -> Result<SweepSummary> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut summary = SweepSummary { worst_ratio: f64::INFINITY, ..Default::default() };
    for _ in 0..instances {
        let n = rng.random_range(3..=8);
        let r = random_instance(law, n, 0.3, &mut rng)?;
        for (a, b, delta) in admissible_increases(law, &r) {
            let check = check_monotone_step(law, prior, &r, a, b, delta, opts)?;
            summary.checks += 1;
            match check.outcome {
                MonotoneOutcome::Strict => summary.strict += 1,
                MonotoneOutcome::Inconclusive => summary.inconclusive += 1,
                MonotoneOutcome::Violated => summary.violated += 1,
            }
            let ratio = check.margin.min(check.margin_b) / check.threshold;
            summary.worst_ratio = summary.worst_ratio.min(ratio);
        }
    }
    Ok(summary)
}

/// `4√2 r_max σ²`, infinite for unbounded laws or the unregularized prior.
pub fn resilience_bound(law: &RootLaw, prior: &PriorConfig) -> f64 {
    if law.is_bounded() {
        4.0 * SQRT_2 * law.r_max() * prior.sigma_sq()
    } else {
        f64::INFINITY
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeConfig {
    pub alternatives: usize,
    /// Edge probability of the random base instances.
    pub density: f64,
    pub probes: usize,
    /// Each probe applies between 1 and this many edits.
    pub max_edits: usize,
    pub seed: u64,
    pub solver: SolverOptions,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            alternatives: 6,
            density: 0.5,
            probes: 200,
            max_edits: 1,
            seed: 0,
            solver: SolverOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeRecord {
    pub edits: Vec<ComparisonEdit>,
    pub delta_distance: usize,
    pub l2_change: f64,
    pub ratio: f64,
}

impl ProbeRecord {
    fn kind_label(&self) -> String {
        self.edits.iter().map(|e| e.kind.to_string()).collect::<Vec<_>>().join("+")
    }

    fn pair_label(&self) -> String {
        self.edits
            .iter()
            .map(|e| format!("{}-{}", e.a, e.b))
            .collect::<Vec<_>>()
            .join("+")
    }
}

/// Observed `‖Θ*(R) - Θ*(R′)‖₂ / Δ(R, R′)` over random edits, one fresh
/// random base instance per probe.
#[derive(Debug, Clone, PartialEq)]
pub struct ResilienceProbe {
    pub records: Vec<ProbeRecord>,
    pub observed_ratio: f64,
    pub bound: f64,
}

impl ResilienceProbe {
    /// Strict inequality; always true for an infinite bound.
    pub fn within_bound(&self) -> bool {
        self.observed_ratio < self.bound
    }

    /// `edit_kind,pair,delta_distance,l2_change,ratio,bound`
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["edit_kind", "pair", "delta_distance", "l2_change", "ratio", "bound"])?;
        for rec in &self.records {
            wtr.write_record([
                rec.kind_label(),
                rec.pair_label(),
                rec.delta_distance.to_string(),
                rec.l2_change.to_string(),
                rec.ratio.to_string(),
                self.bound.to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Value drawn uniformly over the support (grid points for discrete laws,
/// `[-3σ0, 3σ0]` for the Gaussian).
fn random_value<R: Rng + ?Sized>(law: &RootLaw, rng: &mut R) -> f64 {
    if let Some(points) = law.support_points() {
        return points[rng.random_range(0..points.len())];
    }
    let half = if law.is_bounded() {
        law.r_max()
    } else {
        3.0 * law.parameter().unwrap_or(1.0).sqrt()
    };
    rng.random_range(-half..=half)
}

fn random_edit<R: Rng + ?Sized>(law: &RootLaw, r: &ComparisonMatrix, rng: &mut R) -> ComparisonEdit {
    let n = r.num_alternatives();
    let full = n * (n - 1) / 2;
    loop {
        let kind = match rng.random_range(0..3) {
            0 => EditKind::Add,
            1 => EditKind::Remove,
            _ => EditKind::Change,
        };
        let present = kind != EditKind::Add;
        if (present && r.is_empty()) || (!present && r.len() == full) {
            continue;
        }
        let (a, b) = loop {
            let a = rng.random_range(0..n);
            let b = rng.random_range(0..n);
            if a != b && r.contains(a, b) == present {
                break (a, b);
            }
        };
        match kind {
            EditKind::Add => return ComparisonEdit::add(a, b, random_value(law, rng)),
            EditKind::Remove => return ComparisonEdit::remove(a, b),
            EditKind::Change => {
                let old = r.get(a, b).expect("present");
                let v = random_value(law, rng);
                if v != old {
                    return ComparisonEdit::change(a, b, v);
                }
            }
        }
    }
}

pub fn measure_resilience(law: &RootLaw, prior: &PriorConfig, config: &ProbeConfig) -> Result<ResilienceProbe> {
    if config.alternatives < 2 || config.max_edits == 0 {
        return Err(Error::InvalidArgument("probes need two alternatives and at least one edit".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let alts = Arc::new(AlternativeSet::numbered(config.alternatives)?);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut records = Vec::with_capacity(config.probes);
    while records.len() < config.probes {
        let truth: Vec<f64> = (0..config.alternatives).map(|_| normal.sample(&mut rng)).collect();
        let truth = ScoreVector::new(Arc::clone(&alts), truth)?;
        let pairs = erdos_renyi_graph(config.alternatives, config.density, &mut rng)?;
        let base = synthesize_comparisons(law, &truth, &pairs, &mut rng)?;
        let count = rng.random_range(1..=config.max_edits);
        let mut edited = base.clone();
        let mut edits = Vec::with_capacity(count);
        for _ in 0..count {
            let edit = random_edit(law, &edited, &mut rng);
            edited = edited.apply_edit(&edit)?;
            edits.push(edit);
        }
        let delta = base.edit_distance(&edited)?;
        if delta == 0 {
            continue;
        }
        let (s0, _) = solve(law, prior, &base, &config.solver)?;
        let (s1, _) = solve(law, prior, &edited, &config.solver)?;
        let l2 = s0.distance(&s1)?;
        records.push(ProbeRecord { edits, delta_distance: delta, l2_change: l2, ratio: l2 / delta as f64 });
    }
    let observed_ratio = records.iter().map(|r| r.ratio).fold(0.0, f64::max);
    Ok(ResilienceProbe { records, observed_ratio, bound: resilience_bound(law, prior) })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingPoint {
    pub lambda: f64,
    pub delta_distance: usize,
    pub l2_change: f64,
    pub ratio: f64,
}

/// Gaussian-law solves at `R` and `λR`: the scores scale linearly while
/// `Δ(R, λR)` stays the number of nonzero entries, so the ratio grows
/// without bound.
pub fn gaussian_scaling_probe(
    law: &RootLaw,
    prior: &PriorConfig,
    r: &ComparisonMatrix,
    lambdas: &[f64],
    opts: &SolverOptions,
) -> Result<Vec<ScalingPoint>> {
    let (base, _) = solve(law, prior, r, opts)?;
    lambdas
        .iter()
        .map(|&lambda| {
            let scaled = r.scaled(lambda);
            let delta = r.edit_distance(&scaled)?;
            let (s, _) = solve(law, prior, &scaled, opts)?;
            let l2 = base.distance(&s)?;
            let ratio = if delta == 0 { 0.0 } else { l2 / delta as f64 };
            Ok(ScalingPoint { lambda, delta_distance: delta, l2_change: l2, ratio })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeutralComparison {
    /// `Φ′(θ*_a - θ*_b)`.
    pub value: f64,
    /// Whether the value is a support point of the law.
    pub attainable: bool,
}

impl fmt::Display for NeutralComparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)?;
        if !self.attainable {
            write!(f, " (not attainable)")?;
        }
        Ok(())
    }
}

/// The comparison value for a new pair `{a, b}` whose addition leaves the
/// scores unchanged.
pub fn neutral_comparison(
    law: &RootLaw,
    prior: &PriorConfig,
    r: &ComparisonMatrix,
    a: usize,
    b: usize,
    opts: &SolverOptions,
) -> Result<NeutralComparison> {
    if a == b || a >= r.num_alternatives() || b >= r.num_alternatives() {
        return Err(Error::InvalidArgument(format!("invalid pair ({a}, {b})")));
    }
    if r.contains(a, b) {
        return Err(Error::Comparison(format!("pair ({a}, {b}) is already compared")));
    }
    let (s, _) = solve(law, prior, r, opts)?;
    let value = law.cumulant_prime(s.values()[a] - s.values()[b]);
    Ok(NeutralComparison { value, attainable: law.on_support(value) })
}

/// Mean and variance of the tilted law at `θ`: `(Φ′(θ), Φ″(θ))`.
pub fn conditional_moments(law: &RootLaw, theta: f64) -> (f64, f64) {
    let t = law.cgf_triple(theta);
    (t.first, t.second)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentCheck {
    pub theta: f64,
    pub samples: usize,
    pub mean: f64,
    pub variance: f64,
    pub expected_mean: f64,
    pub expected_variance: f64,
    /// Deviations in standard errors.
    pub mean_z: f64,
    pub variance_z: f64,
}

impl MomentCheck {
    pub fn passes(&self, z_max: f64) -> bool {
        self.mean_z <= z_max && self.variance_z <= z_max
    }
}

/// Monte Carlo mean and unbiased variance of `samples` tilted draws.
///
/// The variance's standard error is `Var(s²) = (μ₄ - σ⁴ (n-3)/(n-1)) / n`
/// with `σ²` exact and `μ₄` estimated about the exact mean, which stays
/// positive for two-point laws where the sample version cancels.
pub fn monte_carlo_moments<R: Rng + ?Sized>(law: &RootLaw, theta: f64, samples: usize, rng: &mut R) -> Result<MomentCheck> {
    if samples < 4 {
        return Err(Error::InvalidArgument("need at least four samples".into()));
    }
    let draws: Vec<f64> = (0..samples).map(|_| law.sample_comparison(theta, rng)).collect();
    let n = samples as f64;
    let mean = draws.iter().sum::<f64>() / n;
    let m2 = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let variance = m2 * n / (n - 1.0);
    let (expected_mean, expected_variance) = conditional_moments(law, theta);
    let m4 = draws.iter().map(|x| (x - expected_mean).powi(4)).sum::<f64>() / n;
    let se_mean = (expected_variance / n).sqrt();
    let s4 = expected_variance * expected_variance;
    let se_var = ((m4 - s4 * (n - 3.0) / (n - 1.0)) / n).max(2.0 * s4 / (n * (n - 1.0))).sqrt();
    let z = |diff: f64, se: f64| if diff == 0.0 { 0.0 } else { diff.abs() / se };
    Ok(MomentCheck {
        theta,
        samples,
        mean,
        variance,
        expected_mean,
        expected_variance,
        mean_z: z(mean - expected_mean, se_mean),
        variance_z: z(variance - expected_variance, se_var),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MMatrixCheck {
    /// Smallest off-diagonal entry of the inverse.
    pub min_off_diagonal: f64,
    /// Smallest `n_aa - n_ab` over `a ≠ b`.
    pub min_diagonal_gap: f64,
}

impl MMatrixCheck {
    pub fn holds(&self) -> bool {
        self.min_off_diagonal >= 0.0 && self.min_diagonal_gap > 0.0
    }
}

/// Inverts the Hessian densely and reports the two M-matrix inequalities
/// `n_ab ≥ 0` and `n_aa > n_ab`.
pub fn inverse_hessian_structure(h: &SparseHessian) -> Result<MMatrixCheck> {
    let n = h.dim();
    let inverse = h
        .to_dense()
        .cholesky()
        .ok_or_else(|| Error::Numeric("Hessian is not positive definite".into()))?
        .inverse();
    let mut min_off_diagonal = f64::INFINITY;
    let mut min_diagonal_gap = f64::INFINITY;
    for a in 0..n {
        for b in 0..n {
            if a != b {
                min_off_diagonal = min_off_diagonal.min(inverse[(a, b)]);
                min_diagonal_gap = min_diagonal_gap.min(inverse[(a, a)] - inverse[(a, b)]);
            }
        }
    }
    Ok(MMatrixCheck { min_off_diagonal, min_diagonal_gap })
}
