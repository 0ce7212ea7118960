//! MAP estimation of scores.
//!
//! The negative log-posterior is
//!
//! ```text
//! L(Θ) = Σ_a θ_a² / (2σ²) + Σ_{pairs {a,b}} ( Φ(θ_a - θ_b) - r_ab (θ_a - θ_b) )
//! ```
//!
//! with each unordered pair counted once in its stored orientation (Φ is even
//! and r antisymmetric, so the orientation does not matter). Its gradient is
//! `θ_a/σ² + Σ_{b ∈ A_a} (Φ′(θ_ab) - r_ab)` and the Hessian is a strictly
//! diagonally dominant M-matrix. `L` is `1/σ²`-strongly convex, so any point
//! `x` satisfies `‖x - Θ*‖₂ ≤ 2σ² ‖∇L(x)‖₂`; the solver stops on that bound.

use std::io::{Read, Write};
use std::sync::Arc;

use log::debug;
use nalgebra::{DMatrix, DVector};

use crate::comparisons::{AlternativeSet, ComparisonMatrix};
use crate::error::{Error, Result};
use crate::rootlaw::RootLaw;

/// Dense Cholesky is used up to this many alternatives under [`LinearSolver::Auto`].
pub const CHOLESKY_MAX_DIM: usize = 2000;

/// Gaussian prior `N(0, σ² I)` on the scores, stored as the precision `1/σ²`.
///
/// A precision of zero is the unregularized maximum-likelihood variant; it is
/// not strongly convex and needs a connected comparison graph.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorConfig {
    precision: f64,
}

impl PriorConfig {
    pub fn new(sigma_sq: f64) -> Result<Self> {
        if !(sigma_sq.is_finite() && sigma_sq > 0.0) {
            return Err(Error::Parameter(format!("prior variance must be positive and finite, got {sigma_sq}")));
        }
        Ok(Self { precision: 1.0 / sigma_sq })
    }

    /// Prior from its precision `1/σ²`; zero gives the unregularized variant.
    pub fn from_precision(precision: f64) -> Result<Self> {
        if !(precision.is_finite() && precision >= 0.0) {
            return Err(Error::Parameter(format!("prior precision must be finite and non-negative, got {precision}")));
        }
        Ok(Self { precision })
    }

    pub fn unregularized() -> Self {
        Self { precision: 0.0 }
    }

    pub fn sigma_sq(&self) -> f64 {
        if self.precision == 0.0 {
            f64::INFINITY
        } else {
            1.0 / self.precision
        }
    }

    pub fn precision(&self) -> f64 {
        self.precision
    }

    pub fn is_regularized(&self) -> bool {
        self.precision > 0.0
    }
}

/// Per-alternative scores.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector {
    alternatives: Arc<AlternativeSet>,
    values: Vec<f64>,
}

impl ScoreVector {
    pub fn new(alternatives: Arc<AlternativeSet>, values: Vec<f64>) -> Result<Self> {
        if values.len() != alternatives.len() {
            return Err(Error::Dimension { expected: alternatives.len(), got: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("score vector has non-finite entries".into()));
        }
        Ok(Self { alternatives, values })
    }

    pub fn zeros(alternatives: Arc<AlternativeSet>) -> Self {
        let values = vec![0.0; alternatives.len()];
        Self { alternatives, values }
    }

    pub fn alternatives(&self) -> &Arc<AlternativeSet> {
        &self.alternatives
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, id: &str) -> Result<f64> {
        Ok(self.values[self.alternatives.index_of(id)?])
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.values)
    }

    /// Euclidean distance to another vector over the same alternatives.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        if self.values.len() != other.values.len() {
            return Err(Error::Dimension { expected: self.values.len(), got: other.values.len() });
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt())
    }

    /// Writes `a,theta` rows sorted by identifier.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&i, &j| self.alternatives.id(i).cmp(self.alternatives.id(j)));
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["a", "theta"])?;
        for i in order {
            wtr.write_record([self.alternatives.id(i), &self.values[i].to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Reads `a,theta` rows; the alternative order is the row order.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.len() != 2 || &headers[0] != "a" || &headers[1] != "theta" {
            return Err(Error::Csv { row: 1, message: "expected header `a,theta`".into() });
        }
        let mut ids = Vec::new();
        let mut values = Vec::new();
        for record in rdr.records() {
            let record = record?;
            let row = record.position().map(|p| p.line() as usize).unwrap_or_default();
            let v: f64 = record
                .get(1)
                .and_then(|s| s.parse().ok())
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| Error::Csv { row, message: "bad theta value".into() })?;
            ids.push(record[0].to_string());
            values.push(v);
        }
        let alternatives = AlternativeSet::new(ids).map_err(|e| Error::Csv { row: 0, message: e.to_string() })?;
        Self::new(Arc::new(alternatives), values)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LinearSolver {
    /// Cholesky up to [`CHOLESKY_MAX_DIM`] alternatives, conjugate gradient above.
    #[default]
    Auto,
    Cholesky,
    ConjugateGradient,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Target for the certified distance `2σ²‖∇L‖₂` (for the unregularized
    /// prior, for `‖∇L‖₂` itself).
    pub tolerance: f64,
    pub max_iterations: usize,
    pub linear_solver: LinearSolver,
    /// 0 is silent; higher values log per-iteration progress at debug level.
    pub verbosity: u8,
    /// Keep every iterate in the report.
    pub record_trace: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iterations: 200,
            linear_solver: LinearSolver::Auto,
            verbosity: 0,
            record_trace: false,
        }
    }
}

impl SolverOptions {
    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn with_trace(mut self) -> Self {
        self.record_trace = true;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterateRecord {
    pub iteration: usize,
    pub point: Vec<f64>,
    pub objective: f64,
    pub gradient_norm: f64,
    pub certified_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    /// Newton steps taken.
    pub iterations: usize,
    pub final_gradient_norm: f64,
    /// `2σ² ‖∇L‖₂` at the returned point; `+∞` for the unregularized prior.
    pub certified_error: f64,
    pub converged: bool,
    pub objective: f64,
    pub trace: Vec<IterateRecord>,
}

/// Sparse symmetric Hessian: a diagonal plus one off-diagonal value per compared pair.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseHessian {
    pub diagonal: Vec<f64>,
    /// `(a, b, h_ab)` with `a < b`; `h_ba = h_ab`.
    pub off_diagonal: Vec<(usize, usize, f64)>,
}

impl SparseHessian {
    pub fn dim(&self) -> usize {
        self.diagonal.len()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y: Vec<f64> = self.diagonal.iter().zip(x).map(|(d, v)| d * v).collect();
        for &(a, b, h) in &self.off_diagonal {
            y[a] += h * x[b];
            y[b] += h * x[a];
        }
        y
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::from_diagonal(&DVector::from_column_slice(&self.diagonal));
        for &(a, b, h) in &self.off_diagonal {
            m[(a, b)] += h;
            m[(b, a)] += h;
        }
        debug_assert_eq!(m.nrows(), n);
        m
    }

    /// Row-wise `|h_aa| > Σ_{b≠a} |h_ab|`.
    pub fn is_strictly_diagonally_dominant(&self) -> bool {
        let mut off = vec![0.0; self.dim()];
        for &(a, b, h) in &self.off_diagonal {
            off[a] += h.abs();
            off[b] += h.abs();
        }
        self.diagonal.iter().zip(&off).all(|(d, o)| d.abs() > *o)
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(x, y)| x * y).sum()
}

fn check_dims(r: &ComparisonMatrix, theta: &ScoreVector) -> Result<()> {
    if theta.len() != r.num_alternatives() {
        return Err(Error::Dimension { expected: r.num_alternatives(), got: theta.len() });
    }
    Ok(())
}

struct Problem<'a> {
    law: &'a RootLaw,
    precision: f64,
    pairs: Vec<(usize, usize, f64)>,
    n: usize,
}

impl<'a> Problem<'a> {
    fn new(law: &'a RootLaw, prior: &PriorConfig, r: &ComparisonMatrix) -> Self {
        Self {
            law,
            precision: prior.precision(),
            pairs: r.pairs().collect(),
            n: r.num_alternatives(),
        }
    }

    fn loss(&self, x: &[f64]) -> f64 {
        let prior = 0.5 * self.precision * x.iter().map(|v| v * v).sum::<f64>();
        let data: f64 = self
            .pairs
            .iter()
            .map(|&(a, b, r)| {
                let t = x[a] - x[b];
                self.law.cumulant(t) - r * t
            })
            .sum();
        prior + data
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g: Vec<f64> = x.iter().map(|v| self.precision * v).collect();
        for &(a, b, r) in &self.pairs {
            let d = self.law.cumulant_prime(x[a] - x[b]) - r;
            g[a] += d;
            g[b] -= d;
        }
        g
    }

    fn hessian(&self, x: &[f64]) -> SparseHessian {
        let mut diagonal = vec![self.precision; self.n];
        let off_diagonal = self
            .pairs
            .iter()
            .map(|&(a, b, _)| {
                let h = self.law.cumulant_double_prime(x[a] - x[b]);
                diagonal[a] += h;
                diagonal[b] += h;
                (a, b, -h)
            })
            .collect();
        SparseHessian { diagonal, off_diagonal }
    }
}

pub fn loss(law: &RootLaw, prior: &PriorConfig, r: &ComparisonMatrix, theta: &ScoreVector) -> Result<f64> {
    check_dims(r, theta)?;
    Ok(Problem::new(law, prior, r).loss(theta.values()))
}

pub fn gradient(law: &RootLaw, prior: &PriorConfig, r: &ComparisonMatrix, theta: &ScoreVector) -> Result<Vec<f64>> {
    check_dims(r, theta)?;
    Ok(Problem::new(law, prior, r).gradient(theta.values()))
}

pub fn hessian(law: &RootLaw, prior: &PriorConfig, r: &ComparisonMatrix, theta: &ScoreVector) -> Result<SparseHessian> {
    check_dims(r, theta)?;
    Ok(Problem::new(law, prior, r).hessian(theta.values()))
}

/// Solves `H x = rhs`. With `rank_one_fix`, solves `(H + 11ᵀ/n) x = rhs`,
/// which equals the minimum-norm solution when `H1 = 0` and `rhs ⟂ 1`.
fn solve_linear(h: &SparseHessian, rhs: &[f64], choice: LinearSolver, rank_one_fix: bool) -> Result<Vec<f64>> {
    let n = h.dim();
    let use_cholesky = match choice {
        LinearSolver::Auto => n <= CHOLESKY_MAX_DIM,
        LinearSolver::Cholesky => true,
        LinearSolver::ConjugateGradient => false,
    };
    if use_cholesky {
        let mut dense = h.to_dense();
        if rank_one_fix {
            dense.add_scalar_mut(1.0 / n as f64);
        }
        let chol = dense
            .cholesky()
            .ok_or_else(|| Error::Numeric("Hessian is not positive definite".into()))?;
        Ok(chol.solve(&DVector::from_column_slice(rhs)).iter().copied().collect())
    } else {
        conjugate_gradient(h, rhs, rank_one_fix)
    }
}

fn conjugate_gradient(h: &SparseHessian, rhs: &[f64], rank_one_fix: bool) -> Result<Vec<f64>> {
    let n = h.dim();
    let apply = |x: &[f64]| {
        let mut y = h.matvec(x);
        if rank_one_fix {
            let mean = x.iter().sum::<f64>() / n as f64;
            y.iter_mut().for_each(|v| *v += mean);
        }
        y
    };
    let inv_diag: Vec<f64> = h
        .diagonal
        .iter()
        .map(|d| 1.0 / (d + if rank_one_fix { 1.0 / n as f64 } else { 0.0 }))
        .collect();
    let target = 1e-10 * norm(rhs);
    let mut x = vec![0.0; n];
    let mut r = rhs.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, b)| a * b).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for _ in 0..(10 * n).max(100) {
        if norm(&r) <= target {
            return Ok(x);
        }
        let ap = apply(&p);
        let alpha = rz / dot(&p, &ap);
        if !alpha.is_finite() {
            return Err(Error::Numeric("conjugate gradient breakdown".into()));
        }
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        z = r.iter().zip(&inv_diag).map(|(a, b)| a * b).collect();
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    if norm(&r) <= target {
        Ok(x)
    } else {
        Err(Error::Numeric("conjugate gradient did not reach the residual target".into()))
    }
}

const ARMIJO_C: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;

/// MAP scores by damped Newton from `Θ = 0`, stopped when the certified
/// distance `2σ²‖∇L‖₂` drops below `opts.tolerance`.
pub fn map_estimate(
    law: &RootLaw,
    prior: &PriorConfig,
    r: &ComparisonMatrix,
    opts: &SolverOptions,
) -> Result<(ScoreVector, SolveReport)> {
    if r.is_empty() {
        return Err(Error::EmptyComparisons);
    }
    if !(opts.tolerance > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {}", opts.tolerance)));
    }
    r.validate(law, false)?;
    let regularized = prior.is_regularized();
    if !regularized && !r.is_connected() {
        return Err(Error::Disconnected);
    }

    let problem = Problem::new(law, prior, r);
    let certify = |gn: f64| if regularized { 2.0 * prior.sigma_sq() * gn } else { f64::INFINITY };
    let mut x = vec![0.0; problem.n];
    let mut f = problem.loss(&x);
    let mut report = SolveReport {
        iterations: 0,
        final_gradient_norm: f64::NAN,
        certified_error: f64::INFINITY,
        converged: false,
        objective: f,
        trace: Vec::new(),
    };

    loop {
        let g = problem.gradient(&x);
        let gn = norm(&g);
        if !gn.is_finite() || !f.is_finite() {
            return Err(Error::Numeric(format!("non-finite objective or gradient at iteration {}", report.iterations)));
        }
        let cert = certify(gn);
        report.final_gradient_norm = gn;
        report.certified_error = cert;
        report.objective = f;
        if opts.record_trace {
            report.trace.push(IterateRecord {
                iteration: report.iterations,
                point: x.clone(),
                objective: f,
                gradient_norm: gn,
                certified_error: cert,
            });
        }
        if opts.verbosity > 0 {
            debug!("newton iter {} loss {:.12e} |grad| {:.3e} cert {:.3e}", report.iterations, f, gn, cert);
        }
        let done = if regularized { cert <= opts.tolerance } else { gn <= opts.tolerance };
        if done {
            report.converged = true;
            let scores = ScoreVector::new(Arc::clone(r.alternatives()), x)?;
            return Ok((scores, report));
        }
        if report.iterations >= opts.max_iterations {
            return Err(Error::Diverged { report: Box::new(report) });
        }

        let h = problem.hessian(&x);
        let neg_g: Vec<f64> = g.iter().map(|v| -v).collect();
        let step = solve_linear(&h, &neg_g, opts.linear_solver, !regularized)?;
        let slope = dot(&g, &step);

        let mut t = 1.0;
        let mut accepted = None;
        // near the optimum, loss differences fall below rounding: take the full step
        let negligible = slope.abs() <= 1e-14 * (1.0 + f.abs());
        for _ in 0..MAX_BACKTRACKS {
            let trial: Vec<f64> = x.iter().zip(&step).map(|(xi, di)| xi + t * di).collect();
            let ft = problem.loss(&trial);
            if negligible || (ft.is_finite() && ft <= f + ARMIJO_C * t * slope) {
                accepted = Some((trial, ft));
                break;
            }
            t *= 0.5;
        }
        let (next, fnext) = accepted.ok_or_else(|| {
            Error::Numeric(format!("line search failed at iteration {}", report.iterations))
        })?;
        x = next;
        f = fnext;
        report.iterations += 1;
    }
}

/// Closed-form MAP for the Gaussian root law: `Θ* = (D - σ0² A_C)^{-1} r̄`,
/// with `D = diag(1/σ² + σ0² A_a)`, `A_C` the adjacency matrix and `r̄` the
/// row sums. For complete comparisons this is `r̄ / (1/σ² + σ0² A)`.
pub fn map_estimate_gaussian(sigma0_sq: f64, prior: &PriorConfig, r: &ComparisonMatrix) -> Result<ScoreVector> {
    if !(sigma0_sq.is_finite() && sigma0_sq > 0.0) {
        return Err(Error::Parameter(format!("sigma0sq must be positive, got {sigma0_sq}")));
    }
    if r.is_empty() {
        return Err(Error::EmptyComparisons);
    }
    let n = r.num_alternatives();
    let rbar = r.row_sums();
    if r.is_complete() {
        let denom = prior.precision() + sigma0_sq * n as f64;
        let values = rbar.iter().map(|v| v / denom).collect();
        return ScoreVector::new(Arc::clone(r.alternatives()), values);
    }
    if !prior.is_regularized() && !r.is_connected() {
        return Err(Error::Disconnected);
    }
    let mut diagonal = vec![prior.precision(); n];
    let off_diagonal = r
        .pairs()
        .map(|(a, b, _)| {
            diagonal[a] += sigma0_sq;
            diagonal[b] += sigma0_sq;
            (a, b, -sigma0_sq)
        })
        .collect();
    let m = SparseHessian { diagonal, off_diagonal };
    let values = solve_linear(&m, &rbar, LinearSolver::Auto, !prior.is_regularized())?;
    ScoreVector::new(Arc::clone(r.alternatives()), values)
}
