//! Root laws of generalized Bradley-Terry models.
//!
//! A root law `f` is the distribution of a comparison between two equally
//! scored alternatives. At score difference `θ` the comparison follows the
//! tilted law `e^{θr} f(r) / M(θ)`, whose log-normalizer is the cumulant
//! generating function `Φ(θ) = log ∫ e^{θr} dF(r)`. Its derivatives are the
//! tilted mean and variance.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Beta, Distribution, Normal, Poisson};

use crate::error::{Error, Result};
use crate::quadrature::GaussJacobi;
use crate::special::{self, CgfTriple};

const BETA_RULE_NODES: usize = 128;

/// Mass left outside the truncated Poisson support grid.
pub const POISSON_TRUNCATION_MASS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Bernoulli,
    Knary,
    Poisson,
    Gaussian,
    Uniform,
    Beta,
    BetaTwo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SupportKind {
    Discrete,
    Continuous,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    Bernoulli,
    Knary { levels: u32 },
    Poisson { lambda: f64 },
    Gaussian { sigma0_sq: f64 },
    Uniform,
    Beta { beta: f64 },
    BetaTwo,
}

/// A validated root law. Immutable and cheap to clone.
#[derive(Debug, Clone)]
pub struct RootLaw {
    kind: Kind,
    beta_rule: Option<Arc<GaussJacobi>>,
}

impl PartialEq for RootLaw {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

fn positive(name: &str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::Parameter(format!("{name} must be a positive finite real, got {value}")))
    }
}

impl RootLaw {
    fn from_kind(kind: Kind) -> Self {
        Self { kind, beta_rule: None }
    }

    pub fn bernoulli() -> Self {
        Self::from_kind(Kind::Bernoulli)
    }

    pub fn knary(levels: u32) -> Result<Self> {
        if levels < 2 {
            return Err(Error::Parameter(format!("K-nary law needs K >= 2, got {levels}")));
        }
        Ok(Self::from_kind(Kind::Knary { levels }))
    }

    pub fn poisson(lambda: f64) -> Result<Self> {
        Ok(Self::from_kind(Kind::Poisson { lambda: positive("lambda", lambda)? }))
    }

    pub fn gaussian(sigma0_sq: f64) -> Result<Self> {
        Ok(Self::from_kind(Kind::Gaussian { sigma0_sq: positive("sigma0sq", sigma0_sq)? }))
    }

    pub fn uniform() -> Self {
        Self::from_kind(Kind::Uniform)
    }

    /// Symmetric Beta(β, β) law rescaled to [-1, 1].
    pub fn beta(beta: f64) -> Result<Self> {
        let beta = positive("beta", beta)?;
        Ok(Self {
            kind: Kind::Beta { beta },
            beta_rule: Some(Arc::new(GaussJacobi::symmetric_beta(beta, BETA_RULE_NODES))),
        })
    }

    /// Beta law with β = 2, density `3(1 - r²)/4`.
    pub fn beta_two() -> Self {
        Self::from_kind(Kind::BetaTwo)
    }

    pub fn family(&self) -> Family {
        match self.kind {
            Kind::Bernoulli => Family::Bernoulli,
            Kind::Knary { .. } => Family::Knary,
            Kind::Poisson { .. } => Family::Poisson,
            Kind::Gaussian { .. } => Family::Gaussian,
            Kind::Uniform => Family::Uniform,
            Kind::Beta { .. } => Family::Beta,
            Kind::BetaTwo => Family::BetaTwo,
        }
    }

    /// The family parameter: K, λ, σ0² or β; `None` for parameter-free families.
    pub fn parameter(&self) -> Option<f64> {
        match self.kind {
            Kind::Knary { levels } => Some(levels as f64),
            Kind::Poisson { lambda } => Some(lambda),
            Kind::Gaussian { sigma0_sq } => Some(sigma0_sq),
            Kind::Beta { beta } => Some(beta),
            Kind::Bernoulli | Kind::Uniform | Kind::BetaTwo => None,
        }
    }

    /// Supremum of the support; infinite for Poisson and Gaussian laws.
    pub fn r_max(&self) -> f64 {
        match self.kind {
            Kind::Poisson { .. } | Kind::Gaussian { .. } => f64::INFINITY,
            _ => 1.0,
        }
    }

    pub fn is_bounded(&self) -> bool {
        self.r_max().is_finite()
    }

    pub fn support_kind(&self) -> SupportKind {
        match self.kind {
            Kind::Bernoulli | Kind::Knary { .. } | Kind::Poisson { .. } => SupportKind::Discrete,
            _ => SupportKind::Continuous,
        }
    }

    /// Whether `r` lies in the closed convex hull `[-r_max, r_max]` of the support.
    pub fn in_hull(&self, r: f64) -> bool {
        r.is_finite() && r.abs() <= self.r_max()
    }

    /// Whether `r` is an attainable comparison value (grid point for discrete laws).
    pub fn on_support(&self, r: f64) -> bool {
        if !self.in_hull(r) {
            return false;
        }
        match self.kind {
            Kind::Bernoulli => r == 1.0 || r == -1.0,
            Kind::Knary { levels } => {
                let pos = (r + 1.0) * (levels as f64 - 1.0) / 2.0;
                (pos - pos.round()).abs() < 1e-9
            }
            Kind::Poisson { .. } => r.fract() == 0.0,
            _ => true,
        }
    }

    /// Smallest support point strictly above `r`, if any.
    pub fn next_support_point(&self, r: f64) -> Option<f64> {
        match self.kind {
            Kind::Bernoulli => (r < 1.0).then_some(1.0),
            Kind::Knary { levels } => {
                let step = 2.0 / (levels as f64 - 1.0);
                let pos = ((r + 1.0) / step + 1e-9).floor();
                let next = knary_point(levels, pos as u32 + 2);
                (pos + 1.0 < levels as f64).then_some(next)
            }
            Kind::Poisson { .. } => Some(r.floor() + 1.0),
            _ => None,
        }
    }

    /// Grid points for discrete laws. Poisson returns the symmetric integer
    /// range carrying at least `1 - 1e-12` of the untilted mass.
    pub fn support_points(&self) -> Option<Vec<f64>> {
        match self.kind {
            Kind::Bernoulli => Some(vec![-1.0, 1.0]),
            Kind::Knary { levels } => Some((1..=levels).map(|k| knary_point(levels, k)).collect()),
            Kind::Poisson { lambda } => {
                let kmax = poisson_truncation(lambda);
                Some((-(kmax as i64)..=kmax as i64).map(|k| k as f64).collect())
            }
            _ => None,
        }
    }

    fn triple_nonneg(&self, x: f64) -> CgfTriple {
        match self.kind {
            Kind::Bernoulli => special::bernoulli_cgf(x),
            Kind::Knary { levels } => special::knary_cgf(x, levels),
            Kind::Poisson { lambda } => special::poisson_cgf(x, lambda),
            Kind::Gaussian { sigma0_sq } => CgfTriple {
                value: 0.5 * sigma0_sq * x * x,
                first: sigma0_sq * x,
                second: sigma0_sq,
            },
            Kind::Uniform => special::uniform_cgf(x),
            Kind::BetaTwo => special::beta_two_cgf(x),
            Kind::Beta { .. } => beta_quadrature(self.beta_rule.as_deref().expect("beta rule"), x),
        }
    }

    /// `(Φ(θ), Φ′(θ), Φ″(θ))` with exact parity: even, odd, even.
    pub fn cgf_triple(&self, theta: f64) -> CgfTriple {
        if theta == 0.0 {
            let second = self.triple_nonneg(0.0).second;
            return CgfTriple { value: 0.0, first: 0.0, second };
        }
        let t = self.triple_nonneg(theta.abs());
        CgfTriple {
            value: t.value,
            first: t.first.copysign(theta),
            second: t.second,
        }
    }

    /// Cumulant-generating function `Φ(θ) = log ∫ e^{θr} dF(r)`.
    pub fn cumulant(&self, theta: f64) -> f64 {
        self.cgf_triple(theta).value
    }

    /// `Φ′(θ)`, the mean of the tilted law.
    pub fn cumulant_prime(&self, theta: f64) -> f64 {
        self.cgf_triple(theta).first
    }

    /// `Φ″(θ)`, the variance of the tilted law.
    pub fn cumulant_double_prime(&self, theta: f64) -> f64 {
        self.cgf_triple(theta).second
    }

    /// The form `λ cosh θ`, shifted by `-λ` so it vanishes
    /// at zero. It is not the CGF of the symmetric Poisson pmf and is exposed
    /// only for comparison; `None` for other families.
    pub fn poisson_cosh_cumulant(&self, theta: f64) -> Option<f64> {
        match self.kind {
            Kind::Poisson { lambda } => Some(lambda * (theta.cosh() - 1.0)),
            _ => None,
        }
    }

    /// Draws one comparison from the tilted law at score difference `theta`.
    pub fn sample_comparison<R: Rng + ?Sized>(&self, theta: f64, rng: &mut R) -> f64 {
        match self.kind {
            Kind::Bernoulli => {
                let p_up = 1.0 / (1.0 + (-2.0 * theta).exp());
                if rng.random::<f64>() < p_up {
                    1.0
                } else {
                    -1.0
                }
            }
            Kind::Knary { levels } => {
                let weights: Vec<f64> = (1..=levels)
                    .map(|k| (theta * knary_point(levels, k) - theta.abs()).exp())
                    .collect();
                let total: f64 = weights.iter().sum();
                let mut u = rng.random::<f64>() * total;
                for (k, w) in weights.iter().enumerate() {
                    if u < *w {
                        return knary_point(levels, k as u32 + 1);
                    }
                    u -= w;
                }
                knary_point(levels, levels)
            }
            Kind::Poisson { lambda } => {
                let z = 2.0 * lambda * theta.sinh();
                let p_up = 1.0 / (1.0 + (-z).exp());
                if rng.random::<f64>() < p_up {
                    poisson_draw(lambda * theta.exp(), rng)
                } else {
                    -poisson_draw(lambda * (-theta).exp(), rng)
                }
            }
            Kind::Gaussian { sigma0_sq } => Normal::new(sigma0_sq * theta, sigma0_sq.sqrt())
                .expect("validated variance")
                .sample(rng),
            Kind::Uniform => {
                let u: f64 = rng.random();
                if theta == 0.0 {
                    return 2.0 * u - 1.0;
                }
                let a = theta.abs();
                // inverse CDF of e^{ar} on [-1, 1], reflected for negative θ
                let r = (1.0 + (-(1.0 - u) * -(-2.0 * a).exp_m1()).ln_1p() / a).clamp(-1.0, 1.0);
                if theta < 0.0 {
                    -r
                } else {
                    r
                }
            }
            Kind::Beta { beta } => beta_rejection(beta, theta, rng),
            Kind::BetaTwo => beta_rejection(2.0, theta, rng),
        }
    }
}

fn knary_point(levels: u32, k: u32) -> f64 {
    2.0 * (k as f64 - 1.0) / (levels as f64 - 1.0) - 1.0
}

fn poisson_draw<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> f64 {
    if rate <= 0.0 || !rate.is_finite() {
        return 0.0;
    }
    Poisson::new(rate).expect("positive rate").sample(rng)
}

/// Smallest `k` with `P(|r| > k) ≤ POISSON_TRUNCATION_MASS` under the untilted law.
fn poisson_truncation(lambda: f64) -> u64 {
    // P(|r| > k) = P(X > k) for X ~ Poisson(λ)
    let mut k = 0u64;
    let mut term = (-lambda).exp();
    let mut cdf = term;
    while 1.0 - cdf > POISSON_TRUNCATION_MASS && k < 100_000 {
        k += 1;
        term *= lambda / k as f64;
        cdf += term;
    }
    k
}

fn beta_quadrature(rule: &GaussJacobi, x: f64) -> CgfTriple {
    // x ≥ 0; weights normalized so Σw = 1
    let shifted: Vec<f64> = rule.nodes().iter().map(|r| (x * (r - 1.0)).exp()).collect();
    let s: f64 = rule.weights().iter().zip(&shifted).map(|(w, e)| w * e).sum();
    let value = if x <= 1.0 {
        rule.iter()
            .map(|(r, w)| {
                let h = (0.5 * x * r).sinh();
                2.0 * w * h * h
            })
            .sum::<f64>()
            .ln_1p()
    } else {
        x + s.ln()
    };
    let first = if x <= 1.0 {
        let num: f64 = rule.iter().map(|(r, w)| w * r * (x * r).sinh()).sum();
        let den: f64 = rule.iter().map(|(r, w)| w * (x * r).cosh()).sum();
        num / den
    } else {
        rule.iter().zip(&shifted).map(|((r, w), e)| w * r * e).sum::<f64>() / s
    };
    let second = rule
        .iter()
        .zip(&shifted)
        .map(|((r, w), e)| w * (r - first) * (r - first) * e)
        .sum::<f64>()
        / s;
    CgfTriple { value, first, second }
}

fn beta_rejection<R: Rng + ?Sized>(beta: f64, theta: f64, rng: &mut R) -> f64 {
    let proposal = Beta::new(beta, beta).expect("validated beta");
    loop {
        let r = 2.0 * proposal.sample(rng) - 1.0;
        let u: f64 = rng.random();
        // accept with probability e^{θr - |θ|} ≤ 1
        if u.ln() <= theta * r - theta.abs() {
            return r;
        }
    }
}

impl fmt::Display for RootLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            Kind::Bernoulli => write!(f, "bernoulli"),
            Kind::Knary { levels } => write!(f, "knary:K={levels}"),
            Kind::Poisson { lambda } => write!(f, "poisson:lambda={lambda}"),
            Kind::Gaussian { sigma0_sq } => write!(f, "gaussian:sigma0sq={sigma0_sq}"),
            Kind::Uniform => write!(f, "uniform"),
            Kind::Beta { beta } => write!(f, "beta:beta={beta}"),
            Kind::BetaTwo => write!(f, "beta2"),
        }
    }
}

impl FromStr for RootLaw {
    type Err = Error;

    /// Parses `bernoulli`, `knary:K=21`, `poisson:lambda=1.0`,
    /// `gaussian:sigma0sq=1.0`, `uniform`, `beta:beta=2.5` or `beta2`,
    /// case-insensitively.
    fn from_str(spec: &str) -> Result<Self> {
        let bad = |reason: &str| Error::ModelSpec {
            spec: spec.to_string(),
            reason: reason.to_string(),
        };
        let lower = spec.trim().to_ascii_lowercase();
        let (name, rest) = match lower.split_once(':') {
            Some((n, r)) => (n.trim(), Some(r)),
            None => (lower.as_str(), None),
        };
        let mut params: Vec<(String, String)> = Vec::new();
        if let Some(rest) = rest {
            for item in rest.split(',').filter(|s| !s.trim().is_empty()) {
                let (k, v) = item.split_once('=').ok_or_else(|| bad("expected key=value"))?;
                params.push((k.trim().to_string(), v.trim().to_string()));
            }
        }
        let take = |key: &str| -> Result<f64> {
            let mut found = None;
            for (k, v) in &params {
                if k == key {
                    found = Some(v.parse::<f64>().map_err(|_| bad(&format!("`{v}` is not a number")))?);
                } else {
                    return Err(bad(&format!("unknown key `{k}`")));
                }
            }
            found.ok_or_else(|| bad(&format!("missing key `{key}`")))
        };
        let no_params = || -> Result<()> {
            match params.first() {
                Some((k, _)) => Err(bad(&format!("unknown key `{k}`"))),
                None => Ok(()),
            }
        };
        match name {
            "bernoulli" => no_params().map(|_| Self::bernoulli()),
            "uniform" => no_params().map(|_| Self::uniform()),
            "beta2" => no_params().map(|_| Self::beta_two()),
            "knary" => {
                let k = take("k")?;
                if k.fract() != 0.0 || k < 0.0 || k > u32::MAX as f64 {
                    return Err(bad("K must be an integer"));
                }
                Self::knary(k as u32)
            }
            "poisson" => Self::poisson(take("lambda")?),
            "gaussian" => Self::gaussian(take("sigma0sq")?),
            "beta" => Self::beta(take("beta")?),
            _ => Err(bad("unknown model family")),
        }
    }
}
