//! Independent numerical oracles shared by the integration tests.
#![allow(dead_code)]

use gbt_core::{Family, RootLaw};

/// `(Φ, Φ′, Φ″)` from an oracle.
#[derive(Debug, Clone, Copy)]
pub struct Triple {
    pub value: f64,
    pub first: f64,
    pub second: f64,
}

/// Gauss–Legendre nodes and weights on [-1, 1] by Newton iteration on the
/// three-term recurrence.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let step = p1 / dp;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// Composite Gauss–Legendre nodes on `[lo, hi]`.
pub fn composite_rule(lo: f64, hi: f64, panels: usize, order: usize) -> Vec<(f64, f64)> {
    let base = gauss_legendre(order);
    let width = (hi - lo) / panels as f64;
    let mut out = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let mid = lo + (p as f64 + 0.5) * width;
        for &(x, w) in &base {
            out.push((mid + 0.5 * width * x, 0.5 * width * w));
        }
    }
    out
}

/// Moments of the tilt `e^{θr}` of a law given by density weights at
/// nodes, computed around `M - 1 = Σ ω f (e^{θr} - 1)` for accuracy near 0.
fn tilted_from_weights(theta: f64, points: &[(f64, f64)]) -> Triple {
    let z: f64 = points.iter().map(|&(_, w)| w).sum();
    if theta.abs() <= 1.0 {
        let m_minus_one: f64 = points.iter().map(|&(r, w)| w * (theta * r).exp_m1()).sum::<f64>() / z;
        let m = 1.0 + m_minus_one;
        let mean: f64 = points.iter().map(|&(r, w)| w * r * (theta * r).exp()).sum::<f64>() / z / m;
        let var: f64 = points.iter().map(|&(r, w)| w * (r - mean).powi(2) * (theta * r).exp()).sum::<f64>() / z / m;
        return Triple { value: m_minus_one.ln_1p(), first: mean, second: var };
    }
    let shift = points.iter().map(|&(r, _)| theta * r).fold(f64::NEG_INFINITY, f64::max);
    let tilted: Vec<(f64, f64)> = points.iter().map(|&(r, w)| (r, w * (theta * r - shift).exp())).collect();
    let s: f64 = tilted.iter().map(|&(_, w)| w).sum();
    let mean = tilted.iter().map(|&(r, w)| w * r).sum::<f64>() / s;
    let var = tilted.iter().map(|&(r, w)| w * (r - mean).powi(2)).sum::<f64>() / s;
    Triple { value: shift + (s / z).ln(), first: mean, second: var }
}

/// Quadrature oracle for a density on [-1, 1].
pub fn density_oracle(theta: f64, density: impl Fn(f64) -> f64) -> Triple {
    let points: Vec<(f64, f64)> = composite_rule(-1.0, 1.0, 64, 20)
        .into_iter()
        .map(|(r, w)| (r, w * density(r)))
        .collect();
    tilted_from_weights(theta, &points)
}

/// Quadrature oracle for the centred normal law with variance `s2`.
pub fn gaussian_oracle(theta: f64, s2: f64) -> Triple {
    let sd = s2.sqrt();
    let mu = s2 * theta;
    let exponent = |r: f64| theta * r - r * r / (2.0 * s2);
    let peak = exponent(mu);
    let norm = (2.0 * std::f64::consts::PI * s2).sqrt();
    let tilted: Vec<(f64, f64)> = composite_rule(mu - 40.0 * sd, mu + 40.0 * sd, 400, 20)
        .into_iter()
        .map(|(r, w)| (r, w * (exponent(r) - peak).exp() / norm))
        .collect();
    let s: f64 = tilted.iter().map(|&(_, w)| w).sum();
    let mean = tilted.iter().map(|&(r, w)| w * r).sum::<f64>() / s;
    let var = tilted.iter().map(|&(r, w)| w * (r - mean).powi(2)).sum::<f64>() / s;
    Triple { value: peak + s.ln(), first: mean, second: var }
}

/// Log-sum-exp oracle for the uniform law on `values`.
pub fn discrete_oracle(theta: f64, values: &[f64], log_weights: &[f64]) -> Triple {
    let logs: Vec<f64> = values.iter().zip(log_weights).map(|(r, lw)| theta * r + lw).collect();
    let peak = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logs.iter().map(|l| (l - peak).exp()).collect();
    let s: f64 = w.iter().sum();
    let mean = w.iter().zip(values).map(|(w, r)| w * r).sum::<f64>() / s;
    let var = w.iter().zip(values).map(|(w, r)| w * (r - mean).powi(2)).sum::<f64>() / s;
    let lz = {
        let p = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        p + log_weights.iter().map(|l| (l - p).exp()).sum::<f64>().ln()
    };
    Triple { value: peak + s.ln() - lz, first: mean, second: var }
}

pub fn knary_oracle(theta: f64, k: u32) -> Triple {
    let values: Vec<f64> = (1..=k).map(|i| 2.0 * (i - 1) as f64 / (k - 1) as f64 - 1.0).collect();
    let logs = vec![0.0; values.len()];
    if theta.abs() <= 1.0 {
        // untilted weights are equal; work with e^{θr} - 1
        let kf = k as f64;
        let m_minus_one = values.iter().map(|r| (theta * r).exp_m1()).sum::<f64>() / kf;
        let t = discrete_oracle(theta, &values, &logs);
        return Triple { value: m_minus_one.ln_1p(), ..t };
    }
    discrete_oracle(theta, &values, &logs)
}

/// Direct pmf sum for the symmetrized Poisson law.
pub fn poisson_oracle(theta: f64, lambda: f64) -> Triple {
    let reach = lambda * theta.abs().exp();
    let n = (reach + 40.0 * reach.sqrt() + 60.0).ceil() as usize;
    // compensated running sum of ln k
    let mut lnfact = vec![0.0f64; n + 1];
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for k in 1..=n {
        let y = (k as f64).ln() - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        lnfact[k] = sum;
    }
    let mut values = vec![0.0];
    let mut logs = vec![-lambda];
    for k in 1..=n {
        let lw = -lambda + k as f64 * lambda.ln() - lnfact[k] - std::f64::consts::LN_2;
        values.push(k as f64);
        logs.push(lw);
        values.push(-(k as f64));
        logs.push(lw);
    }
    let t = discrete_oracle(theta, &values, &logs);
    if theta.abs() <= 1.0 {
        let m_minus_one: f64 = values.iter().zip(&logs).map(|(r, l)| l.exp() * (theta * r).exp_m1()).sum();
        return Triple { value: m_minus_one.ln_1p(), ..t };
    }
    t
}

/// Even-moment series of the symmetric Beta(β, β) law on [-1, 1], with
/// `m_{2k} = m_{2k-2} (2k-1) / (2β + 2k - 1)`.
pub fn beta_series_oracle(theta: f64, beta: f64) -> Triple {
    beta_series_with(theta, |k, prev| prev * (2 * k - 1) as f64 / (2.0 * beta + (2 * k - 1) as f64))
}

/// Generic even series `M(θ) = 1 + Σ_k c_k θ^{2k}/(2k)!` where
/// `moment(k, c_{k-1})` returns `c_k`.
pub fn beta_series_with(theta: f64, moment: impl Fn(usize, f64) -> f64) -> Triple {
    let mut c = 1.0;
    let (mut m_minus_one, mut d1, mut d2) = (0.0, 0.0, 0.0);
    // θ^{2k-2}/(2k-2)!
    let mut pow = 1.0;
    for k in 1..200 {
        c = moment(k, c);
        let kk = (2 * k) as f64;
        let odd = pow * theta / (kk - 1.0);
        let even = odd * theta / kk;
        d2 += c * pow;
        d1 += c * odd;
        m_minus_one += c * even;
        pow = even;
        if k > 10 && c * pow < 1e-30 * (1.0 + m_minus_one) {
            break;
        }
    }
    let m = 1.0 + m_minus_one;
    let first = d1 / m;
    Triple { value: m_minus_one.ln_1p(), first, second: d2 / m - first * first }
}

/// Oracle dispatch for every law used in the suites.
pub fn oracle(law: &RootLaw, theta: f64) -> Triple {
    match law.family() {
        Family::Bernoulli => knary_oracle(theta, 2),
        Family::Knary => knary_oracle(theta, law.parameter().unwrap() as u32),
        Family::Poisson => poisson_oracle(theta, law.parameter().unwrap()),
        Family::Gaussian => gaussian_oracle(theta, law.parameter().unwrap()),
        Family::Uniform => density_oracle(theta, |_| 0.5),
        Family::BetaTwo => density_oracle(theta, |r| 0.75 * (1.0 - r * r)),
        Family::Beta => beta_series_oracle(theta, law.parameter().unwrap()),
    }
}

/// One representative law per family plus a few extra parameters.
pub fn oracle_laws() -> Vec<RootLaw> {
    vec![
        RootLaw::bernoulli(),
        RootLaw::knary(2).unwrap(),
        RootLaw::knary(3).unwrap(),
        RootLaw::knary(5).unwrap(),
        RootLaw::knary(21).unwrap(),
        RootLaw::poisson(0.5).unwrap(),
        RootLaw::poisson(1.0).unwrap(),
        RootLaw::poisson(3.0).unwrap(),
        RootLaw::gaussian(1.0).unwrap(),
        RootLaw::gaussian(0.3).unwrap(),
        RootLaw::uniform(),
        RootLaw::beta(0.3).unwrap(),
        RootLaw::beta(0.5).unwrap(),
        RootLaw::beta(1.0).unwrap(),
        RootLaw::beta(2.0).unwrap(),
        RootLaw::beta(3.0).unwrap(),
        RootLaw::beta_two(),
    ]
}

/// One law per family.
pub fn family_laws() -> Vec<RootLaw> {
    vec![
        RootLaw::bernoulli(),
        RootLaw::knary(5).unwrap(),
        RootLaw::poisson(1.0).unwrap(),
        RootLaw::gaussian(1.0).unwrap(),
        RootLaw::uniform(),
        RootLaw::beta(0.5).unwrap(),
        RootLaw::beta_two(),
    ]
}

pub fn bounded_laws() -> Vec<RootLaw> {
    family_laws().into_iter().filter(RootLaw::is_bounded).collect()
}

/// `|x - y| ≤ rel |y| + abs`.
pub fn close(x: f64, y: f64, rel: f64, abs: f64) -> bool {
    (x - y).abs() <= rel * y.abs() + abs
}
