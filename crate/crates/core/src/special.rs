//! Overflow-free elementary pieces shared by the closed-form cumulant functions.
//!
//! Every function here takes `x ≥ 0`; parity is applied by the caller.

use std::f64::consts::LN_2;

/// Below this magnitude the closed forms are replaced by even-moment series.
pub(crate) const SERIES_CUTOFF: f64 = 1.0;

const SERIES_TERMS: usize = 24;

/// Value and first two derivatives of a log-moment-generating function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgfTriple {
    pub value: f64,
    pub first: f64,
    pub second: f64,
}

/// Evaluates `log M(x)` and its derivatives from the even moments
/// `m_{2k} = moment(k)` of a symmetric law, for small `x`.
pub(crate) fn even_moment_series(x: f64, moment: impl Fn(usize) -> f64) -> CgfTriple {
    let mut m_minus_one = 0.0;
    let mut d1 = 0.0;
    let mut d2 = 0.0;
    // x^{2k-2}/(2k-2)! starts at k=1 with 1
    let mut pow_even = 1.0;
    for k in 1..=SERIES_TERMS {
        let m = moment(k);
        let kk = (2 * k) as f64;
        let pow_odd = pow_even * x / (kk - 1.0); // x^{2k-1}/(2k-1)!
        let pow_next = pow_odd * x / kk; // x^{2k}/(2k)!
        d2 += m * pow_even;
        d1 += m * pow_odd;
        m_minus_one += m * pow_next;
        pow_even = pow_next;
    }
    let total = 1.0 + m_minus_one;
    let first = d1 / total;
    CgfTriple {
        value: m_minus_one.ln_1p(),
        first,
        second: d2 / total - first * first,
    }
}

/// Uniform law on [-1, 1]: `log(sinh x / x)`, the Langevin function and its derivative.
pub(crate) fn uniform_cgf(x: f64) -> CgfTriple {
    debug_assert!(x >= 0.0);
    if x < SERIES_CUTOFF {
        return even_moment_series(x, |k| 1.0 / (2 * k + 1) as f64);
    }
    let s = x.sinh();
    CgfTriple {
        value: x + (-(-2.0 * x).exp_m1()).ln() - LN_2 - x.ln(),
        first: 1.0 / x.tanh() - 1.0 / x,
        second: 1.0 / (x * x) - 1.0 / (s * s),
    }
}

/// Symmetric Beta(2, 2) law on [-1, 1], density `3(1 - r²)/4`.
pub(crate) fn beta_two_cgf(x: f64) -> CgfTriple {
    debug_assert!(x >= 0.0);
    if x < SERIES_CUTOFF {
        return even_moment_series(x, |k| 3.0 / (((2 * k + 1) * (2 * k + 3)) as f64));
    }
    let e = (-2.0 * x).exp();
    let t = x.tanh();
    let sech2 = 4.0 * e / ((1.0 + e) * (1.0 + e));
    let denom = x - t;
    CgfTriple {
        value: x + ((x - 1.0) + (x + 1.0) * e).ln() - LN_2 + 3f64.ln() - 3.0 * x.ln(),
        first: x * t / denom - 3.0 / x,
        second: (x * x * sech2 - t * t) / (denom * denom) + 3.0 / (x * x),
    }
}

/// Rademacher law on {-1, +1}: `log cosh x`.
pub(crate) fn bernoulli_cgf(x: f64) -> CgfTriple {
    debug_assert!(x >= 0.0);
    let e = (-2.0 * x).exp();
    let value = if x < SERIES_CUTOFF {
        let h = (0.5 * x).sinh();
        (2.0 * h * h).ln_1p()
    } else {
        x + e.ln_1p() - LN_2
    };
    CgfTriple {
        value,
        first: x.tanh(),
        second: 4.0 * e / ((1.0 + e) * (1.0 + e)),
    }
}

/// Uniform law on the `k` equally spaced points of [-1, 1].
///
/// Uses `log(sinh(kt)/(k sinh t)) = U(kt) - U(t)` with `t = x/(k-1)` and `U`
/// the uniform-law CGF, which stays finite for every `x`.
pub(crate) fn knary_cgf(x: f64, k: u32) -> CgfTriple {
    debug_assert!(x >= 0.0 && k >= 2);
    let kf = k as f64;
    let km1 = kf - 1.0;
    let t = x / km1;
    let s = kf * t;
    let outer = uniform_cgf(s);
    let inner = uniform_cgf(t);
    let value = outer.value - inner.value;
    if t < 0.5 {
        CgfTriple {
            value,
            first: (kf * outer.first - inner.first) / km1,
            second: (kf * kf * outer.second - inner.second) / (km1 * km1),
        }
    } else {
        let csch2 = |y: f64| {
            let sh = y.sinh();
            1.0 / (sh * sh)
        };
        CgfTriple {
            value,
            first: (kf / s.tanh() - 1.0 / t.tanh()) / km1,
            second: (csch2(t) - kf * kf * csch2(s)) / (km1 * km1),
        }
    }
}

/// Symmetrized Poisson law with pmf `P(0)=e^{-λ}`, `P(±k)=e^{-λ}λ^k/(2k!)`.
pub(crate) fn poisson_cgf(x: f64, lambda: f64) -> CgfTriple {
    debug_assert!(x >= 0.0);
    // p = probability of the positive branch, σ(2λ sinh x)
    let z = 2.0 * lambda * x.sinh();
    let ez = (-z).exp();
    let p = 1.0 / (1.0 + ez);
    let q = ez / (1.0 + ez);
    let c = x.cosh();
    CgfTriple {
        value: lambda * x.exp_m1() + ((-z).exp_m1() * 0.5).ln_1p(),
        first: lambda * (2.0 * x.sinh() * p + (-x).exp() * (0.5 * z).tanh()),
        second: lambda * (x.exp() * p + (-x).exp() * q) + 4.0 * lambda * lambda * c * c * p * q,
    }
}

/// Even moments `E[r^{2k}]` of the symmetric Beta(β, β) law on [-1, 1].
pub fn beta_even_moment(beta: f64, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, j| {
        let j = j as f64;
        acc * (j + 0.5) / (beta + j + 0.5)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_and_closed_forms_agree_at_cutoff() {
        for &x in &[0.9, 0.99, 1.0, 1.01, 1.2] {
            let series = even_moment_series(x, |k| 1.0 / (2 * k + 1) as f64);
            let s = x.sinh();
            let closed = ((s / x).ln(), 1.0 / x.tanh() - 1.0 / x, 1.0 / (x * x) - 1.0 / (s * s));
            assert!((series.value - closed.0).abs() < 1e-14);
            assert!((series.first - closed.1).abs() < 1e-14);
            assert!((series.second - closed.2).abs() < 1e-13);
        }
    }

    #[test]
    fn beta_two_matches_series_above_cutoff() {
        for &x in &[1.0, 1.5, 2.5] {
            let closed = beta_two_cgf(x);
            let series = {
                // more terms than the cutoff path needs, but still converges here
                let x2 = x * x;
                let mut m = 1.0;
                let mut m1 = 0.0;
                let mut m2 = 0.0;
                let mut fact_even = 1.0;
                for k in 1..60usize {
                    let mk = 3.0 / (((2 * k + 1) * (2 * k + 3)) as f64);
                    let kk = (2 * k) as f64;
                    m2 += mk * x2.powi(k as i32 - 1) / fact_even;
                    fact_even *= (kk - 1.0) * kk;
                    m1 += mk * x.powi(2 * k as i32 - 1) / (fact_even / kk);
                    m += mk * x2.powi(k as i32) / fact_even;
                }
                (m.ln(), m1 / m, m2 / m - (m1 / m).powi(2))
            };
            assert!((closed.value - series.0).abs() < 1e-13, "{x}");
            assert!((closed.first - series.1).abs() < 1e-13, "{x}");
            assert!((closed.second - series.2).abs() < 1e-12, "{x}");
        }
    }

    #[test]
    fn huge_arguments_stay_finite() {
        for f in [uniform_cgf, beta_two_cgf, bernoulli_cgf] {
            let v = f(800.0);
            assert!(v.value.is_finite() && v.first.is_finite() && v.second.is_finite());
            assert!(v.first <= 1.0);
        }
        let v = knary_cgf(5000.0, 21);
        assert!(v.value.is_finite() && v.first <= 1.0);
    }

    #[test]
    fn beta_moments_reduce_to_uniform() {
        for k in 0..10 {
            assert!((beta_even_moment(1.0, k) - 1.0 / (2 * k + 1) as f64).abs() < 1e-15);
        }
    }
}
