//! Step-size schedule and anytime confidence radii for the clipped-SGD
//! mean estimator.
//!
//! `bound_b(t, δ)` upper-bounds the squared estimation error after `t` steps
//! with probability at least `1 − δ/(t(t+1))`, simultaneously for every
//! `δ ∈ (0, 1)`. Two constant sets are provided: the ones carried by the
//! theory ([`Regime::Theoretical`]) and the much tighter set used in practice
//! ([`Regime::Empirical`], the default).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::estimator::EstimatorConfig;

/// Which set of absolute constants drives `γ`, `C_t` and `B(t, δ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Theoretical,
    #[default]
    Empirical,
}

/// Absolute constants of one regime.
struct Constants {
    gamma_lin: f64,
    gamma_quad: f64,
    c_moment: f64,
    c_log: f64,
    /// Exponent of `(t+1)` under the `γ²G²` initialization term.
    init_power: i32,
    bias: f64,
    variance: f64,
    martingale: f64,
}

impl Regime {
    fn constants(self) -> Constants {
        match self {
            Regime::Theoretical => Constants {
                gamma_lin: 120.0,
                gamma_quad: 320.0,
                c_moment: 1024.0,
                c_log: 8.0,
                init_power: 2,
                bias: 16.0,
                variance: 4.0,
                martingale: 96.0,
            },
            Regime::Empirical => Constants {
                gamma_lin: 4.0,
                gamma_quad: 8.0,
                c_moment: 0.5,
                c_log: 1.0,
                init_power: 1,
                bias: 2.0,
                variance: 1.0,
                martingale: 2.0,
            },
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Theoretical => "theoretical",
            Regime::Empirical => "empirical",
        })
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "theoretical" | "theory" => Ok(Regime::Theoretical),
            "empirical" => Ok(Regime::Empirical),
            other => Err(Error::Config(format!(
                "unknown regime `{other}` (expected `empirical` or `theoretical`)"
            ))),
        }
    }
}

/// Step-size offset `γ` for clipping level `lambda` and moment bound `sigma`.
pub fn gamma_of(regime: Regime, lambda: f64, sigma: f64) -> f64 {
    let k = regime.constants();
    f64::max(
        k.gamma_lin * lambda * sigma * (sigma + 1.0),
        k.gamma_quad * sigma * sigma + 1.0,
    )
}

/// `η_t = 2 / (t + γ)`. `t` is 1-based.
#[inline]
pub fn step_size(t: u64, gamma: f64) -> f64 {
    debug_assert!(t >= 1);
    2.0 / (t as f64 + gamma)
}

/// `ln(2t²(t+1)/δ)`, the union-bound log shared by `C_t` and `B`.
#[inline]
fn union_log(t: u64, delta: f64) -> f64 {
    let t = t as f64;
    (2.0 * t * t * (t + 1.0) / delta).ln()
}

/// The multiplicative constant `C_t`.
pub fn c_t(t: u64, delta: f64, cfg: &EstimatorConfig) -> f64 {
    let k = cfg.regime().constants();
    let (g, sigma, lambda, gamma) = (cfg.g_diam(), cfg.sigma(), cfg.lambda(), cfg.gamma());
    let moment = k.c_moment * sigma.powi(4) / (g * g * lambda * lambda);
    let log_term = k.c_log * lambda * union_log(t, delta).sqrt() / (gamma * gamma * g);
    moment.max(log_term)
}

/// Anytime squared confidence radius `B(t, δ)`.
///
/// Returns `+∞` for `t = 0`: an empty sample carries no information, and any
/// test comparing against it can never fire.
pub fn bound_b(t: u64, delta: f64, cfg: &EstimatorConfig) -> f64 {
    if t == 0 {
        return f64::INFINITY;
    }
    let k = cfg.regime().constants();
    let (g, sigma, lambda, gamma) = (cfg.g_diam(), cfg.sigma(), cfg.lambda(), cfg.gamma());
    let tf = t as f64;
    let init = gamma * gamma * g * g / (tf + 1.0).powi(k.init_power);
    let bias_var = (k.bias * sigma * sigma / lambda + k.variance * sigma * sigma) / (2.0 * (tf + 1.0));
    let mart = k.martingale * lambda * lambda * union_log(t, delta) * sigma * (sigma + 1.0)
        / ((tf + gamma) * (tf + 1.0).sqrt());
    c_t(t, delta, cfg) * (init + bias_var + mart)
}

/// Laplace-method radius for the empirical mean of `t` sub-gaussian samples
/// with covariance spectral norm `lambda_max` in dimension `dim`:
/// `√(2 λ_max (1 + 1/t) ln((t+1)^d / δ) / t)`.
///
/// Used by the GLR baseline; not valid for heavy-tailed data.
pub fn subgaussian_radius(t: u64, delta: f64, lambda_max: f64, dim: usize) -> f64 {
    debug_assert!(t >= 1);
    let tf = t as f64;
    let log_term = dim as f64 * (tf + 1.0).ln() - delta.ln();
    (2.0 * lambda_max * (1.0 + 1.0 / tf) * log_term / tf).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn emp() -> EstimatorConfig {
        EstimatorConfig::new(1, 1.0, 1.0, Regime::Empirical).unwrap()
    }

    #[test]
    fn gamma_constant_sets() {
        assert_eq!(gamma_of(Regime::Theoretical, 2.0, 1.0), 480.0);
        assert_eq!(gamma_of(Regime::Empirical, 2.0, 1.0), 16.0);
        assert_eq!(gamma_of(Regime::Empirical, 2.0, 0.5), 6.0);
    }

    #[test]
    fn step_sizes() {
        assert_eq!(step_size(1, 16.0), 2.0 / 17.0);
        assert_eq!(step_size(1, 480.0), 2.0 / 481.0);
        assert_eq!(step_size(100, 16.0), 2.0 / 116.0);
        assert!(step_size(2, 16.0) < step_size(1, 16.0));
    }

    #[test]
    fn zero_steps_is_infinite() {
        assert!(bound_b(0, 0.1, &emp()).is_infinite());
    }

    #[test]
    fn c_t_first_branch_dominates() {
        assert_eq!(c_t(100, 0.1, &emp()), 0.125);
        let theo = EstimatorConfig::new(1, 1.0, 1.0, Regime::Theoretical).unwrap();
        assert_eq!(c_t(1, 0.5, &theo), 256.0);
    }

    #[test]
    fn radius_monotone_in_dim_and_delta() {
        for t in [1, 5, 50, 500] {
            assert!(subgaussian_radius(t, 0.1, 1.0, 2) > subgaussian_radius(t, 0.1, 1.0, 1));
            assert!(subgaussian_radius(t, 0.05, 1.0, 1) > subgaussian_radius(t, 0.1, 1.0, 1));
            assert!(subgaussian_radius(2 * t, 0.1, 1.0, 1) < subgaussian_radius(t, 0.1, 1.0, 1));
        }
    }

    #[test]
    fn regime_parses() {
        assert_eq!("Empirical".parse::<Regime>().unwrap(), Regime::Empirical);
        assert_eq!("theoretical".parse::<Regime>().unwrap(), Regime::Theoretical);
        assert!("fast".parse::<Regime>().is_err());
    }
}
