//! Clipped stochastic-gradient mean estimation.
//!
//! A chain starts at an initial point and, for every sample `x`, moves toward
//! it by `η_t · clip(x − θ̂, λ)` before projecting back onto `Θ`. Because the
//! innovation is norm-clipped, a single extreme sample can displace the
//! estimate by at most `η_t · λ`.

use serde::Serialize;

use crate::bound::{gamma_of, step_size, Regime};
use crate::error::{check_dim, Error, Result};

/// Euclidean norm.
#[inline]
pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Squared Euclidean distance.
#[inline]
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Scale factor `min(1, λ/‖x‖)` for a vector of norm `norm`; `1` at the origin.
#[inline]
fn clip_scale(norm: f64, lam: f64) -> f64 {
    if norm > lam {
        lam / norm
    } else {
        1.0
    }
}

/// `x · min(1, λ/‖x‖)`. The zero vector maps to itself.
pub fn clip(x: &[f64], lam: f64) -> Vec<f64> {
    debug_assert!(lam > 0.0);
    let s = clip_scale(norm(x), lam);
    x.iter().map(|v| v * s).collect()
}

/// The projection `Π_Θ` onto the known mean set.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Projection {
    /// `Θ = ℝ^d`.
    #[default]
    None,
    Ball { center: Vec<f64>, radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

impl Projection {
    fn validate(&self, dim: usize) -> Result<()> {
        match self {
            Projection::None => Ok(()),
            Projection::Ball { center, radius } => {
                check_dim(dim, center.len())?;
                if !(*radius > 0.0) {
                    return Err(Error::Config(format!("ball radius must be > 0, got {radius}")));
                }
                Ok(())
            }
            Projection::Box { lo, hi } => {
                check_dim(dim, lo.len())?;
                check_dim(dim, hi.len())?;
                if lo.iter().zip(hi).any(|(l, h)| !(l <= h)) {
                    return Err(Error::Config("box bounds must satisfy lo <= hi".into()));
                }
                Ok(())
            }
        }
    }

    /// Project `x` in place.
    pub fn apply(&self, x: &mut [f64]) {
        match self {
            Projection::None => {}
            Projection::Ball { center, radius } => {
                let dist = sq_dist(x, center).sqrt();
                if dist > *radius {
                    let s = radius / dist;
                    for (xi, ci) in x.iter_mut().zip(center) {
                        *xi = ci + (*xi - ci) * s;
                    }
                }
            }
            Projection::Box { lo, hi } => {
                for ((xi, l), h) in x.iter_mut().zip(lo).zip(hi) {
                    *xi = xi.clamp(*l, *h);
                }
            }
        }
    }

    /// Whether `x` lies in `Θ` (up to rounding).
    pub fn contains(&self, x: &[f64]) -> bool {
        const EPS: f64 = 1e-12;
        match self {
            Projection::None => true,
            Projection::Ball { center, radius } => sq_dist(x, center).sqrt() <= radius + EPS,
            Projection::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(v, (l, h))| *v >= l - EPS && *v <= h + EPS),
        }
    }
}

/// Hyperparameters of the estimator and of the confidence radius `B(t, δ)`.
///
/// `gamma` is always derived from `(regime, lambda, sigma)`; it is never set
/// directly.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimatorConfig {
    g_diam: f64,
    sigma: f64,
    lambda: f64,
    regime: Regime,
    gamma: f64,
    dim: usize,
    projection: Projection,
}

impl EstimatorConfig {
    /// Config with clipping level `λ = 2G` and no projection.
    pub fn new(dim: usize, g_diam: f64, sigma: f64, regime: Regime) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("dimension must be >= 1".into()));
        }
        if !(g_diam > 0.0 && g_diam.is_finite()) {
            return Err(Error::Config(format!("G must be positive and finite, got {g_diam}")));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::Config(format!("sigma must be positive and finite, got {sigma}")));
        }
        let mut cfg = EstimatorConfig {
            g_diam,
            sigma,
            lambda: 2.0 * g_diam,
            regime,
            gamma: 0.0,
            dim,
            projection: Projection::None,
        };
        cfg.refresh_gamma()?;
        Ok(cfg)
    }

    /// Override the clipping level.
    pub fn with_lambda(mut self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::Config(format!("lambda must be positive and finite, got {lambda}")));
        }
        self.lambda = lambda;
        self.refresh_gamma()?;
        Ok(self)
    }

    pub fn with_projection(mut self, projection: Projection) -> Result<Self> {
        projection.validate(self.dim)?;
        self.projection = projection;
        Ok(self)
    }

    fn refresh_gamma(&mut self) -> Result<()> {
        self.gamma = gamma_of(self.regime, self.lambda, self.sigma);
        // the step-size analysis needs (γ−1)(γ−2) > 0
        if !(self.gamma > 2.0) {
            return Err(Error::Config(format!(
                "derived gamma = {} must exceed 2; increase sigma or lambda",
                self.gamma
            )));
        }
        Ok(())
    }

    pub fn g_diam(&self) -> f64 {
        self.g_diam
    }
    pub fn sigma(&self) -> f64 {
        self.sigma
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn regime(&self) -> Regime {
        self.regime
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn projection(&self) -> &Projection {
        &self.projection
    }

    /// Starting point of every chain: the origin, projected onto `Θ`.
    pub fn initial_estimate(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.dim];
        self.projection.apply(&mut x);
        x
    }
}

/// One clipped-SGD chain.
#[derive(Debug, Clone, PartialEq)]
pub struct SgdChain {
    start: u64,
    steps: u64,
    estimate: Vec<f64>,
}

impl SgdChain {
    /// A fresh chain whose first sample will be the one at global index `start`.
    pub fn new(start: u64, cfg: &EstimatorConfig) -> Self {
        SgdChain {
            start,
            steps: 0,
            estimate: cfg.initial_estimate(),
        }
    }

    /// A chain resumed from an arbitrary state. `estimate` is not projected.
    pub fn from_parts(start: u64, steps: u64, estimate: Vec<f64>) -> Self {
        SgdChain {
            start,
            steps,
            estimate,
        }
    }

    pub fn start(&self) -> u64 {
        self.start
    }
    pub fn steps(&self) -> u64 {
        self.steps
    }
    pub fn estimate(&self) -> &[f64] {
        &self.estimate
    }

    /// Consume one sample:
    /// `θ̂ ← Π_Θ(θ̂ + η_{steps+1} · clip(x − θ̂, λ))`.
    pub fn update(&mut self, x: &[f64], cfg: &EstimatorConfig) -> Result<()> {
        check_dim(cfg.dim(), x.len())?;
        check_dim(cfg.dim(), self.estimate.len())?;
        self.update_unchecked(x, cfg);
        Ok(())
    }

    /// As [`update`](Self::update) without the dimension checks.
    #[inline]
    pub(crate) fn update_unchecked(&mut self, x: &[f64], cfg: &EstimatorConfig) {
        self.steps += 1;
        let eta = step_size(self.steps, cfg.gamma());
        let dist = sq_dist(x, &self.estimate).sqrt();
        let s = clip_scale(dist, cfg.lambda());
        for (e, xi) in self.estimate.iter_mut().zip(x) {
            *e += eta * ((xi - *e) * s);
        }
        cfg.projection().apply(&mut self.estimate);
    }

    /// Fold a whole slice of samples into a fresh chain.
    pub fn fold<'a, I>(start: u64, samples: I, cfg: &EstimatorConfig) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let mut chain = SgdChain::new(start, cfg);
        for x in samples {
            chain.update(x, cfg)?;
        }
        Ok(chain)
    }
}
