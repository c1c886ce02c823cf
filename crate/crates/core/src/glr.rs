//! GLR-style baseline: the same restart-and-split scan as [`Detector`], but
//! comparing plain empirical means against the sub-gaussian Laplace radius.
//!
//! This approximates Improved-GLR for comparison runs; it is not a faithful
//! reimplementation. The per-test confidence mirrors the clipped detector:
//! `δ' = δ / (2(t−r)(t−r+1))`, and a change fires when
//! `‖mean_{r:s} − mean_{s+1:t}‖ > ρ(s−r+1, δ') + ρ(t−s, δ')`.
//!
//! [`Detector`]: crate::detector::Detector

use serde::Serialize;

use crate::bound::subgaussian_radius;
use crate::detector::{check_delta, split_delta, Detection, OnlineDetector};
use crate::error::{check_dim, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GlrConfig {
    /// Largest eigenvalue of the sample covariance.
    pub lambda_max: f64,
    pub dim: usize,
    pub delta: f64,
    pub max_window: Option<usize>,
}

impl GlrConfig {
    pub fn new(dim: usize, lambda_max: f64, delta: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("dimension must be >= 1".into()));
        }
        if !(lambda_max > 0.0 && lambda_max.is_finite()) {
            return Err(Error::Config(format!("lambda_max must be positive, got {lambda_max}")));
        }
        check_delta(delta)?;
        Ok(GlrConfig {
            lambda_max,
            dim,
            delta,
            max_window: None,
        })
    }

    /// `λ_max = σ²/d`: isotropic noise with total second moment `σ²`.
    pub fn isotropic(dim: usize, sigma: f64, delta: f64) -> Result<Self> {
        GlrConfig::new(dim, sigma * sigma / dim as f64, delta)
    }

    pub fn with_max_window(mut self, w: Option<usize>) -> Result<Self> {
        if w == Some(0) {
            return Err(Error::Config("max_window must be >= 1".into()));
        }
        self.max_window = w;
        Ok(self)
    }
}

/// Empirical-mean split detector backed by running prefix sums.
#[derive(Debug, Clone)]
pub struct GlrDetector {
    cfg: GlrConfig,
    r: u64,
    t: u64,
    /// Flat `(t−r+2) × d` prefix sums; row `k` sums `X_r..X_{r+k−1}`.
    prefix: Vec<f64>,
    num_detections: u64,
    radii: Vec<f64>,
    violating: Vec<u64>,
}

impl GlrDetector {
    pub fn new(cfg: GlrConfig) -> Self {
        let d = cfg.dim;
        GlrDetector {
            cfg,
            r: 1,
            t: 0,
            prefix: vec![0.0; d],
            num_detections: 0,
            radii: Vec::new(),
            violating: Vec::new(),
        }
    }

    pub fn config(&self) -> &GlrConfig {
        &self.cfg
    }

    pub fn r(&self) -> u64 {
        self.r
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn num_detections(&self) -> u64 {
        self.num_detections
    }

    /// Empirical mean of `X_a..=X_b` (global indices inside the segment).
    pub fn segment_mean(&self, a: u64, b: u64) -> Option<Vec<f64>> {
        if a < self.r || b > self.t || a > b {
            return None;
        }
        let d = self.cfg.dim;
        let (i, j) = ((a - self.r) as usize, (b - self.r + 1) as usize);
        let n = (b - a + 1) as f64;
        Some(
            (0..d)
                .map(|k| (self.prefix[j * d + k] - self.prefix[i * d + k]) / n)
                .collect(),
        )
    }

    fn restart(&mut self) {
        self.r = self.t + 1;
        self.prefix.clear();
        self.prefix.resize(self.cfg.dim, 0.0);
    }
}

impl OnlineDetector for GlrDetector {
    fn dim(&self) -> usize {
        self.cfg.dim
    }

    fn step(&mut self, x: &[f64]) -> Result<Option<Detection>> {
        let d = self.cfg.dim;
        check_dim(d, x.len())?;
        self.t += 1;
        let last = self.prefix.len() - d;
        for (k, xi) in x.iter().enumerate() {
            let v = self.prefix[last + k] + xi;
            self.prefix.push(v);
        }
        let (r, t) = (self.r, self.t);
        let span = t - r;
        self.violating.clear();
        if span >= 3 {
            let dp = split_delta(span, self.cfg.delta);
            // radii[n] = ρ(n, δ') for sample counts n in 1..=span−1
            self.radii.clear();
            self.radii.push(f64::INFINITY);
            self.radii.extend(
                (1..span).map(|n| subgaussian_radius(n, dp, self.cfg.lambda_max, d)),
            );
            let lo_s = match self.cfg.max_window {
                Some(w) => (r + 1).max(t.saturating_sub(w as u64)),
                None => r + 1,
            };
            let total = &self.prefix[(span as usize + 1) * d..];
            for s in lo_s..=t - 2 {
                let cut = &self.prefix[(s - r + 1) as usize * d..(s - r + 2) as usize * d];
                let (n1, n2) = (s - r + 1, t - s);
                let dist2: f64 = (0..d)
                    .map(|k| {
                        let diff = cut[k] / n1 as f64 - (total[k] - cut[k]) / n2 as f64;
                        diff * diff
                    })
                    .sum();
                let thr = self.radii[n1 as usize] + self.radii[n2 as usize];
                if dist2.sqrt() > thr {
                    self.violating.push(s);
                }
            }
        }
        let (Some(&lo), Some(&hi)) = (self.violating.first(), self.violating.last()) else {
            return Ok(None);
        };
        let det = Detection {
            time: t,
            segment_start: r,
            localization: Some((lo, hi)),
            witness_split: lo,
        };
        self.num_detections += 1;
        self.restart();
        Ok(Some(det))
    }

    fn reset(&mut self) {
        *self = GlrDetector::new(self.cfg.clone());
    }
}
