//! Worst-case detection-delay bound and the region where it is vacuous.
//!
//! For a single change of size `Δ` after `n` pre-change samples the detector
//! fires within `D` further samples with probability `1 − δ'`, where `D` is the
//! smallest `d ≥ 1` with
//!
//! ```text
//! Δ² ≥ B(n−1, δ'/2) + B(d, δ'/2) + B(n−1, δ_d) + B(d, δ_d),   δ_d = δ / (2(n+d+1)(n+d))
//! ```
//!
//! `δ` is the detector's false-positive budget.

use serde::Serialize;

use crate::bound::bound_b;
use crate::detector::check_delta;
use crate::error::{Error, Result};
use crate::estimator::EstimatorConfig;

pub const DEFAULT_D_MAX: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DelayQuery {
    /// Pre-change sample count.
    pub n: u64,
    /// `‖θ₁ − θ₂‖`.
    pub delta_jump: f64,
    /// Delay failure probability `δ'`.
    pub delta_prime: f64,
    pub cfg: EstimatorConfig,
    /// False-positive budget `δ` of the detector.
    pub fpr_delta: f64,
    /// Search cap for `d`.
    pub d_max: u64,
}

impl DelayQuery {
    pub fn new(n: u64, delta_jump: f64, cfg: EstimatorConfig) -> Self {
        DelayQuery {
            n,
            delta_jump,
            delta_prime: 0.1,
            cfg,
            fpr_delta: 0.1,
            d_max: DEFAULT_D_MAX,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Config(format!("n must be >= 2, got {}", self.n)));
        }
        if !(self.delta_jump > 0.0 && self.delta_jump.is_finite()) {
            return Err(Error::Config(format!(
                "jump size must be positive and finite, got {}",
                self.delta_jump
            )));
        }
        check_delta(self.delta_prime)?;
        check_delta(self.fpr_delta)?;
        if self.d_max == 0 {
            return Err(Error::Config("d_max must be >= 1".into()));
        }
        Ok(())
    }

    fn allocated(&self, d: u64) -> f64 {
        let nd = (self.n + d) as f64;
        self.fpr_delta / (2.0 * (nd + 1.0) * nd)
    }

    /// Right-hand side of the delay inequality at `d`.
    pub fn requirement(&self, d: u64) -> f64 {
        let half = self.delta_prime / 2.0;
        let a = self.allocated(d);
        let pre = self.n - 1;
        bound_b(pre, half, &self.cfg)
            + bound_b(d, half, &self.cfg)
            + bound_b(pre, a, &self.cfg)
            + bound_b(d, a, &self.cfg)
    }

    /// The part of [`requirement`](Self::requirement) that does not shrink
    /// with `d`; nondecreasing in `d`.
    fn pre_change_floor(&self, d: u64) -> f64 {
        let pre = self.n - 1;
        bound_b(pre, self.delta_prime / 2.0, &self.cfg) + bound_b(pre, self.allocated(d), &self.cfg)
    }
}

/// Smallest `d ∈ [1, d_max]` satisfying the delay inequality; `None` stands
/// for `+∞` (not found within `d_max`).
///
/// The scan is linear from `d = 1`. It stops early once the pre-change terms
/// alone exceed `Δ²`, since they never decrease with `d`.
pub fn delay_bound(q: &DelayQuery) -> Result<Option<u64>> {
    q.validate()?;
    let target = q.delta_jump * q.delta_jump;
    for d in 1..=q.d_max {
        if q.pre_change_floor(d) > target {
            return Ok(None);
        }
        if target >= q.requirement(d) {
            return Ok(Some(d));
        }
    }
    Ok(None)
}

/// Whether the delay bound is vacuous for this query.
pub fn undetectable(q: &DelayQuery) -> Result<bool> {
    Ok(delay_bound(q)?.is_none())
}

/// Delay bounds over `n_grid × jump_grid`; row `i` is `n_grid[i]`.
pub fn heatmap(n_grid: &[u64], jump_grid: &[f64], template: &DelayQuery) -> Result<Vec<Vec<Option<u64>>>> {
    if n_grid.is_empty() || jump_grid.is_empty() {
        return Err(Error::Empty("heatmap grids must be nonempty".into()));
    }
    let cell = |n: u64, jump: f64| {
        let q = DelayQuery {
            n,
            delta_jump: jump,
            ..template.clone()
        };
        delay_bound(&q)
    };
    let row = |n: u64| jump_grid.iter().map(|&j| cell(n, j)).collect::<Result<Vec<_>>>();

    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        n_grid.par_iter().map(|&n| row(n)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        n_grid.iter().map(|&n| row(n)).collect()
    }
}

/// Render a heatmap as CSV: header row of jump sizes, first column `n`,
/// `+∞` cells left empty.
pub fn heatmap_csv(n_grid: &[u64], jump_grid: &[f64], cells: &[Vec<Option<u64>>]) -> String {
    let mut out = String::from("n");
    for j in jump_grid {
        out.push(',');
        out.push_str(&j.to_string());
    }
    out.push('\n');
    for (n, row) in n_grid.iter().zip(cells) {
        out.push_str(&n.to_string());
        for c in row {
            out.push(',');
            if let Some(d) = c {
                out.push_str(&d.to_string());
            }
        }
        out.push('\n');
    }
    out
}
