//! False-positive rate, detection delay and regret against ground truth.

use serde::Serialize;

use crate::error::{Error, Result};

/// True change points of a finite stream. Times are 1-based; a change point
/// is the index of the first sample drawn with the new mean.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GroundTruth {
    horizon: u64,
    change_points: Vec<u64>,
}

impl GroundTruth {
    pub fn new(horizon: u64, change_points: Vec<u64>) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::Config("horizon must be >= 1".into()));
        }
        ensure_strictly_increasing(&change_points, "change points")?;
        if let Some(&c) = change_points.iter().find(|&&c| c <= 1 || c > horizon) {
            return Err(Error::Config(format!("change point {c} outside (1, {horizon}]")));
        }
        Ok(GroundTruth {
            horizon,
            change_points,
        })
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn change_points(&self) -> &[u64] {
        &self.change_points
    }
}

fn ensure_sorted(xs: &[u64], what: &str) -> Result<()> {
    if xs.windows(2).all(|w| w[0] <= w[1]) {
        Ok(())
    } else {
        Err(Error::Unsorted(format!("{what} must be sorted")))
    }
}

fn ensure_strictly_increasing(xs: &[u64], what: &str) -> Result<()> {
    if xs.windows(2).all(|w| w[0] < w[1]) {
        Ok(())
    } else {
        Err(Error::Unsorted(format!("{what} must be strictly increasing")))
    }
}

/// Per-replicate outcome.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunReport {
    pub detections: Vec<u64>,
    /// One flag per detection: `true` if no change lies in `(t_{r−1}, t_r]`.
    pub false_flags: Vec<bool>,
    /// One entry per true change: delay to the first detection after it.
    pub delays: Vec<Option<u64>>,
    pub regret: u64,
}

impl RunReport {
    /// Score sorted detection times against `truth`.
    ///
    /// `delays[c]` is measured from change `c` to the first detection
    /// strictly after it, regardless of later changes; it is meaningful as a
    /// delay only for single-change streams.
    pub fn evaluate(detections: Vec<u64>, truth: &GroundTruth) -> Result<Self> {
        let false_flags = false_positive_flags(&detections, truth)?;
        let delays = truth
            .change_points()
            .iter()
            .map(|&c| single_change_delay(&detections, c))
            .collect();
        let regret = regret(&detections, truth)?;
        Ok(RunReport {
            detections,
            false_flags,
            delays,
            regret,
        })
    }

    pub fn num_false(&self) -> usize {
        self.false_flags.iter().filter(|f| **f).count()
    }

    /// This run's contribution to the false-positive rate.
    pub fn false_fraction(&self) -> f64 {
        if self.detections.is_empty() {
            0.0
        } else {
            self.num_false() as f64 / self.detections.len() as f64
        }
    }
}

/// `χ_r = 1{no change point in (t_{r−1}, t_r]}` with `t_0 = 0`.
pub fn false_positive_flags(detections: &[u64], truth: &GroundTruth) -> Result<Vec<bool>> {
    ensure_sorted(detections, "detections")?;
    let cps = truth.change_points();
    let mut prev = 0;
    Ok(detections
        .iter()
        .map(|&t| {
            // first change point > prev
            let i = cps.partition_point(|&c| c <= prev);
            let hit = cps.get(i).is_some_and(|&c| c <= t);
            prev = t;
            !hit
        })
        .collect())
}

/// Mean over runs of the fraction of false detections; runs without
/// detections contribute zero.
pub fn fpr(reports: &[RunReport]) -> Result<f64> {
    if reports.is_empty() {
        return Err(Error::Empty("fpr needs at least one run".into()));
    }
    Ok(reports.iter().map(RunReport::false_fraction).sum::<f64>() / reports.len() as f64)
}

/// `min{t ∈ detections : t > change_at} − change_at`.
pub fn single_change_delay(detections: &[u64], change_at: u64) -> Option<u64> {
    detections
        .iter()
        .copied()
        .filter(|&t| t > change_at)
        .min()
        .map(|t| t - change_at)
}

/// `Σ_{t=1}^{T} |R_A(t) − R*(t)|`, where `R_A(t)` counts detections `≤ t` and
/// `R*(t)` counts change points `≤ t`. Detections past the horizon are ignored.
pub fn regret(detections: &[u64], truth: &GroundTruth) -> Result<u64> {
    ensure_sorted(detections, "detections")?;
    let cps = truth.change_points();
    let (mut i, mut j) = (0usize, 0usize);
    let mut total = 0u64;
    for t in 1..=truth.horizon() {
        while i < detections.len() && detections[i] <= t {
            i += 1;
        }
        while j < cps.len() && cps[j] <= t {
            j += 1;
        }
        total += i.abs_diff(j) as u64;
    }
    Ok(total)
}

/// Nearest-rank summary of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub median: f64,
    pub q05: f64,
    pub q95: f64,
}

/// Nearest-rank percentile (`p ∈ [0, 1]`) of an already sorted slice.
pub fn nearest_rank(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let rank = ((p * n as f64).ceil() as usize).clamp(1, n);
    sorted[rank - 1]
}

/// `(median, q05, q95)` by nearest rank.
pub fn aggregate(values: &[f64]) -> Result<Summary> {
    if values.is_empty() {
        return Err(Error::Empty("cannot aggregate an empty sample".into()));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(Summary {
        median: nearest_rank(&v, 0.5),
        q05: nearest_rank(&v, 0.05),
        q95: nearest_rank(&v, 0.95),
    })
}
