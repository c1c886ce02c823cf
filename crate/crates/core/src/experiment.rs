//! Monte Carlo harness: replicate a scenario, run a detector on each draw,
//! score the detections and summarise.
//!
//! Replicate `i` uses seed `base_seed + i`; results are always returned in
//! replicate order, so output is deterministic whether or not replicates run
//! in parallel.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bound::Regime;
use crate::detector::{Detection, Detector, DetectorConfig, OnlineDetector};
use crate::error::{Error, Result};
use crate::estimator::EstimatorConfig;
use crate::glr::{GlrConfig, GlrDetector};
use crate::metrics::{aggregate, fpr, RunReport, Summary};
use crate::streams::{generate, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectorKind {
    #[default]
    Clipped,
    Glr,
}

impl FromStr for DetectorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "clipped" => Ok(DetectorKind::Clipped),
            "glr" => Ok(DetectorKind::Glr),
            other => Err(Error::Config(format!(
                "unknown detector `{other}` (expected `clipped` or `glr`)"
            ))),
        }
    }
}

/// Detector hyperparameters shared by both detector kinds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectorParams {
    pub kind: DetectorKind,
    pub g_diam: f64,
    pub sigma: f64,
    pub delta: f64,
    pub regime: Regime,
    pub max_window: Option<usize>,
    /// Clipping level override; `2G` when absent.
    pub lambda: Option<f64>,
}

impl DetectorParams {
    pub fn clipped(g_diam: f64, sigma: f64, delta: f64) -> Self {
        DetectorParams {
            kind: DetectorKind::Clipped,
            g_diam,
            sigma,
            delta,
            regime: Regime::Empirical,
            max_window: None,
            lambda: None,
        }
    }

    pub fn with_kind(mut self, kind: DetectorKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn estimator_config(&self, dim: usize) -> Result<EstimatorConfig> {
        let est = EstimatorConfig::new(dim, self.g_diam, self.sigma, self.regime)?;
        match self.lambda {
            Some(l) => est.with_lambda(l),
            None => Ok(est),
        }
    }

    /// Build a fresh detector for `dim`-dimensional data.
    pub fn build(&self, dim: usize) -> Result<AnyDetector> {
        Ok(match self.kind {
            DetectorKind::Clipped => {
                let cfg = DetectorConfig::new(self.estimator_config(dim)?, self.delta)?
                    .with_max_window(self.max_window)?;
                AnyDetector::Clipped(Detector::new(cfg))
            }
            DetectorKind::Glr => {
                let cfg = GlrConfig::isotropic(dim, self.sigma, self.delta)?
                    .with_max_window(self.max_window)?;
                AnyDetector::Glr(GlrDetector::new(cfg))
            }
        })
    }
}

/// Either detector behind one type.
#[derive(Debug, Clone)]
pub enum AnyDetector {
    Clipped(Detector),
    Glr(GlrDetector),
}

impl OnlineDetector for AnyDetector {
    fn dim(&self) -> usize {
        match self {
            AnyDetector::Clipped(d) => d.dim(),
            AnyDetector::Glr(d) => d.dim(),
        }
    }

    fn step(&mut self, x: &[f64]) -> Result<Option<Detection>> {
        match self {
            AnyDetector::Clipped(d) => d.step(x),
            AnyDetector::Glr(d) => d.step(x),
        }
    }

    fn reset(&mut self) {
        match self {
            AnyDetector::Clipped(d) => d.reset(),
            AnyDetector::Glr(d) => d.reset(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSpec {
    /// Catalog name, when the scenario came from the catalog.
    pub scenario_name: Option<String>,
    pub scenario: Scenario,
    pub params: DetectorParams,
    pub replicates: usize,
    pub base_seed: u64,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        if self.replicates == 0 {
            return Err(Error::Config("replicates must be >= 1".into()));
        }
        self.params.build(self.scenario.dim).map(|_| ())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicateResult {
    pub index: usize,
    pub seed: u64,
    pub detections: Vec<Detection>,
    pub report: RunReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSummary {
    pub replicates: usize,
    pub regret: Summary,
    pub fpr: f64,
    /// Runs with at least one detection.
    pub runs_with_detection: usize,
    /// Delay quantiles over replicates that detected the change; only for
    /// single-change scenarios.
    pub delay: Option<Summary>,
    pub missed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentOutcome {
    pub replicates: Vec<ReplicateResult>,
    pub summary: ExperimentSummary,
}

/// Run one replicate: draw the stream for `seed` and detect.
pub fn run_replicate(spec: &ExperimentSpec, index: usize) -> Result<ReplicateResult> {
    let seed = spec.base_seed.wrapping_add(index as u64);
    let stream = generate(&spec.scenario, seed)?;
    let mut det = spec.params.build(spec.scenario.dim)?;
    let detections = det.run(&stream)?;
    let times = detections.iter().map(|d| d.time).collect();
    let report = RunReport::evaluate(times, &spec.scenario.ground_truth())?;
    Ok(ReplicateResult {
        index,
        seed,
        detections,
        report,
    })
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutcome> {
    spec.validate()?;
    #[cfg(feature = "parallel")]
    let replicates: Vec<ReplicateResult> = {
        use rayon::prelude::*;
        (0..spec.replicates)
            .into_par_iter()
            .map(|i| run_replicate(spec, i))
            .collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let replicates: Vec<ReplicateResult> = (0..spec.replicates)
        .map(|i| run_replicate(spec, i))
        .collect::<Result<_>>()?;

    let summary = summarize(&replicates, spec.scenario.change_points().len() == 1)?;
    Ok(ExperimentOutcome {
        replicates,
        summary,
    })
}

fn summarize(reps: &[ReplicateResult], single_change: bool) -> Result<ExperimentSummary> {
    let reports: Vec<RunReport> = reps.iter().map(|r| r.report.clone()).collect();
    let regrets: Vec<f64> = reports.iter().map(|r| r.regret as f64).collect();
    let (delay, missed) = if single_change {
        let delays: Vec<f64> = reports
            .iter()
            .filter_map(|r| r.delays[0])
            .map(|d| d as f64)
            .collect();
        let missed = reports.len() - delays.len();
        (aggregate(&delays).ok(), missed)
    } else {
        (None, 0)
    };
    Ok(ExperimentSummary {
        replicates: reps.len(),
        regret: aggregate(&regrets)?,
        fpr: fpr(&reports)?,
        runs_with_detection: reports.iter().filter(|r| !r.detections.is_empty()).count(),
        delay,
        missed,
    })
}

/// One row per replicate: `seed,num_detections,num_false,regret,delay`.
/// `delay` is blank unless the scenario has a single change that was detected.
pub fn metrics_csv(outcome: &ExperimentOutcome) -> String {
    let mut out = String::from("seed,num_detections,num_false,regret,delay\n");
    for r in &outcome.replicates {
        let delay = match r.report.delays.as_slice() {
            [Some(d)] => d.to_string(),
            _ => String::new(),
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.seed,
            r.report.detections.len(),
            r.report.num_false(),
            r.report.regret,
            delay
        );
    }
    out
}

/// Aggregate summary as a `metric,value` table.
pub fn summary_csv(s: &ExperimentSummary) -> String {
    let mut out = String::from("metric,value\n");
    let mut row = |k: &str, v: String| {
        let _ = writeln!(out, "{k},{v}");
    };
    row("replicates", s.replicates.to_string());
    row("regret_median", s.regret.median.to_string());
    row("regret_q05", s.regret.q05.to_string());
    row("regret_q95", s.regret.q95.to_string());
    row("fpr", s.fpr.to_string());
    row("runs_with_detection", s.runs_with_detection.to_string());
    if let Some(d) = &s.delay {
        row("delay_median", d.median.to_string());
        row("delay_q05", d.q05.to_string());
        row("delay_q95", d.q95.to_string());
        row("delay_missed", s.missed.to_string());
    }
    out
}

/// Header of [`detection_row`] tables.
pub const DETECTIONS_HEADER: &str = "time,segment_start,loc_lo,loc_hi,witness_split";

pub fn detection_row(d: &Detection) -> String {
    let (lo, hi) = d
        .localization
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .unwrap_or_default();
    format!("{},{},{},{},{}", d.time, d.segment_start, lo, hi, d.witness_split)
}

/// All detections of all replicates, prefixed by the replicate seed.
pub fn detections_csv(outcome: &ExperimentOutcome) -> String {
    let mut out = format!("seed,{DETECTIONS_HEADER}\n");
    for r in &outcome.replicates {
        for d in &r.detections {
            let _ = writeln!(out, "{},{}", r.seed, detection_row(d));
        }
    }
    out
}
