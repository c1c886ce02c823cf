//! Streaming change-point detection for heavy-tailed, multi-dimensional data.
//!
//! The detector runs clipped stochastic-gradient mean estimators on every
//! candidate segment and declares a change when two adjacent estimates sit
//! further apart than their anytime confidence radii allow. The radii hold
//! under a finite second moment only, so Pareto-like noise does not flood the
//! output with false alarms.
//!
//! ```
//! use robocpd::{run, DetectorConfig, EstimatorConfig, Regime};
//!
//! let est = EstimatorConfig::new(1, 1.0, 1.0, Regime::Empirical).unwrap();
//! let cfg = DetectorConfig::new(est, 0.1).unwrap();
//! let mut stream = vec![[0.0]; 300];
//! stream.extend(vec![[1.0]; 300]);
//! let dets = run(&stream, &cfg).unwrap();
//! assert_eq!(dets.len(), 1);
//! assert!(dets[0].time > 300);
//! ```

pub mod bound;
pub mod delay;
pub mod detector;
pub mod error;
pub mod estimator;
pub mod experiment;
pub mod glr;
pub mod metrics;
pub mod streams;

pub use bound::{bound_b, c_t, gamma_of, step_size, subgaussian_radius, Regime};
pub use delay::{delay_bound, heatmap, heatmap_csv, undetectable, DelayQuery};
pub use detector::{run, split_delta, threshold, Detection, Detector, DetectorConfig, DetectorState, OnlineDetector};
pub use error::{Error, Result};
pub use estimator::{EstimatorConfig, Projection, SgdChain};
pub use experiment::{run_experiment, AnyDetector, DetectorKind, DetectorParams, ExperimentOutcome, ExperimentSpec};
pub use glr::{GlrConfig, GlrDetector};
pub use metrics::{aggregate, fpr, regret, single_change_delay, GroundTruth, RunReport, Summary};
pub use streams::{generate, lookup_scenario, scenario_catalog, Family, Scenario, Segment, SeededRng};
