//! Layered settings: command-line flags over a TOML config file over
//! library defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use robocpd::experiment::{DetectorKind, DetectorParams};
use robocpd::streams::{lookup_scenario, Scenario};
use robocpd::Regime;

use crate::Failure;

pub const DEFAULT_SIGMA: f64 = 1.0;
pub const DEFAULT_DELTA: f64 = 0.1;
pub const DEFAULT_REPLICATES: usize = 30;
pub const DEFAULT_N_GRID: &str = "100:2000:100";
pub const DEFAULT_JUMP_GRID: &str = "0.5:10:0.5";

const G_REQUIRED: &str = "--g is required: the mean-set diameter G has no default here. \
     The reference experiments print it ambiguously (it reads as either 1 or 12), so pass it \
     explicitly (flag or `g = ...` in the config file)";

/// A scenario given by catalog name or spelled out inline.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(untagged)]
pub enum ScenarioRef {
    Name(String),
    Inline(Scenario),
}

/// Every tunable, all optional. Used both for the config file and for the
/// flags; [`Layer::over`] merges two layers.
#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Layer {
    pub scenario: Option<ScenarioRef>,
    pub detector: Option<DetectorKind>,
    pub g: Option<f64>,
    pub sigma: Option<f64>,
    pub delta: Option<f64>,
    pub delta_prime: Option<f64>,
    pub regime: Option<Regime>,
    pub replicates: Option<usize>,
    pub seed: Option<u64>,
    pub dim: Option<usize>,
    pub max_window: Option<usize>,
    pub lambda: Option<f64>,
    pub out: Option<PathBuf>,
    pub n_grid: Option<String>,
    pub jump_grid: Option<String>,
}

macro_rules! merge {
    ($hi:expr, $lo:expr; $($f:ident),*) => {
        Layer { $($f: $hi.$f.or($lo.$f)),* }
    };
}

impl Layer {
    /// `self` wins wherever it is set.
    pub fn over(self, lower: Layer) -> Layer {
        merge!(self, lower; scenario, detector, g, sigma, delta, delta_prime, regime,
            replicates, seed, dim, max_window, lambda, out, n_grid, jump_grid)
    }

    pub fn load(path: &Path) -> Result<Layer, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Failure::usage(format!("bad config {}: {e}", path.display())))
    }

    pub fn require_g(&self) -> Result<f64, Failure> {
        self.g.ok_or_else(|| Failure::usage(G_REQUIRED))
    }

    pub fn scenario(&self) -> Result<(Option<String>, Scenario), Failure> {
        match &self.scenario {
            None => Err(Failure::usage("--scenario is required (see `robocpd list-scenarios`)")),
            Some(ScenarioRef::Name(n)) => Ok((Some(n.clone()), lookup_scenario(n)?)),
            Some(ScenarioRef::Inline(s)) => {
                s.validate()?;
                Ok((None, s.clone()))
            }
        }
    }

    pub fn detector_params(&self) -> Result<DetectorParams, Failure> {
        Ok(DetectorParams {
            kind: self.detector.unwrap_or_default(),
            g_diam: self.require_g()?,
            sigma: self.sigma.unwrap_or(DEFAULT_SIGMA),
            delta: self.delta.unwrap_or(DEFAULT_DELTA),
            regime: self.regime.unwrap_or_default(),
            max_window: self.max_window,
            lambda: self.lambda,
        })
    }
}

/// `start:stop:step` (inclusive) or a comma-separated list.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, Failure> {
    let bad = |m: String| Failure::usage(format!("bad grid `{spec}`: {m}"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|e| bad(format!("`{s}`: {e}")));
    let parts: Vec<&str> = spec.split(':').collect();
    let values = match parts.as_slice() {
        [a, b, c] => {
            let (start, stop, step) = (num(a)?, num(b)?, num(c)?);
            if !(step > 0.0) || stop < start {
                return Err(bad("need step > 0 and stop >= start".into()));
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
            (0..count).map(|i| start + i as f64 * step).collect()
        }
        [_] => spec.split(',').map(num).collect::<Result<Vec<_>, _>>()?,
        _ => return Err(bad("expected start:stop:step or a comma list".into())),
    };
    if values.is_empty() {
        return Err(bad("empty".into()));
    }
    Ok(values)
}

pub fn parse_n_grid(spec: &str) -> Result<Vec<u64>, Failure> {
    parse_grid(spec)?
        .into_iter()
        .map(|v| {
            if v >= 2.0 && v.fract() == 0.0 {
                Ok(v as u64)
            } else {
                Err(Failure::usage(format!("n grid values must be integers >= 2, got {v}")))
            }
        })
        .collect()
}
