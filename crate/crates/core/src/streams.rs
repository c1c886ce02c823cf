//! Synthetic piecewise-constant-mean streams and file ingestion.
//!
//! All randomness flows through [`SeededRng`], a ChaCha8 generator seeded
//! from a `u64`. ChaCha output is specified independently of platform and
//! word size, so a `(scenario, seed)` pair reproduces the same stream
//! everywhere.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Bernoulli, Distribution, Pareto, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::sq_dist;
use crate::metrics::GroundTruth;

/// Default divisor applied to raw well-log readings (`10^4.5`).
pub const WELL_LOG_DIVISOR: f64 = 31_622.776_601_683_792;

pub const DEFAULT_PARETO_SHAPE: f64 = 2.01;

/// Seeded, portable pseudo-random generator (ChaCha8).
#[derive(Debug, Clone)]
pub struct SeededRng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        SeededRng {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn algorithm(&self) -> &'static str {
        "chacha8"
    }

    pub(crate) fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.inner
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Gaussian,
    /// Univariate: centered Pareto noise. Multivariate: isotropic direction
    /// with Pareto-distributed norm.
    #[serde(alias = "pareto")]
    ParetoIso,
    Bernoulli,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub length: usize,
    pub mean: Vec<f64>,
}

fn default_sigma() -> f64 {
    1.0
}

fn default_shape() -> f64 {
    DEFAULT_PARETO_SHAPE
}

/// A piecewise-constant-mean process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub dim: usize,
    pub family: Family,
    pub segments: Vec<Segment>,
    /// Noise scale `σ`, with `E‖X − θ‖² = σ²`.
    #[serde(default = "default_sigma")]
    pub sigma_target: f64,
    /// Pareto tail index.
    #[serde(default = "default_shape")]
    pub shape: f64,
}

impl Scenario {
    /// Segments of equal `seg_len` whose means alternate between `a` and `b`.
    pub fn alternating(family: Family, a: Vec<f64>, b: Vec<f64>, seg_len: usize, count: usize) -> Self {
        let dim = a.len();
        let segments = (0..count)
            .map(|i| Segment {
                length: seg_len,
                mean: if i % 2 == 0 { a.clone() } else { b.clone() },
            })
            .collect();
        Scenario {
            dim,
            family,
            segments,
            sigma_target: 1.0,
            shape: DEFAULT_PARETO_SHAPE,
        }
    }

    /// One change of size `jump` along `(1, …, 1)/√d` after `pre` samples.
    pub fn single_change(family: Family, dim: usize, pre: usize, post: usize, jump: f64) -> Self {
        let mut s = Scenario::alternating(family, vec![0.0; dim], shifted_mean(dim, jump), pre, 2);
        s.segments[1].length = post;
        s
    }

    pub fn horizon(&self) -> usize {
        self.segments.iter().map(|s| s.length).sum()
    }

    /// 1-based indices of the first sample of every segment but the first.
    pub fn change_points(&self) -> Vec<u64> {
        self.segments
            .iter()
            .scan(0u64, |acc, s| {
                *acc += s.length as u64;
                Some(*acc + 1)
            })
            .take(self.segments.len().saturating_sub(1))
            .collect()
    }

    pub fn ground_truth(&self) -> GroundTruth {
        GroundTruth::new(self.horizon() as u64, self.change_points())
            .expect("validated scenario yields valid ground truth")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.dim == 0 {
            return bad("scenario dimension must be >= 1".into());
        }
        if self.segments.is_empty() {
            return bad("scenario needs at least one segment".into());
        }
        if !(self.sigma_target > 0.0) {
            return bad(format!("sigma_target must be > 0, got {}", self.sigma_target));
        }
        for (i, seg) in self.segments.iter().enumerate() {
            if seg.length == 0 {
                return bad(format!("segment {i} has zero length"));
            }
            if seg.mean.len() != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    got: seg.mean.len(),
                });
            }
            if seg.mean.iter().any(|v| !v.is_finite()) {
                return bad(format!("segment {i} has a non-finite mean"));
            }
        }
        for (i, w) in self.segments.windows(2).enumerate() {
            if sq_dist(&w[0].mean, &w[1].mean) == 0.0 {
                return bad(format!("segments {i} and {} share the same mean", i + 1));
            }
        }
        match self.family {
            Family::Bernoulli => {
                if self.dim != 1 {
                    return bad("Bernoulli scenarios are univariate".into());
                }
                if let Some(seg) = self.segments.iter().find(|s| !(s.mean[0] > 0.0 && s.mean[0] < 1.0)) {
                    return bad(format!("Bernoulli mean {} outside (0, 1)", seg.mean[0]));
                }
            }
            Family::ParetoIso => {
                pareto_scale_for_variance(self.shape, self.sigma_target.powi(2))?;
            }
            Family::Gaussian => {}
        }
        Ok(())
    }
}

/// `(Δ/√d)·(1, …, 1)`, a mean at distance `Δ` from the origin.
pub fn shifted_mean(dim: usize, jump: f64) -> Vec<f64> {
    vec![jump / (dim as f64).sqrt(); dim]
}

/// Pareto scale `x_m` giving variance `target_var` at tail index `shape`:
/// `x_m = (α−1)·√(v(α−2)/α)`.
pub fn pareto_scale_for_variance(shape: f64, target_var: f64) -> Result<f64> {
    if !(shape > 2.0) {
        return Err(Error::Config(format!(
            "Pareto shape must exceed 2 for finite variance, got {shape}"
        )));
    }
    if !(target_var > 0.0) {
        return Err(Error::Config(format!("target variance must be > 0, got {target_var}")));
    }
    Ok((shape - 1.0) * (target_var * (shape - 2.0) / shape).sqrt())
}

/// Pareto scale making `E[R²] = target_second_moment` for the radial law.
fn pareto_radial_scale(shape: f64, target_second_moment: f64) -> f64 {
    (target_second_moment * (shape - 2.0) / shape).sqrt()
}

fn pareto(scale: f64, shape: f64) -> Pareto<f64> {
    Pareto::new(scale, shape).expect("positive scale and shape")
}

/// Draw a univariate stream.
pub fn gen_univariate(scenario: &Scenario, rng: &mut SeededRng) -> Result<Vec<Vec<f64>>> {
    scenario.validate()?;
    if scenario.dim != 1 {
        return Err(Error::Config(format!(
            "univariate generator needs dim = 1, got {}",
            scenario.dim
        )));
    }
    let sigma = scenario.sigma_target;
    let mut out = Vec::with_capacity(scenario.horizon());
    for seg in &scenario.segments {
        let mu = seg.mean[0];
        match scenario.family {
            Family::Gaussian => {
                for _ in 0..seg.length {
                    let z: f64 = rng.rng().sample(StandardNormal);
                    out.push(vec![mu + sigma * z]);
                }
            }
            Family::ParetoIso => {
                let xm = pareto_scale_for_variance(scenario.shape, sigma * sigma)?;
                let dist = pareto(xm, scenario.shape);
                let analytic_mean = scenario.shape * xm / (scenario.shape - 1.0);
                for _ in 0..seg.length {
                    let p = dist.sample(rng.rng());
                    out.push(vec![mu + (p - analytic_mean)]);
                }
            }
            Family::Bernoulli => {
                let dist = Bernoulli::new(mu)
                    .map_err(|e| Error::Config(format!("Bernoulli mean {mu}: {e}")))?;
                for _ in 0..seg.length {
                    out.push(vec![if dist.sample(rng.rng()) { 1.0 } else { 0.0 }]);
                }
            }
        }
    }
    Ok(out)
}

fn unit_direction(dim: usize, rng: &mut SeededRng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.rng().sample(StandardNormal)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 0.0 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Draw a multivariate stream (`dim ≥ 2`).
///
/// Gaussian noise has per-axis variance `σ²/d`, so `E‖X − θ‖² = σ²`.
pub fn gen_multivariate(scenario: &Scenario, rng: &mut SeededRng) -> Result<Vec<Vec<f64>>> {
    scenario.validate()?;
    let dim = scenario.dim;
    if dim < 2 {
        return Err(Error::Config(format!("multivariate generator needs dim >= 2, got {dim}")));
    }
    let sigma = scenario.sigma_target;
    let mut out = Vec::with_capacity(scenario.horizon());
    for seg in &scenario.segments {
        match scenario.family {
            Family::Gaussian => {
                let axis_sd = sigma / (dim as f64).sqrt();
                for _ in 0..seg.length {
                    let x = seg
                        .mean
                        .iter()
                        .map(|m| m + axis_sd * rng.rng().sample::<f64, _>(StandardNormal))
                        .collect();
                    out.push(x);
                }
            }
            Family::ParetoIso => {
                let dist = pareto(pareto_radial_scale(scenario.shape, sigma * sigma), scenario.shape);
                for _ in 0..seg.length {
                    let radius = dist.sample(rng.rng());
                    let u = unit_direction(dim, rng);
                    out.push(seg.mean.iter().zip(u).map(|(m, ui)| m + radius * ui).collect());
                }
            }
            Family::Bernoulli => unreachable!("validate rejects multivariate Bernoulli"),
        }
    }
    Ok(out)
}

/// Draw a stream of any dimension.
pub fn generate(scenario: &Scenario, seed: u64) -> Result<Vec<Vec<f64>>> {
    let mut rng = SeededRng::new(seed);
    if scenario.dim == 1 {
        gen_univariate(scenario, &mut rng)
    } else {
        gen_multivariate(scenario, &mut rng)
    }
}

/// The named synthetic scenarios: four segments of 400 samples with means
/// alternating between a base level and a shifted level.
pub fn scenario_catalog() -> BTreeMap<String, Scenario> {
    let mut cat = BTreeMap::new();
    for (fam, tag) in [(Family::ParetoIso, "pareto"), (Family::Gaussian, "gauss")] {
        for dim in [1usize, 32] {
            for (jump, jtag) in [(0.5, "D05"), (1.0, "D1")] {
                cat.insert(
                    format!("{tag}-d{dim}-{jtag}"),
                    Scenario::alternating(fam, vec![0.0; dim], shifted_mean(dim, jump), 400, 4),
                );
            }
        }
    }
    for (name, a, b) in [("bern-a", 0.7, 0.3), ("bern-b", 0.85, 0.15)] {
        cat.insert(
            name.to_string(),
            Scenario::alternating(Family::Bernoulli, vec![a], vec![b], 400, 4),
        );
    }
    cat
}

pub fn lookup_scenario(name: &str) -> Result<Scenario> {
    let cat = scenario_catalog();
    cat.get(name).cloned().ok_or_else(|| Error::UnknownScenario {
        name: name.to_string(),
        known: cat.keys().cloned().collect::<Vec<_>>().join(", "),
    })
}

/// Parse a well log: one reading per line, blank lines and `#` comments
/// skipped, every value divided by `divisor`.
pub fn parse_well_log(text: &str, divisor: f64) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: f64 = line.parse().map_err(|e| Error::Parse {
            line: i + 1,
            message: format!("`{line}`: {e}"),
        })?;
        if !v.is_finite() {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("non-finite value `{line}`"),
            });
        }
        out.push(vec![v / divisor]);
    }
    if out.is_empty() {
        return Err(Error::Empty("well log has no readings".into()));
    }
    Ok(out)
}

pub fn load_well_log(path: impl AsRef<Path>, divisor: f64) -> Result<Vec<Vec<f64>>> {
    parse_well_log(&std::fs::read_to_string(path)?, divisor)
}

/// Parse a stream CSV with header `t,x_0,…,x_{d−1}`. Lines starting with `#`
/// are ignored. Returns the rows without the `t` column.
pub fn parse_stream_csv(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
    let (hline, header) = lines
        .next()
        .ok_or_else(|| Error::Empty("stream file has no header".into()))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let expected: Vec<String> = std::iter::once("t".to_string())
        .chain((0..cols.len().saturating_sub(1)).map(|k| format!("x_{k}")))
        .collect();
    if cols.len() < 2 || cols != expected {
        return Err(Error::Parse {
            line: hline + 1,
            message: format!("expected header `t,x_0,...`, got `{header}`"),
        });
    }
    let dim = cols.len() - 1;
    let mut out = Vec::new();
    for (i, line) in lines {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != dim + 1 {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("expected {} fields, got {}", dim + 1, fields.len()),
            });
        }
        let row = fields[1..]
            .iter()
            .map(|f| match f.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                Ok(_) => Err(format!("non-finite value `{f}`")),
                Err(e) => Err(format!("`{f}`: {e}")),
            })
            .collect::<std::result::Result<Vec<f64>, String>>()
            .map_err(|message| Error::Parse { line: i + 1, message })?;
        out.push(row);
    }
    Ok(out)
}

/// Render a stream as CSV with 1-based `t`.
pub fn stream_csv(stream: &[Vec<f64>]) -> String {
    let dim = stream.first().map_or(1, Vec::len);
    let mut out = String::from("t");
    for k in 0..dim {
        let _ = write!(out, ",x_{k}");
    }
    out.push('\n');
    for (i, x) in stream.iter().enumerate() {
        let _ = write!(out, "{}", i + 1);
        for v in x {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}
