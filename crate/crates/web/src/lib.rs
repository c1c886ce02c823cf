//! Browser bindings for the demo page in `www/`.
//!
//! Every export takes plain numbers/strings and returns a JSON string; the
//! page parses it and draws on a canvas. The `*_json` functions hold the
//! logic and are plain Rust, so they are tested natively.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use robocpd::delay::{heatmap, DelayQuery};
use robocpd::experiment::{run_replicate, DetectorKind, DetectorParams, ExperimentSpec};
use robocpd::streams::{generate, lookup_scenario};
use robocpd::{bound_b, Detection, EstimatorConfig, Regime};

#[derive(Serialize)]
struct SimulateView {
    scenario: String,
    dim: usize,
    /// Each sample projected on the direction of the mean shift.
    series: Vec<f64>,
    change_points: Vec<u64>,
    detections: Vec<Detection>,
    regret: u64,
    num_false: usize,
}

fn to_err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn params(detector: &str, g: f64, sigma: f64, delta: f64) -> Result<DetectorParams, String> {
    let kind: DetectorKind = detector.parse().map_err(to_err)?;
    Ok(DetectorParams::clipped(g, sigma, delta).with_kind(kind))
}

/// Draw one replicate of a catalog scenario and run a detector on it.
pub fn simulate_json(scenario: &str, detector: &str, g: f64, sigma: f64, delta: f64, seed: u64) -> Result<String, String> {
    let scen = lookup_scenario(scenario).map_err(to_err)?;
    let spec = ExperimentSpec {
        scenario_name: Some(scenario.to_string()),
        scenario: scen.clone(),
        params: params(detector, g, sigma, delta)?,
        replicates: 1,
        base_seed: seed,
    };
    spec.validate().map_err(to_err)?;
    let rep = run_replicate(&spec, 0).map_err(to_err)?;
    let stream = generate(&scen, seed).map_err(to_err)?;

    // unit vector along the first shift (the catalog alternates two means)
    let dir: Vec<f64> = match scen.segments.as_slice() {
        [a, b, ..] => {
            let d: Vec<f64> = b.mean.iter().zip(&a.mean).map(|(x, y)| x - y).collect();
            let n = d.iter().map(|v| v * v).sum::<f64>().sqrt();
            d.iter().map(|v| v / n).collect()
        }
        _ => vec![1.0 / (scen.dim as f64).sqrt(); scen.dim],
    };
    let series = stream
        .iter()
        .map(|x| x.iter().zip(&dir).map(|(a, b)| a * b).sum())
        .collect();
    let view = SimulateView {
        scenario: scenario.to_string(),
        dim: scen.dim,
        series,
        change_points: scen.change_points(),
        num_false: rep.report.num_false(),
        regret: rep.report.regret,
        detections: rep.detections,
    };
    serde_json::to_string(&view).map_err(to_err)
}

#[derive(Serialize)]
struct BoundView {
    gamma: f64,
    lambda: f64,
    t: Vec<u64>,
    /// `√B(t, δ)`, the radius in the data's own units.
    radius: Vec<f64>,
}

/// Confidence radius `√B(t, δ)` on a log-spaced grid up to `t_max`.
pub fn bound_curve_json(g: f64, sigma: f64, delta: f64, regime: &str, t_max: u64) -> Result<String, String> {
    let regime: Regime = regime.parse().map_err(to_err)?;
    let cfg = EstimatorConfig::new(1, g, sigma, regime).map_err(to_err)?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(format!("delta must lie in (0, 1), got {delta}"));
    }
    let t_max = t_max.clamp(2, 10_000_000);
    let mut t: Vec<u64> = (0..=200)
        .map(|i| (t_max as f64).powf(i as f64 / 200.0).round() as u64)
        .collect();
    t.dedup();
    let radius = t.iter().map(|&s| bound_b(s, delta, &cfg).sqrt()).collect();
    serde_json::to_string(&BoundView {
        gamma: cfg.gamma(),
        lambda: cfg.lambda(),
        t,
        radius,
    })
    .map_err(to_err)
}

#[derive(Serialize)]
struct HeatmapView {
    n_grid: Vec<u64>,
    jump_grid: Vec<f64>,
    /// Row per `n`; `null` where the bound is vacuous.
    cells: Vec<Vec<Option<u64>>>,
}

/// Delay bound on `n ∈ {step, 2·step, …, 20·step}`, jumps `{0.5, 1, …, 10}`.
pub fn delay_heatmap_json(g: f64, sigma: f64, delta: f64, delta_prime: f64, n_step: u64) -> Result<String, String> {
    let cfg = EstimatorConfig::new(1, g, sigma, Regime::Empirical).map_err(to_err)?;
    let n_step = n_step.max(2);
    let n_grid: Vec<u64> = (1..=20).map(|i| i * n_step).collect();
    let jump_grid: Vec<f64> = (1..=20).map(|i| i as f64 * 0.5).collect();
    let mut template = DelayQuery::new(n_grid[0], 1.0, cfg);
    template.fpr_delta = delta;
    template.delta_prime = delta_prime;
    // keep the page responsive: vacuous cells stop early, slow ones cap out
    template.d_max = 100_000;
    let cells = heatmap(&n_grid, &jump_grid, &template).map_err(to_err)?;
    serde_json::to_string(&HeatmapView {
        n_grid,
        jump_grid,
        cells,
    })
    .map_err(to_err)
}

#[wasm_bindgen]
pub fn simulate(scenario: &str, detector: &str, g: f64, sigma: f64, delta: f64, seed: u32) -> Result<String, JsValue> {
    simulate_json(scenario, detector, g, sigma, delta, seed as u64).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn bound_curve(g: f64, sigma: f64, delta: f64, regime: &str, t_max: u32) -> Result<String, JsValue> {
    bound_curve_json(g, sigma, delta, regime, t_max as u64).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn delay_heatmap(g: f64, sigma: f64, delta: f64, delta_prime: f64, n_step: u32) -> Result<String, JsValue> {
    delay_heatmap_json(g, sigma, delta, delta_prime, n_step as u64).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn scenario_names() -> String {
    let names: Vec<String> = robocpd::scenario_catalog().into_keys().collect();
    serde_json::to_string(&names).unwrap_or_default()
}
