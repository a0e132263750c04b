//! Browser bindings: simulate a series, trace a MoTR estimate, run a small bias study.
//!
//! Every entry point takes the same `key = value` config text the CLI reads.
//! The `*_impl` functions are plain Rust so they can be tested natively.

use nof1_apte::harness::MethodSummary;
use nof1_apte::motr::TrajectoryPoint;
use nof1_apte::{analyze, replicate, simulate_dataset, Analysis, MethodId, RunConfig};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Debug, Serialize)]
pub struct Series {
    pub t: Vec<usize>,
    pub y: Vec<f64>,
    pub x: Vec<u8>,
    pub mean_y: f64,
    pub share_exposed: f64,
    pub echo: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct Trace {
    pub method: String,
    pub delta: f64,
    pub lo: f64,
    pub hi: f64,
    pub runs_used: usize,
    pub converged: bool,
    pub true_apte: f64,
    pub raw_delta: f64,
    pub trajectory: Vec<TrajectoryPoint>,
}

#[derive(Debug, Serialize)]
pub struct Bias {
    pub true_apte: f64,
    pub summary: Vec<MethodSummary>,
}

fn config(text: &str) -> Result<RunConfig, String> {
    let mut cfg = RunConfig::parse(text).map_err(|e| e.to_string())?;
    // no threads in the browser
    cfg.workers = 1;
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

pub fn simulate_impl(text: &str) -> Result<Series, String> {
    let cfg = config(text)?;
    let ds = simulate_dataset(&cfg.arco, &cfg.propensity, &cfg.sim).map_err(|e| e.to_string())?;
    let (y, x) = (ds.y(), ds.x());
    Ok(Series {
        t: ds.periods().iter().map(|p| p.t).collect(),
        mean_y: nof1_apte::stats::mean(&y),
        share_exposed: x.iter().map(|&v| f64::from(v)).sum::<f64>() / x.len() as f64,
        y,
        x,
        echo: cfg.echo(),
    })
}

pub fn trace_impl(text: &str, method: &str) -> Result<Trace, String> {
    let cfg = config(text)?;
    let method: MethodId = method.parse().map_err(|e: nof1_apte::Error| e.to_string())?;
    if !matches!(method, MethodId::MotrGlm | MethodId::MotrRf) {
        return Err(format!("{} has no trajectory; use motr_glm or motr_rf", method.as_str()));
    }
    let ds = simulate_dataset(&cfg.arco, &cfg.propensity, &cfg.sim).map_err(|e| e.to_string())?;
    let seed = cfg.sim.seed;
    let raw = analyze(&ds, MethodId::Raw, &cfg.methods_cfg, seed).map_err(|e| e.to_string())?;
    match analyze(&ds, method, &cfg.methods_cfg, seed).map_err(|e| e.to_string())? {
        Analysis::Motr { estimate, .. } => Ok(Trace {
            method: method.as_str().into(),
            delta: estimate.delta,
            lo: estimate.ci.lo,
            hi: estimate.ci.hi,
            runs_used: estimate.runs_used,
            converged: estimate.converged,
            true_apte: cfg.arco.beta_x,
            raw_delta: raw.point(),
            trajectory: estimate.trajectory,
        }),
        _ => unreachable!("MoTR method returned another analysis"),
    }
}

pub fn bias_impl(text: &str) -> Result<Bias, String> {
    let cfg = config(text)?;
    let report = replicate(&cfg.study()).map_err(|e| e.to_string())?;
    Ok(Bias {
        true_apte: report.true_apte,
        summary: report.summary,
    })
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<JsValue, JsValue> {
    let v = r.map_err(|e| JsValue::from_str(&e))?;
    serde_wasm_bindgen::to_value(&v).map_err(|e| JsValue::from_str(&e.to_string()))
}

/// `{t, y, x, mean_y, share_exposed, echo}` for one simulated series.
#[wasm_bindgen]
pub fn simulate(config: &str) -> Result<JsValue, JsValue> {
    to_js(simulate_impl(config))
}

/// Cumulative MoTR estimate per run on a simulated series.
#[wasm_bindgen]
pub fn motr_trace(config: &str, method: &str) -> Result<JsValue, JsValue> {
    to_js(trace_impl(config, method))
}

/// Mean bias per method over `H` simulated series.
#[wasm_bindgen]
pub fn bias_study(config: &str) -> Result<JsValue, JsValue> {
    to_js(bias_impl(config))
}

/// Default config as editable text.
#[wasm_bindgen]
pub fn default_config() -> String {
    RunConfig::default().echo().join("\n")
}
