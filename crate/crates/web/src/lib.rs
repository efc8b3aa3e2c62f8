//! WebAssembly bindings for a static demo page.
//!
//! Each operation takes plain values, returns a JSON string and runs
//! single-threaded. The `*_json` functions are the same operations without
//! the JavaScript error wrapper, usable from native code.

use serde_json::json;
use wasm_bindgen::prelude::*;

use detcurve::curvature::{estimate_curvature_constant, FamilySpec};
use detcurve::functionals::EvalOptions;
use detcurve::lab::{self, verify_mainst};
use detcurve::measure::io;
use detcurve::{Error, Result, WeightedPointMeasure};

const REFINE: usize = 20;

fn cloud(csv: &str) -> Result<WeightedPointMeasure> {
    io::read_csv(csv.as_bytes())
}

/// Non-finite values as the strings used in reports.
fn num(x: f64) -> serde_json::Value {
    lab::float::to_text(x).map_or(json!(x), |t| json!(t))
}

fn to_js(r: Result<String>) -> std::result::Result<String, JsError> {
    r.map_err(|e| JsError::new(&e.to_string()))
}

/// Curvature constant of a CSV point cloud and the semi-lengths of its
/// witness ellipsoid.
pub fn curvature_json(csv: &str, k: usize, alpha: f64) -> Result<String> {
    let mu = cloud(csv)?;
    let family = FamilySpec::default().build(&mu)?;
    let est = estimate_curvature_constant(&mu, k, alpha, &family, REFINE)?;
    let out = json!({
        "atoms": mu.len(),
        "constant": num(est.constant),
        "family_size": est.family_size,
        "witness_semi_lengths": est.witness.semi_lengths(),
    });
    Ok(out.to_string())
}

/// Least k-content `delta_hat` at each mass level together with the
/// sublevel mass it controls and the bound it is checked against.
pub fn sublevel_json(csv: &str, k: usize, eps: &[f64]) -> Result<String> {
    let mu = cloud(csv)?;
    let family = FamilySpec::default().build(&mu)?;
    let s = verify_mainst(&mu, k, eps, &family, REFINE, 1.0, &EvalOptions::default())?;
    let out = json!({ "measured": s.measured, "checks": s.checks, "passed": s.passed() });
    Ok(out.to_string())
}

/// Run a bundled scenario and return its report.
pub fn scenario_json(name: &str) -> Result<String> {
    let cfg = lab::bundled(name)
        .ok_or_else(|| Error::InvalidConfig(format!("unknown scenario {name:?}; try {}", lab::BUNDLED.join(", "))))?;
    lab::run_scenario(&cfg)?.to_json()
}

#[wasm_bindgen]
pub fn curvature(csv: &str, k: usize, alpha: f64) -> std::result::Result<String, JsError> {
    to_js(curvature_json(csv, k, alpha))
}

#[wasm_bindgen]
pub fn sublevel(csv: &str, k: usize, eps: &[f64]) -> std::result::Result<String, JsError> {
    to_js(sublevel_json(csv, k, eps))
}

#[wasm_bindgen]
pub fn scenario(name: &str) -> std::result::Result<String, JsError> {
    to_js(scenario_json(name))
}

#[wasm_bindgen]
pub fn scenario_names() -> Vec<String> {
    lab::BUNDLED.iter().map(|s| s.to_string()).collect()
}
