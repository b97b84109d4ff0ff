//! Browser bindings: three kernel computations returning flat `f64` arrays
//! that `www/index.html` plots on a canvas.

use gle_memlab::asymptotics::{bound, fit_decay, FitMode};
use gle_memlab::kernel::{blocksize_sweep, theta_spatial_series, theta_time_series, uniform_times};
use gle_memlab::{ForceConstants, QuadratureGrid, WeightingScheme};
use wasm_bindgen::prelude::*;

fn setup(
    kappa1: f64,
    kappa2: f64,
    scheme: &str,
    nodes: usize,
) -> Result<(ForceConstants, WeightingScheme, QuadratureGrid), String> {
    let fc = ForceConstants::new(kappa1, kappa2).map_err(|e| e.to_string())?;
    let scheme: WeightingScheme = scheme
        .parse()
        .map_err(|e: gle_memlab::Error| e.to_string())?;
    let grid = QuadratureGrid::new(nodes).map_err(|e| e.to_string())?;
    Ok((fc, scheme, grid))
}

/// `[M, Θ₀,₀(0), bound]` triples for `M = 2^lo..=2^hi`, followed by the
/// fitted exponent.
pub fn blocksize_curve_inner(
    kappa1: f64,
    kappa2: f64,
    scheme: &str,
    lo: u32,
    hi: u32,
    nodes: usize,
) -> Result<Vec<f64>, String> {
    let (fc, scheme, grid) = setup(kappa1, kappa2, scheme, nodes)?;
    if lo < 1 || hi > 10 || hi < lo + 2 {
        return Err(format!("need 1 <= lo, lo + 2 <= hi <= 10 (got {lo}..{hi})"));
    }
    let sizes: Vec<usize> = (lo..=hi).map(|k| 1usize << k).collect();
    let sweep = blocksize_sweep(scheme, &fc, &sizes, &grid).map_err(|e| e.to_string())?;
    let pts: Vec<(f64, f64)> = sweep.iter().map(|&(m, v)| (m as f64, v)).collect();
    let fit = fit_decay(&pts, FitMode::LogLog, None).map_err(|e| e.to_string())?;
    let mut out: Vec<f64> = sweep
        .iter()
        .flat_map(|&(m, v)| [m as f64, v, bound(scheme, &fc, m)])
        .collect();
    out.push(fit.exponent);
    Ok(out)
}

/// `Θ₀,J(0)` for `J = 0..=j_max`, followed by the log-linear decay rate.
pub fn spatial_decay_inner(
    kappa1: f64,
    kappa2: f64,
    scheme: &str,
    m: usize,
    j_max: usize,
    nodes: usize,
) -> Result<Vec<f64>, String> {
    let (fc, scheme, grid) = setup(kappa1, kappa2, scheme, nodes)?;
    if !(2..=256).contains(&m) || !(8..=60).contains(&j_max) {
        return Err("need 2 <= M <= 256 and 8 <= J_max <= 60".into());
    }
    let series = theta_spatial_series(scheme, &fc, m, j_max, &grid).map_err(|e| e.to_string())?;
    let rate = fit_decay(
        &series.pairs(),
        FitMode::LogLinear,
        Some((2.0, j_max as f64)),
    )
    .map(|f| f.exponent)
    .unwrap_or(f64::NAN);
    let mut out = series.values();
    out.push(rate);
    Ok(out)
}

/// `Θ₀,₀(t)` on `steps` uniform times in `[0, t_max]`, followed by the
/// envelope exponent over the last decade (NaN if too few peaks).
pub fn time_decay_inner(
    kappa1: f64,
    kappa2: f64,
    scheme: &str,
    m: usize,
    t_max: f64,
    steps: usize,
    nodes: usize,
) -> Result<Vec<f64>, String> {
    let (fc, scheme, grid) = setup(kappa1, kappa2, scheme, nodes)?;
    if !(2..=128).contains(&m) || !(2..=20001).contains(&steps) {
        return Err("need 2 <= M <= 128 and 2 <= steps <= 20001".into());
    }
    let times = uniform_times(0.0, t_max, steps).map_err(|e| e.to_string())?;
    let series = theta_time_series(scheme, &fc, m, &times, &grid).map_err(|e| e.to_string())?;
    let exponent = fit_decay(
        &series.pairs(),
        FitMode::LogLogEnvelope,
        Some((t_max / 10.0, t_max)),
    )
    .map(|f| f.exponent)
    .unwrap_or(f64::NAN);
    let mut out = series.values();
    out.push(exponent);
    Ok(out)
}

#[wasm_bindgen]
pub fn blocksize_curve(
    kappa1: f64,
    kappa2: f64,
    scheme: &str,
    lo: u32,
    hi: u32,
    nodes: usize,
) -> Result<Vec<f64>, JsError> {
    blocksize_curve_inner(kappa1, kappa2, scheme, lo, hi, nodes).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn spatial_decay(
    kappa1: f64,
    kappa2: f64,
    scheme: &str,
    m: usize,
    j_max: usize,
    nodes: usize,
) -> Result<Vec<f64>, JsError> {
    spatial_decay_inner(kappa1, kappa2, scheme, m, j_max, nodes).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn time_decay(
    kappa1: f64,
    kappa2: f64,
    scheme: &str,
    m: usize,
    t_max: f64,
    steps: usize,
    nodes: usize,
) -> Result<Vec<f64>, JsError> {
    time_decay_inner(kappa1, kappa2, scheme, m, t_max, steps, nodes).map_err(|e| JsError::new(&e))
}
