//! Browser bindings: a parameter sweep, the complex 3SL histogram of the
//! effective spin model and ground-state photon/polarization histograms.
//!
//! Every entry point returns a JSON string. The `*_json` functions hold the
//! logic and run natively, so they are tested without a browser.

use cqed_core::analysis::{ground_point, locate_peak, run_sweep, CutoffPolicy, Grid, PointParams, SweepAxis, SweepSpec};
use cqed_core::eigensolver::LanczosConfig;
use cqed_core::hamiltonian::{ModelKind, SpinOverrides};
use cqed_core::hilbert::QuantumState;
use cqed_core::lattice::{preset_cluster, Geometry, LatticeCluster};
use cqed_core::observables::{complex_3sl_histogram, photon_histogram, polarization_histogram, Histogram};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Largest Hilbert-space dimension a single call may diagonalize.
pub const MAX_DIM: usize = 1 << 17;
pub const MAX_POINTS: usize = 41;

type Out = Result<Value, String>;

fn geometry(name: &str) -> Result<Geometry, String> {
    match name {
        "square" => Ok(Geometry::Square),
        "triangular" => Ok(Geometry::Triangular),
        _ => Err(format!("unknown geometry `{name}`")),
    }
}

fn model(name: &str) -> Result<ModelKind, String> {
    match name {
        "full" => Ok(ModelKind::Full),
        "polaron" => Ok(ModelKind::Polaron),
        "spin" => Ok(ModelKind::EffectiveSpin),
        _ => Err(format!("unknown model `{name}`")),
    }
}

fn cluster(geom: &str, n: usize) -> Result<LatticeCluster, String> {
    preset_cluster(geometry(geom)?, n).map_err(|e| e.to_string())
}

/// `2^n` in 64 bits; `usize` is 32 bits on wasm32.
fn spin_states(n_sites: usize) -> u64 {
    1u64.checked_shl(n_sites as u32).unwrap_or(u64::MAX)
}

fn check_dim(kind: ModelKind, n_sites: usize, n_ph_max: usize) -> Result<(), String> {
    let photons = match kind {
        ModelKind::Full | ModelKind::Polaron => n_ph_max as u64 + 1,
        _ => 1,
    };
    let dim = spin_states(n_sites).saturating_mul(photons);
    if dim > MAX_DIM as u64 {
        return Err(format!("dimension {dim} is above the demo limit {MAX_DIM}"));
    }
    Ok(())
}

fn cfg() -> LanczosConfig {
    LanczosConfig::default()
}

fn hist_json(h: &Histogram) -> Value {
    json!({ "axes": h.axes, "weights": h.weights, "outside": h.outside })
}

/// Equal-weight mixture over the ground level.
fn mixed(states: &[&QuantumState], f: impl Fn(&QuantumState) -> cqed_core::Result<Histogram>) -> Result<Histogram, String> {
    let mut acc: Option<Histogram> = None;
    for s in states {
        let h = f(s).map_err(|e| e.to_string())?;
        match &mut acc {
            None => acc = Some(h),
            Some(a) => a.weights.iter_mut().zip(&h.weights).for_each(|(x, y)| *x += y),
        }
    }
    let mut h = acc.ok_or("no ground state")?;
    let k = states.len() as f64;
    h.weights.iter_mut().for_each(|w| *w /= k);
    Ok(h)
}

/// One observable along `J/ω_d` or `g/ω_c`, with the interpolated peak when
/// the curve has an interior maximum.
#[allow(clippy::too_many_arguments)]
pub fn sweep_json(
    geom: &str,
    n: usize,
    model_name: &str,
    n_ph_max: usize,
    omega_d: f64,
    g: f64,
    j_over_omega_d: f64,
    axis: &str,
    min: f64,
    max: f64,
    count: usize,
    column: &str,
) -> Out {
    let kind = model(model_name)?;
    let c = cluster(geom, n)?;
    check_dim(kind, c.n_sites(), n_ph_max)?;
    if count > MAX_POINTS {
        return Err(format!("at most {MAX_POINTS} points"));
    }
    let axis = match axis {
        "g" => SweepAxis::G,
        "J_over_omega_d" => SweepAxis::JOverOmegaD,
        _ => return Err(format!("unknown axis `{axis}`")),
    };
    let spec = SweepSpec {
        model: kind,
        cluster: c,
        base: PointParams {
            omega_d,
            g,
            j: j_over_omega_d * omega_d,
            h_z: None,
            j_c: None,
        },
        axis,
        grid: Grid::linear(min, max, count),
        cutoff: CutoffPolicy::Fixed { n_ph_max },
        columns: vec![column.to_string()],
        lanczos: cfg(),
    };
    let table = run_sweep(&spec).map_err(|e| e.to_string())?;
    let (xs, ys) = table.column(column);
    let failed: Vec<Value> = table
        .rows
        .iter()
        .filter_map(|r| r.error.as_ref().map(|e| json!({ "x": r.axis_value, "error": e.message })))
        .collect();
    let peak = locate_peak(&xs, &ys).ok().map(|p| json!({ "x": p.position, "y": p.height }));
    Ok(json!({ "column": column, "x": xs, "y": ys, "peak": peak, "failed": failed }))
}

/// Complex 3SL histogram of the effective spin model on a triangular preset
/// (`J = 1`), with the local maxima above half the largest weight.
pub fn histogram_3sl_json(n: usize, h_z: f64, j_c: f64, bins: usize) -> Out {
    let c = cluster("triangular", n)?;
    check_dim(ModelKind::EffectiveSpin, c.n_sites(), 0)?;
    let params = PointParams {
        omega_d: 1.0,
        g: 1.0,
        j: 1.0,
        h_z: Some(h_z),
        j_c: Some(j_c),
    };
    let (sol, parity) = ground_point(ModelKind::EffectiveSpin, &params.model(&c, 0), params.overrides(), &cfg())
        .map_err(|e| e.to_string())?;
    let h = mixed(&parity.ground_states(), |s| complex_3sl_histogram(s, &c, bins))?;
    let peaks: Vec<Value> = h
        .peaks(0.5)
        .iter()
        .map(|p| json!({ "re": p.re, "im": p.im, "theta_over_pi_6": p.theta / (std::f64::consts::PI / 6.0), "weight": p.weight }))
        .collect();
    Ok(json!({
        "energy": sol.observables.energy,
        "degenerate": sol.degenerate,
        "bins": bins,
        "histogram": hist_json(&h),
        "peaks": peaks,
    }))
}

/// Ground state of one point: energy, observables and the photon and
/// polarization distributions.
#[allow(clippy::too_many_arguments)]
pub fn ground_json(
    geom: &str,
    n: usize,
    model_name: &str,
    n_ph_max: usize,
    omega_d: f64,
    g: f64,
    j_over_omega_d: f64,
) -> Out {
    let kind = model(model_name)?;
    let c = cluster(geom, n)?;
    check_dim(kind, c.n_sites(), n_ph_max)?;
    let params = PointParams {
        omega_d,
        g,
        j: j_over_omega_d * omega_d,
        h_z: None,
        j_c: None,
    };
    let (sol, parity) =
        ground_point(kind, &params.model(&c, n_ph_max), SpinOverrides::default(), &cfg()).map_err(|e| e.to_string())?;
    let states = parity.ground_states();
    let photon = match kind {
        ModelKind::Full | ModelKind::Polaron => Some(hist_json(&mixed(&states, |s| photon_histogram(s, g, None))?)),
        _ => None,
    };
    let polarization = mixed(&states, |s| Ok(polarization_histogram(s)))?;
    Ok(json!({
        "solution": sol,
        "photon": photon,
        "polarization": hist_json(&polarization),
    }))
}

fn to_js(r: Out) -> Result<String, JsValue> {
    r.map(|v| v.to_string()).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn sweep(
    geom: &str,
    n: usize,
    model_name: &str,
    n_ph_max: usize,
    omega_d: f64,
    g: f64,
    j_over_omega_d: f64,
    axis: &str,
    min: f64,
    max: f64,
    count: usize,
    column: &str,
) -> Result<String, JsValue> {
    to_js(sweep_json(
        geom, n, model_name, n_ph_max, omega_d, g, j_over_omega_d, axis, min, max, count, column,
    ))
}

#[wasm_bindgen]
pub fn histogram_3sl(n: usize, h_z: f64, j_c: f64, bins: usize) -> Result<String, JsValue> {
    to_js(histogram_3sl_json(n, h_z, j_c, bins))
}

#[wasm_bindgen]
pub fn ground(
    geom: &str,
    n: usize,
    model_name: &str,
    n_ph_max: usize,
    omega_d: f64,
    g: f64,
    j_over_omega_d: f64,
) -> Result<String, JsValue> {
    to_js(ground_json(geom, n, model_name, n_ph_max, omega_d, g, j_over_omega_d))
}

/// Preset sizes per geometry that fit the demo limit.
#[wasm_bindgen]
pub fn presets() -> String {
    let list = |g: Geometry| -> Vec<usize> {
        cqed_core::lattice::preset_table(g)
            .iter()
            .map(|p| p.0)
            .filter(|&n| spin_states(n) <= MAX_DIM as u64)
            .collect()
    };
    json!({ "square": list(Geometry::Square), "triangular": list(Geometry::Triangular) }).to_string()
}
