//! WebAssembly bindings for the browser demo. Every entry point returns
//! plain numbers or a JSON string so the page needs no glue beyond
//! `wasm-bindgen`.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use safe_ice::distributions::{InverseNakagamiParams, NakagamiParams};
use safe_ice::ice::{run_with_observer, Method, RunConfig};
use safe_ice::mixtures::{heavy_shape, heavy_spread, Origin};
use safe_ice::problems::registry;
use safe_ice::vector::log_add_exp;

/// Samples shown per iteration; the run itself uses all of them.
const MAX_POINTS: usize = 1500;

fn js_error(e: impl std::fmt::Display) -> JsValue {
    JsValue::from_str(&e.to_string())
}

#[derive(Debug, Serialize)]
pub struct RadialCurves {
    pub r: Vec<f64>,
    pub light: Vec<f64>,
    pub heavy: Vec<f64>,
    pub safe: Vec<f64>,
    pub heavy_shape: f64,
    pub heavy_spread: f64,
    pub light_mean: f64,
    pub heavy_mode: f64,
}

/// Light Nakagami, matched inverse-Nakagami and their λ-blend on a radius grid.
pub fn radial_curves(d: usize, m: f64, omega: f64, lambda: f64, r_max: f64, n: usize) -> Result<RadialCurves, String> {
    if d < 2 || n < 2 || !(r_max > 0.0) || !(0.0..=1.0).contains(&lambda) {
        return Err("need d >= 2, n >= 2, r_max > 0 and lambda in [0, 1]".into());
    }
    let light = NakagamiParams::new(m, omega).map_err(|e| e.to_string())?;
    let shape = heavy_shape(d);
    let spread = heavy_spread(shape, &light);
    let heavy = InverseNakagamiParams::new(shape, spread).map_err(|e| e.to_string())?;
    let r: Vec<f64> = (1..=n).map(|i| r_max * i as f64 / n as f64).collect();
    let ln_l: Vec<f64> = r.iter().map(|&x| light.ln_pdf(x)).collect();
    let ln_h: Vec<f64> = r.iter().map(|&x| heavy.ln_pdf(x)).collect();
    let safe = ln_l
        .iter()
        .zip(&ln_h)
        .map(|(&l, &h)| {
            let a = if lambda > 0.0 { lambda.ln() + l } else { f64::NEG_INFINITY };
            let b = if lambda < 1.0 { (1.0 - lambda).ln() + h } else { f64::NEG_INFINITY };
            log_add_exp(a, b).exp()
        })
        .collect();
    Ok(RadialCurves {
        light: ln_l.iter().map(|v| v.exp()).collect(),
        heavy: ln_h.iter().map(|v| v.exp()).collect(),
        safe,
        heavy_shape: shape,
        heavy_spread: spread,
        light_mean: light.mean(),
        heavy_mode: heavy.mode(),
        r,
    })
}

#[wasm_bindgen(js_name = radialCurves)]
pub fn radial_curves_js(d: usize, m: f64, omega: f64, lambda: f64, r_max: f64, n: usize) -> Result<String, JsValue> {
    let curves = radial_curves(d, m, omega, lambda, r_max, n).map_err(js_error)?;
    serde_json::to_string(&curves).map_err(js_error)
}

/// Row-major g values on an n×n grid over [−extent, extent]², first row at
/// the top (largest u₂).
pub fn lsf_field(problem: &str, z: f64, extent: f64, n: usize) -> Result<Vec<f64>, String> {
    let p = registry(problem, z, 2).map_err(|e| e.to_string())?;
    let step = 2.0 * extent / (n.max(2) - 1) as f64;
    let mut out = Vec::with_capacity(n * n);
    for row in 0..n {
        let u2 = extent - row as f64 * step;
        for col in 0..n {
            let u1 = -extent + col as f64 * step;
            out.push(p.evaluate(&[u1, u2]).map_err(|e| e.to_string())?);
        }
    }
    Ok(out)
}

#[wasm_bindgen(js_name = lsfField)]
pub fn lsf_field_js(problem: &str, z: f64, extent: f64, n: usize) -> Result<Vec<f64>, JsValue> {
    lsf_field(problem, z, extent, n).map_err(js_error)
}

#[derive(Debug, Serialize)]
pub struct Component {
    pub weight: f64,
    pub mu: Vec<f64>,
    pub kappa: f64,
    pub radial_mean: f64,
}

#[derive(Debug, Serialize)]
pub struct Step {
    pub t: usize,
    pub sigma: f64,
    pub lambda: f64,
    pub stop_cv: Option<f64>,
    /// (u₁, u₂, failed, heavy) per displayed sample.
    pub points: Vec<(f64, f64, bool, bool)>,
    pub components: Vec<Component>,
}

#[derive(Debug, Serialize)]
pub struct Trace {
    pub pf: f64,
    pub reference: Option<f64>,
    pub iterations: usize,
    pub final_k: usize,
    pub lsf_evals: usize,
    pub converged: bool,
    pub steps: Vec<Step>,
}

/// Runs ICE or Safe-ICE on a two-dimensional problem and records every
/// iteration's samples and proposal.
pub fn run_trace(problem: &str, z: f64, safe: bool, n_per_iter: usize, k_init: usize, seed: u64) -> Result<Trace, String> {
    let p = registry(problem, z, 2).map_err(|e| e.to_string())?;
    let cfg = RunConfig {
        n_per_iter,
        k_init,
        seed,
        method: if safe { Method::SafeIce } else { Method::Ice },
        ..RunConfig::default()
    };
    let mut steps = Vec::new();
    let result = run_with_observer(&p, &cfg, |snap| {
        let stride = snap.samples.len().div_ceil(MAX_POINTS).max(1);
        let points = snap
            .samples
            .iter()
            .step_by(stride)
            .map(|s| (s.r * s.a[0], s.r * s.a[1], s.is_failure(), s.origin == Origin::Heavy))
            .collect();
        let components = snap
            .proposal
            .light
            .components()
            .iter()
            .map(|c| Component {
                weight: c.weight,
                mu: c.angular.mu().to_vec(),
                kappa: c.angular.kappa(),
                radial_mean: c.radial.mean(),
            })
            .collect();
        steps.push(Step {
            t: snap.t,
            sigma: snap.sigma,
            lambda: snap.lambda,
            stop_cv: snap.stop_cv.is_finite().then_some(snap.stop_cv),
            points,
            components,
        });
    })
    .map_err(|e| e.to_string())?;
    Ok(Trace {
        pf: result.pf_estimate,
        reference: p.analytic_pf(),
        iterations: result.iterations,
        final_k: result.final_k,
        lsf_evals: result.lsf_evals,
        converged: result.converged,
        steps,
    })
}

#[wasm_bindgen(js_name = runTrace)]
pub fn run_trace_js(problem: &str, z: f64, safe: bool, n_per_iter: usize, k_init: usize, seed: u64) -> Result<String, JsValue> {
    let trace = run_trace(problem, z, safe, n_per_iter, k_init, seed).map_err(js_error)?;
    serde_json::to_string(&trace).map_err(js_error)
}
