//! JSON-in/JSON-out operations behind the browser demo. The plain functions
//! are usable natively; the `wasm_bindgen` wrappers only convert errors.

use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

use phi_debruijn::densities::{Density, DensityConfig};
use phi_debruijn::functionals::FunctionalConfig;
use phi_debruijn::identities::{check_identity, CheckResult, IdentitySpec};
use phi_debruijn::measures::Channel;
use phi_debruijn::report::{describe_json_error, InputConfig};

type Result<T> = std::result::Result<T, String>;

fn parse<'a, T: Deserialize<'a>>(text: &'a str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| describe_json_error(&e))
}

fn emit<T: Serialize>(v: &T) -> Result<String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

fn err(e: phi_debruijn::Error) -> String {
    e.to_string()
}

fn default_points() -> usize {
    201
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveRequest {
    pub density: DensityConfig,
    pub theta: f64,
    pub x_min: f64,
    pub x_max: f64,
    #[serde(default = "default_points")]
    pub points: usize,
}

#[derive(Debug, Serialize)]
pub struct Curve {
    pub label: String,
    pub x: Vec<f64>,
    pub pdf: Vec<f64>,
}

/// Samples a scalar density on an even grid.
pub fn density_curve(request: &str) -> Result<String> {
    let req: CurveRequest = parse(request)?;
    let p: Density = req.density.build().map_err(err)?;
    if p.dim() != 1 {
        return Err("density_curve: only scalar densities can be plotted".into());
    }
    if req.x_max.partial_cmp(&req.x_min) != Some(std::cmp::Ordering::Greater)
        || !(2..=10_000).contains(&req.points)
    {
        return Err("density_curve: need x_min < x_max and 2..=10000 points".into());
    }
    let theta = [req.theta];
    p.check_theta(&theta).map_err(err)?;
    let h = (req.x_max - req.x_min) / (req.points - 1) as f64;
    let x: Vec<f64> = (0..req.points).map(|i| req.x_min + h * i as f64).collect();
    let pdf = x
        .iter()
        .map(|&v| p.log_pdf_unchecked(&[v], &theta).exp())
        .collect();
    emit(&Curve {
        label: p.label(),
        x,
        pdf,
    })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepRequest {
    pub density: DensityConfig,
    /// Reference density; switches the sweep to the divergence identity.
    #[serde(default)]
    pub reference: Option<DensityConfig>,
    pub functional: FunctionalConfig,
    pub thetas: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct SweepRow {
    pub theta: f64,
    /// `H` or `D` at θ.
    pub value: Option<f64>,
    /// Trace of the Fisher-type matrix.
    pub fisher: Option<f64>,
    pub lhs: Option<f64>,
    pub rhs: Option<f64>,
    pub rel_err: Option<f64>,
    pub pass: bool,
    pub error: Option<String>,
}

fn row(theta: f64, r: &CheckResult, key: &str) -> SweepRow {
    let v = &r.diagnostics.values;
    SweepRow {
        theta,
        value: v.get(key).copied(),
        fisher: v.get("J").copied(),
        lhs: r.lhs_scalar(),
        rhs: r.rhs_scalar(),
        rel_err: r.rel_err,
        pass: r.pass,
        error: r.diagnostics.error.clone(),
    }
}

#[derive(Debug, Serialize)]
pub struct Sweep {
    pub kind: String,
    pub family: String,
    pub functional: String,
    pub rows: Vec<SweepRow>,
}

/// Entropy (or divergence) identity checked at each θ.
pub fn debruijn_sweep(request: &str) -> Result<String> {
    let req: SweepRequest = parse(request)?;
    if req.thetas.is_empty() || req.thetas.len() > 64 {
        return Err("debruijn_sweep: need 1..=64 theta values".into());
    }
    let p = req.density.build().map_err(err)?;
    let q = req
        .reference
        .as_ref()
        .map(|c| c.build())
        .transpose()
        .map_err(err)?;
    let f = req.functional.build().map_err(err)?;
    let specs: Vec<IdentitySpec> = req
        .thetas
        .iter()
        .map(|&t| match &q {
            Some(q) => IdentitySpec::divergence(p.clone(), q.clone(), f.clone(), t),
            None => IdentitySpec::entropy(p.clone(), f.clone(), t),
        })
        .collect();
    let key = if q.is_some() { "D" } else { "H" };
    let results: Vec<CheckResult> = specs.iter().map(check_identity).collect();
    let first = &results[0];
    emit(&Sweep {
        kind: first.kind.clone(),
        family: first.family.clone(),
        functional: first.functional.clone(),
        rows: req
            .thetas
            .iter()
            .zip(&results)
            .map(|(&t, r)| row(t, r, key))
            .collect(),
    })
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GuoRequest {
    pub input: InputConfig,
    #[serde(default = "one")]
    pub noise_variance: f64,
    pub functional: FunctionalConfig,
    pub gains: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct GuoRow {
    pub gain: f64,
    pub information: Option<f64>,
    pub mse: Option<f64>,
    /// `(dI/dg)·g`.
    pub lhs: Option<f64>,
    /// `g²·mse/σ²`.
    pub rhs: Option<f64>,
    pub pass: bool,
    pub error: Option<String>,
}

/// Mutual φ-information and φ-MSE of a scalar Gaussian channel over gains.
pub fn guo_curve(request: &str) -> Result<String> {
    let req: GuoRequest = parse(request)?;
    if req.gains.is_empty() || req.gains.len() > 64 {
        return Err("guo_curve: need 1..=64 gains".into());
    }
    let input = req.input.build().map_err(err)?;
    let ch = Channel::new(input, Density::gaussian_1d(), req.noise_variance).map_err(err)?;
    if ch.n_params() != 1 {
        return Err("guo_curve: scalar inputs only".into());
    }
    let f = req.functional.build().map_err(err)?;
    let rows: Vec<GuoRow> = req
        .gains
        .iter()
        .map(|&g| {
            let r = check_identity(&IdentitySpec::guo(ch.clone(), f.clone(), vec![g]));
            let v = &r.diagnostics.values;
            GuoRow {
                gain: g,
                information: v.get("I").copied(),
                mse: v.get("mse_trace").copied(),
                lhs: r.lhs_scalar(),
                rhs: r.rhs_scalar(),
                pass: r.pass,
                error: r.diagnostics.error.clone(),
            }
        })
        .collect();
    emit(&rows)
}

fn js(r: Result<String>) -> std::result::Result<String, JsValue> {
    r.map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = densityCurve)]
pub fn density_curve_js(request: &str) -> std::result::Result<String, JsValue> {
    js(density_curve(request))
}

#[wasm_bindgen(js_name = debruijnSweep)]
pub fn debruijn_sweep_js(request: &str) -> std::result::Result<String, JsValue> {
    js(debruijn_sweep(request))
}

#[wasm_bindgen(js_name = guoCurve)]
pub fn guo_curve_js(request: &str) -> std::result::Result<String, JsValue> {
    js(guo_curve(request))
}
