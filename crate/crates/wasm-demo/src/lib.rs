//! Browser bindings: simulate a sample and its band, explore the EEC curve
//! behind the tGKF quantile, and build a scale-space band. Every entry point
//! returns a JSON string.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use scb_core::band::{covers, scb_one_sample, scb_scale_space, QuantileMethod};
use scb_core::gkf::{eec, tgkf_quantile, EcDensityModel, LkcVector};
use scb_core::grid::{linspace, Grid1D};
use scb_core::rng::substream;
use scb_core::scale_space::{scale_mean, GaussianKernel, ScaleGrid};
use scb_core::sim::{add_observation_noise, CoefficientLaw, Design, Model, ModelKind, ModelSpec};
use scb_core::{Result, ScbError};

/// Curves shipped back for drawing; the rest stay on the Rust side.
const SHOWN_CURVES: usize = 12;

#[derive(Serialize)]
pub struct BandView {
    pub s: Vec<f64>,
    pub truth: Vec<f64>,
    pub center: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub curves: Vec<Vec<f64>>,
    pub quantile: f64,
    pub covered: bool,
    pub method: String,
}

#[derive(Serialize)]
pub struct EecView {
    pub u: Vec<f64>,
    pub eec: Vec<f64>,
    pub quantile: f64,
}

#[derive(Serialize)]
pub struct ScaleView {
    pub s: Vec<f64>,
    pub h: Vec<f64>,
    /// Row-major over `(s, h)`, bandwidth fastest.
    pub truth: Vec<f64>,
    pub center: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub quantile: f64,
    pub covered: bool,
}

fn model_kind(name: &str) -> Result<ModelKind> {
    match name {
        "A" | "a" => Ok(ModelKind::A),
        "B" | "b" => Ok(ModelKind::B),
        _ => Err(ScbError::InvalidArgument(format!("model must be A or B, got {name:?}"))),
    }
}

fn law(name: &str) -> Result<CoefficientLaw> {
    match name {
        "gaussian" => Ok(CoefficientLaw::Gaussian),
        "t3" => Ok(CoefficientLaw::ScaledT3),
        "chisq7" => Ok(CoefficientLaw::CenteredChiSq { dof: 7.0 }),
        _ => Err(ScbError::InvalidArgument(format!("unknown law {name:?}"))),
    }
}

pub fn band_view(model: &str, law_name: &str, n: usize, method: &str, alpha: f64, seed: u64) -> Result<BandView> {
    let spec = ModelSpec::new(model_kind(model)?, law(law_name)?).with_resolution(120);
    let m = Model::new(&spec)?;
    let sample = m.generate(n, &mut substream(seed, 0))?;
    let method: QuantileMethod = method.parse()?;
    let band = scb_one_sample(&sample, &method.with_replicates(500), alpha, seed)?;
    let covered = covers(&band, m.mean())?;
    Ok(BandView {
        s: m.grid().as_1d().map(|g| g.points().to_vec()).unwrap_or_default(),
        truth: m.mean().to_vec(),
        curves: sample.rows().take(SHOWN_CURVES).map(|r| r.to_vec()).collect(),
        quantile: band.quantile,
        method: band.method.label(),
        center: band.center,
        lower: band.lower,
        upper: band.upper,
        covered,
    })
}

/// `dof <= 0` selects the Gaussian densities.
pub fn eec_view(l1: f64, dof: f64, alpha: f64) -> Result<EecView> {
    let lkc = LkcVector::new(1, vec![l1])?;
    let model = if dof > 0.0 { EcDensityModel::student_t(dof)? } else { EcDensityModel::Gaussian };
    let u = linspace(0.0, 6.0, 241);
    let values = u.iter().map(|&x| eec(&lkc, model, x)).collect::<Result<Vec<_>>>()?;
    Ok(EecView { quantile: tgkf_quantile(&lkc, model, alpha)?, u, eec: values })
}

pub fn scale_view(n: usize, noise: f64, h_min: f64, h_max: f64, n_h: usize, seed: u64) -> Result<ScaleView> {
    let spec = ModelSpec::new(ModelKind::B, CoefficientLaw::Gaussian).with_resolution(100).with_design(Design::Midpoint);
    let m = Model::new(&spec)?;
    let mut rng = substream(seed, 0);
    let raw = add_observation_noise(&m.generate(n, &mut rng)?, noise, &mut rng)?;
    let raw_grid = m.grid().as_1d().cloned().ok_or(ScbError::GridMismatch)?;
    let sg = ScaleGrid::new(Grid1D::uniform(0.0, 1.0, 80)?, linspace(h_min, h_max, n_h))?;
    let truth = scale_mean(m.mean(), &raw_grid, &GaussianKernel, &sg, true)?;
    let band = scb_scale_space(&raw, &GaussianKernel, &sg, true, &QuantileMethod::Tgkf, 0.05, seed)?;
    Ok(ScaleView {
        s: sg.s().points().to_vec(),
        h: sg.h().to_vec(),
        covered: covers(&band, &truth)?,
        truth,
        quantile: band.quantile,
        center: band.center,
        lower: band.lower,
        upper: band.upper,
    })
}

fn to_js<T: Serialize>(r: Result<T>) -> std::result::Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e.to_string()))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

/// Draw `n` curves from model A or B and return their band as JSON.
#[wasm_bindgen]
pub fn simulate_band(model: &str, law: &str, n: u32, method: &str, alpha: f64, seed: u32) -> std::result::Result<String, JsError> {
    to_js(band_view(model, law, n as usize, method, alpha, seed as u64))
}

/// EEC curve over `u` in `[0, 6]` for a 1-D domain of length `l1`.
#[wasm_bindgen]
pub fn eec_curve(l1: f64, dof: f64, alpha: f64) -> std::result::Result<String, JsError> {
    to_js(eec_view(l1, dof, alpha))
}

/// Scale-space band for noisy model B curves.
#[wasm_bindgen]
pub fn scale_band(n: u32, noise: f64, h_min: f64, h_max: f64, n_h: u32, seed: u32) -> std::result::Result<String, JsError> {
    to_js(scale_view(n as usize, noise, h_min, h_max, n_h as usize, seed as u64))
}
