//! Simultaneous confidence bands for one-sample means, differences of two
//! means, and scale-space means.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize, Serializer};

use crate::bootstrap::{
    boots_t_quantile, boots_t_quantile_two_sample, gauss_sim_quantile, mult_t_quantile,
    mult_t_quantile_two_sample, BootstrapConfig, MultiplierLaw,
};
use crate::error::{Result, ScbError};
use crate::gkf::{tgkf_quantile, EcDensityModel};
use crate::grid::Grid;
use crate::lkc::{estimate_lkc, lkc_two_sample, pooled_scale, two_sample_residuals};
use crate::sample::{column_mean, column_sd, normed_residuals, FunctionalSample};
use crate::scale_space::{smooth_sample, Kernel, ScaleGrid};

pub const DEFAULT_REPLICATES: usize = 1000;
pub const DEFAULT_DRAWS: usize = 10_000;

fn default_replicates() -> usize {
    DEFAULT_REPLICATES
}

fn default_draws() -> usize {
    DEFAULT_DRAWS
}

fn yes() -> bool {
    true
}

/// How the band quantile is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QuantileMethod {
    /// Gaussian kinematic formula for t-fields with estimated LKCs.
    Tgkf,
    BootsT {
        #[serde(default = "default_replicates")]
        replicates: usize,
        #[serde(default = "yes")]
        studentized: bool,
    },
    MultT {
        law: MultiplierLaw,
        #[serde(default = "default_replicates")]
        replicates: usize,
        #[serde(default = "yes")]
        studentized: bool,
    },
    /// Simulation of the limiting Gaussian field from the residual
    /// correlation matrix.
    GaussSim {
        #[serde(default = "default_draws")]
        draws: usize,
    },
}

impl QuantileMethod {
    /// Short name used in reports: `tGKF`, `Boots-t`, `gMult-t`, `rMult`, ...
    pub fn label(&self) -> String {
        let t = |s: bool| if s { "-t" } else { "" };
        match *self {
            QuantileMethod::Tgkf => "tGKF".into(),
            QuantileMethod::BootsT { studentized, .. } => format!("Boots{}", t(studentized)),
            QuantileMethod::MultT { law: MultiplierLaw::Gaussian, studentized, .. } => {
                format!("gMult{}", t(studentized))
            }
            QuantileMethod::MultT { law: MultiplierLaw::Rademacher, studentized, .. } => {
                format!("rMult{}", t(studentized))
            }
            QuantileMethod::GaussSim { .. } => "GaussSim".into(),
        }
    }

    fn bootstrap(&self, alpha: f64, seed: u64) -> BootstrapConfig {
        let (replicates, studentized) = match *self {
            QuantileMethod::BootsT { replicates, studentized }
            | QuantileMethod::MultT { replicates, studentized, .. } => (replicates, studentized),
            _ => (DEFAULT_REPLICATES, true),
        };
        BootstrapConfig { replicates, alpha, studentized, seed }
    }

    /// Same method with a different replicate (or draw) count.
    pub fn with_replicates(self, b: usize) -> Self {
        match self {
            QuantileMethod::Tgkf => self,
            QuantileMethod::BootsT { studentized, .. } => {
                QuantileMethod::BootsT { replicates: b, studentized }
            }
            QuantileMethod::MultT { law, studentized, .. } => {
                QuantileMethod::MultT { law, replicates: b, studentized }
            }
            QuantileMethod::GaussSim { .. } => QuantileMethod::GaussSim { draws: b },
        }
    }
}

impl fmt::Display for QuantileMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for QuantileMethod {
    type Err = ScbError;

    /// Parses report labels case-insensitively, with default replicate counts.
    fn from_str(s: &str) -> Result<Self> {
        let b = DEFAULT_REPLICATES;
        let m = match s.to_ascii_lowercase().as_str() {
            "tgkf" => QuantileMethod::Tgkf,
            "boots-t" => QuantileMethod::BootsT { replicates: b, studentized: true },
            "boots" => QuantileMethod::BootsT { replicates: b, studentized: false },
            "gmult-t" | "gmult" | "rmult-t" | "rmult" => QuantileMethod::MultT {
                law: if s.as_bytes()[0].eq_ignore_ascii_case(&b'g') {
                    MultiplierLaw::Gaussian
                } else {
                    MultiplierLaw::Rademacher
                },
                replicates: b,
                studentized: s.ends_with("-t") || s.ends_with("-T"),
            },
            "gausssim" | "gauss-sim" => QuantileMethod::GaussSim { draws: DEFAULT_DRAWS },
            _ => return Err(ScbError::InvalidArgument(format!("unknown method {s:?}"))),
        };
        Ok(m)
    }
}

fn serialize_label<S: Serializer>(m: &QuantileMethod, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&m.label())
}

/// A symmetric band `center +- half_width`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScBand {
    #[serde(serialize_with = "serialize_label")]
    pub method: QuantileMethod,
    pub alpha: f64,
    pub quantile: f64,
    pub grid: Grid,
    pub center: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl ScBand {
    /// Band `center +- quantile * scale`.
    pub fn from_parts(
        center: Vec<f64>,
        scale: &[f64],
        quantile: f64,
        method: QuantileMethod,
        alpha: f64,
        grid: Grid,
    ) -> Self {
        let half: Vec<f64> = scale.iter().map(|s| quantile * s).collect();
        let lower = center.iter().zip(&half).map(|(c, h)| c - h).collect();
        let upper = center.iter().zip(&half).map(|(c, h)| c + h).collect();
        Self { method, alpha, quantile, grid, center, lower, upper }
    }

    pub fn half_width(&self) -> Vec<f64> {
        self.upper.iter().zip(&self.lower).map(|(u, l)| 0.5 * (u - l)).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// `true` iff `lower <= truth <= upper` at every grid point.
pub fn covers(band: &ScBand, truth: &[f64]) -> Result<bool> {
    if truth.len() != band.center.len() {
        return Err(ScbError::GridMismatch);
    }
    Ok(truth
        .iter()
        .zip(band.lower.iter().zip(&band.upper))
        .all(|(t, (l, u))| l <= t && t <= u))
}

/// `R^T R / (N - 1)` for residual rows `R` (row-major `P x P`).
fn residual_cross(res: &FunctionalSample) -> Vec<f64> {
    let p = res.n_points();
    let inv = 1.0 / (res.n_curves() as f64 - 1.0);
    let mut c = vec![0.0; p * p];
    for row in res.rows() {
        for i in 0..p {
            let ri = row[i] * inv;
            if ri == 0.0 {
                continue;
            }
            let line = &mut c[i * p..(i + 1) * p];
            for (cj, rj) in line.iter_mut().zip(row) {
                *cj += ri * rj;
            }
        }
    }
    // symmetrize away rounding
    for i in 0..p {
        for j in (i + 1)..p {
            let m = 0.5 * (c[i * p + j] + c[j * p + i]);
            c[i * p + j] = m;
            c[j * p + i] = m;
        }
    }
    c
}

/// Band `mean +- q sd / sqrt(N)` for the mean of one sample. `seed` drives
/// the resampling methods and is ignored by tGKF.
pub fn scb_one_sample(
    sample: &FunctionalSample,
    method: &QuantileMethod,
    alpha: f64,
    seed: u64,
) -> Result<ScBand> {
    let (n, p) = (sample.n_curves(), sample.n_points());
    if n < 2 {
        return Err(ScbError::TooFewCurves { needed: 2, got: n });
    }
    let mean = column_mean(sample.values(), n, p);
    let sd = column_sd(sample.values(), n, &mean);
    if let Some(index) = sd.iter().position(|&s| s <= 0.0) {
        return Err(ScbError::DegenerateVariance { index });
    }
    let q = match *method {
        QuantileMethod::Tgkf => {
            let lkc = estimate_lkc(&normed_residuals(sample)?)?;
            tgkf_quantile(&lkc, EcDensityModel::student_t(n as f64 - 1.0)?, alpha)?
        }
        QuantileMethod::BootsT { .. } => boots_t_quantile(sample, &method.bootstrap(alpha, seed))?.quantile,
        QuantileMethod::MultT { law, .. } => {
            mult_t_quantile(sample, law, &method.bootstrap(alpha, seed))?
        }
        QuantileMethod::GaussSim { draws } => {
            let corr = residual_cross(&normed_residuals(sample)?);
            gauss_sim_quantile(&corr, p, alpha, draws, seed)?
        }
    };
    let root_n = (n as f64).sqrt();
    let scale: Vec<f64> = sd.iter().map(|s| s / root_n).collect();
    Ok(ScBand::from_parts(mean, &scale, q, *method, alpha, sample.grid().clone()))
}

/// Band for `mean_Y - mean_X`: half-width `q * scale / sqrt(N + M - 2)` with
/// pooled `scale^2 = (1 + 1/c) var_Y + (1 + c) var_X`, `c = N / M`.
pub fn scb_two_sample(
    y: &FunctionalSample,
    x: &FunctionalSample,
    method: &QuantileMethod,
    alpha: f64,
    seed: u64,
) -> Result<ScBand> {
    if y.grid() != x.grid() {
        return Err(ScbError::GridMismatch);
    }
    let (n, m, p) = (y.n_curves(), x.n_curves(), y.n_points());
    for k in [n, m] {
        if k < 2 {
            return Err(ScbError::TooFewCurves { needed: 2, got: k });
        }
    }
    let c = n as f64 / m as f64;
    let (my, mx) = (column_mean(y.values(), n, p), column_mean(x.values(), m, p));
    let scale = pooled_scale(&column_sd(y.values(), n, &my), &column_sd(x.values(), m, &mx), c)?;
    let q = match *method {
        QuantileMethod::Tgkf => {
            let (ry, rx) = two_sample_residuals(y, x)?;
            let lkc = lkc_two_sample(&ry, &rx)?;
            tgkf_quantile(&lkc, EcDensityModel::student_t((n + m - 2) as f64)?, alpha)?
        }
        QuantileMethod::BootsT { .. } => {
            boots_t_quantile_two_sample(y, x, &method.bootstrap(alpha, seed))?.quantile
        }
        QuantileMethod::MultT { law, .. } => {
            mult_t_quantile_two_sample(y, x, law, &method.bootstrap(alpha, seed))?
        }
        QuantileMethod::GaussSim { draws } => {
            let (ry, rx) = two_sample_residuals(y, x)?;
            let corr: Vec<f64> = residual_cross(&ry)
                .iter()
                .zip(residual_cross(&rx))
                .map(|(a, b)| a + b)
                .collect();
            gauss_sim_quantile(&corr, p, alpha, draws, seed)?
        }
    };
    let root = ((n + m - 2) as f64).sqrt();
    let center = my.iter().zip(&mx).map(|(a, b)| a - b).collect();
    let scale: Vec<f64> = scale.iter().map(|s| s / root).collect();
    Ok(ScBand::from_parts(center, &scale, q, *method, alpha, y.grid().clone()))
}

/// Smooth every raw curve over the scale grid, then build the one-sample
/// band on the resulting `(s, h)` surfaces.
pub fn scb_scale_space(
    raw: &FunctionalSample,
    kernel: &dyn Kernel,
    sg: &ScaleGrid,
    normalize: bool,
    method: &QuantileMethod,
    alpha: f64,
    seed: u64,
) -> Result<ScBand> {
    let smoothed = smooth_sample(raw, kernel, sg, normalize)?;
    scb_one_sample(&smoothed, method, alpha, seed)
}
