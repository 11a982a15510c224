//! Euler characteristic densities, the expected Euler characteristic of
//! excursion sets, and the threshold solver built on it.
//!
//! For a field over a domain with Lipschitz-Killing curvatures
//! `(L0, L1, ..., LD)` the expected Euler characteristic of the excursion set
//! above `u` is `L0 rho0(u) + sum_d Ld rhod(u)`. The EC densities `rho_d`
//! depend only on the marginal law of the field (Gaussian or Student t).

use std::f64::consts::PI;

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};
use statrs::function::erf::erfc;
use statrs::function::gamma::ln_gamma;

use crate::error::{Result, ScbError};

/// Lipschitz-Killing curvatures `(L0, [L1, L2])` of a 1-D or 2-D domain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LkcVector {
    pub l0: i32,
    pub l: Vec<f64>,
}

impl LkcVector {
    pub fn new(l0: i32, l: Vec<f64>) -> Result<Self> {
        if l.is_empty() || l.len() > 2 {
            return Err(ScbError::InvalidDensity(format!(
                "LKC dimension must be 1 or 2, got {}",
                l.len()
            )));
        }
        if let Some(v) = l.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(ScbError::InvalidDensity(format!(
                "LKCs must be finite and non-negative, got {v}"
            )));
        }
        Ok(Self { l0, l })
    }

    pub fn dim(&self) -> usize {
        self.l.len()
    }
}

/// Marginal law of the field whose excursions are counted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum EcDensityModel {
    Gaussian,
    StudentT { dof: f64 },
}

impl EcDensityModel {
    pub fn student_t(dof: f64) -> Result<Self> {
        if !(dof >= 1.0) || !dof.is_finite() {
            return Err(ScbError::InvalidDensity(format!(
                "degrees of freedom must be >= 1, got {dof}"
            )));
        }
        Ok(Self::StudentT { dof })
    }

    fn validate(&self) -> Result<()> {
        match *self {
            EcDensityModel::Gaussian => Ok(()),
            EcDensityModel::StudentT { dof } => Self::student_t(dof).map(|_| ()),
        }
    }
}

fn gaussian_sf(u: f64) -> f64 {
    0.5 * erfc(u / std::f64::consts::SQRT_2)
}

fn t_sf(u: f64, dof: f64) -> f64 {
    // parameters already validated, construction cannot fail
    StudentsT::new(0.0, 1.0, dof).map(|t| t.sf(u)).unwrap_or(f64::NAN)
}

/// `(1 + u^2 / dof)^(-(dof - 1) / 2)`, stable for large `dof`.
fn t_kernel(u: f64, dof: f64) -> f64 {
    (-(dof - 1.0) / 2.0 * (u * u / dof).ln_1p()).exp()
}

/// `d`-th EC density of the given model at threshold `u`, `d <= 2`.
pub fn ec_density(model: EcDensityModel, d: usize, u: f64) -> Result<f64> {
    model.validate()?;
    let v = match (model, d) {
        (EcDensityModel::Gaussian, 0) => gaussian_sf(u),
        (EcDensityModel::Gaussian, 1) => (-0.5 * u * u).exp() / (2.0 * PI),
        (EcDensityModel::Gaussian, 2) => u * (-0.5 * u * u).exp() / (2.0 * PI).powf(1.5),
        (EcDensityModel::StudentT { dof }, 0) => t_sf(u, dof),
        (EcDensityModel::StudentT { dof }, 1) => t_kernel(u, dof) / (2.0 * PI),
        (EcDensityModel::StudentT { dof }, 2) => {
            let c = (ln_gamma((dof + 1.0) / 2.0) - ln_gamma(dof / 2.0)).exp() / (dof / 2.0).sqrt();
            c * u * t_kernel(u, dof) / (2.0 * PI).powf(1.5)
        }
        _ => {
            return Err(ScbError::InvalidDensity(format!(
                "EC density of order {d} is not available"
            )))
        }
    };
    Ok(v)
}

/// Expected Euler characteristic of the excursion set above `u`.
pub fn eec(lkc: &LkcVector, model: EcDensityModel, u: f64) -> Result<f64> {
    let mut total = lkc.l0 as f64 * ec_density(model, 0, u)?;
    for (d, ld) in lkc.l.iter().enumerate() {
        total += ld * ec_density(model, d + 1, u)?;
    }
    Ok(total)
}

const SCAN_END: f64 = 10.0;
const SCAN_STEP: f64 = 0.01;
const TOLERANCE: f64 = 1e-9;

/// Largest `u` with `eec(u) = alpha / 2` (two-sided band threshold).
///
/// The search starts at the last local maximum of `eec` on a coarse scan of
/// `[0, 10]`, expands an upper bracket by doubling, then bisects to an
/// absolute tolerance of `1e-9`.
pub fn tgkf_quantile(lkc: &LkcVector, model: EcDensityModel, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(ScbError::NoSolution {
            alpha,
            reason: "alpha must lie in (0, 1)".into(),
        });
    }
    let target = alpha / 2.0;
    let f = |u: f64| -> Result<f64> {
        let v = eec(lkc, model, u)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(ScbError::NonFiniteEec { u })
        }
    };

    let steps = (SCAN_END / SCAN_STEP).round() as usize;
    let mut start = 0.0;
    let mut prev = f(0.0)?;
    for i in 1..=steps {
        let u = i as f64 * SCAN_STEP;
        let v = f(u)?;
        if v > prev {
            start = u;
        }
        prev = v;
    }

    let mut lo = start;
    if f(lo)? <= target {
        return Err(ScbError::NoSolution {
            alpha,
            reason: format!("EEC on its decreasing tail starts below alpha/2 at u = {lo}"),
        });
    }
    let mut hi = lo.max(1.0);
    let mut expansions = 0;
    while f(hi)? >= target {
        hi *= 2.0;
        expansions += 1;
        if expansions > 64 {
            return Err(ScbError::NoSolution {
                alpha,
                reason: "upper bracket did not close".into(),
            });
        }
    }
    while hi - lo > TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if f(mid)? >= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
