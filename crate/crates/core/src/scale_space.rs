//! Scale-space smoothing: every curve is kernel-smoothed at a whole range of
//! bandwidths, and the result is treated as one function on the
//! `(location, bandwidth)` rectangle.

use std::fmt;

use crate::error::{Result, ScbError};
use crate::grid::{Grid, Grid1D, Grid2D};
use crate::sample::FunctionalSample;

/// Smoothing kernel `K(offset, h)`.
pub trait Kernel: Send + Sync + fmt::Debug {
    fn eval(&self, offset: f64, h: f64) -> f64;

    /// Order of continuous differentiability in `(s, h)`; `u32::MAX` for
    /// smooth kernels. The band pipeline needs at least 3.
    fn smoothness(&self) -> u32;

    /// Support radius in units of `h`, `None` for unbounded support.
    fn support_radius(&self) -> Option<f64> {
        None
    }
}

/// `K(s, h) = exp(-s^2 / (2 h^2))`.
#[derive(Debug, Clone, Copy, Default)]
pub struct GaussianKernel;

impl Kernel for GaussianKernel {
    fn eval(&self, offset: f64, h: f64) -> f64 {
        let z = offset / h;
        (-0.5 * z * z).exp()
    }

    fn smoothness(&self) -> u32 {
        u32::MAX
    }
}

/// Output locations and bandwidths of a scale space.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleGrid {
    s: Grid1D,
    h: Vec<f64>,
}

impl ScaleGrid {
    pub fn new(s: Grid1D, h: Vec<f64>) -> Result<Self> {
        if h.is_empty() {
            return Err(ScbError::InvalidArgument("bandwidth list is empty".into()));
        }
        if h.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(ScbError::InvalidArgument("bandwidths must be positive".into()));
        }
        if h.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ScbError::InvalidArgument(
                "bandwidths must be strictly increasing".into(),
            ));
        }
        Ok(Self { s, h })
    }

    pub fn s(&self) -> &Grid1D {
        &self.s
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    /// Grid of the smoothed output: the `(s, h)` lattice, or just the
    /// location grid when a single bandwidth is requested.
    pub fn output_grid(&self) -> Result<Grid> {
        if self.h.len() == 1 {
            Ok(Grid::One(self.s.clone()))
        } else {
            Ok(Grid::Two(Grid2D::new(self.s.points().to_vec(), self.h.clone())?))
        }
    }
}

/// Precomputed linear map from raw curves to their scale-space surfaces.
///
/// Output index `is * n_h + ih` holds
/// `sum_p w_p(s, h) Y(s_p)` with `w_p = K(s - s_p, h) / P`, or with the weights
/// rescaled to sum to one when `normalize` is set.
#[derive(Debug, Clone)]
pub struct ScaleSmoother {
    weights: Vec<f64>,
    n_raw: usize,
    grid: Grid,
}

impl ScaleSmoother {
    pub fn new(raw: &Grid1D, kernel: &dyn Kernel, sg: &ScaleGrid, normalize: bool) -> Result<Self> {
        if raw.len() < 2 {
            return Err(ScbError::GridTooShort { axis: 0, len: raw.len(), needed: 2 });
        }
        if kernel.smoothness() < 3 {
            return Err(ScbError::InvalidArgument(
                "scale-space kernels must be at least three times differentiable".into(),
            ));
        }
        let grid = sg.output_grid()?;
        let n_raw = raw.len();
        let inv_p = 1.0 / n_raw as f64;
        let mut weights = Vec::with_capacity(grid.len() * n_raw);
        for &s in sg.s().points() {
            for &h in sg.h() {
                let start = weights.len();
                for &sp in raw.points() {
                    let k = kernel.eval(s - sp, h);
                    if !k.is_finite() {
                        return Err(ScbError::InvalidArgument(format!(
                            "kernel is not finite at offset {}, bandwidth {h}",
                            s - sp
                        )));
                    }
                    weights.push(k * inv_p);
                }
                if normalize {
                    let row = &mut weights[start..];
                    let total: f64 = row.iter().sum();
                    if !(total > 0.0) {
                        return Err(ScbError::InvalidArgument(format!(
                            "kernel weights vanish at s = {s}, h = {h}"
                        )));
                    }
                    row.iter_mut().for_each(|w| *w /= total);
                }
            }
        }
        Ok(Self { weights, n_raw, grid })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn smooth_curve(&self, values: &[f64]) -> Result<Vec<f64>> {
        if values.len() != self.n_raw {
            return Err(ScbError::GridMismatch);
        }
        Ok(self
            .weights
            .chunks_exact(self.n_raw)
            .map(|w| w.iter().zip(values).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn smooth(&self, raw: &FunctionalSample) -> Result<FunctionalSample> {
        if raw.n_points() != self.n_raw || raw.grid().dim() != 1 {
            return Err(ScbError::GridMismatch);
        }
        let q = self.grid.len();
        let mut out = Vec::with_capacity(raw.n_curves() * q);
        for row in raw.rows() {
            out.extend(self.smooth_curve(row)?);
        }
        FunctionalSample::from_flat(raw.n_curves(), out, self.grid.clone())
    }
}

/// Smooth every curve of a 1-D sample onto the `(s, h)` lattice.
pub fn smooth_sample(
    raw: &FunctionalSample,
    kernel: &dyn Kernel,
    sg: &ScaleGrid,
    normalize: bool,
) -> Result<FunctionalSample> {
    let Grid::One(g) = raw.grid() else {
        return Err(ScbError::InvalidArgument("scale space needs 1-D curves".into()));
    };
    ScaleSmoother::new(g, kernel, sg, normalize)?.smooth(raw)
}

/// The same smoothing applied to a mean vector on the raw grid.
pub fn scale_mean(
    mu: &[f64],
    raw: &Grid1D,
    kernel: &dyn Kernel,
    sg: &ScaleGrid,
    normalize: bool,
) -> Result<Vec<f64>> {
    ScaleSmoother::new(raw, kernel, sg, normalize)?.smooth_curve(mu)
}
