//! Functional samples and their pointwise statistics.

use crate::error::{Result, ScbError};
use crate::grid::{Grid, Grid1D, Grid2D};

/// `N` observed functions on a shared grid, stored row-major (`N x P`).
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalSample {
    values: Vec<f64>,
    n: usize,
    grid: Grid,
}

impl FunctionalSample {
    pub fn from_flat(n: usize, values: Vec<f64>, grid: impl Into<Grid>) -> Result<Self> {
        let grid = grid.into();
        let p = grid.len();
        if values.len() != n * p {
            return Err(ScbError::InvalidArgument(format!(
                "expected {n} x {p} = {} values, got {}",
                n * p,
                values.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(ScbError::NonFinite { row: k / p, col: k % p });
        }
        Ok(Self { values, n, grid })
    }

    pub fn from_rows(rows: &[Vec<f64>], grid: impl Into<Grid>) -> Result<Self> {
        let grid = grid.into();
        let p = grid.len();
        if let Some(i) = rows.iter().position(|r| r.len() != p) {
            return Err(ScbError::InvalidArgument(format!(
                "row {i} has {} values, grid has {p} points",
                rows[i].len()
            )));
        }
        Self::from_flat(rows.len(), rows.concat(), grid)
    }

    pub fn n_curves(&self) -> usize {
        self.n
    }

    pub fn n_points(&self) -> usize {
        self.grid.len()
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let p = self.n_points();
        &self.values[i * p..(i + 1) * p]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.n_points().max(1)).take(self.n)
    }

    /// Same grid, new values; used by linear maps that keep the shape.
    pub(crate) fn with_values(&self, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), self.values.len());
        Self { values, n: self.n, grid: self.grid.clone() }
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// Column means.
pub fn pointwise_mean(sample: &FunctionalSample) -> Result<Vec<f64>> {
    if sample.n == 0 {
        return Err(ScbError::EmptySample);
    }
    Ok(column_mean(sample.values(), sample.n, sample.n_points()))
}

pub(crate) fn column_mean(values: &[f64], n: usize, p: usize) -> Vec<f64> {
    let mut mean = vec![0.0; p];
    for row in values.chunks_exact(p) {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    let inv = 1.0 / n as f64;
    mean.iter_mut().for_each(|m| *m *= inv);
    mean
}

/// Column standard deviations (divisor `N - 1`). A column whose spread is at
/// rounding level relative to its magnitude reports exactly zero.
pub fn pointwise_sd(sample: &FunctionalSample) -> Result<Vec<f64>> {
    if sample.n < 2 {
        return Err(ScbError::TooFewCurves { needed: 2, got: sample.n });
    }
    let mean = column_mean(sample.values(), sample.n, sample.n_points());
    Ok(column_sd(sample.values(), sample.n, &mean))
}

pub(crate) fn column_sd(values: &[f64], n: usize, mean: &[f64]) -> Vec<f64> {
    let p = mean.len();
    let mut ss = vec![0.0; p];
    let mut scale = vec![0.0f64; p];
    for row in values.chunks_exact(p) {
        for j in 0..p {
            let d = row[j] - mean[j];
            ss[j] += d * d;
            scale[j] = scale[j].max(row[j].abs());
        }
    }
    let inv = 1.0 / (n as f64 - 1.0);
    ss.iter()
        .zip(&scale)
        .map(|(&s, &c)| {
            let sd = (s * inv).sqrt();
            if sd <= 16.0 * f64::EPSILON * c {
                0.0
            } else {
                sd
            }
        })
        .collect()
}

/// `(Y_n - mean) / sd` at every grid point.
pub fn normed_residuals(sample: &FunctionalSample) -> Result<FunctionalSample> {
    let sd = pointwise_sd(sample)?;
    if let Some(index) = sd.iter().position(|&s| s <= 0.0) {
        return Err(ScbError::DegenerateVariance { index });
    }
    let mean = column_mean(sample.values(), sample.n, sample.n_points());
    let p = mean.len();
    let mut out = sample.values.clone();
    for row in out.chunks_exact_mut(p) {
        for j in 0..p {
            row[j] = (row[j] - mean[j]) / sd[j];
        }
    }
    Ok(sample.with_values(out))
}

/// Second-order three-point derivative weights on an increasing grid:
/// derivative at `i` is `sum_k w[k] * f[start + k]`.
#[derive(Debug, Clone)]
pub(crate) struct Stencil {
    start: Vec<usize>,
    w: Vec<[f64; 3]>,
}

impl Stencil {
    pub(crate) fn new(x: &[f64], axis: usize) -> Result<Self> {
        let n = x.len();
        if n < 3 {
            return Err(ScbError::GridTooShort { axis, len: n, needed: 3 });
        }
        let mut start = Vec::with_capacity(n);
        let mut w = Vec::with_capacity(n);
        for i in 0..n {
            if i == 0 {
                let (h1, h2) = (x[1] - x[0], x[2] - x[1]);
                start.push(0);
                w.push([
                    -(2.0 * h1 + h2) / (h1 * (h1 + h2)),
                    (h1 + h2) / (h1 * h2),
                    -h1 / (h2 * (h1 + h2)),
                ]);
            } else if i == n - 1 {
                let (h1, h2) = (x[n - 2] - x[n - 3], x[n - 1] - x[n - 2]);
                start.push(n - 3);
                w.push([
                    h2 / (h1 * (h1 + h2)),
                    -(h1 + h2) / (h1 * h2),
                    (2.0 * h2 + h1) / (h2 * (h1 + h2)),
                ]);
            } else {
                let (h1, h2) = (x[i] - x[i - 1], x[i + 1] - x[i]);
                start.push(i - 1);
                w.push([
                    -h2 / (h1 * (h1 + h2)),
                    (h2 - h1) / (h1 * h2),
                    h1 / (h2 * (h1 + h2)),
                ]);
            }
        }
        Ok(Self { start, w })
    }

    /// Differentiate the strided line `f[offset + k * stride]`, writing into
    /// `out` with the same layout.
    #[inline]
    pub(crate) fn apply(&self, f: &[f64], offset: usize, stride: usize, out: &mut [f64]) {
        for (i, (&s, w)) in self.start.iter().zip(&self.w).enumerate() {
            let base = offset + s * stride;
            out[offset + i * stride] =
                w[0] * f[base] + w[1] * f[base + stride] + w[2] * f[base + 2 * stride];
        }
    }
}

/// Per-row partial derivatives of a sample. Component `d` holds `N x P`
/// values of the derivative along axis `d`, in the sample's storage order.
#[derive(Debug, Clone)]
pub struct Gradient {
    n: usize,
    p: usize,
    components: Vec<Vec<f64>>,
}

impl Gradient {
    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn n_curves(&self) -> usize {
        self.n
    }

    pub fn n_points(&self) -> usize {
        self.p
    }

    pub fn component(&self, axis: usize) -> &[f64] {
        &self.components[axis]
    }
}

/// Central differences inside, one-sided second-order differences at the
/// edges, along every axis.
pub fn gradient(sample: &FunctionalSample) -> Result<Gradient> {
    let (n, p) = (sample.n_curves(), sample.n_points());
    let components = match sample.grid() {
        Grid::One(g) => vec![gradient_1d(sample.values(), n, g)?],
        Grid::Two(g) => gradient_2d(sample.values(), n, g)?,
    };
    Ok(Gradient { n, p, components })
}

fn gradient_1d(values: &[f64], n: usize, g: &Grid1D) -> Result<Vec<f64>> {
    let st = Stencil::new(g.points(), 0)?;
    let p = g.len();
    let mut out = vec![0.0; n * p];
    for (row, o) in values.chunks_exact(p).zip(out.chunks_exact_mut(p)) {
        st.apply(row, 0, 1, o);
    }
    Ok(out)
}

fn gradient_2d(values: &[f64], n: usize, g: &Grid2D) -> Result<Vec<Vec<f64>>> {
    let sx = Stencil::new(g.x(), 0)?;
    let sy = Stencil::new(g.y(), 1)?;
    let (nx, ny, p) = (g.nx(), g.ny(), g.len());
    let mut dx = vec![0.0; n * p];
    let mut dy = vec![0.0; n * p];
    for ((row, ox), oy) in values
        .chunks_exact(p)
        .zip(dx.chunks_exact_mut(p))
        .zip(dy.chunks_exact_mut(p))
    {
        for iy in 0..ny {
            sx.apply(row, iy, ny, ox);
        }
        for ix in 0..nx {
            sy.apply(row, ix * ny, 1, oy);
        }
    }
    Ok(vec![dx, dy])
}
