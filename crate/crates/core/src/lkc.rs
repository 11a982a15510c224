//! Lipschitz-Killing curvature estimation from residual fields.
//!
//! The LKCs of a unit-variance field are intrinsic volumes of the domain
//! under the metric `Lambda(s) = cov[grad Z(s)]`. In 1-D, `L1 = int sqrt(Lambda)`.
//! In 2-D, `L1` is half the Lambda-length of the boundary and `L2` the
//! Lambda-area of the domain. `Lambda` is estimated pointwise as the
//! empirical covariance of the residual gradients.

use crate::error::{Result, ScbError};
use crate::gkf::LkcVector;
use crate::grid::{validate_boundary, Grid, Grid1D, Grid2D};
use crate::sample::{column_mean, column_sd, gradient, FunctionalSample};

/// Estimated gradient covariance at every grid point. In 2-D each entry is
/// `[xx, xy, yy]`.
#[derive(Debug, Clone, PartialEq)]
pub enum LambdaField {
    One(Vec<f64>),
    Two(Vec<[f64; 3]>),
}

impl LambdaField {
    pub fn len(&self) -> usize {
        match self {
            LambdaField::One(v) => v.len(),
            LambdaField::Two(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Pointwise sum of two fields on the same grid.
    pub fn add(&self, other: &LambdaField) -> Result<LambdaField> {
        match (self, other) {
            (LambdaField::One(a), LambdaField::One(b)) if a.len() == b.len() => Ok(
                LambdaField::One(a.iter().zip(b).map(|(x, y)| x + y).collect()),
            ),
            (LambdaField::Two(a), LambdaField::Two(b)) if a.len() == b.len() => {
                Ok(LambdaField::Two(
                    a.iter()
                        .zip(b)
                        .map(|(x, y)| [x[0] + y[0], x[1] + y[1], x[2] + y[2]])
                        .collect(),
                ))
            }
            _ => Err(ScbError::GridMismatch),
        }
    }
}

/// Pointwise empirical covariance (divisor `N - 1`) of the residual gradients.
pub fn lambda_hat(residuals: &FunctionalSample) -> Result<LambdaField> {
    let n = residuals.n_curves();
    if n < 3 {
        return Err(ScbError::TooFewCurves { needed: 3, got: n });
    }
    let p = residuals.n_points();
    let grad = gradient(residuals)?;
    let inv = 1.0 / (n as f64 - 1.0);
    match grad.dim() {
        1 => {
            let dz = grad.component(0);
            let mean = column_mean(dz, n, p);
            let mut var = vec![0.0; p];
            for row in dz.chunks_exact(p) {
                for j in 0..p {
                    let d = row[j] - mean[j];
                    var[j] += d * d;
                }
            }
            var.iter_mut().for_each(|v| *v *= inv);
            Ok(LambdaField::One(var))
        }
        _ => {
            let (dx, dy) = (grad.component(0), grad.component(1));
            let mx = column_mean(dx, n, p);
            let my = column_mean(dy, n, p);
            let mut cov = vec![[0.0; 3]; p];
            for (rx, ry) in dx.chunks_exact(p).zip(dy.chunks_exact(p)) {
                for j in 0..p {
                    let a = rx[j] - mx[j];
                    let b = ry[j] - my[j];
                    let c = &mut cov[j];
                    c[0] += a * a;
                    c[1] += a * b;
                    c[2] += b * b;
                }
            }
            for c in &mut cov {
                c.iter_mut().for_each(|v| *v *= inv);
            }
            Ok(LambdaField::Two(cov))
        }
    }
}

/// `L1 = int sqrt(Lambda(s)) ds` by the trapezoid rule on the grid.
pub fn lkc_1d(lambda: &LambdaField, grid: &Grid1D) -> Result<f64> {
    let LambdaField::One(lam) = lambda else {
        return Err(ScbError::InvalidArgument("expected a 1-D Lambda field".into()));
    };
    if lam.len() != grid.len() {
        return Err(ScbError::GridMismatch);
    }
    if let Some(i) = lam.iter().position(|&v| v < 0.0) {
        return Err(ScbError::InvalidArgument(format!("negative Lambda at index {i}")));
    }
    Ok(grid.weights().iter().zip(lam).map(|(w, l)| w * l.sqrt()).sum())
}

/// Closed boundary polyline with its segment tangents `dgamma/dt`, one
/// segment per pair of consecutive vertices, each parametrized over `[0, 1]`.
#[derive(Debug, Clone)]
pub struct BoundaryParam {
    vertices: Vec<(usize, usize)>,
    tangents: Vec<[f64; 2]>,
    flat: Vec<usize>,
}

impl BoundaryParam {
    pub fn new(grid: &Grid2D, vertices: Vec<(usize, usize)>) -> Result<Self> {
        validate_boundary(&vertices, grid.nx(), grid.ny())?;
        let k = vertices.len();
        let tangents = (0..k)
            .map(|i| {
                let (a, b) = (vertices[i], vertices[(i + 1) % k]);
                [grid.x()[b.0] - grid.x()[a.0], grid.y()[b.1] - grid.y()[a.1]]
            })
            .collect();
        let flat = vertices.iter().map(|&(ix, iy)| grid.index(ix, iy)).collect();
        Ok(Self { vertices, tangents, flat })
    }

    /// The boundary stored on the grid itself.
    pub fn from_grid(grid: &Grid2D) -> Result<Self> {
        Self::new(grid, grid.boundary().to_vec())
    }

    pub fn vertices(&self) -> &[(usize, usize)] {
        &self.vertices
    }

    pub fn tangents(&self) -> &[[f64; 2]] {
        &self.tangents
    }
}

/// `(L1, L2)` of a 2-D domain: half the Lambda-length of the boundary, with
/// Lambda averaged over each segment's endpoints, and the trapezoid integral
/// of `sqrt(max(det Lambda, 0))` over the lattice.
pub fn lkc_2d(lambda: &LambdaField, grid: &Grid2D, boundary: &BoundaryParam) -> Result<(f64, f64)> {
    let LambdaField::Two(lam) = lambda else {
        return Err(ScbError::InvalidArgument("expected a 2-D Lambda field".into()));
    };
    if lam.len() != grid.len() {
        return Err(ScbError::GridMismatch);
    }
    let k = boundary.flat.len();
    let mut length = 0.0;
    for i in 0..k {
        let (a, b) = (&lam[boundary.flat[i]], &lam[boundary.flat[(i + 1) % k]]);
        let m = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1]), 0.5 * (a[2] + b[2])];
        let [tx, ty] = boundary.tangents[i];
        let q = m[0] * tx * tx + 2.0 * m[1] * tx * ty + m[2] * ty * ty;
        length += q.max(0.0).sqrt();
    }
    let area = grid
        .weights()
        .iter()
        .zip(lam)
        .map(|(w, l)| w * (l[0] * l[2] - l[1] * l[1]).max(0.0).sqrt())
        .sum();
    Ok((0.5 * length, area))
}

/// LKCs of the field behind a set of normed residuals, with `L0 = 1`
/// (interval or simply connected lattice region).
pub fn estimate_lkc(residuals: &FunctionalSample) -> Result<LkcVector> {
    let lambda = lambda_hat(residuals)?;
    lkc_from_lambda(&lambda, residuals.grid())
}

pub fn lkc_from_lambda(lambda: &LambdaField, grid: &Grid) -> Result<LkcVector> {
    match grid {
        Grid::One(g) => LkcVector::new(1, vec![lkc_1d(lambda, g)?]),
        Grid::Two(g) => {
            let (l1, l2) = lkc_2d(lambda, g, &BoundaryParam::from_grid(g)?)?;
            LkcVector::new(1, vec![l1, l2])
        }
    }
}

/// Residuals of the pooled difference-of-means process:
/// `R^Y = sqrt(1 + 1/c) (Y - mean Y) / scale` and
/// `R^X = sqrt(1 + c) (X - mean X) / scale` with `c = N / M` and
/// `scale^2 = (1 + 1/c) var Y + (1 + c) var X`.
pub fn two_sample_residuals(
    y: &FunctionalSample,
    x: &FunctionalSample,
) -> Result<(FunctionalSample, FunctionalSample)> {
    if y.grid() != x.grid() {
        return Err(ScbError::GridMismatch);
    }
    for s in [y, x] {
        if s.n_curves() < 2 {
            return Err(ScbError::TooFewCurves { needed: 2, got: s.n_curves() });
        }
    }
    let (n, m, p) = (y.n_curves(), x.n_curves(), y.n_points());
    let c = n as f64 / m as f64;
    let (my, mx) = (column_mean(y.values(), n, p), column_mean(x.values(), m, p));
    let (sy, sx) = (column_sd(y.values(), n, &my), column_sd(x.values(), m, &mx));
    let scale = pooled_scale(&sy, &sx, c)?;
    let fy = (1.0 + 1.0 / c).sqrt();
    let fx = (1.0 + c).sqrt();
    let build = |s: &FunctionalSample, mean: &[f64], f: f64| {
        let mut v = s.values().to_vec();
        for row in v.chunks_exact_mut(p) {
            for j in 0..p {
                row[j] = f * (row[j] - mean[j]) / scale[j];
            }
        }
        s.with_values(v)
    };
    Ok((build(y, &my, fy), build(x, &mx, fx)))
}

/// `sqrt((1 + 1/c) sd_y^2 + (1 + c) sd_x^2)` pointwise, rejecting zeros.
pub(crate) fn pooled_scale(sy: &[f64], sx: &[f64], c: f64) -> Result<Vec<f64>> {
    let scale: Vec<f64> = sy
        .iter()
        .zip(sx)
        .map(|(a, b)| ((1.0 + 1.0 / c) * a * a + (1.0 + c) * b * b).sqrt())
        .collect();
    if let Some(index) = scale.iter().position(|&s| s <= 0.0) {
        return Err(ScbError::DegenerateVariance { index });
    }
    Ok(scale)
}

/// LKCs of the limiting difference process: the Lambda fields of the two
/// residual parts add because the samples are independent.
pub fn lkc_two_sample(res_y: &FunctionalSample, res_x: &FunctionalSample) -> Result<LkcVector> {
    if res_y.grid() != res_x.grid() {
        return Err(ScbError::GridMismatch);
    }
    let lambda = lambda_hat(res_y)?.add(&lambda_hat(res_x)?)?;
    lkc_from_lambda(&lambda, res_y.grid())
}

/// Plug-in asymptotic variance of `sqrt(N) (L1_hat - L1)` for a Gaussian
/// 1-D field: `1/2 int int cdot(s,t)^2 / sqrt(cdot(s,s) cdot(t,t)) ds dt`,
/// where `cdot` is the empirical covariance of residual gradients.
pub fn tau_sq_1d(residuals: &FunctionalSample, grid: &Grid1D) -> Result<f64> {
    if residuals.grid().as_1d() != Some(grid) {
        return Err(ScbError::GridMismatch);
    }
    let n = residuals.n_curves();
    if n < 2 {
        return Err(ScbError::TooFewCurves { needed: 2, got: n });
    }
    let p = grid.len();
    let grad = gradient(residuals)?;
    let dz = grad.component(0);
    let mean = column_mean(dz, n, p);
    let centred: Vec<f64> = dz
        .chunks_exact(p)
        .flat_map(|row| row.iter().zip(&mean).map(|(v, m)| v - m))
        .collect();
    let inv = 1.0 / (n as f64 - 1.0);
    let cov = |a: usize, b: usize| -> f64 {
        centred.chunks_exact(p).map(|r| r[a] * r[b]).sum::<f64>() * inv
    };
    let diag: Vec<f64> = (0..p).map(|j| cov(j, j)).collect();
    if let Some(index) = diag.iter().position(|&d| d <= 0.0) {
        return Err(ScbError::DegenerateVariance { index });
    }
    let w = grid.weights();
    let mut total = 0.0;
    for a in 0..p {
        let mut row = 0.5 * w[a] * diag[a]; // diagonal term: cdot^2 / cdot = cdot
        for b in (a + 1)..p {
            let c = cov(a, b);
            row += w[b] * c * c / (diag[a] * diag[b]).sqrt();
        }
        total += 2.0 * w[a] * row;
    }
    Ok(0.5 * total)
}
