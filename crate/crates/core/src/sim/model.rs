//! Benchmark signal-plus-noise models.
//!
//! Every model has the form `Y(s) = mu(s) + sigma(s) c^T K(s) / |K(s)|` with
//! i.i.d. unit-variance coefficients `c`, so the error field has pointwise
//! variance `sigma(s)^2` whatever the coefficient law.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::error::{Result, ScbError};
use crate::grid::{linspace, midpoints, Grid, Grid1D, Grid2D};
use crate::sample::FunctionalSample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    /// Bernstein basis of degree 6 on `[0, 1]`.
    A,
    /// 21 Gaussian bumps of varying width on `[0, 1]`.
    B,
    /// 6 x 6 lattice of Gaussian bumps on `[0, 1]^2`.
    C,
}

/// Law of the basis coefficients, always mean zero with unit variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum CoefficientLaw {
    #[default]
    Gaussian,
    /// `t_3 / sqrt(3)`.
    ScaledT3,
    /// `(chi^2_dof - dof) / sqrt(2 dof)`.
    CenteredChiSq { dof: f64 },
}

impl CoefficientLaw {
    fn sampler(&self) -> Result<Sampler> {
        Ok(match *self {
            CoefficientLaw::Gaussian => Sampler::Normal,
            CoefficientLaw::ScaledT3 => Sampler::T(StudentT::new(3.0).expect("valid dof")),
            CoefficientLaw::CenteredChiSq { dof } => {
                if !(dof >= 1.0) || !dof.is_finite() {
                    return Err(ScbError::InvalidArgument(format!(
                        "chi-square degrees of freedom must be >= 1, got {dof}"
                    )));
                }
                Sampler::Chi(ChiSquared::new(dof).expect("valid dof"), dof)
            }
        })
    }
}

#[derive(Debug, Clone, Copy)]
enum Sampler {
    Normal,
    T(StudentT<f64>),
    Chi(ChiSquared<f64>, f64),
}

impl Sampler {
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Sampler::Normal => rng.sample(StandardNormal),
            Sampler::T(t) => t.sample(rng) / 3f64.sqrt(),
            Sampler::Chi(c, nu) => (c.sample(rng) - nu) / (2.0 * nu).sqrt(),
        }
    }
}

/// Placement of the sampling locations of 1-D models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Design {
    /// `P` equidistant points including both ends of `[0, 1]`.
    #[default]
    Equidistant,
    /// `s_p = (p - 0.5) / P`.
    Midpoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub model: ModelKind,
    #[serde(default)]
    pub law: CoefficientLaw,
    /// Points per axis; 200 for A and B, 50 for C when absent.
    #[serde(default)]
    pub resolution: Option<usize>,
    #[serde(default)]
    pub design: Design,
}

impl ModelSpec {
    pub fn new(model: ModelKind, law: CoefficientLaw) -> Self {
        Self { model, law, resolution: None, design: Design::Equidistant }
    }

    pub fn with_resolution(mut self, p: usize) -> Self {
        self.resolution = Some(p);
        self
    }

    pub fn with_design(mut self, design: Design) -> Self {
        self.design = design;
        self
    }

    pub fn resolution(&self) -> usize {
        self.resolution.unwrap_or(match self.model {
            ModelKind::A | ModelKind::B => 200,
            ModelKind::C => 50,
        })
    }
}

pub fn mean_1d(s: f64) -> f64 {
    (8.0 * PI * s).sin() * (-3.0 * s).exp()
}

pub fn sd_1d(s: f64) -> f64 {
    ((0.6 - s).powi(2) + 1.0) / 6.0
}

pub fn mean_2d(s1: f64, s2: f64) -> f64 {
    s1 * s2
}

pub fn sd_2d(s1: f64, s2: f64) -> f64 {
    (s1 + 1.0) / (s2 * s2 + 1.0)
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}

/// The seven degree-6 Bernstein polynomials at `s`.
pub fn bernstein_basis(s: f64) -> Vec<f64> {
    (0..=6u32)
        .map(|i| binomial(6, i) * s.powi(i as i32) * (1.0 - s).powi(6 - i as i32))
        .collect()
}

/// Width of bump `i` (1-based) of model B.
fn bump_width(i: usize) -> f64 {
    match i {
        1..=9 => 0.04,
        10 | 11 => 0.2,
        _ => 0.08,
    }
}

/// The 21 bumps of model B at `s`.
pub fn bump_basis(s: f64) -> Vec<f64> {
    (1..=21)
        .map(|i| {
            let h = bump_width(i);
            let d = s - i as f64 / 21.0;
            (-d * d / (2.0 * h * h)).exp()
        })
        .collect()
}

/// The 36 bumps of model C at `(s1, s2)`, centres `(i, j) / 6` for
/// `i, j = 1..=6`, width 0.06.
pub fn lattice_basis(s1: f64, s2: f64) -> Vec<f64> {
    let h = 0.06;
    let mut out = Vec::with_capacity(36);
    for i in 1..=6 {
        for j in 1..=6 {
            let (d1, d2) = (s1 - i as f64 / 6.0, s2 - j as f64 / 6.0);
            out.push((-(d1 * d1 + d2 * d2) / (2.0 * h * h)).exp());
        }
    }
    out
}

/// A model evaluated on its grid, with the basis already normalized.
#[derive(Debug, Clone)]
pub struct Model {
    spec: ModelSpec,
    grid: Grid,
    mean: Vec<f64>,
    sd: Vec<f64>,
    /// `P x K`, row-major, rows of unit Euclidean norm.
    basis: Vec<f64>,
    k: usize,
    sampler: Sampler,
}

impl Model {
    pub fn new(spec: &ModelSpec) -> Result<Self> {
        let p = spec.resolution();
        if p < 3 {
            return Err(ScbError::GridTooShort { axis: 0, len: p, needed: 3 });
        }
        let sampler = spec.law.sampler()?;
        let (grid, locations): (Grid, Vec<[f64; 2]>) = match spec.model {
            ModelKind::A | ModelKind::B => {
                let pts = match spec.design {
                    Design::Equidistant => linspace(0.0, 1.0, p),
                    Design::Midpoint => midpoints(p),
                };
                let locs = pts.iter().map(|&s| [s, 0.0]).collect();
                (Grid::One(Grid1D::new(pts)?), locs)
            }
            ModelKind::C => {
                let axis = match spec.design {
                    Design::Equidistant => linspace(0.0, 1.0, p),
                    Design::Midpoint => midpoints(p),
                };
                let locs = axis.iter().flat_map(|&a| axis.iter().map(move |&b| [a, b])).collect();
                (Grid::Two(Grid2D::new(axis.clone(), axis)?), locs)
            }
        };
        let mut basis = Vec::new();
        let mut mean = Vec::with_capacity(locations.len());
        let mut sd = Vec::with_capacity(locations.len());
        for &[a, b] in &locations {
            let mut row = match spec.model {
                ModelKind::A => bernstein_basis(a),
                ModelKind::B => bump_basis(a),
                ModelKind::C => lattice_basis(a, b),
            };
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            row.iter_mut().for_each(|v| *v /= norm);
            basis.extend(row);
            match spec.model {
                ModelKind::C => {
                    mean.push(mean_2d(a, b));
                    sd.push(sd_2d(a, b));
                }
                _ => {
                    mean.push(mean_1d(a));
                    sd.push(sd_1d(a));
                }
            }
        }
        let k = basis.len() / locations.len();
        Ok(Self { spec: spec.clone(), grid, mean, sd, basis, k, sampler })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn sd(&self) -> &[f64] {
        &self.sd
    }

    pub fn n_basis(&self) -> usize {
        self.k
    }

    /// `n` independent curves.
    pub fn generate<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<FunctionalSample> {
        let p = self.mean.len();
        let mut values = Vec::with_capacity(n * p);
        let mut coef = vec![0.0; self.k];
        for _ in 0..n {
            coef.iter_mut().for_each(|c| *c = self.sampler.draw(rng));
            for (j, row) in self.basis.chunks_exact(self.k).enumerate() {
                let e: f64 = row.iter().zip(&coef).map(|(a, b)| a * b).sum();
                values.push(self.mean[j] + self.sd[j] * e);
            }
        }
        FunctionalSample::from_flat(n, values, self.grid.clone())
    }
}

/// One-off generation; build a [`Model`] once when drawing repeatedly.
pub fn gen_model<R: Rng + ?Sized>(spec: &ModelSpec, n: usize, rng: &mut R) -> Result<FunctionalSample> {
    Model::new(spec)?.generate(n, rng)
}

/// Adds i.i.d. `N(0, sd^2)` noise to every entry.
pub fn add_observation_noise<R: Rng + ?Sized>(
    sample: &FunctionalSample,
    sd: f64,
    rng: &mut R,
) -> Result<FunctionalSample> {
    if !(sd >= 0.0) || !sd.is_finite() {
        return Err(ScbError::InvalidArgument(format!("noise sd must be >= 0, got {sd}")));
    }
    if sd == 0.0 {
        return Ok(sample.clone());
    }
    let values = sample
        .values()
        .iter()
        .map(|v| v + sd * rng.sample::<f64, _>(StandardNormal))
        .collect();
    FunctionalSample::from_flat(sample.n_curves(), values, sample.grid().clone())
}
