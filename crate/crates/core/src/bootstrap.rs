//! Resampling estimators of the band quantile.
//!
//! All estimators approximate the upper `(1 - alpha)` quantile of the maximal
//! studentized deviation `max_s sqrt(N) |mean(s) - mu(s)| / sd(s)`:
//!
//! * bootstrap-t resamples curves with replacement,
//! * multiplier-t perturbs residuals with i.i.d. mean-zero, unit-variance
//!   weights (Gaussian or Rademacher),
//! * the Gaussian simulation draws the limiting Gaussian field directly from
//!   an estimated correlation matrix.
//!
//! Replicate `b` uses [`substream`]`(seed, b)`, so results do not depend on
//! execution order.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ScbError};
use crate::lkc::pooled_scale;
use crate::rng::{par_map, substream};
use crate::sample::{column_mean, column_sd, pointwise_sd, FunctionalSample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MultiplierLaw {
    Gaussian,
    Rademacher,
}

impl MultiplierLaw {
    fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            MultiplierLaw::Gaussian => rng.sample(StandardNormal),
            MultiplierLaw::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
        }
    }
}

/// Settings shared by the resampling estimators. Use at least 100 replicates
/// for anything meant as inference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub replicates: usize,
    pub alpha: f64,
    pub studentized: bool,
    pub seed: u64,
}

impl BootstrapConfig {
    fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(ScbError::InvalidArgument("replicates must be positive".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(ScbError::InvalidArgument(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        Ok(())
    }

    fn rejection_limit(&self) -> usize {
        self.replicates / 10
    }
}

/// Upper `(1 - alpha)` empirical quantile: the order statistic of rank
/// `ceil((1 - alpha) B)`.
pub fn upper_quantile(values: &mut [f64], alpha: f64) -> f64 {
    assert!(!values.is_empty());
    values.sort_by(f64::total_cmp);
    let b = values.len();
    let rank = ((1.0 - alpha) * b as f64 - 1e-9).ceil().clamp(1.0, b as f64) as usize;
    values[rank - 1]
}

/// `num / den`, with `0 / 0` read as zero.
fn ratio(num: f64, den: f64, index: usize) -> Result<f64> {
    if den > 0.0 {
        Ok(num / den)
    } else if num == 0.0 {
        Ok(0.0)
    } else {
        Err(ScbError::DegenerateVariance { index })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootsTOutcome {
    pub quantile: f64,
    /// Resamples redrawn because their standard deviation vanished somewhere.
    pub rejected: usize,
}

fn resample_stats<R: Rng>(values: &[f64], n: usize, p: usize, rng: &mut R) -> (Vec<f64>, Vec<f64>) {
    let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
    let mut mean = vec![0.0; p];
    for &i in &idx {
        for (m, v) in mean.iter_mut().zip(&values[i * p..(i + 1) * p]) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let picked: Vec<f64> = idx.iter().flat_map(|&i| values[i * p..(i + 1) * p].iter().copied()).collect();
    let sd = column_sd(&picked, n, &mean);
    (mean, sd)
}

/// Non-parametric bootstrap-t. With `studentized = false` the original
/// sample's standard deviation replaces the resampled one.
pub fn boots_t_quantile(sample: &FunctionalSample, cfg: &BootstrapConfig) -> Result<BootsTOutcome> {
    cfg.validate()?;
    let (n, p) = (sample.n_curves(), sample.n_points());
    if n < 2 {
        return Err(ScbError::TooFewCurves { needed: 2, got: n });
    }
    let values = sample.values();
    let mean = column_mean(values, n, p);
    let sd = pointwise_sd(sample)?;
    if !cfg.studentized {
        if let Some(index) = sd.iter().position(|&s| s <= 0.0) {
            return Err(ScbError::DegenerateVariance { index });
        }
    }
    let limit = cfg.rejection_limit();
    let root_n = (n as f64).sqrt();
    let reps = par_map(cfg.replicates, |b| -> Option<(f64, usize)> {
        let mut rng = substream(cfg.seed, b as u64);
        let mut rejected = 0;
        loop {
            let (m, s) = resample_stats(values, n, p, &mut rng);
            let den = if cfg.studentized { &s } else { &sd };
            if den.iter().any(|&v| v <= 0.0) {
                rejected += 1;
                if rejected > limit {
                    return None;
                }
                continue;
            }
            let t = (0..p)
                .map(|j| root_n * (m[j] - mean[j]).abs() / den[j])
                .fold(0.0, f64::max);
            return Some((t, rejected));
        }
    });
    collect_boots(reps, cfg)
}

fn collect_boots(reps: Vec<Option<(f64, usize)>>, cfg: &BootstrapConfig) -> Result<BootsTOutcome> {
    let limit = cfg.rejection_limit();
    let mut stats = Vec::with_capacity(reps.len());
    let mut rejected = 0;
    for r in reps {
        match r {
            Some((t, k)) => {
                stats.push(t);
                rejected += k;
            }
            None => rejected += limit + 1,
        }
    }
    if rejected > limit {
        return Err(ScbError::TooManyDegenerateResamples {
            rejected,
            replicates: cfg.replicates,
        });
    }
    Ok(BootsTOutcome { quantile: upper_quantile(&mut stats, cfg.alpha), rejected })
}

/// Multiplier-t bootstrap on residuals `sqrt(N / (N-1)) (Y_n - mean)`.
/// The bootstrap standard deviation is the pointwise sd of the multiplied
/// residuals `g_n R_n`; `studentized = false` uses the original sd instead.
pub fn mult_t_quantile(
    sample: &FunctionalSample,
    law: MultiplierLaw,
    cfg: &BootstrapConfig,
) -> Result<f64> {
    cfg.validate()?;
    let (n, p) = (sample.n_curves(), sample.n_points());
    if n < 2 {
        return Err(ScbError::TooFewCurves { needed: 2, got: n });
    }
    let resid = scaled_residuals(sample.values(), n, p);
    let sd = pointwise_sd(sample)?;
    let root_n = (n as f64).sqrt();
    let reps = par_map(cfg.replicates, |b| -> Result<f64> {
        let mut rng = substream(cfg.seed, b as u64);
        let g: Vec<f64> = (0..n).map(|_| law.draw(&mut rng)).collect();
        let (sum, star_sd) = multiplied_stats(&resid, &g, p);
        let den = if cfg.studentized { &star_sd } else { &sd };
        let mut t = 0.0f64;
        for j in 0..p {
            t = t.max(ratio((sum[j] / root_n).abs(), den[j], j)?);
        }
        Ok(t)
    });
    let mut stats = reps.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(upper_quantile(&mut stats, cfg.alpha))
}

fn scaled_residuals(values: &[f64], n: usize, p: usize) -> Vec<f64> {
    let mean = column_mean(values, n, p);
    let f = (n as f64 / (n as f64 - 1.0)).sqrt();
    values
        .chunks_exact(p)
        .flat_map(|row| row.iter().zip(&mean).map(move |(v, m)| f * (v - m)))
        .collect()
}

/// Column sums and sds (divisor `N - 1`) of `g_n R_n`.
fn multiplied_stats(resid: &[f64], g: &[f64], p: usize) -> (Vec<f64>, Vec<f64>) {
    let n = g.len();
    let mut sum = vec![0.0; p];
    let mut sq = vec![0.0; p];
    for (row, &gn) in resid.chunks_exact(p).zip(g) {
        for j in 0..p {
            let v = gn * row[j];
            sum[j] += v;
            sq[j] += v * v;
        }
    }
    let sd = sum
        .iter()
        .zip(&sq)
        .map(|(&s, &q)| ((q - s * s / n as f64).max(0.0) / (n as f64 - 1.0)).sqrt())
        .collect();
    (sum, sd)
}

fn check_pair(y: &FunctionalSample, x: &FunctionalSample) -> Result<()> {
    if y.grid() != x.grid() {
        return Err(ScbError::GridMismatch);
    }
    for s in [y, x] {
        if s.n_curves() < 2 {
            return Err(ScbError::TooFewCurves { needed: 2, got: s.n_curves() });
        }
    }
    Ok(())
}

/// Bootstrap-t for the difference of means; each sample is resampled on its
/// own and the statistic is scaled by `sqrt(N + M - 2)` over the pooled sd.
pub fn boots_t_quantile_two_sample(
    y: &FunctionalSample,
    x: &FunctionalSample,
    cfg: &BootstrapConfig,
) -> Result<BootsTOutcome> {
    cfg.validate()?;
    check_pair(y, x)?;
    let (n, m, p) = (y.n_curves(), x.n_curves(), y.n_points());
    let c = n as f64 / m as f64;
    let (my, mx) = (column_mean(y.values(), n, p), column_mean(x.values(), m, p));
    let scale = pooled_scale(&column_sd(y.values(), n, &my), &column_sd(x.values(), m, &mx), c);
    let scale = match (scale, cfg.studentized) {
        (Ok(s), _) => s,
        (Err(_), true) => vec![0.0; p],
        (Err(e), false) => return Err(e),
    };
    let limit = cfg.rejection_limit();
    let root = ((n + m - 2) as f64).sqrt();
    let reps = par_map(cfg.replicates, |b| -> Option<(f64, usize)> {
        let mut rng = substream(cfg.seed, b as u64);
        let mut rejected = 0;
        loop {
            let (ay, sy) = resample_stats(y.values(), n, p, &mut rng);
            let (ax, sx) = resample_stats(x.values(), m, p, &mut rng);
            let star = if cfg.studentized {
                match pooled_scale(&sy, &sx, c) {
                    Ok(s) => s,
                    Err(_) => {
                        rejected += 1;
                        if rejected > limit {
                            return None;
                        }
                        continue;
                    }
                }
            } else {
                scale.clone()
            };
            let t = (0..p)
                .map(|j| root * ((ay[j] - ax[j]) - (my[j] - mx[j])).abs() / star[j])
                .fold(0.0, f64::max);
            return Some((t, rejected));
        }
    });
    collect_boots(reps, cfg)
}

/// Multiplier-t for the difference of means, with independent multipliers
/// for the two samples.
pub fn mult_t_quantile_two_sample(
    y: &FunctionalSample,
    x: &FunctionalSample,
    law: MultiplierLaw,
    cfg: &BootstrapConfig,
) -> Result<f64> {
    cfg.validate()?;
    check_pair(y, x)?;
    let (n, m, p) = (y.n_curves(), x.n_curves(), y.n_points());
    let c = n as f64 / m as f64;
    let (ry, rx) = (scaled_residuals(y.values(), n, p), scaled_residuals(x.values(), m, p));
    let (my, mx) = (column_mean(y.values(), n, p), column_mean(x.values(), m, p));
    let (sy, sx) = (column_sd(y.values(), n, &my), column_sd(x.values(), m, &mx));
    let scale: Vec<f64> = sy
        .iter()
        .zip(&sx)
        .map(|(a, b)| ((1.0 + 1.0 / c) * a * a + (1.0 + c) * b * b).sqrt())
        .collect();
    let root = ((n + m - 2) as f64).sqrt();
    let reps = par_map(cfg.replicates, |b| -> Result<f64> {
        let mut rng = substream(cfg.seed, b as u64);
        let gy: Vec<f64> = (0..n).map(|_| law.draw(&mut rng)).collect();
        let gx: Vec<f64> = (0..m).map(|_| law.draw(&mut rng)).collect();
        let (sum_y, sd_y) = multiplied_stats(&ry, &gy, p);
        let (sum_x, sd_x) = multiplied_stats(&rx, &gx, p);
        let mut t = 0.0f64;
        for j in 0..p {
            let diff = sum_y[j] / n as f64 - sum_x[j] / m as f64;
            let den = if cfg.studentized {
                ((1.0 + 1.0 / c) * sd_y[j] * sd_y[j] + (1.0 + c) * sd_x[j] * sd_x[j]).sqrt()
            } else {
                scale[j]
            };
            t = t.max(ratio(root * diff.abs(), den, j)?);
        }
        Ok(t)
    });
    let mut stats = reps.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(upper_quantile(&mut stats, cfg.alpha))
}

/// Upper `(1 - alpha)` quantile of `max_i |G_i|` for a mean-zero Gaussian
/// vector with the given `p x p` correlation matrix (row-major), from `draws`
/// simulated vectors. Negative eigenvalues are floored at zero.
pub fn gauss_sim_quantile(corr: &[f64], p: usize, alpha: f64, draws: usize, seed: u64) -> Result<f64> {
    if p == 0 || corr.len() != p * p {
        return Err(ScbError::InvalidCovariance(format!(
            "expected {p} x {p} entries, got {}",
            corr.len()
        )));
    }
    if draws == 0 || !(alpha > 0.0 && alpha < 1.0) {
        return Err(ScbError::InvalidArgument("need draws > 0 and alpha in (0, 1)".into()));
    }
    let scale = corr.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    for i in 0..p {
        if (corr[i * p + i] - 1.0).abs() > 1e-8 {
            return Err(ScbError::InvalidCovariance(format!("diagonal entry {i} is not 1")));
        }
        for j in (i + 1)..p {
            if (corr[i * p + j] - corr[j * p + i]).abs() > 1e-10 * scale.max(1.0) {
                return Err(ScbError::InvalidCovariance(format!(
                    "entries ({i}, {j}) and ({j}, {i}) differ"
                )));
            }
        }
    }
    let eig = SymmetricEigen::new(DMatrix::from_row_slice(p, p, corr));
    let top = eig.eigenvalues.iter().fold(0.0f64, |a, &v| a.max(v));
    let keep: Vec<usize> = (0..p).filter(|&k| eig.eigenvalues[k] > 1e-12 * top).collect();
    let r = keep.len();
    // factor F (p x r), row-major, with F F^T = corr restricted to its positive part
    let mut factor = vec![0.0; p * r];
    for (col, &k) in keep.iter().enumerate() {
        let root = eig.eigenvalues[k].sqrt();
        for i in 0..p {
            factor[i * r + col] = eig.eigenvectors[(i, k)] * root;
        }
    }
    let maxima = par_map(draws, |d| {
        let mut rng = substream(seed, d as u64);
        let z: Vec<f64> = (0..r).map(|_| rng.sample(StandardNormal)).collect();
        factor
            .chunks_exact(r.max(1))
            .take(p)
            .map(|row| row.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>().abs())
            .fold(0.0, f64::max)
    });
    let mut maxima = maxima;
    Ok(upper_quantile(&mut maxima, alpha))
}
