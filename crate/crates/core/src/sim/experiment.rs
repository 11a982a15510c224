//! Coverage and width experiments.
//!
//! Replication `r` at sample size `N` draws its data from a fixed substream,
//! so every method sees the same samples (common random numbers) and the
//! report depends only on the configuration and its seed.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::band::{covers, scb_one_sample, scb_two_sample, QuantileMethod, ScBand};
use crate::bootstrap::upper_quantile;
use crate::error::{Result, ScbError};
use crate::grid::{linspace, Grid1D};
use crate::rng::{derive_seed, par_map, substream};
use crate::sample::{column_mean, column_sd, FunctionalSample};
use crate::scale_space::{GaussianKernel, ScaleGrid, ScaleSmoother};
use crate::sim::model::{add_observation_noise, Model, ModelSpec};

const TAG_SAMPLE_Y: u64 = 1;
const TAG_SAMPLE_X: u64 = 2;
const TAG_METHOD: u64 = 3;
const TAG_TRUE: u64 = 4;

/// Kernel presmoothing of 1-D curves before the band is built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Smoothing {
    /// One bandwidth, output on `points` equidistant locations in `[0, 1]`.
    Bandwidth {
        h: f64,
        #[serde(default = "default_points")]
        points: usize,
        #[serde(default = "yes")]
        normalize: bool,
    },
    /// Scale space over `n_h` equidistant bandwidths in `[h_min, h_max]`.
    ScaleSpace {
        h_min: f64,
        h_max: f64,
        n_h: usize,
        #[serde(default = "default_points")]
        points: usize,
        #[serde(default = "yes")]
        normalize: bool,
    },
}

fn default_points() -> usize {
    400
}

fn yes() -> bool {
    true
}

fn default_alpha() -> f64 {
    0.05
}

fn default_true_reps() -> usize {
    10_000
}

fn default_ratio() -> f64 {
    1.0
}

impl Smoothing {
    fn smoother(&self, raw: &Grid1D) -> Result<ScaleSmoother> {
        let (hs, points, normalize) = match *self {
            Smoothing::Bandwidth { h, points, normalize } => (vec![h], points, normalize),
            Smoothing::ScaleSpace { h_min, h_max, n_h, points, normalize } => {
                (linspace(h_min, h_max, n_h), points, normalize)
            }
        };
        let sg = ScaleGrid::new(Grid1D::uniform(0.0, 1.0, points)?, hs)?;
        ScaleSmoother::new(raw, &GaussianKernel, &sg, normalize)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    /// Second population; when present the band is for the difference of
    /// the two means.
    #[serde(default)]
    pub second_model: Option<ModelSpec>,
    pub sample_sizes: Vec<usize>,
    /// `M / N` for two-sample experiments.
    #[serde(default = "default_ratio")]
    pub ratio: f64,
    pub methods: Vec<QuantileMethod>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    pub replications: usize,
    /// Overrides the replicate count of every resampling method.
    #[serde(default)]
    pub bootstrap_replicates: Option<usize>,
    #[serde(default)]
    pub noise_sd: f64,
    #[serde(default)]
    pub smoothing: Option<Smoothing>,
    /// Monte-Carlo size of the "true" quantile row of width reports.
    #[serde(default = "default_true_reps")]
    pub true_replications: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(model: ModelSpec, sample_sizes: Vec<usize>, methods: Vec<QuantileMethod>, replications: usize) -> Self {
        Self {
            model,
            second_model: None,
            sample_sizes,
            ratio: 1.0,
            methods,
            alpha: 0.05,
            replications,
            bootstrap_replicates: None,
            noise_sd: 0.0,
            smoothing: None,
            true_replications: default_true_reps(),
            seed: 0,
            output: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(ScbError::InvalidArgument("replications must be >= 1".into()));
        }
        if self.sample_sizes.is_empty() {
            return Err(ScbError::InvalidArgument("no sample sizes given".into()));
        }
        if !(self.ratio > 0.0) || !self.ratio.is_finite() {
            return Err(ScbError::InvalidArgument("ratio must be positive".into()));
        }
        if !(self.noise_sd >= 0.0) {
            return Err(ScbError::InvalidArgument("noise_sd must be >= 0".into()));
        }
        Ok(())
    }

    fn methods(&self) -> Vec<QuantileMethod> {
        self.methods
            .iter()
            .map(|m| match (self.bootstrap_replicates, m) {
                (Some(b), QuantileMethod::BootsT { .. } | QuantileMethod::MultT { .. }) => {
                    m.with_replicates(b)
                }
                _ => *m,
            })
            .collect()
    }

    fn second_size(&self, n: usize) -> usize {
        ((n as f64 * self.ratio).round() as usize).max(2)
    }
}

/// Models, smoothing map and target curve of an experiment.
pub struct Experiment {
    cfg: ExperimentConfig,
    y: Model,
    x: Option<Model>,
    smoother: Option<ScaleSmoother>,
    truth: Vec<f64>,
}

impl Experiment {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let y = Model::new(&cfg.model)?;
        let x = cfg.second_model.as_ref().map(Model::new).transpose()?;
        if let Some(x) = &x {
            if x.grid() != y.grid() {
                return Err(ScbError::GridMismatch);
            }
        }
        let smoother = match &cfg.smoothing {
            None => None,
            Some(s) => {
                let raw = y.grid().as_1d().ok_or_else(|| {
                    ScbError::InvalidArgument("smoothing needs a 1-D model".into())
                })?;
                Some(s.smoother(raw)?)
            }
        };
        let raw_truth: Vec<f64> = match &x {
            Some(x) => y.mean().iter().zip(x.mean()).map(|(a, b)| a - b).collect(),
            None => y.mean().to_vec(),
        };
        let truth = match &smoother {
            Some(s) => s.smooth_curve(&raw_truth)?,
            None => raw_truth,
        };
        Ok(Self { cfg: cfg.clone(), y, x, smoother, truth })
    }

    /// Target of the band: the (smoothed) mean or difference of means.
    pub fn truth(&self) -> &[f64] {
        &self.truth
    }

    fn prepare(&self, model: &Model, n: usize, tag: u64, rep: usize) -> Result<FunctionalSample> {
        let mut rng = substream(derive_seed(derive_seed(self.cfg.seed, tag), n as u64), rep as u64);
        let raw = model.generate(n, &mut rng)?;
        let raw = add_observation_noise(&raw, self.cfg.noise_sd, &mut rng)?;
        match &self.smoother {
            Some(s) => s.smooth(&raw),
            None => Ok(raw),
        }
    }

    /// Data of replication `rep` at sample size `n`.
    pub fn draw(&self, n: usize, rep: usize) -> Result<(FunctionalSample, Option<FunctionalSample>)> {
        let y = self.prepare(&self.y, n, TAG_SAMPLE_Y, rep)?;
        let x = match &self.x {
            Some(m) => Some(self.prepare(m, self.cfg.second_size(n), TAG_SAMPLE_X, rep)?),
            None => None,
        };
        Ok((y, x))
    }

    fn band(
        &self,
        data: &(FunctionalSample, Option<FunctionalSample>),
        method: &QuantileMethod,
        n: usize,
        rep: usize,
    ) -> Result<ScBand> {
        let seed = derive_seed(derive_seed(derive_seed(self.cfg.seed, TAG_METHOD), n as u64), rep as u64);
        match &data.1 {
            Some(x) => scb_two_sample(&data.0, x, method, self.cfg.alpha, seed),
            None => scb_one_sample(&data.0, method, self.cfg.alpha, seed),
        }
    }

    /// Maximal standardized deviation of the estimate from the truth, the
    /// statistic whose quantile every band estimates.
    pub fn max_t(&self, data: &(FunctionalSample, Option<FunctionalSample>)) -> Result<f64> {
        let (y, x) = data;
        let (n, p) = (y.n_curves(), y.n_points());
        let my = column_mean(y.values(), n, p);
        let sy = column_sd(y.values(), n, &my);
        let (center, scale, root): (Vec<f64>, Vec<f64>, f64) = match x {
            None => (my, sy, (n as f64).sqrt()),
            Some(x) => {
                let m = x.n_curves();
                let c = n as f64 / m as f64;
                let mx = column_mean(x.values(), m, p);
                let sx = column_sd(x.values(), m, &mx);
                let center = my.iter().zip(&mx).map(|(a, b)| a - b).collect();
                let scale = sy
                    .iter()
                    .zip(&sx)
                    .map(|(a, b)| ((1.0 + 1.0 / c) * a * a + (1.0 + c) * b * b).sqrt())
                    .collect();
                (center, scale, ((n + m - 2) as f64).sqrt())
            }
        };
        let mut t = 0.0f64;
        for j in 0..p {
            if !(scale[j] > 0.0) {
                return Err(ScbError::DegenerateVariance { index: j });
            }
            t = t.max(root * (center[j] - self.truth[j]).abs() / scale[j]);
        }
        Ok(t)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageCell {
    pub n: usize,
    pub m: Option<usize>,
    pub method: String,
    pub replications: usize,
    pub hits: usize,
    pub failures: usize,
    /// Hit rate over the replications that produced a band.
    pub coverage: Option<f64>,
    /// Binomial standard error of `coverage`.
    pub se: Option<f64>,
    pub first_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub config: ExperimentConfig,
    pub cells: Vec<CoverageCell>,
}

fn describe(e: &ScbError) -> String {
    format!("{}: {e}", e.kind())
}

pub fn run_coverage(cfg: &ExperimentConfig) -> Result<CoverageReport> {
    let exp = Experiment::new(cfg)?;
    let methods = cfg.methods();
    let mut cells = Vec::new();
    for &n in &cfg.sample_sizes {
        // outcome[rep][method]: Ok(hit) or the error
        let outcomes = par_map(cfg.replications, |rep| -> Vec<std::result::Result<bool, String>> {
            match exp.draw(n, rep) {
                Err(e) => vec![Err(describe(&e)); methods.len()],
                Ok(data) => methods
                    .iter()
                    .map(|m| {
                        exp.band(&data, m, n, rep)
                            .and_then(|b| covers(&b, exp.truth()))
                            .map_err(|e| describe(&e))
                    })
                    .collect(),
            }
        });
        for (k, m) in methods.iter().enumerate() {
            let mut hits = 0;
            let mut failures = 0;
            let mut first_error = None;
            for o in &outcomes {
                match &o[k] {
                    Ok(true) => hits += 1,
                    Ok(false) => {}
                    Err(e) => {
                        failures += 1;
                        first_error.get_or_insert_with(|| e.clone());
                    }
                }
            }
            let done = cfg.replications - failures;
            let (coverage, se) = if done > 0 {
                let p = hits as f64 / done as f64;
                (Some(p), Some((p * (1.0 - p) / done as f64).sqrt()))
            } else {
                (None, None)
            };
            cells.push(CoverageCell {
                n,
                m: cfg.second_model.as_ref().map(|_| cfg.second_size(n)),
                method: m.label(),
                replications: cfg.replications,
                hits,
                failures,
                coverage,
                se,
                first_error,
            });
        }
    }
    Ok(CoverageReport { config: cfg.clone(), cells })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WidthRow {
    pub method: String,
    pub n: usize,
    pub replications: usize,
    pub failures: usize,
    /// Mean of the quantile estimates; for the `true` row the Monte-Carlo
    /// quantile itself.
    pub mean: Option<f64>,
    /// Twice the standard error of `mean` (absent for the `true` row).
    pub two_se: Option<f64>,
    pub first_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WidthReport {
    pub config: ExperimentConfig,
    pub rows: Vec<WidthRow>,
}

/// Monte-Carlo `(1 - alpha)` quantile of the maximal standardized deviation
/// at sample size `n`, from `cfg.true_replications` fresh samples.
pub fn true_quantile(exp: &Experiment, n: usize) -> Result<f64> {
    let cfg = &exp.cfg;
    if cfg.true_replications == 0 {
        return Err(ScbError::InvalidArgument("true_replications must be >= 1".into()));
    }
    let stats = par_map(cfg.true_replications, |rep| -> Result<f64> {
        // a stream family disjoint from the coverage replications
        let rep = rep as u64 | (TAG_TRUE << 56);
        exp.draw(n, rep as usize).and_then(|d| exp.max_t(&d))
    });
    let mut stats = stats.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(upper_quantile(&mut stats, cfg.alpha))
}

pub fn run_width(cfg: &ExperimentConfig) -> Result<WidthReport> {
    let exp = Experiment::new(cfg)?;
    let methods = cfg.methods();
    let mut rows = Vec::new();
    for m in &methods {
        for &n in &cfg.sample_sizes {
            let qs = par_map(cfg.replications, |rep| {
                exp.draw(n, rep).and_then(|d| exp.band(&d, m, n, rep)).map(|b| b.quantile)
            });
            let mut ok = Vec::with_capacity(qs.len());
            let mut first_error = None;
            for q in qs {
                match q {
                    Ok(v) => ok.push(v),
                    Err(e) => {
                        first_error.get_or_insert_with(|| describe(&e));
                    }
                }
            }
            let (mean, two_se) = mean_and_two_se(&ok);
            rows.push(WidthRow {
                method: m.label(),
                n,
                replications: cfg.replications,
                failures: cfg.replications - ok.len(),
                mean,
                two_se,
                first_error,
            });
        }
    }
    for &n in &cfg.sample_sizes {
        let (mean, failures, first_error) = match true_quantile(&exp, n) {
            Ok(q) => (Some(q), 0, None),
            Err(e) => (None, cfg.true_replications, Some(describe(&e))),
        };
        rows.push(WidthRow {
            method: "true".into(),
            n,
            replications: cfg.true_replications,
            failures,
            mean,
            two_se: None,
            first_error,
        });
    }
    Ok(WidthReport { config: cfg.clone(), rows })
}

fn mean_and_two_se(v: &[f64]) -> (Option<f64>, Option<f64>) {
    match v.len() {
        0 => (None, None),
        1 => (Some(v[0]), None),
        k => {
            let mean = v.iter().sum::<f64>() / k as f64;
            let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k as f64 - 1.0);
            (Some(mean), Some(2.0 * (var / k as f64).sqrt()))
        }
    }
}
