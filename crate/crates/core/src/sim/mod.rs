//! Synthetic models and Monte-Carlo experiment drivers.

pub mod experiment;
pub mod model;

pub use experiment::{
    run_coverage, run_width, true_quantile, CoverageCell, CoverageReport, Experiment,
    ExperimentConfig, Smoothing, WidthReport, WidthRow,
};
pub use model::{add_observation_noise, gen_model, CoefficientLaw, Design, Model, ModelKind, ModelSpec};
