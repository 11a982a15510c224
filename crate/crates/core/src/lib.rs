//! Simultaneous confidence bands for the mean of functional data.
//!
//! The main entry points are [`band::scb_one_sample`] and
//! [`band::scb_two_sample`]. They estimate the mean and standard deviation
//! curves, pick a band quantile by one of several methods (the Gaussian
//! kinematic formula with estimated Lipschitz-Killing curvatures, or a
//! bootstrap), and return a [`band::ScBand`]. The [`sim`] module generates
//! the benchmark models and runs coverage and width experiments.

// Negated comparisons below are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod band;
pub mod bootstrap;
pub mod error;
pub mod gkf;
pub mod grid;
pub mod io;
pub mod lkc;
pub mod rng;
pub mod sample;
pub mod scale_space;
pub mod sim;

pub use band::{scb_one_sample, scb_scale_space, scb_two_sample, QuantileMethod, ScBand};
pub use error::{Result, ScbError};
pub use gkf::{ec_density, eec, tgkf_quantile, EcDensityModel, LkcVector};
pub use grid::{Grid, Grid1D, Grid2D};
pub use sample::FunctionalSample;
