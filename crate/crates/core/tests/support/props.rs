//! Property and example checks for every module, runnable as ordinary tests
//! and as one timed batch. Every check is deterministic: proptest runs from a
//! fixed seed and all Monte-Carlo parts use fixed substreams.

use std::f64::consts::PI;

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

use scb_core::band::{covers, scb_one_sample, scb_scale_space, scb_two_sample, QuantileMethod, ScBand};
use scb_core::bootstrap::{
    boots_t_quantile, gauss_sim_quantile, mult_t_quantile, BootstrapConfig, MultiplierLaw,
};
use scb_core::gkf::{ec_density, eec, tgkf_quantile, EcDensityModel, LkcVector};
use scb_core::grid::{linspace, midpoints, Grid, Grid1D, Grid2D};
use scb_core::io::{read_sample_from, write_sample_to};
use scb_core::lkc::{
    estimate_lkc, lambda_hat, lkc_1d, lkc_2d, lkc_two_sample, tau_sq_1d, two_sample_residuals, BoundaryParam, LambdaField,
};
use scb_core::rng::substream;
use scb_core::sample::{gradient, normed_residuals, pointwise_mean, pointwise_sd};
use scb_core::scale_space::{scale_mean, smooth_sample, GaussianKernel, Kernel, ScaleGrid};
use scb_core::sim::model::{bernstein_basis, mean_1d, mean_2d};
use scb_core::sim::{
    add_observation_noise, run_coverage, true_quantile, CoefficientLaw, Experiment,
    ExperimentConfig, Model, ModelKind, ModelSpec,
};
use scb_core::{FunctionalSample, ScbError};

use super::{cosine_sample, median, sample_from_rows, t_density, upper_quantile_of};

pub type Check = fn() -> Result<(), String>;

/// Every check, by name.
pub const ALL: &[(&str, Check)] = &[
    ("fda_examples", fda_examples),
    ("normed_residuals_idempotent", normed_residuals_idempotent),
    ("mean_sd_permutation_invariant", mean_sd_permutation_invariant),
    ("affine_gradient_exact", affine_gradient_exact),
    ("gkf_examples", gkf_examples),
    ("quantile_on_decreasing_tail", quantile_on_decreasing_tail),
    ("quantile_monotone_in_alpha", quantile_monotone_in_alpha),
    ("t_quantile_approaches_gaussian", t_quantile_approaches_gaussian),
    ("eec_linear_in_lkc", eec_linear_in_lkc),
    ("lkc_examples", lkc_examples),
    ("lkc_scaling_and_reflection", lkc_scaling_and_reflection),
    ("lkc_consistency_medians", lkc_consistency_medians),
    ("lkc_2d_rectangle_exact", lkc_2d_rectangle_exact),
    ("bootstrap_examples", bootstrap_examples),
    ("bootstrap_monotone_in_alpha", bootstrap_monotone_in_alpha),
    ("rademacher_sign_symmetry", rademacher_sign_symmetry),
    ("quantile_methods_agree_for_large_n", quantile_methods_agree_for_large_n),
    ("scale_space_examples", scale_space_examples),
    ("scale_space_linear", scale_space_linear),
    ("scale_space_commutes_with_mean", scale_space_commutes_with_mean),
    ("scale_space_convex", scale_space_convex),
    ("band_examples", band_examples),
    ("location_equivariance", location_equivariance),
    ("scale_equivariance", scale_equivariance),
    ("width_monotone_in_quantile", width_monotone_in_quantile),
    ("quantile_decreasing_in_n", quantile_decreasing_in_n),
    ("sim_examples", sim_examples),
    ("io_round_trip", io_round_trip),
    ("deterministic_across_thread_counts", deterministic_across_thread_counts),
    ("generated_mean_converges", generated_mean_converges),
    ("true_row_approaches_gaussian_gkf", true_row_approaches_gaussian_gkf),
];

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        match $cond {
            true => {}
            false => return Err(format!($($fmt)+)),
        }
    };
}

fn runner(cases: u32) -> TestRunner {
    let cfg = Config { cases, failure_persistence: None, ..Config::default() };
    TestRunner::new_with_rng(cfg, TestRng::from_seed(RngAlgorithm::ChaCha, &[7; 32]))
}

fn run<S: Strategy>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    runner(cases).run(&strategy, test).map_err(|e| e.to_string())
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

/// Random `n x p` samples on a uniform grid of `[0, 1]`.
fn samples(n: std::ops::RangeInclusive<usize>, p: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = FunctionalSample> {
    (n, p).prop_flat_map(|(n, p)| {
        prop::collection::vec(-10.0f64..10.0, n * p).prop_map(move |v| {
            FunctionalSample::from_flat(n, v, Grid1D::uniform(0.0, 1.0, p).unwrap()).unwrap()
        })
    })
}

fn smooth_samples(n: std::ops::RangeInclusive<usize>, p: usize) -> impl Strategy<Value = FunctionalSample> {
    // random trigonometric curves, smooth enough for gradients to mean something
    n.prop_flat_map(move |n| {
        prop::collection::vec(-2.0f64..2.0, n * 4).prop_map(move |c| {
            let s = linspace(0.0, 1.0, p);
            let rows: Vec<Vec<f64>> = c
                .chunks(4)
                .map(|k| {
                    s.iter()
                        .map(|&t| k[0] * (3.0 * t).sin() + k[1] * (5.0 * t).cos() + k[2] * t + k[3])
                        .collect()
                })
                .collect();
            FunctionalSample::from_rows(&rows, Grid1D::new(s).unwrap()).unwrap()
        })
    })
}

fn map_rows(s: &FunctionalSample, f: impl Fn(usize, f64) -> f64) -> FunctionalSample {
    let p = s.n_points();
    let v = s.values().iter().enumerate().map(|(k, &x)| f(k % p, x)).collect();
    FunctionalSample::from_flat(s.n_curves(), v, s.grid().clone()).unwrap()
}

// ---------------------------------------------------------------- fda-core

pub fn fda_examples() -> Result<(), String> {
    let one = Grid1D::new(vec![0.0]).unwrap();
    let two = Grid1D::new(vec![0.0, 1.0]).unwrap();
    let three = Grid1D::new(vec![0.0, 0.5, 1.0]).unwrap();
    let s = FunctionalSample::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]], two).unwrap();
    ensure!(pointwise_mean(&s).unwrap() == vec![2.0, 3.0], "mean of 2x2");
    let s = FunctionalSample::from_rows(&[vec![5.0; 3]], three.clone()).unwrap();
    ensure!(pointwise_mean(&s).unwrap() == vec![5.0; 3], "single-row mean");
    let s = FunctionalSample::from_rows(&[vec![0.0], vec![2.0]], one.clone()).unwrap();
    ensure!(close(pointwise_sd(&s).unwrap()[0], 2f64.sqrt(), 1e-15), "sd of [0, 2]");
    let r = normed_residuals(&s).unwrap();
    let h = 0.5f64.sqrt();
    ensure!(close(r.values()[0], -h, 1e-15) && close(r.values()[1], h, 1e-15), "residuals of [0, 2]");
    let same = FunctionalSample::from_rows(&vec![vec![1.5, -2.0, 3.0]; 4], three.clone()).unwrap();
    ensure!(pointwise_sd(&same).unwrap().iter().all(|&v| v == 0.0), "identical rows have sd 0");
    ensure!(
        matches!(normed_residuals(&same), Err(ScbError::DegenerateVariance { .. })),
        "identical rows must be degenerate"
    );
    let x = linspace(0.0, 1.0, 11);
    let lin = FunctionalSample::from_rows(std::slice::from_ref(&x), Grid1D::new(x.clone()).unwrap()).unwrap();
    let g = gradient(&lin).unwrap();
    ensure!(g.component(0).iter().all(|d| (d - 1.0).abs() < 1e-12), "gradient of s");
    let g2 = Grid2D::new(linspace(0.0, 1.0, 4), linspace(0.0, 2.0, 5)).unwrap();
    let c = FunctionalSample::from_flat(2, vec![3.0; 40], g2).unwrap();
    let g = gradient(&c).unwrap();
    ensure!(
        g.component(0).iter().chain(g.component(1)).all(|&d| d.abs() < 1e-12),
        "constant surface has zero gradient"
    );
    ensure!(pointwise_mean(&FunctionalSample::from_flat(0, vec![], one).unwrap()).is_err(), "empty mean");
    Ok(())
}

pub fn normed_residuals_idempotent() -> Result<(), String> {
    run(64, samples(3..=12, 1..=15), |s| {
        let r = normed_residuals(&s).unwrap();
        let rr = normed_residuals(&r).unwrap();
        for (a, b) in r.values().iter().zip(rr.values()) {
            prop_assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
        Ok(())
    })
}

pub fn mean_sd_permutation_invariant() -> Result<(), String> {
    run(64, (samples(2..=10, 1..=8), any::<u64>()), |(s, seed)| {
        let n = s.n_curves();
        let mut order: Vec<usize> = (0..n).collect();
        let mut rng = substream(seed, 0);
        for i in (1..n).rev() {
            order.swap(i, rand::Rng::random_range(&mut rng, 0..=i));
        }
        let rows: Vec<Vec<f64>> = order.iter().map(|&i| s.row(i).to_vec()).collect();
        let t = FunctionalSample::from_rows(&rows, s.grid().clone()).unwrap();
        let (m1, m2) = (pointwise_mean(&s).unwrap(), pointwise_mean(&t).unwrap());
        let (s1, s2) = (pointwise_sd(&s).unwrap(), pointwise_sd(&t).unwrap());
        for j in 0..s.n_points() {
            prop_assert!(close(m1[j], m2[j], 1e-13));
            prop_assert!(close(s1[j], s2[j], 1e-12));
        }
        Ok(())
    })
}

pub fn affine_gradient_exact() -> Result<(), String> {
    let strat = (-5.0f64..5.0, -5.0f64..5.0, -5.0f64..5.0, 3usize..30, 3usize..12, 0.1f64..4.0);
    run(64, strat, |(a, b, c, nx, ny, w)| {
        let x = linspace(0.0, w, nx);
        let one = FunctionalSample::from_rows(
            &[x.iter().map(|s| a + b * s).collect()],
            Grid1D::new(x.clone()).unwrap(),
        )
        .unwrap();
        for d in gradient(&one).unwrap().component(0) {
            prop_assert!((d - b).abs() < 1e-11 * (1.0 + b.abs()) / w.min(1.0));
        }
        let y = linspace(-1.0, 1.0, ny);
        let vals: Vec<f64> = x.iter().flat_map(|&s| y.iter().map(move |&t| a + b * s + c * t)).collect();
        let two = FunctionalSample::from_flat(1, vals, Grid2D::new(x, y).unwrap()).unwrap();
        let g = gradient(&two).unwrap();
        for (dx, dy) in g.component(0).iter().zip(g.component(1)) {
            prop_assert!((dx - b).abs() < 1e-10 && (dy - c).abs() < 1e-10, "{dx} {dy}");
        }
        Ok(())
    })
}

// --------------------------------------------------------- gauss-kinematic

fn lkc1(l: f64) -> LkcVector {
    LkcVector::new(1, vec![l]).unwrap()
}

pub fn gkf_examples() -> Result<(), String> {
    let g = EcDensityModel::Gaussian;
    ensure!(close(ec_density(g, 0, 0.0).unwrap(), 0.5, 1e-15), "rho0(0)");
    ensure!(ec_density(g, 2, 0.0).unwrap() == 0.0, "rho2(0)");
    for model in [g, EcDensityModel::student_t(4.0).unwrap()] {
        for u in [-2.0, 0.0, 1.3, 4.0] {
            ensure!(
                eec(&lkc1(0.0), model, u).unwrap() == ec_density(model, 0, u).unwrap(),
                "eec without curvature is the tail"
            );
        }
        let l = LkcVector::new(1, vec![3.0, 9.0]).unwrap();
        let (near, far) = (eec(&l, model, 10.0).unwrap(), eec(&l, model, 1e3).unwrap());
        ensure!(far >= 0.0 && far < 1e-3 * near, "far tail: {far} vs {near}");
    }
    for dof in [3u32, 7, 30] {
        let t = EcDensityModel::student_t(dof as f64).unwrap();
        let q = tgkf_quantile(&lkc1(0.0), t, 0.05).unwrap();
        let oracle = upper_quantile_of(&|x| t_density(x, dof), 0.025);
        ensure!((q - oracle).abs() < 1e-8, "t quantile, dof {dof}: {q} vs {oracle}");
    }
    Ok(())
}

fn gkf_inputs() -> impl Strategy<Value = (LkcVector, EcDensityModel, f64)> {
    (
        0.0f64..60.0,
        prop::option::of(0.0f64..300.0),
        prop::option::of(3.0f64..300.0),
        0.001f64..0.3,
    )
        .prop_map(|(l1, l2, dof, alpha)| {
            let l = match l2 {
                Some(v) => vec![l1, v],
                None => vec![l1],
            };
            let model = match dof {
                Some(d) => EcDensityModel::student_t(d).unwrap(),
                None => EcDensityModel::Gaussian,
            };
            (LkcVector::new(1, l).unwrap(), model, alpha)
        })
}

pub fn quantile_on_decreasing_tail() -> Result<(), String> {
    run(128, gkf_inputs(), |(l, m, alpha)| {
        let q = tgkf_quantile(&l, m, alpha).unwrap();
        prop_assert!((eec(&l, m, q).unwrap() - alpha / 2.0).abs() < 1e-7);
        let mut prev = eec(&l, m, q).unwrap();
        for k in 1..=50 {
            let v = eec(&l, m, q + 0.1 * k as f64).unwrap();
            prop_assert!(v < prev, "not decreasing after the root");
            prev = v;
        }
        Ok(())
    })
}

pub fn quantile_monotone_in_alpha() -> Result<(), String> {
    run(128, (gkf_inputs(), 0.0f64..1.0), |((l, m, alpha), f)| {
        let smaller = alpha * f.max(1e-3);
        let (q, qs) = (tgkf_quantile(&l, m, alpha).unwrap(), tgkf_quantile(&l, m, smaller).unwrap());
        prop_assert!(qs >= q - 1e-9, "{qs} < {q}");
        Ok(())
    })
}

pub fn t_quantile_approaches_gaussian() -> Result<(), String> {
    let gap = |l: &LkcVector, alpha: f64, dof: f64| {
        let qt = tgkf_quantile(l, EcDensityModel::student_t(dof).unwrap(), alpha).unwrap();
        let qg = tgkf_quantile(l, EcDensityModel::Gaussian, alpha).unwrap();
        (qt - qg).abs()
    };
    // the gap behaves like (u^3 + u) / (4 dof), just above 1e-3 at u = 3.3
    for l in [lkc1(0.0), lkc1(2.0 * PI)] {
        for alpha in [0.05, 0.1] {
            let g = gap(&l, alpha, 1e4);
            ensure!(g < 1e-3, "dof 1e4, alpha {alpha}: gap {g}");
        }
    }
    for l in [lkc1(0.0), lkc1(2.0 * PI), lkc1(10.6), LkcVector::new(1, vec![4.0, 30.0]).unwrap()] {
        for alpha in [0.01, 0.05, 0.1] {
            let (g4, g5) = (gap(&l, alpha, 1e4), gap(&l, alpha, 1e5));
            ensure!(g4 < 2e-3 && g5 < 2e-4 && g5 < g4, "alpha {alpha}: gaps {g4}, {g5}");
        }
    }
    Ok(())
}

pub fn eec_linear_in_lkc() -> Result<(), String> {
    run(128, (0.0f64..40.0, 0.0f64..40.0, -3.0f64..8.0, prop::option::of(2.0f64..80.0)), |(a, b, u, dof)| {
        let m = dof.map(|d| EcDensityModel::student_t(d).unwrap()).unwrap_or(EcDensityModel::Gaussian);
        let whole = eec(&lkc1(a + b), m, u).unwrap();
        let parts = eec(&lkc1(a), m, u).unwrap() + eec(&LkcVector::new(0, vec![b]).unwrap(), m, u).unwrap();
        prop_assert!((whole - parts).abs() < 1e-12 * (1.0 + whole.abs()));
        Ok(())
    })
}

// -------------------------------------------------------------- lkc-estim

pub fn lkc_examples() -> Result<(), String> {
    let x = linspace(0.0, 1.0, 9);
    let rows = vec![x.clone(), x.iter().map(|v| -v).collect(), vec![0.0; 9]];
    let s = sample_from_rows(&rows);
    let LambdaField::One(l) = lambda_hat(&s).unwrap() else { return Err("not 1-D".into()) };
    ensure!(l.iter().all(|v| (v - 1.0).abs() < 1e-12), "Lambda of +-s rows");
    let c = sample_from_rows(&[vec![1.0; 5], vec![-1.0; 5], vec![4.0; 5]]);
    let LambdaField::One(l) = lambda_hat(&c).unwrap() else { return Err("not 1-D".into()) };
    ensure!(l.iter().all(|v| v.abs() < 1e-20), "Lambda of constant rows");
    let g01 = Grid1D::uniform(0.0, 1.0, 17).unwrap();
    ensure!(close(lkc_1d(&LambdaField::One(vec![1.0; 17]), &g01).unwrap(), 1.0, 1e-14), "unit metric");
    let g02 = Grid1D::uniform(0.0, 2.0, 17).unwrap();
    ensure!(close(lkc_1d(&LambdaField::One(vec![4.0; 17]), &g02).unwrap(), 4.0, 1e-14), "scaled metric");
    let sq = Grid2D::new(linspace(0.0, 1.0, 7), linspace(0.0, 1.0, 9)).unwrap();
    let b = BoundaryParam::from_grid(&sq).unwrap();
    let (l1, l2) = lkc_2d(&LambdaField::Two(vec![[1.0, 0.0, 1.0]; sq.len()]), &sq, &b).unwrap();
    ensure!(close(l1, 2.0, 1e-13) && close(l2, 1.0, 1e-13), "identity on unit square");
    let (l1, l2) = lkc_2d(&LambdaField::Two(vec![[4.0, 0.0, 4.0]; sq.len()]), &sq, &b).unwrap();
    ensure!(close(l1, 4.0, 1e-13) && close(l2, 4.0, 1e-13), "4I on unit square");
    // two-sample: silent X part, and swapping the samples
    let mut rng = substream(5, 0);
    let y = cosine_sample(8, 40, &mut rng);
    let x = cosine_sample(13, 40, &mut rng);
    let zero = FunctionalSample::from_flat(5, vec![0.0; 200], y.grid().clone()).unwrap();
    let two = |a: &FunctionalSample, b: &FunctionalSample| {
        let (ra, rb) = two_sample_residuals(a, b).unwrap();
        lkc_two_sample(&ra, &rb).unwrap()
    };
    let silent = two(&y, &zero);
    let alone = estimate_lkc(&normed_residuals(&y).unwrap()).unwrap();
    ensure!(close(silent.l[0], alone.l[0], 1e-13), "silent X part");
    let (p, q) = (two(&y, &x), two(&x, &y));
    ensure!(close(p.l[0], q.l[0], 1e-13), "swap symmetry");
    // tau^2 for a constant gradient covariance lambda on [0, 3]
    let s3 = linspace(0.0, 3.0, 31);
    let coef = [0.3, -1.2, 2.0, 0.7];
    let rows: Vec<Vec<f64>> = coef.iter().map(|c| s3.iter().map(|t| c * t).collect()).collect();
    let g3 = Grid1D::new(s3).unwrap();
    let smp = FunctionalSample::from_rows(&rows, g3.clone()).unwrap();
    let lam = super::variance(&coef);
    ensure!(close(tau_sq_1d(&smp, &g3).unwrap(), lam / 2.0 * 9.0, 1e-12), "constant tau^2");
    ensure!(lambda_hat(&sample_from_rows(&[vec![0.0; 4], vec![1.0; 4]])).is_err(), "N < 3");
    Ok(())
}

pub fn lkc_scaling_and_reflection() -> Result<(), String> {
    run(48, (smooth_samples(3..=12, 30), 0.05f64..20.0), |(s, c)| {
        let r = normed_residuals(&s).unwrap();
        let base = estimate_lkc(&r).unwrap();
        let scaled = estimate_lkc(&map_rows(&r, |_, v| c * v)).unwrap();
        let neg = estimate_lkc(&map_rows(&r, |_, v| -v)).unwrap();
        prop_assert!(close(scaled.l[0], c * base.l[0], 1e-12));
        prop_assert!(neg.l[0] == base.l[0]);
        let (LambdaField::One(a), LambdaField::One(b)) =
            (lambda_hat(&r).unwrap(), lambda_hat(&map_rows(&r, |_, v| c * v)).unwrap())
        else {
            unreachable!()
        };
        for (x, y) in a.iter().zip(&b) {
            prop_assert!(close(*y, c * c * x, 1e-12));
        }
        Ok(())
    })?;
    // 2-D: L1 scales by c, L2 by c^2, reflection changes nothing
    let g = Grid2D::new(linspace(0.0, 1.0, 8), linspace(0.0, 1.0, 6)).unwrap();
    let m = Model::new(&ModelSpec::new(ModelKind::C, CoefficientLaw::Gaussian).with_resolution(12)).unwrap();
    let _ = g;
    let s = m.generate(9, &mut substream(3, 3)).unwrap();
    let r = normed_residuals(&s).unwrap();
    let base = estimate_lkc(&r).unwrap();
    let scaled = estimate_lkc(&map_rows(&r, |_, v| 2.5 * v)).unwrap();
    let neg = estimate_lkc(&map_rows(&r, |_, v| -v)).unwrap();
    ensure!(close(scaled.l[0], 2.5 * base.l[0], 1e-12), "2-D L1 scaling");
    ensure!(close(scaled.l[1], 6.25 * base.l[1], 1e-12), "2-D L2 scaling");
    ensure!(neg == base, "2-D reflection");
    Ok(())
}

pub fn lkc_consistency_medians() -> Result<(), String> {
    let mut medians = Vec::new();
    for (k, n) in [50usize, 200, 800].into_iter().enumerate() {
        let mut errs: Vec<f64> = (0..100)
            .map(|r| {
                let s = cosine_sample(n, 200, &mut substream(100 + k as u64, r));
                let l = estimate_lkc(&normed_residuals(&s).unwrap()).unwrap();
                (l.l[0] - 2.0 * PI).abs()
            })
            .collect();
        medians.push(median(&mut errs));
    }
    ensure!(
        medians[0] > medians[1] && medians[1] > medians[2],
        "medians of |L1 - 2 pi| at N = 50, 200, 800: {medians:?}"
    );
    Ok(())
}

pub fn lkc_2d_rectangle_exact() -> Result<(), String> {
    let axis = |len: f64| {
        prop::collection::vec(0.01f64..1.0, 2..10).prop_map(move |steps| {
            let total: f64 = steps.iter().sum();
            let mut pts = vec![0.0];
            for s in &steps {
                pts.push(pts.last().unwrap() + s / total * len);
            }
            pts
        })
    };
    let strat = (0.1f64..5.0, 0.1f64..5.0, 0.1f64..3.0)
        .prop_flat_map(move |(w, h, sigma)| (axis(w), axis(h), Just(w), Just(h), Just(sigma)));
    run(64, strat, |(x, y, w, h, sigma)| {
        let g = Grid2D::new(x, y).unwrap();
        let b = BoundaryParam::from_grid(&g).unwrap();
        let s2 = sigma * sigma;
        let (l1, l2) = lkc_2d(&LambdaField::Two(vec![[s2, 0.0, s2]; g.len()]), &g, &b).unwrap();
        prop_assert!((l1 - sigma * (w + h)).abs() < 1e-10);
        prop_assert!((l2 - s2 * w * h).abs() < 1e-10);
        Ok(())
    })
}

// -------------------------------------------------------------- bootstrap

fn bcfg(replicates: usize, alpha: f64, seed: u64) -> BootstrapConfig {
    BootstrapConfig { replicates, alpha, studentized: true, seed }
}

pub fn bootstrap_examples() -> Result<(), String> {
    let twins = sample_from_rows(&[vec![0.2, 0.4, 0.1], vec![0.2, 0.4, 0.1]]);
    ensure!(
        matches!(boots_t_quantile(&twins, &bcfg(500, 0.05, 1)), Err(ScbError::TooManyDegenerateResamples { .. })),
        "identical curves"
    );
    let mut rng = substream(8, 0);
    let s = cosine_sample(15, 20, &mut rng);
    let a = boots_t_quantile(&s, &bcfg(300, 0.05, 4)).unwrap().quantile;
    let b = boots_t_quantile(&s, &bcfg(300, 0.05, 4)).unwrap().quantile;
    ensure!(a.to_bits() == b.to_bits(), "boots-t determinism");
    let flat = sample_from_rows(&vec![vec![1.0, -1.0, 2.0]; 6]);
    for law in [MultiplierLaw::Gaussian, MultiplierLaw::Rademacher] {
        ensure!(mult_t_quantile(&flat, law, &bcfg(100, 0.05, 2)).unwrap() == 0.0, "zero residuals");
    }
    let ones = vec![1.0; 25];
    let full = gauss_sim_quantile(&ones, 5, 0.05, 5000, 6).unwrap();
    let single = gauss_sim_quantile(&[1.0], 1, 0.05, 5000, 6).unwrap();
    ensure!((full - single).abs() < 1e-10, "perfect correlation: {full} vs {single}");
    ensure!(gauss_sim_quantile(&[1.0, 0.2, 0.3, 1.0], 2, 0.05, 10, 1).is_err(), "asymmetric input");
    Ok(())
}

pub fn bootstrap_monotone_in_alpha() -> Result<(), String> {
    run(24, (smooth_samples(4..=15, 12), 0.01f64..0.3, 0.0f64..1.0, any::<u64>()), |(s, alpha, f, seed)| {
        let smaller = alpha * f.max(0.01);
        let b = boots_t_quantile(&s, &bcfg(200, alpha, seed)).unwrap().quantile;
        let bs = boots_t_quantile(&s, &bcfg(200, smaller, seed)).unwrap().quantile;
        prop_assert!(bs >= b);
        for law in [MultiplierLaw::Gaussian, MultiplierLaw::Rademacher] {
            let m = mult_t_quantile(&s, law, &bcfg(200, alpha, seed)).unwrap();
            let ms = mult_t_quantile(&s, law, &bcfg(200, smaller, seed)).unwrap();
            prop_assert!(ms >= m);
        }
        let corr: Vec<f64> = (0..16).map(|k| if k % 5 == 0 { 1.0 } else { 0.3 }).collect();
        let g = gauss_sim_quantile(&corr, 4, alpha, 300, seed).unwrap();
        let gs = gauss_sim_quantile(&corr, 4, smaller, 300, seed).unwrap();
        prop_assert!(gs >= g);
        Ok(())
    })
}

pub fn rademacher_sign_symmetry() -> Result<(), String> {
    run(24, (smooth_samples(3..=15, 10), any::<u64>(), any::<bool>()), |(s, seed, st)| {
        let neg = map_rows(&s, |_, v| -v);
        let cfg = BootstrapConfig { replicates: 150, alpha: 0.1, studentized: st, seed };
        let a = mult_t_quantile(&s, MultiplierLaw::Rademacher, &cfg).unwrap();
        let b = mult_t_quantile(&neg, MultiplierLaw::Rademacher, &cfg).unwrap();
        prop_assert!(close(a, b, 1e-12), "{a} vs {b}");
        Ok(())
    })
}

pub fn quantile_methods_agree_for_large_n() -> Result<(), String> {
    let m = Model::new(&ModelSpec::new(ModelKind::B, CoefficientLaw::Gaussian).with_resolution(100)).unwrap();
    let s = m.generate(400, &mut substream(12, 0)).unwrap();
    let tg = scb_one_sample(&s, &QuantileMethod::Tgkf, 0.05, 0).unwrap().quantile;
    for name in ["boots-t", "gmult-t", "rmult-t"] {
        let meth: QuantileMethod = name.parse().unwrap();
        let q = scb_one_sample(&s, &meth.with_replicates(2000), 0.05, 9).unwrap().quantile;
        // quantile Monte-Carlo error at B = 2000 is about 0.03
        ensure!((q - tg).abs() < 0.12, "{name}: {q} vs tGKF {tg}");
    }
    Ok(())
}

// ------------------------------------------------------------ scale-space

fn scale_setup(nh: usize) -> (Grid1D, ScaleGrid) {
    let raw = Grid1D::new(midpoints(40)).unwrap();
    let sg = ScaleGrid::new(Grid1D::uniform(0.0, 1.0, 30).unwrap(), linspace(0.02, 0.1, nh)).unwrap();
    (raw, sg)
}

fn raw_samples() -> impl Strategy<Value = FunctionalSample> {
    (1usize..6).prop_flat_map(|n| {
        prop::collection::vec(-5.0f64..5.0, n * 40).prop_map(move |v| {
            FunctionalSample::from_flat(n, v, Grid1D::new(midpoints(40)).unwrap()).unwrap()
        })
    })
}

pub fn scale_space_examples() -> Result<(), String> {
    let (raw, sg) = scale_setup(6);
    let k = GaussianKernel;
    let c = scale_mean(&[-1.25; 40], &raw, &k, &sg, true).unwrap();
    ensure!(c.iter().all(|v| (v + 1.25).abs() < 1e-12), "constant curve");
    let z = scale_mean(&[0.0; 40], &raw, &k, &sg, true).unwrap();
    ensure!(z.iter().all(|&v| v == 0.0), "zero mean");
    let mut spike = vec![0.0; 40];
    spike[13] = 1.0;
    let out = scale_mean(&spike, &raw, &k, &sg, false).unwrap();
    let sp = raw.points()[13];
    let nh = sg.h().len();
    for (is, &s) in sg.s().points().iter().enumerate() {
        for (ih, &h) in sg.h().iter().enumerate() {
            ensure!((out[is * nh + ih] - k.eval(s - sp, h) / 40.0).abs() < 1e-16, "spike profile");
        }
    }
    ensure!(ScaleGrid::new(sg.s().clone(), vec![]).is_err(), "empty bandwidths");
    Ok(())
}

pub fn scale_space_linear() -> Result<(), String> {
    run(48, (raw_samples(), -3.0f64..3.0, -3.0f64..3.0, any::<bool>()), |(y1, a, b, norm)| {
        let y2 = map_rows(&y1, |j, v| (v * 1.7 + j as f64).sin());
        let (_, sg) = scale_setup(5);
        let combo = FunctionalSample::from_flat(
            y1.n_curves(),
            y1.values().iter().zip(y2.values()).map(|(u, v)| a * u + b * v).collect(),
            y1.grid().clone(),
        )
        .unwrap();
        let k = GaussianKernel;
        let s1 = smooth_sample(&y1, &k, &sg, norm).unwrap();
        let s2 = smooth_sample(&y2, &k, &sg, norm).unwrap();
        let sc = smooth_sample(&combo, &k, &sg, norm).unwrap();
        for ((u, v), w) in s1.values().iter().zip(s2.values()).zip(sc.values()) {
            prop_assert!((a * u + b * v - w).abs() < 1e-12);
        }
        Ok(())
    })
}

pub fn scale_space_commutes_with_mean() -> Result<(), String> {
    run(48, (raw_samples(), any::<bool>()), |(y, norm)| {
        let (raw, sg) = scale_setup(4);
        let k = GaussianKernel;
        let a = pointwise_mean(&smooth_sample(&y, &k, &sg, norm).unwrap()).unwrap();
        let b = scale_mean(&pointwise_mean(&y).unwrap(), &raw, &k, &sg, norm).unwrap();
        for (u, v) in a.iter().zip(&b) {
            prop_assert!((u - v).abs() < 1e-12);
        }
        Ok(())
    })
}

pub fn scale_space_convex() -> Result<(), String> {
    run(48, raw_samples(), |y| {
        let (_, sg) = scale_setup(7);
        let out = smooth_sample(&y, &GaussianKernel, &sg, true).unwrap();
        let q = out.n_points();
        for (i, row) in y.rows().enumerate() {
            let lo = row.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            for v in &out.values()[i * q..(i + 1) * q] {
                prop_assert!(*v >= lo - 1e-12 && *v <= hi + 1e-12);
            }
        }
        Ok(())
    })
}

// ------------------------------------------------------------- scb-engine

pub fn band_examples() -> Result<(), String> {
    // two curves [[0], [2]]: centre 1, sd sqrt 2, half-width q
    let s = FunctionalSample::from_rows(&[vec![0.0], vec![2.0]], Grid1D::new(vec![0.0]).unwrap()).unwrap();
    let sd = pointwise_sd(&s).unwrap();
    for q in [1.0, 2.5] {
        let b = ScBand::from_parts(vec![1.0], &[sd[0] / 2f64.sqrt()], q, QuantileMethod::Tgkf, 0.05, s.grid().clone());
        ensure!(close(b.lower[0], 1.0 - q, 1e-15) && close(b.upper[0], 1.0 + q, 1e-15), "[1 +- q]");
    }
    // X close to zero: band centre is mean(Y) up to the jitter
    let mut rng = substream(21, 0);
    let y = cosine_sample(12, 30, &mut rng);
    let jitter = map_rows(&cosine_sample(10, 30, &mut rng), |_, v| 1e-9 * v);
    let b = scb_two_sample(&y, &jitter, &QuantileMethod::Tgkf, 0.05, 0).unwrap();
    let my = pointwise_mean(&y).unwrap();
    ensure!(b.center.iter().zip(&my).all(|(c, m)| (c - m).abs() < 1e-8), "centre on mean(Y)");
    let (ab, ba) = (
        scb_two_sample(&y, &jitter, &QuantileMethod::Tgkf, 0.05, 0).unwrap(),
        scb_two_sample(&jitter, &y, &QuantileMethod::Tgkf, 0.05, 0).unwrap(),
    );
    let (wa, wb) = (ab.half_width(), ba.half_width());
    ensure!(ab.center.iter().zip(&ba.center).all(|(p, q)| *p == -*q), "swap negates centre");
    ensure!(wa.iter().zip(&wb).all(|(p, q)| close(*p, *q, 1e-12)), "swap keeps width");
    // constant raw curves plus jitter: the scale-space band contains the constant
    let raw_grid = Grid1D::new(midpoints(40)).unwrap();
    let mut rng = substream(22, 0);
    let vals: Vec<f64> = (0..15 * 40).map(|_| 2.0 + 1e-3 * rand::Rng::random::<f64>(&mut rng)).collect();
    let raw = FunctionalSample::from_flat(15, vals, raw_grid.clone()).unwrap();
    let (_, sg) = scale_setup(5);
    let band = scb_scale_space(&raw, &GaussianKernel, &sg, true, &QuantileMethod::Tgkf, 0.05, 0).unwrap();
    let centre_truth = vec![2.0 + 5e-4; band.center.len()];
    ensure!(covers(&band, &centre_truth).unwrap(), "constant inside scale-space band");
    // single bandwidth: scale-space band equals the presmoothed 1-D band
    let one = ScaleGrid::new(sg.s().clone(), vec![0.05]).unwrap();
    let via_scale = scb_scale_space(&raw, &GaussianKernel, &one, true, &QuantileMethod::Tgkf, 0.05, 0).unwrap();
    let pre = smooth_sample(&raw, &GaussianKernel, &one, true).unwrap();
    ensure!(pre.grid().dim() == 1, "single bandwidth gives a 1-D grid");
    let direct = scb_one_sample(&pre, &QuantileMethod::Tgkf, 0.05, 0).unwrap();
    ensure!(via_scale == direct, "single-bandwidth band");
    // covers
    ensure!(covers(&direct, &direct.center).unwrap() && covers(&direct, &direct.upper).unwrap(), "closed band");
    let mut t = direct.upper.clone();
    t[3] += 1e-12;
    ensure!(!covers(&direct, &t).unwrap(), "above upper");
    ensure!(matches!(covers(&direct, &t[1..]), Err(ScbError::GridMismatch)), "length mismatch");
    Ok(())
}

fn methods() -> Vec<QuantileMethod> {
    ["tgkf", "boots-t", "boots", "gmult-t", "rmult-t", "gauss-sim"]
        .iter()
        .map(|m| m.parse::<QuantileMethod>().unwrap().with_replicates(100))
        .collect()
}

pub fn location_equivariance() -> Result<(), String> {
    run(12, (smooth_samples(5..=12, 15), -3.0f64..3.0, any::<u64>()), |(s, a, seed)| {
        let f = |j: usize| a * (j as f64 * 0.7).cos();
        let shifted = map_rows(&s, |j, v| v + f(j));
        for m in methods() {
            let b0 = scb_one_sample(&s, &m, 0.05, seed).unwrap();
            let b1 = scb_one_sample(&shifted, &m, 0.05, seed).unwrap();
            prop_assert!(close(b0.quantile, b1.quantile, 1e-9), "{m}: {} vs {}", b0.quantile, b1.quantile);
            for j in 0..s.n_points() {
                prop_assert!(close(b0.center[j] + f(j), b1.center[j], 1e-9));
                prop_assert!(close(b0.lower[j] + f(j), b1.lower[j], 1e-8));
            }
        }
        Ok(())
    })
}

pub fn scale_equivariance() -> Result<(), String> {
    run(24, (smooth_samples(5..=12, 15), 0.01f64..50.0), |(s, c)| {
        let scaled = map_rows(&s, |_, v| c * v);
        let b0 = scb_one_sample(&s, &QuantileMethod::Tgkf, 0.05, 0).unwrap();
        let b1 = scb_one_sample(&scaled, &QuantileMethod::Tgkf, 0.05, 0).unwrap();
        prop_assert!(close(b0.quantile, b1.quantile, 1e-9));
        for (w0, w1) in b0.half_width().iter().zip(b1.half_width()) {
            prop_assert!(close(c * w0, w1, 1e-9));
        }
        Ok(())
    })
}

pub fn width_monotone_in_quantile() -> Result<(), String> {
    run(64, (prop::collection::vec(-3.0f64..3.0, 6), prop::collection::vec(0.0f64..2.0, 6), 0.0f64..5.0, 0.0f64..5.0), |(c, sc, q1, q2)| {
        let g = Grid::One(Grid1D::uniform(0.0, 1.0, 6).unwrap());
        let (lo, hi) = if q1 <= q2 { (q1, q2) } else { (q2, q1) };
        let a = ScBand::from_parts(c.clone(), &sc, lo, QuantileMethod::Tgkf, 0.05, g.clone());
        let b = ScBand::from_parts(c, &sc, hi, QuantileMethod::Tgkf, 0.05, g);
        for (wa, wb) in a.half_width().iter().zip(b.half_width()) {
            prop_assert!(*wa <= wb + 1e-15);
        }
        Ok(())
    })
}

pub fn quantile_decreasing_in_n() -> Result<(), String> {
    let m = Model::new(&ModelSpec::new(ModelKind::B, CoefficientLaw::Gaussian)).unwrap();
    let mut means = Vec::new();
    for n in [10usize, 20, 50] {
        let qs: Vec<f64> = (0..60)
            .map(|r| {
                let s = m.generate(n, &mut substream(77 + n as u64, r)).unwrap();
                scb_one_sample(&s, &QuantileMethod::Tgkf, 0.05, 0).unwrap().quantile
            })
            .collect();
        means.push(super::mean(&qs));
    }
    ensure!(means[0] > means[1] && means[1] > means[2], "mean tGKF quantiles {means:?}");
    Ok(())
}

// ------------------------------------------------------------ sim-harness

pub fn sim_examples() -> Result<(), String> {
    ensure!(mean_1d(0.0) == 0.0, "model A mean at 0");
    ensure!(mean_2d(1.0, 1.0) == 1.0, "model C mean at (1, 1)");
    for k in 0..=50 {
        let total: f64 = bernstein_basis(k as f64 / 50.0).iter().sum();
        ensure!((total - 1.0).abs() < 1e-14, "Bernstein partition of unity");
    }
    let m = Model::new(&ModelSpec::new(ModelKind::A, CoefficientLaw::Gaussian).with_resolution(30)).unwrap();
    let s = m.generate(4, &mut substream(1, 1)).unwrap();
    ensure!(add_observation_noise(&s, 0.0, &mut substream(1, 2)).unwrap() == s, "zero noise");
    let spec = ModelSpec::new(ModelKind::A, CoefficientLaw::Gaussian).with_resolution(30);
    let mut cfg = ExperimentConfig::new(spec, vec![8], vec![QuantileMethod::Tgkf], 10);
    cfg.alpha = 1.0;
    let r = run_coverage(&cfg).unwrap();
    ensure!(r.cells[0].failures == 10, "alpha = 1 recorded as failures");
    ensure!(r.cells[0].first_error.as_deref().is_some_and(|e| e.starts_with("no_solution")), "no-solution kind");
    cfg.alpha = 0.05;
    cfg.seed = 99;
    ensure!(run_coverage(&cfg).unwrap() == run_coverage(&cfg).unwrap(), "same seed, same table");
    match read_sample_from("0,0.5,1\n1,2,3\n4,5\n".as_bytes()) {
        Err(ScbError::Parse { line: 3, .. }) => {}
        other => return Err(format!("ragged csv: {other:?}")),
    }
    Ok(())
}

pub fn io_round_trip() -> Result<(), String> {
    let two_d = (3usize..6, 3usize..6, 1usize..4).prop_flat_map(|(nx, ny, n)| {
        prop::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), n * nx * ny).prop_map(
            move |v| {
                let g = Grid2D::new(linspace(0.0, 1.0, nx), linspace(-2.0, 3.0, ny)).unwrap();
                FunctionalSample::from_flat(n, v, g).unwrap()
            },
        )
    });
    let one_d = (1usize..5, 1usize..20).prop_flat_map(|(n, p)| {
        (
            prop::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), n * p),
            prop::collection::vec(1e-3f64..10.0, p),
        )
            .prop_map(move |(v, steps)| {
                let mut pts = Vec::with_capacity(p);
                let mut acc = -1.0 / 3.0;
                for s in steps {
                    acc += s;
                    pts.push(acc);
                }
                FunctionalSample::from_flat(n, v, Grid1D::new(pts).unwrap()).unwrap()
            })
    });
    let check = |s: FunctionalSample| -> Result<(), TestCaseError> {
        let mut buf = Vec::new();
        write_sample_to(&s, &mut buf).unwrap();
        let back = read_sample_from(buf.as_slice()).unwrap();
        prop_assert_eq!(back.grid(), s.grid());
        for (a, b) in back.values().iter().zip(s.values()) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
        Ok(())
    };
    run(64, one_d, check)?;
    run(32, two_d, check)
}

pub fn deterministic_across_thread_counts() -> Result<(), String> {
    let spec = ModelSpec::new(ModelKind::B, CoefficientLaw::ScaledT3).with_resolution(40);
    let mut cfg = ExperimentConfig::new(spec, vec![10, 15], methods(), 12);
    cfg.seed = 4;
    let at = |k: usize| {
        rayon::ThreadPoolBuilder::new().num_threads(k).build().unwrap().install(|| run_coverage(&cfg).unwrap())
    };
    let (a, b) = (at(1), at(3));
    ensure!(a == b, "reports differ between 1 and 3 threads");
    Ok(())
}

pub fn generated_mean_converges() -> Result<(), String> {
    let m = Model::new(&ModelSpec::new(ModelKind::A, CoefficientLaw::ScaledT3)).unwrap();
    let n = 100_000;
    let s = m.generate(n, &mut substream(31, 0)).unwrap();
    let mean = pointwise_mean(&s).unwrap();
    let sd = pointwise_sd(&s).unwrap();
    for j in 0..s.n_points() {
        let bound = 4.0 * sd[j] / (n as f64).sqrt();
        ensure!((mean[j] - m.mean()[j]).abs() < bound, "point {j}: {} vs {}", mean[j], m.mean()[j]);
    }
    Ok(())
}

/// LKC of model B computed from the noise-free normalized basis on a fine
/// grid: `L1 = int |d/ds (K(s) / |K(s)|)| ds`.
pub fn model_b_true_l1() -> f64 {
    let spec = ModelSpec::new(ModelKind::B, CoefficientLaw::Gaussian).with_resolution(20_001);
    let s = linspace(0.0, 1.0, 20_001);
    let unit = |t: f64| {
        let k = scb_core::sim::model::bump_basis(t);
        let norm = k.iter().map(|v| v * v).sum::<f64>().sqrt();
        k.into_iter().map(move |v| v / norm).collect::<Vec<f64>>()
    };
    let _ = spec;
    let mut total = 0.0;
    let mut prev = unit(s[0]);
    for &t in &s[1..] {
        let cur = unit(t);
        total += prev.iter().zip(&cur).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        prev = cur;
    }
    total
}

pub fn true_row_approaches_gaussian_gkf() -> Result<(), String> {
    let l1 = model_b_true_l1();
    let qg = tgkf_quantile(&lkc1(l1), EcDensityModel::Gaussian, 0.05).unwrap();
    let spec = ModelSpec::new(ModelKind::B, CoefficientLaw::Gaussian);
    let mut cfg = ExperimentConfig::new(spec, vec![20, 300], vec![], 1);
    cfg.true_replications = 3000;
    cfg.seed = 17;
    let exp = Experiment::new(&cfg).unwrap();
    let small = true_quantile(&exp, 20).unwrap();
    let large = true_quantile(&exp, 300).unwrap();
    ensure!((large - qg).abs() < 0.1, "N = 300 true quantile {large} vs Gaussian GKF {qg}");
    ensure!((large - qg).abs() < (small - qg).abs(), "true row at N = 20 ({small}) not farther than at 300 ({large})");
    Ok(())
}
