//! Helpers shared by the integration test targets: reference computations
//! written independently of the library, and small data generators.
#![allow(dead_code)]

pub mod props;

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use scb_core::grid::{linspace, Grid1D};
use scb_core::FunctionalSample;

/// `ln Gamma(k / 2)` for a positive integer `k`, from the recursions
/// `Gamma(x + 1) = x Gamma(x)`, `Gamma(1) = 1`, `Gamma(1/2) = sqrt(pi)`.
pub fn ln_gamma_half(k: u32) -> f64 {
    assert!(k > 0);
    let (mut x, mut acc) = if k.is_multiple_of(2) { (1.0, 0.0) } else { (0.5, 0.5 * PI.ln()) };
    while 2.0 * x < k as f64 {
        acc += x.ln();
        x += 1.0;
    }
    acc
}

/// Density of Student's t with integer `dof` degrees of freedom.
pub fn t_density(x: f64, dof: u32) -> f64 {
    let nu = dof as f64;
    let ln_c = ln_gamma_half(dof + 1) - ln_gamma_half(dof) - 0.5 * (nu * PI).ln();
    (ln_c - (nu + 1.0) / 2.0 * (1.0 + x * x / nu).ln()).exp()
}

pub fn normal_density(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Adaptive Simpson quadrature. Recursion stops at depth 30 so tolerances
/// near rounding level cannot blow up.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, eps: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        eps: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * eps {
            return left + right + delta / 15.0;
        }
        rec(f, a, fa, m, fm, lm, flm, left, eps / 2.0, depth - 1)
            + rec(f, m, fm, b, fb, rm, frm, right, eps / 2.0, depth - 1)
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    rec(f, a, fa, b, fb, m, fm, whole, eps, 30)
}

/// `P(X > u)` for `u >= 0` and a symmetric density.
pub fn upper_tail(density: &dyn Fn(f64) -> f64, u: f64) -> f64 {
    0.5 - integrate(density, 0.0, u, 1e-13)
}

/// Root of a decreasing function on `[lo, hi]` by plain bisection.
pub fn bisect(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    assert!(f(lo) > 0.0 && f(hi) < 0.0, "root not bracketed");
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Upper `p` quantile of a symmetric density.
pub fn upper_quantile_of(density: &dyn Fn(f64) -> f64, p: f64) -> f64 {
    bisect(&|u| upper_tail(density, u) - p, 0.0, 60.0, 1e-12)
}

/// `n` draws of `A cos(2 pi s) + B sin(2 pi s)` with i.i.d. standard normal
/// `A, B`, on `p` equidistant points of `[0, 1]`. Its LKC is `L1 = 2 pi`.
pub fn cosine_sample<R: Rng>(n: usize, p: usize, rng: &mut R) -> FunctionalSample {
    let s = linspace(0.0, 1.0, p);
    let mut values = Vec::with_capacity(n * p);
    for _ in 0..n {
        let a: f64 = rng.sample(StandardNormal);
        let b: f64 = rng.sample(StandardNormal);
        values.extend(s.iter().map(|&t| a * (2.0 * PI * t).cos() + b * (2.0 * PI * t).sin()));
    }
    FunctionalSample::from_flat(n, values, Grid1D::new(s).unwrap()).unwrap()
}

pub fn sample_from_rows(rows: &[Vec<f64>]) -> FunctionalSample {
    let p = rows[0].len();
    FunctionalSample::from_rows(rows, Grid1D::uniform(0.0, 1.0, p).unwrap()).unwrap()
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn variance(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() as f64 - 1.0)
}

pub fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

#[cfg(test)]
mod self_check {
    #[allow(unused_imports)]
    use super::*;

    #[test]
    fn oracle_quantiles() {
        // textbook values
        let z = upper_quantile_of(&normal_density, 0.025);
        assert!((z - 1.959_963_984_540_054).abs() < 1e-10);
        let t = upper_quantile_of(&|x| t_density(x, 5), 0.025);
        assert!((t - 2.570_581_835_636_314).abs() < 1e-9);
    }
}
