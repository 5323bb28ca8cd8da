//! Independent oracles and property checks shared by the integration and
//! acceptance targets. Each check returns the measured discrepancy so callers
//! can assert against their own tolerance.

#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use sindex::deconv::{nw_deconv_grid, DeconvConfig, DeconvKernel, GridSpec, KernelSpec};
use sindex::index::IndexEstimate;
use sindex::inference::{adjust_inferential, oracle_params, vhat, InferenceMode};
use sindex::model::{sample_design, simulate, CoefScheme, DesignSpec, LinkFunction, ModelVariant, SimModel};
use sindex::monotonize::{monotonize_naive, rearrange, GridFunction};
use sindex::pipeline::{run_pipeline, PipelineConfig};
use sindex::seed::rng;
use sindex::surrogate::{fit_coefficients, surrogate_objective, NewtonOptions, Penalty, SurrogateProblem};

pub fn gaussian_matrix(n: usize, p: usize, seed: u64) -> DMatrix<f64> {
    let mut r = rng(seed);
    DMatrix::from_fn(n, p, |_, _| r.sample(StandardNormal))
}

/// Plain iteratively reweighted least squares for the logistic model.
pub fn irls_logistic(x: &DMatrix<f64>, y: &DVector<f64>) -> DVector<f64> {
    let p = x.ncols();
    let mut beta = DVector::zeros(p);
    for _ in 0..200 {
        let eta = x * &beta;
        let mu = eta.map(|t| 1.0 / (1.0 + (-t).exp()));
        let w = mu.map(|m| m * (1.0 - m));
        let z = DVector::from_fn(eta.len(), |i, _| eta[i] + (y[i] - mu[i]) / w[i]);
        let mut xtwx = DMatrix::zeros(p, p);
        let mut xtwz = DVector::zeros(p);
        for i in 0..x.nrows() {
            let row = x.row(i).transpose();
            xtwx += &row * row.transpose() * w[i];
            xtwz += &row * (w[i] * z[i]);
        }
        let next = xtwx.cholesky().expect("IRLS Gram matrix").solve(&xtwz);
        let step = (&next - &beta).amax();
        beta = next;
        if step < 1e-13 {
            break;
        }
    }
    beta
}

/// Spherical Bessel function `j_3`, by its power series near zero.
pub fn spherical_j3(u: f64) -> f64 {
    if u.abs() < 1.0 {
        let mut term = u.powi(3) / 105.0;
        let mut sum = term;
        for k in 1..12 {
            term *= -u * u / (2.0 * k as f64 * (2.0 * (3 + k) as f64 + 1.0));
            sum += term;
        }
        return sum;
    }
    let (s, c) = u.sin_cos();
    (15.0 / u.powi(4) - 6.0 / (u * u)) * s - (15.0 / u.powi(3) - 1.0 / u) * c
}

/// Kernel with Fourier transform `(1 - t^2)^3` on `[-1, 1]`: `48 j_3(u) / (pi u^3)`.
pub fn closed_form_kernel(u: f64) -> f64 {
    if u.abs() < 1e-3 {
        return 48.0 / (105.0 * PI) * (1.0 - u * u / 18.0);
    }
    48.0 * spherical_j3(u) / (PI * u.powi(3))
}

fn small_glm_data(n: usize, p: usize, seed: u64, model: ModelVariant) -> (DMatrix<f64>, DVector<f64>) {
    let (data, _) = simulate(
        n,
        &DesignSpec::identity(p),
        CoefScheme::UniformSphere,
        &SimModel::new(model),
        seed,
    )
    .expect("simulate");
    (data.x, data.y)
}

/// `max |beta_hat(identity) - beta_LS|`, with least squares from an SVD solve.
pub fn identity_link_vs_least_squares(seed: u64) -> f64 {
    let (x, y) = small_glm_data(300, 25, seed, ModelVariant::Cubic);
    let prob = SurrogateProblem::new(&LinkFunction::Identity, Penalty::None).unwrap();
    let fit = fit_coefficients(&x, &y, &prob, NewtonOptions::default()).unwrap();
    let ls = x.clone().svd(true, true).solve(&y, 1e-14).unwrap();
    (fit.beta_hat - ls).amax()
}

/// `max |beta_hat(logistic) - beta_IRLS|`.
pub fn logistic_link_vs_irls(seed: u64) -> f64 {
    let (x, y) = small_glm_data(600, 15, seed, ModelVariant::Logit);
    let prob = SurrogateProblem::new(&LinkFunction::Logistic, Penalty::None).unwrap();
    let fit = fit_coefficients(&x, &y, &prob, NewtonOptions::default()).unwrap();
    (fit.beta_hat - irls_logistic(&x, &y)).amax()
}

/// `|v_hat_0 - (1 - kappa)|` with unit weights.
pub fn vhat_unit_weights(seed: u64) -> f64 {
    let x = gaussian_matrix(120, 30, seed);
    let b = DVector::from_fn(30, |j, _| (j as f64 * 0.37).sin());
    let v = vhat(&x, &b, &LinkFunction::Identity, 0.0).unwrap();
    (v - (1.0 - 30.0 / 120.0)).abs()
}

/// Sup distance between the noise-free deconvolution estimate and a direct
/// Nadaraya-Watson ratio using the closed-form kernel.
pub fn deconv_noise_free_vs_nw(seed: u64) -> f64 {
    let n = 400;
    let mut r = rng(seed);
    let w: Vec<f64> = (0..n).map(|_| r.sample::<f64, _>(StandardNormal) * 1.2).collect();
    let y: Vec<f64> = w
        .iter()
        .map(|t| t.tanh() + 0.3 * r.sample::<f64, _>(StandardNormal))
        .collect();
    let index = IndexEstimate {
        w: DVector::from_vec(w.clone()),
        varsigma2: 0.0,
    };
    let cfg = DeconvConfig {
        grid: GridSpec {
            lo: -2.0,
            hi: 2.0,
            points: 81,
        },
        ..DeconvConfig::default()
    };
    let h = 0.4;
    let est = nw_deconv_grid(&index, &DVector::from_vec(y.clone()), h, &cfg).unwrap();
    let mut worst: f64 = 0.0;
    for (k, x) in est.grid.iter().enumerate() {
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..n {
            let kv = closed_form_kernel((x - w[i]) / h);
            num += y[i] * kv;
            den += kv;
        }
        assert!(est.valid[k]);
        worst = worst.max((num / den - est.values[k]).abs());
    }
    worst
}

/// Whether censoring with a window covering every fitted index reproduces
/// the uncensored adjustment bit for bit.
pub fn censored_all_covering_is_exact(seed: u64) -> bool {
    let (x, y) = small_glm_data(400, 40, seed, ModelVariant::Cloglog);
    let prob = SurrogateProblem::new(&LinkFunction::Cloglog, Penalty::None).unwrap();
    let fit = fit_coefficients(&x, &y, &prob, NewtonOptions::default()).unwrap();
    let eta = &x * &fit.beta_hat;
    let (a, b) = (eta.min() - 1.0, eta.max() + 1.0);
    let plain = adjust_inferential(
        &x,
        &y,
        &fit.beta_hat,
        &LinkFunction::Cloglog,
        InferenceMode::Unregularized,
    )
    .unwrap();
    let cens = adjust_inferential(
        &x,
        &y,
        &fit.beta_hat,
        &LinkFunction::Cloglog,
        InferenceMode::Censored { a, b },
    )
    .unwrap();
    plain == cens
}

/// Largest relative error between the analytic gradient and central
/// differences over `instances` random problems.
pub fn gradient_check(instances: usize) -> f64 {
    let links = [
        LinkFunction::Cloglog,
        LinkFunction::XSqrt,
        LinkFunction::Cubic,
        LinkFunction::Logistic,
        LinkFunction::Exp,
    ];
    let mut worst: f64 = 0.0;
    for k in 0..instances {
        let mut r = rng(9000 + k as u64);
        let (n, p) = (40 + 7 * k, 3 + k % 6);
        let x = gaussian_matrix(n, p, 500 + k as u64) * 0.5;
        let y = DVector::from_fn(n, |_, _| r.random_range(0.0..2.0));
        let b = DVector::from_fn(p, |_, _| r.random_range(-0.5..0.5));
        let link = links[k % links.len()];
        let penalty = if k % 2 == 0 {
            Penalty::None
        } else {
            Penalty::Ridge { lambda: 0.3 }
        };
        let prob = SurrogateProblem::new(&link, penalty).unwrap();
        let (_, grad, _) = surrogate_objective(&b, &x, &y, &prob).unwrap();
        for j in 0..p {
            let step = 1e-5;
            let mut hi = b.clone();
            let mut lo = b.clone();
            hi[j] += step;
            lo[j] -= step;
            let fd = (surrogate_objective(&hi, &x, &y, &prob).unwrap().0
                - surrogate_objective(&lo, &x, &y, &prob).unwrap().0)
                / (2.0 * step);
            let rel = (fd - grad[j]).abs() / grad[j].abs().max(1e-3);
            worst = worst.max(rel);
        }
    }
    worst
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut s = f(a) + f(b);
    for k in 1..panels {
        s += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// `(varsigma, h)` pairs with `varsigma^2 / h^2 < log(n) / 2` for `n = 500`,
/// the bandwidth constraint at `c_h = (h^2 log n)^{-1}`.
pub fn kernel_sweep() -> Vec<(f64, f64)> {
    let limit = (500f64).ln() / 2.0;
    let mut pairs = Vec::new();
    for s in [0.0, 0.1, 0.25, 0.4, 0.6] {
        for h in [0.3, 0.5, 0.8, 1.2] {
            if s * s / (h * h) < limit {
                pairs.push((s, h));
            }
        }
    }
    pairs
}

/// Largest `|integral of K_n - 1|` over the sweep.
pub fn kernel_mass_error() -> f64 {
    let spec = KernelSpec::default();
    kernel_sweep()
        .into_iter()
        .map(|(s, h)| {
            let k = DeconvKernel::new(h, s, &spec, 256).unwrap();
            (simpson(|u| k.eval(u), -250.0, 250.0, 100_000) - 1.0).abs()
        })
        .fold(0.0, f64::max)
}

/// Counts of grids violating idempotence and sup-error non-expansion, for
/// both monotonizers, over `grids` random instances.
pub fn monotonizer_violations(grids: usize) -> (usize, usize) {
    let mut idem = 0;
    let mut expand = 0;
    for k in 0..grids {
        let mut r = rng(77_000 + k as u64);
        let m = 2 + r.random_range(0..60);
        let xs: Vec<f64> = (0..m).map(|i| i as f64 * 0.1).collect();
        let vs: Vec<f64> = (0..m).map(|_| r.random_range(-5.0..5.0)).collect();
        let mut g: Vec<f64> = (0..m).map(|_| r.random_range(-5.0..5.0)).collect();
        g.sort_by(f64::total_cmp);
        let f = GridFunction::new(xs, vs).unwrap();
        let sup_f = f.vs.iter().zip(&g).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        for op in [monotonize_naive as fn(&GridFunction) -> GridFunction, rearrange] {
            let once = op(&f);
            if op(&once) != once || !once.is_nondecreasing() {
                idem += 1;
            }
            let sup = once.vs.iter().zip(&g).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if sup > sup_f + 1e-12 {
                expand += 1;
            }
        }
    }
    (idem, expand)
}

/// Largest change in `(mu, sigma)` under random rotations of both vectors.
pub fn rotation_invariance_error(trials: usize) -> f64 {
    let p = 12;
    let design = DesignSpec::identity(p);
    let mut worst: f64 = 0.0;
    for k in 0..trials {
        let q = gaussian_matrix(p, p, 4000 + k as u64).qr().q();
        let beta = gaussian_matrix(p, 1, 5000 + k as u64).column(0).normalize();
        let beta_hat = gaussian_matrix(p, 1, 6000 + k as u64).column(0) + &beta * 0.8;
        let base = oracle_params(&beta_hat, &beta, &design).unwrap();
        let rot = oracle_params(&(&q * &beta_hat), &(&q * &beta), &design).unwrap();
        worst = worst
            .max((base.mu_oracle - rot.mu_oracle).abs())
            .max((base.sigma_oracle - rot.sigma_oracle).abs());
    }
    worst
}

/// Two full pipeline runs from the same seeds serialize identically.
pub fn pipeline_reruns_identical() -> bool {
    let cfg = PipelineConfig {
        seed: 31,
        ..PipelineConfig::default()
    };
    let run = || {
        let (data, _, design) = cfg.simulate().unwrap();
        run_pipeline(&data, &cfg, Some(design.tau()))
            .unwrap()
            .to_json()
            .unwrap()
    };
    let x1 = sample_design(50, &DesignSpec::ar1(5, 0.5).unwrap(), 8).unwrap();
    let x2 = sample_design(50, &DesignSpec::ar1(5, 0.5).unwrap(), 8).unwrap();
    run() == run() && x1 == x2
}
