//! Debiased index `W_i` built from a pilot fit.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Coefficients;
use crate::pilot::PilotFit;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexEstimate {
    pub w: DVector<f64>,
    /// `sigma_tilde^2 / mu_tilde^2`, the noise variance of `W` around the true index.
    pub varsigma2: f64,
}

impl IndexEstimate {
    pub fn varsigma(&self) -> f64 {
        self.varsigma2.sqrt()
    }
}

/// `W_i = (beta_tilde^T x_i - gamma_tilde (y_i - g_0(beta_tilde^T x_i))) / mu_tilde`
/// where `g_0` is the pilot's mean function (the identity for ridge and
/// least squares).
pub fn debias_index(x: &DMatrix<f64>, y: &DVector<f64>, fit: &PilotFit) -> Result<IndexEstimate> {
    let adj = &fit.adjustments;
    if !(adj.mu_tilde > 0.0) || !adj.mu_tilde.is_finite() {
        return Err(Error::DegeneratePilot(format!("mu_tilde = {}", adj.mu_tilde)));
    }
    if y.len() != x.nrows() || fit.beta_tilde.len() != x.ncols() {
        return Err(Error::Config("index inputs have mismatched shapes".into()));
    }
    let fitted = x * &fit.beta_tilde;
    let g0 = fit.kind.mean_function();
    let w = fitted.zip_map(y, |f, yi| (f - adj.gamma_tilde * (yi - g0.eval(f))) / adj.mu_tilde);
    Ok(IndexEstimate {
        w,
        varsigma2: adj.sigma2_tilde / (adj.mu_tilde * adj.mu_tilde),
    })
}

/// `mu_tilde (W - X beta) / sigma_tilde`, approximately standard normal.
pub fn index_zscores(
    index: &IndexEstimate,
    x: &DMatrix<f64>,
    beta: &Coefficients,
    fit: &PilotFit,
) -> Result<DVector<f64>> {
    let adj = &fit.adjustments;
    let sigma = adj.sigma2_tilde.sqrt();
    if !(sigma > 0.0) {
        return Err(Error::DegenerateAdjustment("sigma_tilde = 0".into()));
    }
    let truth = x * &beta.beta;
    Ok((&index.w - truth) * (adj.mu_tilde / sigma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pilot::{Adjustments, PilotKind};

    fn fit(beta: Vec<f64>, mu: f64, gamma: f64, sigma2: f64) -> PilotFit {
        PilotFit {
            beta_tilde: DVector::from_vec(beta),
            kind: PilotKind::LeastSquares,
            adjustments: Adjustments {
                v_tilde: 0.5,
                gamma_tilde: gamma,
                mu_tilde: mu,
                sigma2_tilde: sigma2,
                kappa: 0.5,
            },
        }
    }

    #[test]
    fn hand_trace() {
        let x = DMatrix::from_row_slice(2, 1, &[1.0, 0.0]);
        let y = DVector::from_vec(vec![2.0, 1.0]);
        let idx = debias_index(&x, &y, &fit(vec![1.0], 2.0, 1.0, 0.5)).unwrap();
        assert_eq!(idx.w.as_slice(), &[0.0, -0.5]);
        assert_eq!(idx.varsigma2, 0.125);
    }

    #[test]
    fn residual_term_vanishes() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, -1.0, 0.5, 0.0, 3.0]);
        let f = fit(vec![0.3, -0.2], 1.5, 0.0, 1.0);
        let y = DVector::from_vec(vec![5.0, -1.0, 2.0]);
        let expect = &x * &f.beta_tilde / 1.5;
        assert!((debias_index(&x, &y, &f).unwrap().w - &expect).amax() < 1e-15);
        let f = fit(vec![0.3, -0.2], 1.5, 0.7, 1.0);
        let exact = &x * &f.beta_tilde;
        assert!((debias_index(&x, &exact, &f).unwrap().w - expect).amax() < 1e-15);
    }

    #[test]
    fn mle_pilot_uses_mean_residual() {
        let x = DMatrix::from_row_slice(2, 1, &[1.0, -1.0]);
        let mut f = fit(vec![0.5], 2.0, 1.0, 1.0);
        f.kind = PilotKind::PoisMle;
        let y = DVector::from_vec(vec![0.5f64.exp(), 3.0]);
        let w = debias_index(&x, &y, &f).unwrap().w;
        assert!((w[0] - 0.25).abs() < 1e-15);
        assert!((w[1] - (-0.5 - (3.0 - (-0.5f64).exp())) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn affine_in_y() {
        let x = DMatrix::from_row_slice(3, 1, &[1.0, 2.0, 3.0]);
        let f = fit(vec![0.4], 0.8, 0.6, 1.0);
        let y1 = DVector::from_vec(vec![1.0, 0.0, 2.0]);
        let y2 = DVector::from_vec(vec![-1.0, 3.0, 0.5]);
        let w0 = debias_index(&x, &DVector::zeros(3), &f).unwrap().w;
        let w1 = debias_index(&x, &y1, &f).unwrap().w;
        let w2 = debias_index(&x, &y2, &f).unwrap().w;
        let w12 = debias_index(&x, &(&y1 + &y2), &f).unwrap().w;
        assert!((w12 - (w1 + w2 - w0)).amax() < 1e-14);
    }

    #[test]
    fn degenerate_inputs() {
        let x = DMatrix::from_row_slice(1, 1, &[1.0]);
        let y = DVector::from_vec(vec![1.0]);
        assert!(matches!(
            debias_index(&x, &y, &fit(vec![1.0], 0.0, 1.0, 1.0)),
            Err(Error::DegeneratePilot(_))
        ));
        let f = fit(vec![1.0], 1.0, 0.0, 0.0);
        let idx = debias_index(&x, &y, &f).unwrap();
        let beta = Coefficients {
            beta: DVector::from_vec(vec![1.0]),
        };
        assert!(index_zscores(&idx, &x, &beta, &f).is_err());
    }

    #[test]
    fn zero_scores_at_truth() {
        let x = DMatrix::from_row_slice(2, 1, &[1.0, -2.0]);
        let beta = Coefficients {
            beta: DVector::from_vec(vec![0.5]),
        };
        let f = fit(vec![0.5], 1.0, 0.0, 0.3);
        let idx = debias_index(&x, &DVector::zeros(2), &f).unwrap();
        assert!(index_zscores(&idx, &x, &beta, &f).unwrap().amax() == 0.0);
    }
}
