//! Inferential parameters `(mu, sigma^2)`, coordinate-wise t-statistics and
//! confidence intervals, plus simulation oracles.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cholesky, WeightedRidge};
use crate::model::DesignSpec;
use crate::pilot::{PilotFit, PilotKind};
use crate::stats::{normal_quantile, two_sided_p};
use crate::surrogate::SurrogateLink;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum InferenceMode {
    Ridge {
        lambda: f64,
    },
    Unregularized,
    /// Unregularized with the index censored to `[a, b]`.
    Censored {
        a: f64,
        b: f64,
    },
}

/// Censor map `z -> max(a, min(b, z))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CensoredAdjustment {
    pub a: f64,
    pub b: f64,
}

impl CensoredAdjustment {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a < b) {
            return Err(Error::Config(format!("censoring window needs a < b, got [{a}, {b}]")));
        }
        Ok(Self { a, b })
    }

    pub fn apply(&self, z: f64) -> f64 {
        z.clamp(self.a, self.b)
    }
}

fn index_of(x: &DMatrix<f64>, beta_hat: &DVector<f64>, censor: Option<CensoredAdjustment>) -> DVector<f64> {
    let mut eta = x * beta_hat;
    if let Some(c) = censor {
        eta.apply(|v| *v = c.apply(*v));
    }
    eta
}

fn vhat_at(x: &DMatrix<f64>, eta: &DVector<f64>, link: &dyn SurrogateLink, lambda: f64) -> Result<f64> {
    let n = x.nrows();
    if !(lambda >= 0.0) {
        return Err(Error::Config(format!("lambda must be nonnegative, got {lambda}")));
    }
    let d: Vec<f64> = eta.iter().map(|t| link.deriv(*t)).collect();
    Ok(WeightedRidge::new(x, &d, n as f64 * lambda)?.residual_trace() / n as f64)
}

/// `n^{-1} tr(D - D X (X^T D X + n lambda I)^{-1} X^T D)`, `D = diag(g'(X beta_hat))`.
pub fn vhat(x: &DMatrix<f64>, beta_hat: &DVector<f64>, link: &dyn SurrogateLink, lambda: f64) -> Result<f64> {
    vhat_at(x, &(x * beta_hat), link, lambda)
}

/// `vhat` with `D_c = diag(g'(iota(X beta_hat)))`.
pub fn vhat_censored(
    x: &DMatrix<f64>,
    beta_hat: &DVector<f64>,
    link: &dyn SurrogateLink,
    window: CensoredAdjustment,
) -> Result<f64> {
    vhat_at(x, &index_of(x, beta_hat, Some(window)), link, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InferentialEstimate {
    pub mu_hat: f64,
    pub sigma2_hat: f64,
    pub v_hat: f64,
    pub kappa: f64,
}

pub fn adjust_inferential(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    beta_hat: &DVector<f64>,
    link: &dyn SurrogateLink,
    mode: InferenceMode,
) -> Result<InferentialEstimate> {
    let (n, p) = x.shape();
    if y.len() != n || beta_hat.len() != p {
        return Err(Error::Config("inference inputs have mismatched shapes".into()));
    }
    let nf = n as f64;
    let kappa = p as f64 / nf;
    let censor = match mode {
        InferenceMode::Censored { a, b } => Some(CensoredAdjustment::new(a, b)?),
        _ => None,
    };
    let eta = index_of(x, beta_hat, censor);
    let rss: f64 = y
        .iter()
        .zip(eta.iter())
        .map(|(yi, t)| (yi - link.value(*t)).powi(2))
        .sum();
    match mode {
        InferenceMode::Ridge { lambda } => {
            if !(lambda > 0.0) {
                return Err(Error::Config(format!("ridge mode needs lambda > 0, got {lambda}")));
            }
            let v = vhat_at(x, &eta, link, lambda)?;
            let denom = v + lambda;
            if denom == 0.0 {
                return Err(Error::DegenerateAdjustment("v_hat + lambda = 0".into()));
            }
            let sigma2 = rss / (nf * denom * denom / kappa);
            Ok(InferentialEstimate {
                mu_hat: (beta_hat.norm_squared() - sigma2).abs().sqrt(),
                sigma2_hat: sigma2,
                v_hat: v,
                kappa,
            })
        }
        InferenceMode::Unregularized | InferenceMode::Censored { .. } => {
            let v = vhat_at(x, &eta, link, 0.0)?;
            if v == 0.0 || !v.is_finite() {
                return Err(Error::DegenerateAdjustment(format!("v_hat = {v}")));
            }
            let sigma2 = rss / (nf * v * v / kappa);
            Ok(InferentialEstimate {
                mu_hat: (eta.norm_squared() / nf - (1.0 - kappa) * sigma2).abs().sqrt(),
                sigma2_hat: sigma2,
                v_hat: v,
                kappa,
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceReport {
    pub mu_hat: f64,
    pub sigma2_hat: f64,
    pub mode: Option<InferenceMode>,
    pub alpha: f64,
    pub beta_hat: Vec<f64>,
    pub null_values: Vec<f64>,
    pub t_stats: Vec<f64>,
    pub ci_lo: Vec<f64>,
    pub ci_hi: Vec<f64>,
    pub p_values: Vec<f64>,
    /// Rejection of `beta_j = 0` at level `alpha`.
    pub reject_zero: Vec<bool>,
    /// `sigma2_hat / mu_hat^2`.
    pub effective_variance: f64,
}

impl InferenceReport {
    pub fn with_mode(mut self, mode: InferenceMode) -> Self {
        self.mode = Some(mode);
        self
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["j", "beta_hat", "T", "ci_lo", "ci_hi", "p_value"])?;
        for j in 0..self.t_stats.len() {
            w.write_record([
                (j + 1).to_string(),
                self.beta_hat[j].to_string(),
                self.t_stats[j].to_string(),
                self.ci_lo[j].to_string(),
                self.ci_hi[j].to_string(),
                self.p_values[j].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `T_j = sqrt(p) tau_j (beta_hat_j - mu_hat b0_j) / sigma_hat` with
/// intervals `mu_hat^{-1} [beta_hat_j ± z sigma_hat / (sqrt(p) tau_j)]`.
/// `null_values` defaults to zero.
pub fn marginal_inference(
    beta_hat: &DVector<f64>,
    mu_hat: f64,
    sigma2_hat: f64,
    tau: &[f64],
    alpha: f64,
    null_values: Option<&[f64]>,
) -> Result<InferenceReport> {
    let p = beta_hat.len();
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Config(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if tau.len() != p || tau.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::Config(format!("need {p} positive tau values")));
    }
    if !(sigma2_hat > 0.0) || !sigma2_hat.is_finite() {
        return Err(Error::DegenerateAdjustment(format!("sigma2_hat = {sigma2_hat}")));
    }
    if !(mu_hat > 0.0) || !mu_hat.is_finite() {
        return Err(Error::DegenerateAdjustment(format!("mu_hat = {mu_hat}")));
    }
    let b0 = match null_values {
        Some(v) if v.len() != p => return Err(Error::Config(format!("need {p} null values, got {}", v.len()))),
        Some(v) => v.to_vec(),
        None => vec![0.0; p],
    };
    let sigma = sigma2_hat.sqrt();
    let z = normal_quantile(1.0 - alpha / 2.0);
    let root_p = (p as f64).sqrt();
    let mut report = InferenceReport {
        mu_hat,
        sigma2_hat,
        mode: None,
        alpha,
        beta_hat: beta_hat.as_slice().to_vec(),
        null_values: b0.clone(),
        t_stats: Vec::with_capacity(p),
        ci_lo: Vec::with_capacity(p),
        ci_hi: Vec::with_capacity(p),
        p_values: Vec::with_capacity(p),
        reject_zero: Vec::with_capacity(p),
        effective_variance: sigma2_hat / (mu_hat * mu_hat),
    };
    for j in 0..p {
        let bj = beta_hat[j];
        let se = sigma / (root_p * tau[j]);
        let t = (bj - mu_hat * b0[j]) / se;
        report.t_stats.push(t);
        report.p_values.push(two_sided_p(t));
        report.ci_lo.push((bj - z * se) / mu_hat);
        report.ci_hi.push((bj + z * se) / mu_hat);
        report.reject_zero.push(z * se <= bj.abs());
    }
    Ok(report)
}

/// `mu = theta^T theta_hat / theta^T theta`, `sigma = ||theta_hat - mu theta||`
/// in coordinates `theta = L^T beta`, `Sigma = L L^T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleParams {
    pub mu_oracle: f64,
    pub sigma_oracle: f64,
}

pub fn oracle_params(beta_hat: &DVector<f64>, beta: &DVector<f64>, design: &DesignSpec) -> Result<OracleParams> {
    if beta_hat.len() != design.p() || beta.len() != design.p() {
        return Err(Error::Config("oracle inputs have mismatched dimensions".into()));
    }
    let (theta, theta_hat) = if design.is_identity() {
        (beta.clone(), beta_hat.clone())
    } else {
        let lt = design.factor().transpose();
        (&lt * beta, &lt * beta_hat)
    };
    let denom = theta.norm_squared();
    if !(denom > 0.0) {
        return Err(Error::DegenerateAdjustment("beta^T Sigma beta = 0".into()));
    }
    let mu = theta.dot(&theta_hat) / denom;
    Ok(OracleParams {
        mu_oracle: mu,
        sigma_oracle: (theta_hat - theta * mu).norm(),
    })
}

/// `beta_hat^T beta_hat / beta_hat^T beta - 1`.
pub fn effective_variance_oracle(beta_hat: &DVector<f64>, beta: &DVector<f64>) -> Result<f64> {
    let cross = beta_hat.dot(beta);
    if cross == 0.0 {
        return Err(Error::DegenerateAdjustment("beta_hat^T beta = 0".into()));
    }
    Ok(beta_hat.norm_squared() / cross - 1.0)
}

/// `sigma_hat^2 / mu_hat^2`.
pub fn effective_variance_estimated(mu_hat: f64, sigma2_hat: f64) -> Result<f64> {
    if !(mu_hat > 0.0) {
        return Err(Error::DegenerateAdjustment(format!("mu_hat = {mu_hat}")));
    }
    Ok(sigma2_hat / (mu_hat * mu_hat))
}

/// `Theta_S^{-1/2}` as the inverse Cholesky factor of the `|S| x |S|` block
/// of `Theta = Sigma^{-1}`; applied to `sqrt(p) (beta_hat_S - mu beta_S) / sigma`
/// it gives approximately independent standard normals.
pub fn joint_transform(design: &DesignSpec, set: &[usize]) -> Result<DMatrix<f64>> {
    let p = design.p();
    if set.is_empty() || set.iter().any(|&j| j >= p) {
        return Err(Error::Config(format!(
            "coordinate set must be nonempty and within 0..{p}"
        )));
    }
    let theta = cholesky(design.sigma().clone(), "Sigma")?.inverse();
    let block = DMatrix::from_fn(set.len(), set.len(), |a, b| theta[(set[a], set[b])]);
    let l = cholesky(block, "Theta_S")?.l();
    l.try_inverse()
        .ok_or_else(|| Error::Solver("Theta_S factor is singular".into()))
}

/// Outcome of comparing the proposed estimator against its pilot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyCheck {
    /// Closed-form ratio; the proposed estimator is more efficient iff it exceeds 1.
    pub ratio: f64,
    pub condition_holds: bool,
    /// Direct comparison `sigma_hat^2/mu_hat^2 < sigma_tilde^2/mu_tilde^2`.
    pub direct: bool,
    /// Whether the closed form is an exact equivalence for these inputs.
    pub applicable: bool,
}

/// Ridge pilot on `(x1, y1)` against a ridge-penalized surrogate fit on `(x2, y2)`.
#[allow(clippy::too_many_arguments)]
pub fn efficiency_condition_ridge(
    pilot: &PilotFit,
    x1: &DMatrix<f64>,
    y1: &DVector<f64>,
    beta_hat: &DVector<f64>,
    x2: &DMatrix<f64>,
    y2: &DVector<f64>,
    link: &dyn SurrogateLink,
    lambda: f64,
) -> Result<EfficiencyCheck> {
    let PilotKind::Ridge { lambda: lambda1 } = pilot.kind else {
        return Err(Error::Config("ridge efficiency condition needs a ridge pilot".into()));
    };
    let est = adjust_inferential(x2, y2, beta_hat, link, InferenceMode::Ridge { lambda })?;
    let adj = &pilot.adjustments;
    let (n1, n2) = (x1.nrows() as f64, x2.nrows() as f64);
    let res1 = (y1 - x1 * &pilot.beta_tilde).norm();
    let eta = x2 * beta_hat;
    let res2 = y2
        .iter()
        .zip(eta.iter())
        .map(|(y, t)| (y - link.value(*t)).powi(2))
        .sum::<f64>()
        .sqrt();
    let ratio = (n2 / n1)
        * (beta_hat.norm() / pilot.beta_tilde.norm())
        * ((est.v_hat + lambda).abs() / (adj.v_tilde + lambda1).abs())
        * (res1 / res2);
    let direct = est.sigma2_hat / est.mu_hat.powi(2) < adj.sigma2_tilde / adj.mu_tilde.powi(2);
    let applicable = beta_hat.norm_squared() > est.sigma2_hat && pilot.beta_tilde.norm_squared() > adj.sigma2_tilde;
    Ok(EfficiencyCheck {
        ratio,
        condition_holds: ratio > 1.0,
        direct,
        applicable,
    })
}

/// Least-squares pilot on `(x1, y1)` against an unpenalized surrogate fit on `(x2, y2)`.
pub fn efficiency_condition_unregularized(
    pilot: &PilotFit,
    x1: &DMatrix<f64>,
    y1: &DVector<f64>,
    beta_hat: &DVector<f64>,
    x2: &DMatrix<f64>,
    y2: &DVector<f64>,
    link: &dyn SurrogateLink,
) -> Result<EfficiencyCheck> {
    if pilot.kind != PilotKind::LeastSquares {
        return Err(Error::Config(
            "unregularized efficiency condition needs a least-squares pilot".into(),
        ));
    }
    let est = adjust_inferential(x2, y2, beta_hat, link, InferenceMode::Unregularized)?;
    let adj = &pilot.adjustments;
    let fit1 = x1 * &pilot.beta_tilde;
    let fit2 = x2 * beta_hat;
    let res1 = (y1 - &fit1).norm();
    let res2 = y2
        .iter()
        .zip(fit2.iter())
        .map(|(y, t)| (y - link.value(*t)).powi(2))
        .sum::<f64>()
        .sqrt();
    let ratio = (fit2.norm() / fit1.norm()) * (est.v_hat.abs() / (1.0 - adj.kappa)) * (res1 / res2);
    let direct = est.sigma2_hat / est.mu_hat.powi(2) < adj.sigma2_tilde / adj.mu_tilde.powi(2);
    let (n1, n2) = (x1.nrows() as f64, x2.nrows() as f64);
    let applicable = x1.nrows() == x2.nrows()
        && fit2.norm_squared() / n2 > (1.0 - est.kappa) * est.sigma2_hat
        && fit1.norm_squared() / n1 > (1.0 - adj.kappa) * adj.sigma2_tilde;
    Ok(EfficiencyCheck {
        ratio,
        condition_holds: ratio > 1.0,
        direct,
        applicable,
    })
}
