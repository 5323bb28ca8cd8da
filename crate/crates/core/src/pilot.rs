//! Pilot estimators of `beta` and their observable adjustments.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::WeightedRidge;
use crate::model::LinkFunction;
use crate::surrogate::{minimize_matching_loss, NewtonOptions, SurrogateLink};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PilotKind {
    Ridge {
        lambda: f64,
    },
    #[serde(rename = "ls")]
    LeastSquares,
    LogitMle,
    PoisMle,
}

impl PilotKind {
    pub fn name(&self) -> &'static str {
        match self {
            PilotKind::Ridge { .. } => "ridge",
            PilotKind::LeastSquares => "ls",
            PilotKind::LogitMle => "logit-mle",
            PilotKind::PoisMle => "pois-mle",
        }
    }

    /// Mean function whose residuals `y - g_0(X beta)` drive the adjustments:
    /// the identity for ridge and least squares.
    pub fn mean_function(&self) -> LinkFunction {
        match self {
            PilotKind::Ridge { .. } | PilotKind::LeastSquares => LinkFunction::Identity,
            PilotKind::LogitMle => LinkFunction::Logistic,
            PilotKind::PoisMle => LinkFunction::Exp,
        }
    }

    /// Parse `ridge`, `ls`, `logit-mle` or `pois-mle`; `lambda` is used by ridge.
    pub fn from_name(name: &str, lambda: f64) -> Result<Self> {
        match name.trim().to_ascii_lowercase().as_str() {
            "ridge" => {
                if !(lambda > 0.0) {
                    return Err(Error::Config(format!("ridge pilot needs lambda > 0, got {lambda}")));
                }
                Ok(PilotKind::Ridge { lambda })
            }
            "ls" | "least-squares" => Ok(PilotKind::LeastSquares),
            "logit-mle" => Ok(PilotKind::LogitMle),
            "pois-mle" => Ok(PilotKind::PoisMle),
            other => Err(Error::Config(format!("unknown pilot kind `{other}`"))),
        }
    }
}

/// Observable adjustments of a pilot fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Adjustments {
    pub v_tilde: f64,
    pub gamma_tilde: f64,
    pub mu_tilde: f64,
    pub sigma2_tilde: f64,
    /// `p / n` of the sample the pilot was fitted on.
    pub kappa: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PilotFit {
    pub beta_tilde: DVector<f64>,
    pub kind: PilotKind,
    pub adjustments: Adjustments,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GlmFamily {
    Logistic,
    Poisson,
}

impl GlmFamily {
    /// Canonical inverse link `g_0`.
    pub fn mean_function(&self) -> LinkFunction {
        match self {
            GlmFamily::Logistic => LinkFunction::Logistic,
            GlmFamily::Poisson => LinkFunction::Exp,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlmOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Fits whose coefficient norm exceeds this are reported as nonexistent.
    pub norm_guard: f64,
}

impl Default for GlmOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 100,
            norm_guard: 1e6,
        }
    }
}

/// `(X^T X + n lambda I)^{-1} X^T y`.
pub fn ridge_fit(x: &DMatrix<f64>, y: &DVector<f64>, lambda: f64) -> Result<DVector<f64>> {
    let (beta, _) = ridge_with_factor(x, y, lambda)?;
    Ok(beta)
}

fn ridge_with_factor<'a>(
    x: &'a DMatrix<f64>,
    y: &DVector<f64>,
    lambda: f64,
) -> Result<(DVector<f64>, WeightedRidge<'a>)> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::Config(format!("ridge needs lambda > 0, got {lambda}")));
    }
    let n = x.nrows();
    let ones = vec![1.0; n];
    let factor = WeightedRidge::new(x, &ones, n as f64 * lambda)?;
    let beta = factor.solve(&x.tr_mul(y));
    Ok((beta, factor))
}

/// Ordinary least squares; requires `n > p` and full column rank.
pub fn least_squares_fit(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    let (beta, _) = least_squares_with_factor(x, y)?;
    Ok(beta)
}

fn least_squares_with_factor<'a>(x: &'a DMatrix<f64>, y: &DVector<f64>) -> Result<(DVector<f64>, WeightedRidge<'a>)> {
    let (n, p) = x.shape();
    if p >= n {
        return Err(Error::NonIdentifiable(format!(
            "least squares needs n > p (n = {n}, p = {p})"
        )));
    }
    let ones = vec![1.0; n];
    let factor = WeightedRidge::new(x, &ones, 0.0).map_err(|e| match e {
        Error::Rank(msg) => Error::NonIdentifiable(msg),
        other => other,
    })?;
    let beta = factor.solve(&x.tr_mul(y));
    Ok((beta, factor))
}

/// Unpenalized logistic or Poisson MLE by damped Newton from zero.
pub fn glm_mle_fit(x: &DMatrix<f64>, y: &DVector<f64>, family: GlmFamily, opts: GlmOptions) -> Result<DVector<f64>> {
    match family {
        GlmFamily::Logistic => {
            if y.iter().any(|v| *v != 0.0 && *v != 1.0) {
                return Err(Error::Config("logistic MLE needs y in {0, 1}".into()));
            }
        }
        GlmFamily::Poisson => {
            if y.iter().any(|v| *v < 0.0 || v.fract() != 0.0) {
                return Err(Error::Config("Poisson MLE needs nonnegative integer y".into()));
            }
        }
    }
    let link = family.mean_function();
    let newton = NewtonOptions {
        tol: opts.tol,
        max_iter: opts.max_iter,
        ..NewtonOptions::default()
    };
    let separated = |b: &DVector<f64>| -> bool {
        family == GlmFamily::Logistic
            && (x * b)
                .iter()
                .zip(y.iter())
                .all(|(eta, yi)| if *yi == 1.0 { *eta > 0.0 } else { *eta < 0.0 })
    };
    let guard = opts.norm_guard;
    let mut stop_reason: Option<Error> = None;
    let fit = minimize_matching_loss(x, y, &link as &dyn SurrogateLink, 0.0, newton, |b| {
        if b.norm() > guard {
            stop_reason = Some(Error::NonExistence(format!("coefficient norm exceeded {guard:e}")));
            return true;
        }
        if b.iter().any(|v| *v != 0.0) && separated(b) {
            stop_reason = Some(Error::NonExistence("data are linearly separable".into()));
            return true;
        }
        false
    });
    if let Some(e) = stop_reason {
        return Err(e);
    }
    let fit = fit?;
    if separated(&fit.beta_hat) {
        return Err(Error::NonExistence("data are linearly separable".into()));
    }
    Ok(fit.beta_hat)
}

/// Fit a pilot of the given kind and compute its adjustments, reusing one
/// factorization for the solve and the trace.
pub fn fit_pilot(x: &DMatrix<f64>, y: &DVector<f64>, kind: PilotKind) -> Result<PilotFit> {
    let (n, p) = x.shape();
    let kappa = p as f64 / n as f64;
    let adjustments;
    let beta_tilde = match kind {
        PilotKind::Ridge { lambda } => {
            let (beta, factor) = ridge_with_factor(x, y, lambda)?;
            adjustments = ridge_adjustments(x, y, &beta, lambda, factor.residual_trace() / n as f64)?;
            beta
        }
        PilotKind::LeastSquares => {
            let (beta, _) = least_squares_with_factor(x, y)?;
            adjustments = ls_adjustments(x, y, &beta)?;
            beta
        }
        PilotKind::LogitMle | PilotKind::PoisMle => {
            let family = if kind == PilotKind::LogitMle {
                GlmFamily::Logistic
            } else {
                GlmFamily::Poisson
            };
            let beta = glm_mle_fit(x, y, family, GlmOptions::default())?;
            adjustments = mle_adjustments(x, y, &beta, family)?;
            beta
        }
    };
    debug_assert!(adjustments.kappa == kappa);
    Ok(PilotFit {
        beta_tilde,
        kind,
        adjustments,
    })
}

/// Observable adjustments `(v, gamma, mu, sigma^2)` of an existing pilot fit.
pub fn pilot_adjustments(fit: &PilotFit, x: &DMatrix<f64>, y: &DVector<f64>) -> Result<Adjustments> {
    let beta = &fit.beta_tilde;
    match fit.kind {
        PilotKind::Ridge { lambda } => {
            let n = x.nrows();
            let factor = WeightedRidge::new(x, &vec![1.0; n], n as f64 * lambda)?;
            ridge_adjustments(x, y, beta, lambda, factor.residual_trace() / n as f64)
        }
        PilotKind::LeastSquares => ls_adjustments(x, y, beta),
        PilotKind::LogitMle => mle_adjustments(x, y, beta, GlmFamily::Logistic),
        PilotKind::PoisMle => mle_adjustments(x, y, beta, GlmFamily::Poisson),
    }
}

fn ridge_adjustments(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    beta: &DVector<f64>,
    lambda: f64,
    v: f64,
) -> Result<Adjustments> {
    let (n, p) = x.shape();
    let kappa = p as f64 / n as f64;
    let denom = v + lambda;
    if denom == 0.0 {
        return Err(Error::DegenerateAdjustment("v + lambda = 0".into()));
    }
    let rss = (y - x * beta).norm_squared();
    let sigma2 = (rss / n as f64) / (denom * denom / kappa);
    let mu = (beta.norm_squared() - sigma2).abs().sqrt();
    Ok(Adjustments {
        v_tilde: v,
        gamma_tilde: kappa / denom,
        mu_tilde: mu,
        sigma2_tilde: sigma2,
        kappa,
    })
}

fn ls_adjustments(x: &DMatrix<f64>, y: &DVector<f64>, beta: &DVector<f64>) -> Result<Adjustments> {
    let (n, p) = x.shape();
    let kappa = p as f64 / n as f64;
    if kappa >= 1.0 {
        return Err(Error::DegenerateAdjustment(format!(
            "least squares with kappa = {kappa}"
        )));
    }
    let gamma = kappa / (1.0 - kappa);
    let fitted = x * beta;
    let rss = (y - &fitted).norm_squared();
    let sigma2 = gamma * rss / (n as f64 * (1.0 - kappa));
    let mu = (fitted.norm_squared() / n as f64 - (1.0 - kappa) * sigma2).abs().sqrt();
    Ok(Adjustments {
        v_tilde: 1.0 - kappa,
        gamma_tilde: gamma,
        mu_tilde: mu,
        sigma2_tilde: sigma2,
        kappa,
    })
}

fn mle_adjustments(x: &DMatrix<f64>, y: &DVector<f64>, beta: &DVector<f64>, family: GlmFamily) -> Result<Adjustments> {
    let g0 = family.mean_function();
    let eta = x * beta;
    let d: Vec<f64> = eta.iter().map(|t| g0.deriv(*t)).collect();
    let v = WeightedRidge::new(x, &d, 0.0)?.residual_trace() / x.nrows() as f64;
    weighted_adjustments(x, y, &eta, v, |t| g0.eval(t))
}

/// Adjustments for an unpenalized M-estimator with weights already reduced
/// to `v`; shared by the MLE pilot.
fn weighted_adjustments(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    eta: &DVector<f64>,
    v: f64,
    mean: impl Fn(f64) -> f64,
) -> Result<Adjustments> {
    let (n, p) = x.shape();
    let kappa = p as f64 / n as f64;
    if v == 0.0 || !v.is_finite() {
        return Err(Error::DegenerateAdjustment(format!("v = {v}")));
    }
    let rss: f64 = y.iter().zip(eta.iter()).map(|(yi, t)| (yi - mean(*t)).powi(2)).sum();
    let sigma2 = rss / (n as f64 * v * v / kappa);
    let mu = (eta.norm_squared() / n as f64 - (1.0 - kappa) * sigma2).abs().sqrt();
    Ok(Adjustments {
        v_tilde: v,
        gamma_tilde: kappa / v,
        mu_tilde: mu,
        sigma2_tilde: sigma2,
        kappa,
    })
}
