//! Domain types, the built-in link functions and data-generating models, and
//! synthetic data under a Gaussian design.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::cholesky;
use crate::seed;

/// Observations `(X, y)`: rows of `x` are observations.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
}

impl Dataset {
    pub fn new(x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        if x.nrows() == 0 || x.ncols() == 0 {
            return Err(Error::Config("dataset needs n >= 1 and p >= 1".into()));
        }
        if x.nrows() != y.len() {
            return Err(Error::Config(format!(
                "X has {} rows but y has {} entries",
                x.nrows(),
                y.len()
            )));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Config("dataset contains non-finite values".into()));
        }
        Ok(Self { x, y })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    /// Rows selected by `idx`, in the given order.
    pub fn rows(&self, idx: &[usize]) -> Dataset {
        let x = self.x.select_rows(idx.iter());
        let y = DVector::from_iterator(idx.len(), idx.iter().map(|&i| self.y[i]));
        Dataset { x, y }
    }
}

/// Gaussian design `N_p(0, Sigma)` with cached Cholesky factor and
/// `tau_j = Theta_jj^{-1/2}`, `Theta = Sigma^{-1}`.
#[derive(Debug, Clone)]
pub struct DesignSpec {
    sigma: DMatrix<f64>,
    factor: DMatrix<f64>,
    tau: Vec<f64>,
    identity: bool,
}

impl DesignSpec {
    pub fn identity(p: usize) -> Self {
        Self {
            sigma: DMatrix::identity(p, p),
            factor: DMatrix::identity(p, p),
            tau: vec![1.0; p],
            identity: true,
        }
    }

    pub fn from_covariance(sigma: DMatrix<f64>) -> Result<Self> {
        let p = sigma.nrows();
        if p == 0 || sigma.ncols() != p {
            return Err(Error::InvalidDesign("Sigma must be square with p >= 1".into()));
        }
        if sigma.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidDesign("Sigma has non-finite entries".into()));
        }
        if (&sigma - sigma.transpose()).amax() > 1e-10 {
            return Err(Error::InvalidDesign("Sigma is not symmetric".into()));
        }
        let chol = cholesky(sigma.clone(), "Sigma")
            .map_err(|_| Error::InvalidDesign("Sigma is not positive definite".into()))?;
        let theta = chol.inverse();
        let tau = (0..p).map(|j| theta[(j, j)].powf(-0.5)).collect::<Vec<_>>();
        if tau.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(Error::InvalidDesign("precision diagonal is not positive".into()));
        }
        let identity = sigma == DMatrix::identity(p, p);
        Ok(Self {
            factor: chol.l(),
            sigma,
            tau,
            identity,
        })
    }

    /// AR(1) covariance `Sigma_ij = rho^|i-j|`.
    pub fn ar1(p: usize, rho: f64) -> Result<Self> {
        if !(rho.abs() < 1.0) {
            return Err(Error::InvalidDesign(format!("AR(1) needs |rho| < 1, got {rho}")));
        }
        Self::from_covariance(DMatrix::from_fn(p, p, |i, j| rho.powi((i as i32 - j as i32).abs())))
    }

    pub fn p(&self) -> usize {
        self.sigma.nrows()
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    /// Lower-triangular `L` with `Sigma = L L^T`.
    pub fn factor(&self) -> &DMatrix<f64> {
        &self.factor
    }

    pub fn tau(&self) -> &[f64] {
        &self.tau
    }

    pub fn is_identity(&self) -> bool {
        self.identity
    }

    /// `b^T Sigma b`.
    pub fn quad_form(&self, b: &DVector<f64>) -> f64 {
        if self.identity {
            b.norm_squared()
        } else {
            b.dot(&(&self.sigma * b))
        }
    }
}

/// Coefficient vector normalized so that `beta^T Sigma beta = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    pub beta: DVector<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoefScheme {
    UniformSphere,
    /// First `k` coordinates equal, rest zero.
    Sparse(usize),
}

/// Built-in monotone link functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LinkFunction {
    /// `1 - exp(-exp(t))`
    Cloglog,
    /// `t + sqrt(t^2 + 1)`
    XSqrt,
    /// `t^3 / 3`
    Cubic,
    /// slope 0.2 outside `(-1, 1)`, slope 2.5 inside, continuous at `±1`
    Piecewise,
    /// `1 / (1 + exp(-t))`
    Logistic,
    Exp,
    Identity,
}

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

impl LinkFunction {
    pub fn label(&self) -> &'static str {
        match self {
            LinkFunction::Cloglog => "cloglog",
            LinkFunction::XSqrt => "xsqrt",
            LinkFunction::Cubic => "cubic",
            LinkFunction::Piecewise => "piecewise",
            LinkFunction::Logistic => "logistic",
            LinkFunction::Exp => "exp",
            LinkFunction::Identity => "identity",
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            LinkFunction::Cloglog => -(-t.exp()).exp_m1(),
            LinkFunction::XSqrt => {
                // t + sqrt(t^2+1) = 1 / (sqrt(t^2+1) - t), stable for t << 0
                if t >= 0.0 {
                    t + t.hypot(1.0)
                } else {
                    1.0 / (t.hypot(1.0) - t)
                }
            }
            LinkFunction::Cubic => t * t * t / 3.0,
            LinkFunction::Piecewise => {
                if t <= -1.0 {
                    0.2 * t - 2.3
                } else if t < 1.0 {
                    2.5 * t
                } else {
                    0.2 * t + 2.3
                }
            }
            LinkFunction::Logistic => logistic(t),
            LinkFunction::Exp => t.exp(),
            LinkFunction::Identity => t,
        }
    }

    pub fn deriv(&self, t: f64) -> f64 {
        match self {
            LinkFunction::Cloglog => (t - t.exp()).exp(),
            LinkFunction::XSqrt => 1.0 + t / t.hypot(1.0),
            LinkFunction::Cubic => t * t,
            LinkFunction::Piecewise => {
                if t <= -1.0 || t >= 1.0 {
                    0.2
                } else {
                    2.5
                }
            }
            LinkFunction::Logistic => {
                let s = logistic(t);
                s * (1.0 - s)
            }
            LinkFunction::Exp => t.exp(),
            LinkFunction::Identity => 1.0,
        }
    }

    /// An antiderivative `G` with `G' = g` (additive constant unspecified).
    pub fn antideriv(&self, t: f64) -> f64 {
        match self {
            LinkFunction::Cloglog => {
                // int_0^t (1 - exp(-e^s)) ds = t - E1(1) + E1(e^t)
                let et = t.exp();
                if et == 0.0 {
                    // E1(x) ~ -gamma - ln x as x -> 0, and ln x = t
                    -exp_integral_e1(1.0) - EULER_GAMMA
                } else {
                    t - exp_integral_e1(1.0) + exp_integral_e1(et)
                }
            }
            LinkFunction::XSqrt => {
                let r = t.hypot(1.0);
                0.5 * t * t + 0.5 * (t * r + t.asinh())
            }
            LinkFunction::Cubic => t.powi(4) / 12.0,
            LinkFunction::Piecewise => {
                if t <= -1.0 {
                    0.1 * t * t - 2.3 * t - 1.15
                } else if t < 1.0 {
                    1.25 * t * t
                } else {
                    0.1 * t * t + 2.3 * t - 1.15
                }
            }
            LinkFunction::Logistic => softplus(t),
            LinkFunction::Exp => t.exp(),
            LinkFunction::Identity => 0.5 * t * t,
        }
    }
}

pub(crate) fn logistic(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// Exponential integral `E1(x)` for `x > 0`.
pub(crate) fn exp_integral_e1(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x <= 1.0 {
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..60 {
            term *= -x / k as f64;
            let add = term / k as f64;
            sum += add;
            if add.abs() < 1e-17 * sum.abs().max(1e-300) {
                break;
            }
        }
        -EULER_GAMMA - x.ln() - sum
    } else if x > 745.0 {
        0.0
    } else {
        // modified Lentz continued fraction
        let tiny = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..200 {
            let a = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (a * d + b);
            c = b + a / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h * (-x).exp()
    }
}

/// The eight data-generating processes of the simulation study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelVariant {
    #[serde(rename = "cloglog")]
    Cloglog,
    #[serde(rename = "xsqrt")]
    XSqrt,
    #[serde(rename = "cubic")]
    Cubic,
    #[serde(rename = "piecewise")]
    Piecewise,
    #[serde(rename = "logit")]
    Logit,
    #[serde(rename = "poisson")]
    Poisson,
    #[serde(rename = "cubic+")]
    CubicPlus,
    #[serde(rename = "piecewise+")]
    PiecewisePlus,
}

impl ModelVariant {
    pub const ALL: [ModelVariant; 8] = [
        ModelVariant::Cloglog,
        ModelVariant::XSqrt,
        ModelVariant::Cubic,
        ModelVariant::Piecewise,
        ModelVariant::Logit,
        ModelVariant::Poisson,
        ModelVariant::CubicPlus,
        ModelVariant::PiecewisePlus,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ModelVariant::Cloglog => "cloglog",
            ModelVariant::XSqrt => "xsqrt",
            ModelVariant::Cubic => "cubic",
            ModelVariant::Piecewise => "piecewise",
            ModelVariant::Logit => "logit",
            ModelVariant::Poisson => "poisson",
            ModelVariant::CubicPlus => "cubic+",
            ModelVariant::PiecewisePlus => "piecewise+",
        }
    }

    pub fn link(&self) -> LinkFunction {
        match self {
            ModelVariant::Cloglog => LinkFunction::Cloglog,
            ModelVariant::XSqrt => LinkFunction::XSqrt,
            ModelVariant::Cubic | ModelVariant::CubicPlus => LinkFunction::Cubic,
            ModelVariant::Piecewise | ModelVariant::PiecewisePlus => LinkFunction::Piecewise,
            ModelVariant::Logit => LinkFunction::Logistic,
            ModelVariant::Poisson => LinkFunction::Exp,
        }
    }

    pub fn noise(&self) -> Noise {
        match self {
            ModelVariant::Cloglog | ModelVariant::Logit => Noise::Bernoulli,
            ModelVariant::XSqrt | ModelVariant::Poisson => Noise::Poisson,
            ModelVariant::Cubic => Noise::Gaussian {
                mean: 0.0,
                variance: 0.5,
            },
            ModelVariant::CubicPlus => Noise::Gaussian {
                mean: 5.0,
                variance: 0.5,
            },
            ModelVariant::Piecewise => Noise::Gaussian {
                mean: 0.0,
                variance: 0.2,
            },
            ModelVariant::PiecewisePlus => Noise::Gaussian {
                mean: 5.0,
                variance: 0.2,
            },
        }
    }

    /// Conditional mean `E[y | index = t]`, including any noise mean shift.
    pub fn conditional_mean(&self, t: f64) -> f64 {
        let shift = match self.noise() {
            Noise::Gaussian { mean, .. } => mean,
            _ => 0.0,
        };
        self.link().eval(t) + shift
    }
}

impl FromStr for ModelVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        ModelVariant::ALL
            .iter()
            .copied()
            .find(|m| m.name() == key)
            .ok_or_else(|| Error::Lookup(s.to_string()))
    }
}

impl fmt::Display for ModelVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Noise {
    Bernoulli,
    Poisson,
    Gaussian { mean: f64, variance: f64 },
}

/// A data-generating model: variant, link and noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimModel {
    pub variant: ModelVariant,
    pub link: LinkFunction,
    pub noise: Noise,
}

impl SimModel {
    pub fn new(variant: ModelVariant) -> Self {
        Self {
            variant,
            link: variant.link(),
            noise: variant.noise(),
        }
    }

    /// Same model with the Gaussian noise variance replaced.
    pub fn with_noise_variance(mut self, v: f64) -> Result<Self> {
        match &mut self.noise {
            Noise::Gaussian { variance, .. } if v >= 0.0 => {
                *variance = v;
                Ok(self)
            }
            _ => Err(Error::Config(format!(
                "model {} has no adjustable Gaussian noise",
                self.variant
            ))),
        }
    }
}

/// Link of a built-in model, addressed by its string name.
pub fn link_registry_lookup(name: &str) -> Result<LinkFunction> {
    Ok(name.parse::<ModelVariant>()?.link())
}

/// `n` i.i.d. rows from `N_p(0, Sigma)`.
pub fn sample_design(n: usize, spec: &DesignSpec, seed: u64) -> Result<DMatrix<f64>> {
    if n == 0 {
        return Err(Error::InvalidDesign("n must be at least 1".into()));
    }
    let p = spec.p();
    let mut rng = seed::rng(seed);
    let z: Vec<f64> = (0..n * p).map(|_| rng.sample(StandardNormal)).collect();
    let z = DMatrix::from_row_slice(n, p, &z);
    if spec.is_identity() {
        Ok(z)
    } else {
        Ok(z * spec.factor().transpose())
    }
}

pub fn sample_coefficients(p: usize, scheme: CoefScheme, spec: &DesignSpec, seed: u64) -> Result<Coefficients> {
    if p == 0 || spec.p() != p {
        return Err(Error::InvalidScheme(format!(
            "dimension {p} does not match design dimension {}",
            spec.p()
        )));
    }
    let raw = match scheme {
        CoefScheme::UniformSphere => {
            let mut rng = seed::rng(seed);
            DVector::from_iterator(p, (0..p).map(|_| rng.sample::<f64, _>(StandardNormal)))
        }
        CoefScheme::Sparse(k) => {
            if k == 0 || k > p {
                return Err(Error::InvalidScheme(format!("sparse({k}) needs 1 <= k <= p = {p}")));
            }
            DVector::from_fn(p, |j, _| if j < k { 1.0 } else { 0.0 })
        }
    };
    let scale = spec.quad_form(&raw).sqrt();
    if !(scale > 0.0) {
        return Err(Error::InvalidScheme("degenerate coefficient draw".into()));
    }
    Ok(Coefficients { beta: raw / scale })
}

pub fn generate_responses(x: &DMatrix<f64>, beta: &Coefficients, model: &SimModel, seed: u64) -> Result<DVector<f64>> {
    if x.ncols() != beta.beta.len() {
        return Err(Error::Config(format!(
            "X has {} columns but beta has length {}",
            x.ncols(),
            beta.beta.len()
        )));
    }
    let index = x * &beta.beta;
    let mut rng = seed::rng(seed);
    let mut y = DVector::zeros(x.nrows());
    for (yi, t) in y.iter_mut().zip(index.iter()) {
        let m = model.link.eval(*t);
        *yi = match model.noise {
            Noise::Bernoulli => {
                let u: f64 = rng.random();
                if u < m {
                    1.0
                } else {
                    0.0
                }
            }
            Noise::Poisson => {
                if !m.is_finite() || m < 0.0 {
                    return Err(Error::Generation(format!("Poisson mean {m} at index {t}")));
                }
                if m == 0.0 {
                    0.0
                } else {
                    Poisson::new(m)
                        .map_err(|e| Error::Generation(format!("Poisson mean {m}: {e}")))?
                        .sample(&mut rng)
                }
            }
            Noise::Gaussian { mean, variance } => {
                let e: f64 = rng.sample(StandardNormal);
                m + mean + variance.sqrt() * e
            }
        };
    }
    Ok(y)
}

/// Design, coefficients and responses for one replication.
pub fn simulate(
    n: usize,
    spec: &DesignSpec,
    scheme: CoefScheme,
    model: &SimModel,
    seed: u64,
) -> Result<(Dataset, Coefficients)> {
    use crate::seed::{stream_seed, Stream};
    let x = sample_design(n, spec, stream_seed(seed, Stream::Design))?;
    let beta = sample_coefficients(spec.p(), scheme, spec, stream_seed(seed, Stream::Coefficients))?;
    let y = generate_responses(&x, &beta, model, stream_seed(seed, Stream::Responses))?;
    Ok((Dataset::new(x, y)?, beta))
}
