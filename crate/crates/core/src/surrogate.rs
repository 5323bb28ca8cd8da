//! Surrogate (matching) loss `G(x^T b) - y x^T b` built from a link and its
//! antiderivative, and coefficient fitting by damped Newton.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::deconv::LinkEstimate;
use crate::error::{Error, Result};
use crate::linalg::WeightedRidge;
use crate::model::LinkFunction;

/// A monotone link usable inside the surrogate loss.
pub trait SurrogateLink: Sync {
    fn value(&self, t: f64) -> f64;
    fn deriv(&self, t: f64) -> f64;
    /// Any antiderivative of `value`.
    fn antideriv(&self, t: f64) -> f64;
}

impl SurrogateLink for LinkFunction {
    fn value(&self, t: f64) -> f64 {
        self.eval(t)
    }

    fn deriv(&self, t: f64) -> f64 {
        LinkFunction::deriv(self, t)
    }

    fn antideriv(&self, t: f64) -> f64 {
        LinkFunction::antideriv(self, t)
    }
}

/// Cumulative trapezoid of `values` over `xs`, starting at zero on the left
/// edge. Exact for the piecewise-linear interpolant of `values`.
pub fn build_antiderivative(xs: &[f64], values: &[f64]) -> Vec<f64> {
    assert_eq!(xs.len(), values.len());
    let mut out = Vec::with_capacity(xs.len());
    let mut acc = 0.0;
    out.push(acc);
    for k in 1..xs.len() {
        acc += 0.5 * (values[k] + values[k - 1]) * (xs[k] - xs[k - 1]);
        out.push(acc);
    }
    out
}

/// Gridded link estimate with its antiderivative, extended beyond the grid
/// by the same linear continuation `eval_link` uses.
#[derive(Debug, Clone)]
pub struct GridLink {
    est: LinkEstimate,
    antideriv: Vec<f64>,
}

impl GridLink {
    pub fn new(est: LinkEstimate) -> Self {
        let antideriv = build_antiderivative(&est.grid, &est.ghat);
        Self { est, antideriv }
    }

    pub fn estimate(&self) -> &LinkEstimate {
        &self.est
    }
}

impl SurrogateLink for GridLink {
    fn value(&self, t: f64) -> f64 {
        self.est.eval(t).0
    }

    fn deriv(&self, t: f64) -> f64 {
        self.est.eval(t).1
    }

    fn antideriv(&self, t: f64) -> f64 {
        let xs = &self.est.grid;
        let vs = &self.est.ghat;
        let last = xs.len() - 1;
        if t <= xs[0] {
            let s = self.est.left_slope();
            let dx = t - xs[0];
            return self.antideriv[0] + vs[0] * dx + 0.5 * s * dx * dx;
        }
        if t >= xs[last] {
            let s = self.est.right_slope();
            let dx = t - xs[last];
            return self.antideriv[last] + vs[last] * dx + 0.5 * s * dx * dx;
        }
        let k = self.est.cell(t);
        let dx = t - xs[k];
        let slope = (vs[k + 1] - vs[k]) / (xs[k + 1] - xs[k]);
        self.antideriv[k] + vs[k] * dx + 0.5 * slope * dx * dx
    }
}

/// Penalty `J(b)`. Ridge is `n lambda ||b||^2 / 2` on the summed loss, i.e.
/// `lambda ||b||^2 / 2` on the average loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Penalty {
    None,
    Ridge { lambda: f64 },
}

impl Penalty {
    pub fn lambda(&self) -> f64 {
        match self {
            Penalty::None => 0.0,
            Penalty::Ridge { lambda } => *lambda,
        }
    }
}

pub struct SurrogateProblem<'a> {
    pub link: &'a dyn SurrogateLink,
    pub penalty: Penalty,
}

impl<'a> SurrogateProblem<'a> {
    pub fn new(link: &'a dyn SurrogateLink, penalty: Penalty) -> Result<Self> {
        if let Penalty::Ridge { lambda } = penalty {
            if !(lambda > 0.0) || !lambda.is_finite() {
                return Err(Error::Config(format!("ridge penalty needs lambda > 0, got {lambda}")));
            }
        }
        Ok(Self { link, penalty })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 100,
            max_halvings: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefFit {
    pub beta_hat: DVector<f64>,
    pub penalty: Penalty,
    pub iterations: usize,
    pub grad_norm: f64,
    pub converged: bool,
    /// Objective value after each accepted step, starting at `b = 0`.
    pub objective_trace: Vec<f64>,
}

struct Eval {
    value: f64,
    grad: DVector<f64>,
    weights: Vec<f64>,
}

fn evaluate(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    link: &dyn SurrogateLink,
    shift: f64,
    b: &DVector<f64>,
) -> Option<Eval> {
    let eta = x * b;
    let mut value = 0.5 * shift * b.norm_squared();
    let mut resid = DVector::zeros(eta.len());
    let mut weights = Vec::with_capacity(eta.len());
    for (i, (t, yi)) in eta.iter().zip(y.iter()).enumerate() {
        value += link.antideriv(*t) - yi * t;
        resid[i] = link.value(*t) - yi;
        weights.push(link.deriv(*t).max(0.0));
    }
    let grad = x.tr_mul(&resid) + b * shift;
    let finite = value.is_finite() && grad.iter().all(|v| v.is_finite()) && weights.iter().all(|v| v.is_finite());
    finite.then_some(Eval { value, grad, weights })
}

fn value_only(x: &DMatrix<f64>, y: &DVector<f64>, link: &dyn SurrogateLink, shift: f64, b: &DVector<f64>) -> f64 {
    let eta = x * b;
    let mut value = 0.5 * shift * b.norm_squared();
    for (t, yi) in eta.iter().zip(y.iter()) {
        value += link.antideriv(*t) - yi * t;
    }
    value
}

/// Damped Newton on `sum_i G(x_i^T b) - y_i x_i^T b + shift ||b||^2 / 2`
/// from `b = 0`. `stop` is consulted after every accepted iterate; returning
/// `true` ends the loop early with `converged = false`.
pub(crate) fn minimize_matching_loss(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    link: &dyn SurrogateLink,
    shift: f64,
    opts: NewtonOptions,
    mut stop: impl FnMut(&DVector<f64>) -> bool,
) -> Result<CoefFit> {
    let p = x.ncols();
    let mut b = DVector::zeros(p);
    let mut cur = evaluate(x, y, link, shift, &b).ok_or(Error::ObjectiveOverflow { iteration: 0 })?;
    let mut trace = vec![cur.value];
    let mut iterations = 0;
    let mut converged = false;
    let penalty = Penalty::None;
    loop {
        let gn = cur.grad.amax();
        if gn < opts.tol {
            converged = true;
            break;
        }
        if iterations >= opts.max_iter {
            break;
        }
        iterations += 1;
        let dir = newton_direction(x, &cur, shift)?;
        let slope = cur.grad.dot(&dir);
        if !(slope < 0.0) {
            break;
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let trial = &b + &dir * step;
            let f = value_only(x, y, link, shift, &trial);
            if f.is_finite() && f <= cur.value + 1e-4 * step * slope {
                accepted = Some((trial, None));
                break;
            }
            // near the optimum the decrease drowns in rounding; take the full
            // step if the objective is flat to rounding and the gradient shrinks
            if step == 1.0 && f.is_finite() && f - cur.value <= 1e-12 * (1.0 + cur.value.abs()) {
                if let Some(e) = evaluate(x, y, link, shift, &trial) {
                    if e.grad.amax() < gn {
                        accepted = Some((trial, Some(e)));
                        break;
                    }
                }
            }
            step *= 0.5;
        }
        let Some((next, eval)) = accepted else {
            break;
        };
        b = next;
        cur = match eval {
            Some(e) => e,
            None => evaluate(x, y, link, shift, &b).ok_or(Error::ObjectiveOverflow { iteration: iterations })?,
        };
        trace.push(cur.value);
        if stop(&b) {
            break;
        }
    }
    Ok(CoefFit {
        grad_norm: cur.grad.amax(),
        beta_hat: b,
        penalty,
        iterations,
        converged,
        objective_trace: trace,
    })
}

fn newton_direction(x: &DMatrix<f64>, cur: &Eval, shift: f64) -> Result<DVector<f64>> {
    let mut jitter = 0.0;
    let scale = cur.weights.iter().sum::<f64>() / cur.weights.len().max(1) as f64;
    // no curvature anywhere (e.g. t^3 at b = 0): take the least-squares direction
    let unit;
    let weights = if scale < 1e-8 {
        unit = vec![1.0; cur.weights.len()];
        &unit
    } else {
        &cur.weights
    };
    for _ in 0..8 {
        match WeightedRidge::new(x, weights, shift + jitter) {
            Ok(f) => return Ok(-f.solve(&cur.grad)),
            Err(Error::Rank(_)) | Err(Error::Solver(_)) => {
                jitter = if jitter == 0.0 {
                    1e-10 * scale.max(1e-8) * x.nrows() as f64
                } else {
                    jitter * 100.0
                };
            }
            Err(e) => return Err(e),
        }
    }
    Err(Error::Solver(
        "Newton system stayed singular after regularization".into(),
    ))
}

/// Objective value, gradient and Hessian of the penalized surrogate loss.
pub fn surrogate_objective(
    b: &DVector<f64>,
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    prob: &SurrogateProblem<'_>,
) -> Result<(f64, DVector<f64>, DMatrix<f64>)> {
    let shift = x.nrows() as f64 * prob.penalty.lambda();
    let e = evaluate(x, y, prob.link, shift, b).ok_or(Error::ObjectiveOverflow { iteration: 0 })?;
    let s = crate::linalg::scale_rows_sqrt(x, &e.weights);
    let mut h = s.transpose() * &s;
    for j in 0..h.nrows() {
        h[(j, j)] += shift;
    }
    Ok((e.value, e.grad, h))
}

/// `argmin_b sum_i l(b; x_i, y_i, g) + J(b)`.
pub fn fit_coefficients(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    prob: &SurrogateProblem<'_>,
    opts: NewtonOptions,
) -> Result<CoefFit> {
    let (n, p) = x.shape();
    if y.len() != n {
        return Err(Error::Config(format!("y has {} entries for {n} rows", y.len())));
    }
    if prob.penalty == Penalty::None && p >= n {
        return Err(Error::Config(format!(
            "unpenalized fit needs n > p (n = {n}, p = {p}); use a ridge penalty"
        )));
    }
    let shift = n as f64 * prob.penalty.lambda();
    let mut fit = minimize_matching_loss(x, y, prob.link, shift, opts, |_| false)?;
    fit.penalty = prob.penalty;
    if !fit.converged {
        return Err(Error::NonConvergence {
            iterations: fit.iterations,
            grad_norm: fit.grad_norm,
        });
    }
    Ok(fit)
}
