//! Dense linear-algebra helpers shared by the pilot, surrogate and inference
//! stages.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

/// Rows of `x` scaled by `sqrt(d_i)`.
pub(crate) fn scale_rows_sqrt(x: &DMatrix<f64>, d: &[f64]) -> DMatrix<f64> {
    let mut s = x.clone();
    let roots: Vec<f64> = d.iter().map(|v| v.max(0.0).sqrt()).collect();
    for mut col in s.column_iter_mut() {
        for (v, r) in col.iter_mut().zip(&roots) {
            *v *= r;
        }
    }
    s
}

pub(crate) fn cholesky(m: DMatrix<f64>, what: &str) -> Result<Cholesky<f64, Dyn>> {
    Cholesky::new(m).ok_or_else(|| Error::Solver(format!("{what} is not positive definite")))
}

enum Factor {
    /// Cholesky of `X^T D X + c I` (p x p).
    Primal(Cholesky<f64, Dyn>),
    /// Cholesky of `S S^T + c I` (n x n) with `S = D^{1/2} X`.
    Dual { chol: Cholesky<f64, Dyn>, s: DMatrix<f64> },
}

/// One factorization of `H = X^T D X + c I` reused for Newton solves and
/// the residual trace `tr(D - D X H^{-1} X^T D)`.
///
/// When `p > n` and `c > 0` the factorization is done on the `n x n` dual
/// system via the Woodbury identity.
pub struct WeightedRidge<'a> {
    x: &'a DMatrix<f64>,
    d: Vec<f64>,
    shift: f64,
    factor: Factor,
}

impl<'a> WeightedRidge<'a> {
    pub fn new(x: &'a DMatrix<f64>, d: &[f64], shift: f64) -> Result<Self> {
        let (n, p) = x.shape();
        if d.len() != n {
            return Err(Error::Config(format!("weight length {} != rows {n}", d.len())));
        }
        if d.iter().any(|v| !v.is_finite() || *v < 0.0) || !shift.is_finite() || shift < 0.0 {
            return Err(Error::Solver("weights must be finite and nonnegative".into()));
        }
        let s = scale_rows_sqrt(x, d);
        let factor = if p > n && shift > 0.0 {
            let mut k = &s * s.transpose();
            for i in 0..n {
                k[(i, i)] += shift;
            }
            Factor::Dual {
                chol: cholesky(k, "dual ridge system")?,
                s,
            }
        } else {
            let mut h = s.transpose() * &s;
            for j in 0..p {
                h[(j, j)] += shift;
            }
            let singular = || Error::Rank(format!("X^T D X + {shift} I is singular (n = {n}, p = {p})"));
            let chol = Cholesky::new(h).ok_or_else(singular)?;
            let diag = chol.l_dirty().diagonal();
            let (lo, hi) = diag
                .iter()
                .fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
            if !(lo > 0.0) || (lo / hi).powi(2) < 1e-13 {
                return Err(singular());
            }
            Factor::Primal(chol)
        };
        Ok(Self {
            x,
            d: d.to_vec(),
            shift,
            factor,
        })
    }

    /// Solve `H z = rhs`.
    pub fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        match &self.factor {
            Factor::Primal(chol) => chol.solve(rhs),
            Factor::Dual { chol, s } => {
                let sr = s * rhs;
                let inner = chol.solve(&sr);
                (rhs - s.transpose() * inner) / self.shift
            }
        }
    }

    /// `tr(D - D X H^{-1} X^T D)`, not normalized by `n`.
    pub fn residual_trace(&self) -> f64 {
        match &self.factor {
            Factor::Primal(chol) => {
                // x_i^T H^{-1} x_i = ||L^{-1} x_i||^2
                let a = chol
                    .l()
                    .solve_lower_triangular(&self.x.transpose())
                    .expect("Cholesky factor has a positive diagonal");
                self.d
                    .iter()
                    .zip(a.column_iter())
                    .map(|(di, col)| di - di * di * col.norm_squared())
                    .sum()
            }
            Factor::Dual { chol, .. } => {
                // I - S (S^T S + cI)^{-1} S^T = c (S S^T + cI)^{-1}
                let inv = chol.inverse();
                self.d
                    .iter()
                    .enumerate()
                    .map(|(i, di)| self.shift * di * inv[(i, i)])
                    .sum()
            }
        }
    }
}
