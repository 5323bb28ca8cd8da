//! Monotonization of gridded functions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Values `vs` on strictly increasing abscissae `xs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    pub xs: Vec<f64>,
    pub vs: Vec<f64>,
}

impl GridFunction {
    pub fn new(xs: Vec<f64>, vs: Vec<f64>) -> Result<Self> {
        if xs.len() != vs.len() || xs.len() < 2 {
            return Err(Error::Config(format!(
                "grid function needs matching lengths >= 2, got {} and {}",
                xs.len(),
                vs.len()
            )));
        }
        if xs.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Config("grid abscissae must be strictly increasing".into()));
        }
        Ok(Self { xs, vs })
    }

    pub fn is_nondecreasing(&self) -> bool {
        self.vs.windows(2).all(|w| w[0] <= w[1])
    }
}

/// `sup_{x' <= x} f(x')`: running maximum from the left.
pub fn monotonize_naive(f: &GridFunction) -> GridFunction {
    let mut run = f64::NEG_INFINITY;
    let vs =
        f.vs.iter()
            .map(|v| {
                run = run.max(*v);
                run
            })
            .collect();
    GridFunction { xs: f.xs.clone(), vs }
}

/// Increasing rearrangement: the values sorted ascending on the same grid.
pub fn rearrange(f: &GridFunction) -> GridFunction {
    let mut vs = f.vs.clone();
    vs.sort_by(f64::total_cmp);
    GridFunction { xs: f.xs.clone(), vs }
}
