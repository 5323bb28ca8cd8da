//! Deconvolution kernel, bandwidth choice, Nadaraya–Watson deconvolution on
//! a grid and the final monotone link estimate.

use std::f64::consts::PI;
use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::IndexEstimate;
use crate::monotonize::{monotonize_naive, rearrange, GridFunction};
use crate::quadrature::GaussLegendre;

/// Largest exponent allowed in `exp(t^2 varsigma^2 / (2 h^2))`.
const MAX_EXPONENT: f64 = 700.0;

/// Kernel given by its Fourier transform `phi_K(t) = (1 - (t/M0)^2)^power`
/// on `[-M0, M0]`, zero outside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KernelSpec {
    pub power: u32,
    pub m0: f64,
    pub order: u32,
}

impl Default for KernelSpec {
    fn default() -> Self {
        Self {
            power: 3,
            m0: 1.0,
            order: 2,
        }
    }
}

impl KernelSpec {
    pub fn fourier(&self, t: f64) -> f64 {
        let s = t / self.m0;
        if s.abs() >= 1.0 {
            0.0
        } else {
            (1.0 - s * s).powi(self.power as i32)
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.m0 > 0.0) || !self.m0.is_finite() || self.power == 0 {
            return Err(Error::Config(format!("invalid kernel spec {self:?}")));
        }
        Ok(())
    }
}

/// `K_n(u) = (1/pi) int_0^M0 cos(t u) phi_K(t) exp(t^2 varsigma^2 / (2 h^2)) dt`,
/// stored as Gauss–Legendre nodes and combined weights.
#[derive(Debug, Clone)]
pub struct DeconvKernel {
    nodes: Vec<f64>,
    coef: Vec<f64>,
}

impl DeconvKernel {
    pub fn new(h: f64, varsigma: f64, spec: &KernelSpec, nodes: usize) -> Result<Self> {
        spec.validate()?;
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::Config(format!("bandwidth must be positive, got {h}")));
        }
        if nodes < 64 {
            return Err(Error::Config(format!("need at least 64 quadrature nodes, got {nodes}")));
        }
        let exponent = spec.m0 * spec.m0 * varsigma * varsigma / (2.0 * h * h);
        if !(exponent <= MAX_EXPONENT) {
            return Err(Error::KernelOverflow { exponent });
        }
        let rule = GaussLegendre::on_interval(nodes, 0.0, spec.m0);
        let scale = varsigma * varsigma / (2.0 * h * h);
        let coef = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(t, w)| w * spec.fourier(*t) * (t * t * scale).exp() / PI)
            .collect();
        Ok(Self {
            nodes: rule.nodes,
            coef,
        })
    }

    pub fn eval(&self, u: f64) -> f64 {
        self.nodes.iter().zip(&self.coef).map(|(t, c)| c * (t * u).cos()).sum()
    }
}

pub fn deconv_kernel_eval(u: f64, h: f64, varsigma: f64, spec: &KernelSpec, nodes: usize) -> Result<f64> {
    Ok(DeconvKernel::new(h, varsigma, spec, nodes)?.eval(u))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum BandwidthMode {
    Fixed {
        h: f64,
    },
    /// `h = (c_h log n)^{-1/2}` with `2 M0^2 varsigma^2 c_h < 1` enforced.
    Theory {
        c_h: f64,
    },
    /// Theory mode at `c_h = 0.45 / (M0^2 varsigma^2)`, with `h` floored at
    /// `0.5 n^{-1/5}` so that small `varsigma` does not collapse the window.
    #[default]
    Auto,
}

pub fn select_bandwidth(n: usize, varsigma: f64, spec: &KernelSpec, mode: BandwidthMode) -> Result<f64> {
    if n < 2 {
        return Err(Error::Config(format!("bandwidth selection needs n >= 2, got {n}")));
    }
    let log_n = (n as f64).ln();
    let m2s2 = spec.m0 * spec.m0 * varsigma * varsigma;
    match mode {
        BandwidthMode::Fixed { h } => {
            if !(h > 0.0) || !h.is_finite() {
                return Err(Error::Config(format!("fixed bandwidth must be positive, got {h}")));
            }
            Ok(h)
        }
        BandwidthMode::Theory { c_h } => {
            if !(c_h > 0.0) || !c_h.is_finite() {
                return Err(Error::Config(format!("c_h must be positive, got {c_h}")));
            }
            let value = 2.0 * m2s2 * c_h;
            if value >= 1.0 {
                return Err(Error::BandwidthConstraint { value });
            }
            Ok((c_h * log_n).powf(-0.5))
        }
        BandwidthMode::Auto => {
            let floor = 0.5 * (n as f64).powf(-0.2);
            if m2s2 == 0.0 {
                return Ok(floor);
            }
            Ok((0.45 / m2s2 * log_n).powf(-0.5).max(floor))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Monotonizer {
    Naive,
    #[default]
    Rearrange,
}

/// Equispaced evaluation grid on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            lo: -3.0,
            hi: 3.0,
            points: 301,
        }
    }
}

impl GridSpec {
    pub fn points(&self) -> Result<Vec<f64>> {
        if !(self.lo < self.hi) || self.points < 2 || !self.lo.is_finite() || !self.hi.is_finite() {
            return Err(Error::Config(format!("invalid grid {self:?}")));
        }
        let step = (self.hi - self.lo) / (self.points - 1) as f64;
        Ok((0..self.points)
            .map(|k| {
                if k + 1 == self.points {
                    self.hi
                } else {
                    self.lo + step * k as f64
                }
            })
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DeconvConfig {
    pub kernel: KernelSpec,
    pub grid: GridSpec,
    pub bandwidth: BandwidthMode,
    pub monotonizer: Monotonizer,
    /// Derivative floor.
    pub eps: f64,
    /// Quadrature nodes for the kernel integral.
    pub nodes: usize,
    /// Grid points with `|denominator| < mask_tol * n` are masked.
    pub mask_tol: f64,
}

impl Default for DeconvConfig {
    fn default() -> Self {
        Self {
            kernel: KernelSpec::default(),
            grid: GridSpec::default(),
            bandwidth: BandwidthMode::Auto,
            monotonizer: Monotonizer::Rearrange,
            eps: 1e-3,
            nodes: 256,
            mask_tol: 1e-8,
        }
    }
}

/// Raw deconvolution estimate on the grid with its validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct NwGrid {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub valid: Vec<bool>,
}

/// `sum_i y_i K_n((x - W_i)/h) / sum_i K_n((x - W_i)/h)` at every grid point.
///
/// Expanding `cos(t (x - W)/h)` turns the double sum over observations and
/// quadrature nodes into per-node trigonometric moments of the data, so the
/// cost is `O((n + G) K)` rather than `O(n G K)`.
pub fn nw_deconv_grid(index: &IndexEstimate, y: &DVector<f64>, h: f64, config: &DeconvConfig) -> Result<NwGrid> {
    let n = index.w.len();
    if y.len() != n || n == 0 {
        return Err(Error::Config(format!("index has {n} entries but y has {}", y.len())));
    }
    let kernel = DeconvKernel::new(h, index.varsigma(), &config.kernel, config.nodes)?;
    let grid = config.grid.points()?;
    let k = kernel.nodes.len();
    let freqs: Vec<f64> = kernel.nodes.iter().map(|t| t / h).collect();
    // moments[k] = (sum cos, sum sin, sum y cos, sum y sin)
    let mut moments = vec![[0.0f64; 4]; k];
    for (wi, yi) in index.w.iter().zip(y.iter()) {
        for (m, f) in moments.iter_mut().zip(&freqs) {
            let (s, c) = (f * wi).sin_cos();
            m[0] += c;
            m[1] += s;
            m[2] += yi * c;
            m[3] += yi * s;
        }
    }
    let threshold = config.mask_tol * n as f64;
    let mut values = Vec::with_capacity(grid.len());
    let mut valid = Vec::with_capacity(grid.len());
    for x in &grid {
        let (mut num, mut den) = (0.0, 0.0);
        for ((m, f), c) in moments.iter().zip(&freqs).zip(&kernel.coef) {
            let (s, co) = (f * x).sin_cos();
            den += c * (co * m[0] + s * m[1]);
            num += c * (co * m[2] + s * m[3]);
        }
        let ok = den.abs() >= threshold && (num / den).is_finite();
        valid.push(ok);
        values.push(if ok { num / den } else { f64::NAN });
    }
    if !valid.iter().any(|v| *v) {
        return Err(Error::EmptyEstimate);
    }
    Ok(NwGrid { grid, values, valid })
}

/// Monotone link estimate on a grid, extended linearly outside it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkEstimate {
    pub grid: Vec<f64>,
    pub ghat: Vec<f64>,
    pub ghat_deriv: Vec<f64>,
    pub varsigma2: f64,
    pub h: f64,
    pub window: (f64, f64),
    pub eps: f64,
}

impl LinkEstimate {
    /// Wrap nondecreasing grid values, computing floored central-difference
    /// derivatives.
    pub fn from_values(grid: Vec<f64>, ghat: Vec<f64>, eps: f64, varsigma2: f64, h: f64) -> Self {
        let m = grid.len();
        assert!(m >= 2 && ghat.len() == m);
        let ghat_deriv = (0..m)
            .map(|k| {
                let (lo, hi) = (k.saturating_sub(1), (k + 1).min(m - 1));
                ((ghat[hi] - ghat[lo]) / (grid[hi] - grid[lo])).max(eps)
            })
            .collect();
        Self {
            window: (grid[0], grid[m - 1]),
            grid,
            ghat,
            ghat_deriv,
            varsigma2,
            h,
            eps,
        }
    }

    pub fn left_slope(&self) -> f64 {
        self.ghat_deriv[0]
    }

    pub fn right_slope(&self) -> f64 {
        self.ghat_deriv[self.ghat_deriv.len() - 1]
    }

    /// Index `k` of the cell `[x_k, x_{k+1}]` containing `t` (clamped).
    pub(crate) fn cell(&self, t: f64) -> usize {
        let k = self.grid.partition_point(|x| *x <= t);
        k.saturating_sub(1).min(self.grid.len() - 2)
    }

    /// `(g(t), g'(t))`: linear interpolation inside the window, linear
    /// extrapolation with the edge derivative outside.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        let last = self.grid.len() - 1;
        if t < self.grid[0] {
            let s = self.left_slope();
            return (self.ghat[0] + s * (t - self.grid[0]), s);
        }
        if t > self.grid[last] {
            let s = self.right_slope();
            return (self.ghat[last] + s * (t - self.grid[last]), s);
        }
        let k = self.cell(t);
        let (x0, x1) = (self.grid[k], self.grid[k + 1]);
        let slope = (self.ghat[k + 1] - self.ghat[k]) / (x1 - x0);
        (self.ghat[k] + slope * (t - x0), slope.max(self.eps))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["x", "ghat", "ghat_deriv"])?;
        for ((x, g), d) in self.grid.iter().zip(&self.ghat).zip(&self.ghat_deriv) {
            w.write_record([x.to_string(), g.to_string(), d.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn eval_link(est: &LinkEstimate, x: f64) -> (f64, f64) {
    est.eval(x)
}

/// Replace masked entries by the value of the nearest valid grid point
/// (ties go left).
fn fill_nearest(values: &mut [f64], valid: &[bool]) {
    let m = values.len();
    let mut left = vec![None; m];
    let mut right = vec![None; m];
    let mut last = None;
    for k in 0..m {
        if valid[k] {
            last = Some(k);
        }
        left[k] = last;
    }
    last = None;
    for k in (0..m).rev() {
        if valid[k] {
            last = Some(k);
        }
        right[k] = last;
    }
    for k in 0..m {
        if valid[k] {
            continue;
        }
        let pick = match (left[k], right[k]) {
            (Some(l), Some(r)) => {
                if r - k < k - l {
                    r
                } else {
                    l
                }
            }
            (Some(l), None) => l,
            (None, Some(r)) => r,
            (None, None) => return,
        };
        values[k] = values[pick];
    }
}

/// Bandwidth, grid deconvolution, gap filling, monotonization and floored
/// derivatives.
pub fn estimate_link(index: &IndexEstimate, y: &DVector<f64>, config: &DeconvConfig) -> Result<LinkEstimate> {
    if !(config.eps > 0.0) {
        return Err(Error::Config(format!(
            "derivative floor must be positive, got {}",
            config.eps
        )));
    }
    let h = select_bandwidth(index.w.len(), index.varsigma(), &config.kernel, config.bandwidth)?;
    let raw = nw_deconv_grid(index, y, h, config)?;
    let mut values = raw.values;
    fill_nearest(&mut values, &raw.valid);
    let f = GridFunction::new(raw.grid, values)?;
    let mono = match config.monotonizer {
        Monotonizer::Naive => monotonize_naive(&f),
        Monotonizer::Rearrange => rearrange(&f),
    };
    Ok(LinkEstimate::from_values(
        mono.xs,
        mono.vs,
        config.eps,
        index.varsigma2,
        h,
    ))
}
