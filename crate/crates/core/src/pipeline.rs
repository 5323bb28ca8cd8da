//! Sample splitting and the end-to-end estimator: pilot, index, link,
//! coefficients, inference.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::deconv::{estimate_link, DeconvConfig, LinkEstimate};
use crate::error::{Error, Result};
use crate::index::{debias_index, IndexEstimate};
use crate::inference::{adjust_inferential, marginal_inference, InferenceMode, InferenceReport, InferentialEstimate};
use crate::model::{simulate, CoefScheme, Coefficients, Dataset, DesignSpec, LinkFunction, ModelVariant, SimModel};
use crate::pilot::{fit_pilot, PilotFit, PilotKind};
use crate::seed;
use crate::surrogate::{fit_coefficients, CoefFit, GridLink, NewtonOptions, Penalty, SurrogateLink, SurrogateProblem};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitConfig {
    /// Share of observations in the pilot half `I_1`.
    pub fraction: f64,
    /// Use every observation in both stages.
    pub no_split: bool,
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            fraction: 0.5,
            no_split: false,
            seed: 0,
        }
    }
}

/// Disjoint `(I_1, I_2)` from a seeded shuffle, each sorted ascending.
pub fn split_data(n: usize, cfg: &SplitConfig) -> Result<(Vec<usize>, Vec<usize>)> {
    if cfg.no_split {
        if n == 0 {
            return Err(Error::Split("no observations".into()));
        }
        let all: Vec<usize> = (0..n).collect();
        return Ok((all.clone(), all));
    }
    if !(cfg.fraction > 0.0 && cfg.fraction < 1.0) {
        return Err(Error::Split(format!(
            "fraction must lie in (0, 1), got {}",
            cfg.fraction
        )));
    }
    let n1 = (cfg.fraction * n as f64).round() as usize;
    if n1 == 0 || n1 >= n {
        return Err(Error::Split(format!(
            "fraction {} of n = {n} leaves an empty part",
            cfg.fraction
        )));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut seed::rng(seed::stream_seed(cfg.seed, seed::Stream::Split)));
    let mut first = perm[..n1].to_vec();
    let mut second = perm[n1..].to_vec();
    first.sort_unstable();
    second.sort_unstable();
    Ok((first, second))
}

/// Covariance of a simulated design: `"identity"`, `{"ar1": rho}` or a full matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SigmaConfig {
    Named(String),
    Ar1 { ar1: f64 },
    Matrix(Vec<Vec<f64>>),
}

impl Default for SigmaConfig {
    fn default() -> Self {
        SigmaConfig::Named("identity".into())
    }
}

impl SigmaConfig {
    pub fn design(&self, p: usize) -> Result<DesignSpec> {
        match self {
            SigmaConfig::Named(name) if name == "identity" => Ok(DesignSpec::identity(p)),
            SigmaConfig::Named(name) => Err(Error::Config(format!("unknown sigma `{name}`"))),
            SigmaConfig::Ar1 { ar1 } => DesignSpec::ar1(p, *ar1),
            SigmaConfig::Matrix(rows) => {
                if rows.len() != p || rows.iter().any(|r| r.len() != p) {
                    return Err(Error::Config(format!("sigma must be {p} x {p}")));
                }
                DesignSpec::from_covariance(DMatrix::from_fn(p, p, |i, j| rows[i][j]))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeKind {
    /// Ridge mode for a ridge penalty, unregularized otherwise.
    #[default]
    Auto,
    Ridge,
    Unregularized,
    Censored,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InferenceConfig {
    pub mode: ModeKind,
    pub alpha: f64,
    /// Censoring window; defaults to the link grid window.
    pub window: Option<(f64, f64)>,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        Self {
            mode: ModeKind::Auto,
            alpha: 0.05,
            window: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub model: ModelVariant,
    pub n: usize,
    pub p: usize,
    pub sigma: SigmaConfig,
    pub coefficients: CoefScheme,
    pub pilot: PilotKind,
    pub deconv: DeconvConfig,
    pub penalty: Penalty,
    pub inference: InferenceConfig,
    pub split: SplitConfig,
    /// Seed of the simulated data.
    pub seed: u64,
    /// Replace the estimated link by the model's true link.
    pub bypass: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            model: ModelVariant::Cloglog,
            n: 400,
            p: 160,
            sigma: SigmaConfig::default(),
            coefficients: CoefScheme::UniformSphere,
            pilot: PilotKind::Ridge { lambda: 1.0 },
            deconv: DeconvConfig::default(),
            penalty: Penalty::Ridge { lambda: 0.1 },
            inference: InferenceConfig::default(),
            split: SplitConfig::default(),
            seed: 0,
            bypass: false,
        }
    }
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn inference_mode(&self) -> Result<InferenceMode> {
        let ridge = |lambda| InferenceMode::Ridge { lambda };
        match (self.inference.mode, self.penalty) {
            (ModeKind::Auto | ModeKind::Ridge, Penalty::Ridge { lambda }) => Ok(ridge(lambda)),
            (ModeKind::Auto | ModeKind::Unregularized, Penalty::None) => Ok(InferenceMode::Unregularized),
            (ModeKind::Censored, Penalty::None) => {
                let (a, b) = self
                    .inference
                    .window
                    .unwrap_or((self.deconv.grid.lo, self.deconv.grid.hi));
                Ok(InferenceMode::Censored { a, b })
            }
            (mode, penalty) => Err(Error::Config(format!(
                "inference mode {mode:?} is inconsistent with penalty {penalty:?}"
            ))),
        }
    }

    /// Simulated dataset described by `model`, `n`, `p`, `sigma` and `seed`.
    pub fn simulate(&self) -> Result<(Dataset, Coefficients, DesignSpec)> {
        let design = self.sigma.design(self.p)?;
        let (data, beta) = simulate(
            self.n,
            &design,
            self.coefficients,
            &SimModel::new(self.model),
            self.seed,
        )?;
        Ok((data, beta, design))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub config: PipelineConfig,
    pub n1: usize,
    pub n2: usize,
    pub kappa1: f64,
    pub kappa2: f64,
    pub pilot: PilotFit,
    pub index: IndexEstimate,
    /// Absent in bypass mode.
    pub link: Option<LinkEstimate>,
    pub coef: CoefFit,
    pub inferential: InferentialEstimate,
    pub inference: InferenceReport,
}

impl PipelineReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Run every stage on `data` with the configured split. `tau` defaults to ones.
pub fn run_pipeline(data: &Dataset, config: &PipelineConfig, tau: Option<&[f64]>) -> Result<PipelineReport> {
    let (i1, i2) = split_data(data.n(), &config.split)?;
    let link = config.bypass.then(|| config.model.link());
    run_pipeline_on(data, config, &i1, &i2, tau, link)
}

/// Run every stage with the surrogate step using the supplied true link.
pub fn run_pipeline_bypass(
    data: &Dataset,
    config: &PipelineConfig,
    link: LinkFunction,
    tau: Option<&[f64]>,
) -> Result<PipelineReport> {
    let (i1, i2) = split_data(data.n(), &config.split)?;
    run_pipeline_on(data, config, &i1, &i2, tau, Some(link))
}

/// Run every stage on explicit index sets.
pub fn run_pipeline_on(
    data: &Dataset,
    config: &PipelineConfig,
    i1: &[usize],
    i2: &[usize],
    tau: Option<&[f64]>,
    true_link: Option<LinkFunction>,
) -> Result<PipelineReport> {
    let p = data.p();
    if i1.is_empty() || i2.is_empty() || i1.iter().chain(i2).any(|&i| i >= data.n()) {
        return Err(Error::Split("index sets must be nonempty and within range".into()));
    }
    let ones = vec![1.0; p];
    let tau = tau.unwrap_or(&ones);
    let mode = config.inference_mode()?;
    let d1 = data.rows(i1);
    let d2 = data.rows(i2);

    let pilot = fit_pilot(&d1.x, &d1.y, config.pilot).map_err(|e| e.at("pilot"))?;
    let index = debias_index(&d1.x, &d1.y, &pilot).map_err(|e| e.at("index"))?;

    let (link_est, grid_link) = match true_link {
        Some(_) => (None, None),
        None => {
            let est = estimate_link(&index, &d1.y, &config.deconv).map_err(|e| e.at("link"))?;
            (Some(est.clone()), Some(GridLink::new(est)))
        }
    };
    let link: &dyn SurrogateLink = match (&true_link, &grid_link) {
        (Some(l), _) => l,
        (None, Some(g)) => g,
        (None, None) => unreachable!(),
    };

    let prob = SurrogateProblem::new(link, config.penalty).map_err(|e| e.at("surrogate"))?;
    let coef = fit_coefficients(&d2.x, &d2.y, &prob, NewtonOptions::default()).map_err(|e| e.at("surrogate"))?;
    let inferential = adjust_inferential(&d2.x, &d2.y, &coef.beta_hat, link, mode).map_err(|e| e.at("inference"))?;
    let inference = marginal_inference(
        &coef.beta_hat,
        inferential.mu_hat,
        inferential.sigma2_hat,
        tau,
        config.inference.alpha,
        None,
    )
    .map_err(|e| e.at("inference"))?
    .with_mode(mode);

    Ok(PipelineReport {
        config: config.clone(),
        n1: i1.len(),
        n2: i2.len(),
        kappa1: p as f64 / i1.len() as f64,
        kappa2: p as f64 / i2.len() as f64,
        pilot,
        index,
        link: link_est,
        coef,
        inferential,
        inference,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_contract() {
        let cfg = SplitConfig {
            fraction: 0.5,
            no_split: false,
            seed: 9,
        };
        let (a, b) = split_data(10, &cfg).unwrap();
        assert_eq!((a.len(), b.len()), (5, 5));
        let mut all: Vec<usize> = a.iter().chain(&b).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        assert_eq!(split_data(10, &cfg).unwrap(), (a, b));
        let (a, b) = split_data(7, &SplitConfig { no_split: true, ..cfg }).unwrap();
        assert_eq!(a, (0..7).collect::<Vec<_>>());
        assert_eq!(a, b);
        assert!(split_data(1, &cfg).is_err());
        assert!(split_data(10, &SplitConfig { fraction: 1.0, ..cfg }).is_err());
    }

    #[test]
    fn config_parses_partial_json() {
        let cfg = PipelineConfig::from_json(
            r#"{"model": "piecewise", "n": 200, "p": 40, "sigma": {"ar1": 0.3},
                "pilot": {"kind": "ls"}, "penalty": {"kind": "none"},
                "inference": {"mode": "censored", "alpha": 0.1},
                "split": {"no_split": true}}"#,
        )
        .unwrap();
        assert_eq!(cfg.model, ModelVariant::Piecewise);
        assert_eq!(cfg.pilot, PilotKind::LeastSquares);
        assert!(cfg.split.no_split);
        assert_eq!(
            cfg.inference_mode().unwrap(),
            InferenceMode::Censored { a: -3.0, b: 3.0 }
        );
        assert_eq!(cfg.sigma.design(3).unwrap().tau().len(), 3);
        assert!(PipelineConfig::from_json(r#"{"model": "nope"}"#).is_err());
        let bad = PipelineConfig {
            inference: InferenceConfig {
                mode: ModeKind::Ridge,
                ..Default::default()
            },
            penalty: Penalty::None,
            ..Default::default()
        };
        assert!(bad.inference_mode().is_err());
    }

    #[test]
    fn smoke_run_and_determinism() {
        let cfg = PipelineConfig {
            n: 400,
            p: 160,
            seed: 3,
            ..Default::default()
        };
        let (data, _, _) = cfg.simulate().unwrap();
        let a = run_pipeline(&data, &cfg, None).unwrap();
        let link = a.link.as_ref().unwrap();
        assert!(link.ghat.windows(2).all(|w| w[0] <= w[1]));
        assert!(a.inferential.mu_hat.is_finite() && a.inferential.sigma2_hat.is_finite());
        assert_eq!(a.inference.ci_lo.len(), 160);
        assert_eq!(a.kappa1, 160.0 / a.n1 as f64);
        assert_eq!(a.kappa2, 160.0 / a.n2 as f64);
        let b = run_pipeline(&data, &cfg, None).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    }

    #[test]
    fn bypass_matches_direct_fit() {
        let cfg = PipelineConfig {
            n: 300,
            p: 60,
            seed: 5,
            ..Default::default()
        };
        let (data, _, _) = cfg.simulate().unwrap();
        let rep = run_pipeline_bypass(&data, &cfg, LinkFunction::Cloglog, None).unwrap();
        assert!(rep.link.is_none());
        let (_, i2) = split_data(300, &cfg.split).unwrap();
        let d2 = data.rows(&i2);
        let prob = SurrogateProblem::new(&LinkFunction::Cloglog, cfg.penalty).unwrap();
        let direct = fit_coefficients(&d2.x, &d2.y, &prob, NewtonOptions::default()).unwrap();
        assert_eq!(rep.coef.beta_hat, direct.beta_hat);
    }

    #[test]
    fn no_split_matches_manual_full_sets() {
        let cfg = PipelineConfig {
            n: 300,
            p: 30,
            seed: 6,
            split: SplitConfig {
                no_split: true,
                ..Default::default()
            },
            ..Default::default()
        };
        let (data, _, _) = cfg.simulate().unwrap();
        let all: Vec<usize> = (0..300).collect();
        let a = run_pipeline(&data, &cfg, None).unwrap();
        let b = run_pipeline_on(&data, &cfg, &all, &all, None, None).unwrap();
        assert_eq!(a, b);
    }
}
