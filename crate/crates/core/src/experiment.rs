//! Monte Carlo experiments at desk scale, emitting plot-ready CSV and a JSON
//! manifest.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::deconv::{estimate_link, DeconvConfig};
use crate::error::{Error, Result};
use crate::index::{debias_index, index_zscores};
use crate::inference::{effective_variance_oracle, oracle_params};
use crate::model::{simulate, CoefScheme, DesignSpec, ModelVariant, SimModel};
use crate::pilot::{fit_pilot, glm_mle_fit, least_squares_fit, GlmFamily, GlmOptions, PilotKind};
use crate::pipeline::{run_pipeline, InferenceConfig, ModeKind, PipelineConfig, SplitConfig};
use crate::seed::replication_seed;
use crate::stats::{ks_normal, mean, sd, variance};
use crate::surrogate::Penalty;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Figure1,
    Figure2,
    Figure3,
    Table1,
    Custom,
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "figure1" => Ok(Self::Figure1),
            "figure2" => Ok(Self::Figure2),
            "figure3" => Ok(Self::Figure3),
            "table1" => Ok(Self::Table1),
            "custom" => Ok(Self::Custom),
            other => Err(Error::Config(format!("unknown experiment `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub reps: usize,
    pub models: Vec<ModelVariant>,
    /// `(n, p)` pairs.
    pub sizes: Vec<(usize, usize)>,
    pub out: Option<PathBuf>,
    pub seed: u64,
    /// Pipeline settings for `figure3` and `custom`.
    pub pipeline: PipelineConfig,
}

impl ExperimentSpec {
    /// Desk-scale defaults for each experiment.
    pub fn desk(kind: ExperimentKind) -> Self {
        use ModelVariant::*;
        let base = Self {
            kind,
            reps: 100,
            models: vec![],
            sizes: vec![],
            out: None,
            seed: 20240607,
            pipeline: PipelineConfig::default(),
        };
        match kind {
            ExperimentKind::Figure1 => Self {
                reps: 200,
                models: vec![Cubic, XSqrt, Piecewise],
                sizes: vec![(500, 200)],
                ..base
            },
            ExperimentKind::Figure2 => Self {
                reps: 50,
                models: vec![Piecewise, Cubic, Cloglog, XSqrt],
                sizes: [64, 128, 256, 512]
                    .iter()
                    .map(|&n| (n, (0.6 * n as f64).round() as usize))
                    .collect(),
                ..base
            },
            ExperimentKind::Figure3 => Self {
                reps: 300,
                models: vec![Cloglog],
                sizes: vec![(250, 500)],
                pipeline: PipelineConfig {
                    model: Cloglog,
                    n: 250,
                    p: 500,
                    coefficients: CoefScheme::Sparse(100),
                    pilot: PilotKind::Ridge { lambda: 1.0 },
                    penalty: Penalty::Ridge { lambda: 0.1 },
                    ..PipelineConfig::default()
                },
                ..base
            },
            ExperimentKind::Table1 => Self {
                reps: 100,
                models: vec![Logit, Piecewise, CubicPlus],
                sizes: vec![(2000, 200)],
                ..base
            },
            ExperimentKind::Custom => Self { reps: 20, ..base },
        }
    }

    fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::Config("replications must be at least 1".into()));
        }
        let needs_models = matches!(
            self.kind,
            ExperimentKind::Figure1 | ExperimentKind::Figure2 | ExperimentKind::Table1
        );
        if needs_models && (self.models.is_empty() || self.sizes.is_empty()) {
            return Err(Error::Config("experiment needs at least one model and one size".into()));
        }
        Ok(())
    }
}

/// Pilot used for each model in the index and efficiency experiments.
pub fn default_pilot(model: ModelVariant) -> PilotKind {
    use ModelVariant::*;
    match model {
        Cloglog | Logit => PilotKind::LogitMle,
        XSqrt | Poisson => PilotKind::PoisMle,
        Cubic | Piecewise | CubicPlus | PiecewisePlus => PilotKind::LeastSquares,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Figure1Summary {
    pub model: ModelVariant,
    pub n: usize,
    pub p: usize,
    pub pilot: PilotKind,
    /// First-coordinate z-score of each successful replication.
    pub z: Vec<f64>,
    pub ks: f64,
    pub mean: f64,
    pub variance: f64,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Figure2Row {
    pub model: ModelVariant,
    pub n: usize,
    pub p: usize,
    pub losses: Vec<f64>,
    pub mean_loss: f64,
    pub sd_loss: f64,
    pub failures: usize,
}

/// Per-replication coordinate-1 inference and inferential parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceRep {
    pub rep: usize,
    pub t1: f64,
    pub covered1: bool,
    pub mu_hat: f64,
    pub sigma2_hat: f64,
    pub mu_n: f64,
    pub sigma2_n: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceStudy {
    pub reps: Vec<InferenceRep>,
    pub coverage: f64,
    pub ks_t1: f64,
    pub mean_abs_mu_error: f64,
    pub mean_abs_sigma2_error: f64,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Row {
    pub model: ModelVariant,
    pub estimator: String,
    pub values: Vec<f64>,
    pub mean: f64,
    pub sd: f64,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "kebab-case")]
pub enum ExperimentResult {
    Figure1 { models: Vec<Figure1Summary> },
    Figure2 { rows: Vec<Figure2Row> },
    Figure3 { study: InferenceStudy },
    Table1 { rows: Vec<Table1Row> },
    Custom { study: InferenceStudy },
}

/// Run the experiment, and when `spec.out` is set write its CSV files and
/// `manifest.json` there.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.validate()?;
    let result = match spec.kind {
        ExperimentKind::Figure1 => ExperimentResult::Figure1 { models: figure1(spec)? },
        ExperimentKind::Figure2 => ExperimentResult::Figure2 { rows: figure2(spec)? },
        ExperimentKind::Figure3 => ExperimentResult::Figure3 {
            study: inference_study(&spec.pipeline, spec.reps, spec.seed)?,
        },
        ExperimentKind::Table1 => ExperimentResult::Table1 { rows: table1(spec)? },
        ExperimentKind::Custom => ExperimentResult::Custom {
            study: inference_study(&spec.pipeline, spec.reps, spec.seed)?,
        },
    };
    if let Some(dir) = &spec.out {
        write_outputs(dir, spec, &result)?;
    }
    Ok(result)
}

/// Map replications to results in parallel, keeping replication order and
/// counting failures.
fn replicate<T: Send>(reps: usize, f: impl Fn(usize) -> Result<T> + Sync) -> (Vec<(usize, T)>, usize) {
    let results: Vec<(usize, Result<T>)> = (0..reps).into_par_iter().map(|r| (r, f(r))).collect();
    let mut ok = Vec::with_capacity(reps);
    let mut failures = 0;
    for (r, res) in results {
        match res {
            Ok(v) => ok.push((r, v)),
            Err(_) => failures += 1,
        }
    }
    (ok, failures)
}

fn figure1(spec: &ExperimentSpec) -> Result<Vec<Figure1Summary>> {
    let mut out = Vec::new();
    for (mi, &model) in spec.models.iter().enumerate() {
        for &(n, p) in &spec.sizes {
            let design = DesignSpec::identity(p);
            let sim = SimModel::new(model);
            let pilot = default_pilot(model);
            let base = replication_seed(spec.seed, mi as u64);
            let (ok, failures) = replicate(spec.reps, |r| {
                let (data, beta) = simulate(
                    n,
                    &design,
                    CoefScheme::UniformSphere,
                    &sim,
                    replication_seed(base, r as u64),
                )?;
                let fit = fit_pilot(&data.x, &data.y, pilot)?;
                let idx = debias_index(&data.x, &data.y, &fit)?;
                let z = index_zscores(&idx, &data.x, &beta, &fit)?;
                Ok(z[0])
            });
            let z: Vec<f64> = ok.into_iter().map(|(_, v)| v).collect();
            out.push(Figure1Summary {
                model,
                n,
                p,
                pilot,
                ks: ks_normal(&z),
                mean: mean(&z),
                variance: variance(&z),
                z,
                failures,
            });
        }
    }
    Ok(out)
}

fn figure2(spec: &ExperimentSpec) -> Result<Vec<Figure2Row>> {
    let deconv = DeconvConfig::default();
    let grid = deconv.grid.points()?;
    let mut out = Vec::new();
    for (mi, &model) in spec.models.iter().enumerate() {
        let sim = SimModel::new(model);
        for (si, &(n, p)) in spec.sizes.iter().enumerate() {
            let design = DesignSpec::identity(p);
            let base = replication_seed(replication_seed(spec.seed, mi as u64), si as u64);
            let (ok, failures) = replicate(spec.reps, |r| {
                let (data, _) = simulate(
                    n,
                    &design,
                    CoefScheme::UniformSphere,
                    &sim,
                    replication_seed(base, r as u64),
                )?;
                let fit = fit_pilot(&data.x, &data.y, PilotKind::LeastSquares)?;
                let idx = debias_index(&data.x, &data.y, &fit)?;
                let est = estimate_link(&idx, &data.y, &deconv)?;
                let loss = grid
                    .iter()
                    .zip(&est.ghat)
                    .map(|(x, g)| (g - model.conditional_mean(*x)).powi(2))
                    .sum::<f64>()
                    / grid.len() as f64;
                Ok(loss)
            });
            let losses: Vec<f64> = ok.into_iter().map(|(_, v)| v).collect();
            out.push(Figure2Row {
                model,
                n,
                p,
                mean_loss: mean(&losses),
                sd_loss: sd(&losses),
                losses,
                failures,
            });
        }
    }
    Ok(out)
}

/// Repeated simulation and full pipeline runs under `cfg`, recording the
/// first coordinate's t-statistic and interval together with the oracle
/// inferential parameters.
pub fn inference_study(cfg: &PipelineConfig, reps: usize, seed: u64) -> Result<InferenceStudy> {
    let design = cfg.sigma.design(cfg.p)?;
    let sim = SimModel::new(cfg.model);
    let (ok, failures) = replicate(reps, |r| {
        let rep_seed = replication_seed(seed, r as u64);
        let (data, beta) = simulate(cfg.n, &design, cfg.coefficients, &sim, rep_seed)?;
        let run_cfg = PipelineConfig {
            seed: rep_seed,
            split: SplitConfig {
                seed: rep_seed,
                ..cfg.split
            },
            ..cfg.clone()
        };
        let report = run_pipeline(&data, &run_cfg, Some(design.tau()))?;
        let inf = &report.inference;
        let oracle = oracle_params(&report.coef.beta_hat, &beta.beta, &design)?;
        let b1 = beta.beta[0];
        let t1 =
            (design.p() as f64).sqrt() * design.tau()[0] * (inf.beta_hat[0] - inf.mu_hat * b1) / inf.sigma2_hat.sqrt();
        Ok(InferenceRep {
            rep: r,
            t1,
            covered1: inf.ci_lo[0] <= b1 && b1 <= inf.ci_hi[0],
            mu_hat: inf.mu_hat,
            sigma2_hat: inf.sigma2_hat,
            mu_n: oracle.mu_oracle,
            sigma2_n: oracle.sigma_oracle.powi(2),
        })
    });
    let reps: Vec<InferenceRep> = ok.into_iter().map(|(_, v)| v).collect();
    let t1: Vec<f64> = reps.iter().map(|r| r.t1).collect();
    let covered = reps.iter().filter(|r| r.covered1).count();
    Ok(InferenceStudy {
        coverage: covered as f64 / reps.len().max(1) as f64,
        ks_t1: ks_normal(&t1),
        mean_abs_mu_error: mean(&reps.iter().map(|r| (r.mu_hat - r.mu_n).abs()).collect::<Vec<_>>()),
        mean_abs_sigma2_error: mean(
            &reps
                .iter()
                .map(|r| (r.sigma2_hat - r.sigma2_n).abs())
                .collect::<Vec<_>>(),
        ),
        reps,
        failures,
    })
}

fn comparators(model: ModelVariant) -> Vec<&'static str> {
    use ModelVariant::*;
    match model {
        Cloglog | Logit => vec!["proposed", "ls", "logit-mle"],
        XSqrt | Poisson => vec!["proposed", "ls", "pois-mle"],
        _ => vec!["proposed", "ls"],
    }
}

fn table1(spec: &ExperimentSpec) -> Result<Vec<Table1Row>> {
    let mut out = Vec::new();
    for (mi, &model) in spec.models.iter().enumerate() {
        let sim = SimModel::new(model);
        let estimators = comparators(model);
        for &(n, p) in &spec.sizes {
            let design = DesignSpec::identity(p);
            let cfg = PipelineConfig {
                model,
                n,
                p,
                pilot: default_pilot(model),
                penalty: Penalty::None,
                inference: InferenceConfig {
                    mode: ModeKind::Unregularized,
                    ..Default::default()
                },
                ..PipelineConfig::default()
            };
            let base = replication_seed(spec.seed, mi as u64);
            let (ok, failures) = replicate(spec.reps, |r| {
                let rep_seed = replication_seed(base, r as u64);
                let (data, beta) = simulate(n, &design, CoefScheme::UniformSphere, &sim, rep_seed)?;
                let run_cfg = PipelineConfig {
                    seed: rep_seed,
                    split: SplitConfig {
                        seed: rep_seed,
                        ..cfg.split
                    },
                    ..cfg.clone()
                };
                let report = run_pipeline(&data, &run_cfg, None)?;
                let (_, i2) = crate::pipeline::split_data(n, &run_cfg.split)?;
                let d2 = data.rows(&i2);
                let mut values = Vec::with_capacity(estimators.len());
                for est in &estimators {
                    let b: DVector<f64> = match *est {
                        "proposed" => report.coef.beta_hat.clone(),
                        "ls" => least_squares_fit(&d2.x, &d2.y)?,
                        "logit-mle" => glm_mle_fit(&d2.x, &d2.y, GlmFamily::Logistic, GlmOptions::default())?,
                        _ => glm_mle_fit(&d2.x, &d2.y, GlmFamily::Poisson, GlmOptions::default())?,
                    };
                    // rescaled so that b^T beta = 1, which makes the statistic sigma_n^2 / mu_n^2
                    let cross = b.dot(&beta.beta);
                    if cross == 0.0 {
                        return Err(Error::DegenerateAdjustment(format!("{est}: beta_hat^T beta = 0")));
                    }
                    values.push(effective_variance_oracle(&(b / cross), &beta.beta)?);
                }
                Ok(values)
            });
            for (k, est) in estimators.iter().enumerate() {
                let values: Vec<f64> = ok.iter().map(|(_, v)| v[k]).collect();
                out.push(Table1Row {
                    model,
                    estimator: est.to_string(),
                    mean: mean(&values),
                    sd: sd(&values),
                    values,
                    failures,
                });
            }
        }
    }
    Ok(out)
}

fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn write_study(dir: &Path, name: &str, study: &InferenceStudy) -> Result<(String, String)> {
    let file = format!("{name}_reps.csv");
    write_csv(
        &dir.join(&file),
        &["rep", "t1", "covered1", "mu_hat", "sigma2_hat", "mu_n", "sigma2_n"],
        study.reps.iter().map(|r| {
            vec![
                r.rep.to_string(),
                r.t1.to_string(),
                u8::from(r.covered1).to_string(),
                r.mu_hat.to_string(),
                r.sigma2_hat.to_string(),
                r.mu_n.to_string(),
                r.sigma2_n.to_string(),
            ]
        }),
    )?;
    Ok((file, "one record per successful replication".into()))
}

fn write_outputs(dir: &Path, spec: &ExperimentSpec, result: &ExperimentResult) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut files: Vec<(String, String)> = Vec::new();
    let summary = match result {
        ExperimentResult::Figure1 { models } => {
            write_csv(
                &dir.join("figure1_zscores.csv"),
                &["model", "n", "p", "rep", "z"],
                models.iter().flat_map(|m| {
                    m.z.iter().enumerate().map(move |(r, z)| {
                        vec![
                            m.model.to_string(),
                            m.n.to_string(),
                            m.p.to_string(),
                            r.to_string(),
                            z.to_string(),
                        ]
                    })
                }),
            )?;
            files.push((
                "figure1_zscores.csv".into(),
                "one record per (model, replication)".into(),
            ));
            write_csv(
                &dir.join("figure1_summary.csv"),
                &["model", "n", "p", "pilot", "ks", "mean", "variance", "reps", "failures"],
                models.iter().map(|m| {
                    vec![
                        m.model.to_string(),
                        m.n.to_string(),
                        m.p.to_string(),
                        m.pilot.name().to_string(),
                        m.ks.to_string(),
                        m.mean.to_string(),
                        m.variance.to_string(),
                        m.z.len().to_string(),
                        m.failures.to_string(),
                    ]
                }),
            )?;
            files.push(("figure1_summary.csv".into(), "one record per model".into()));
            serde_json::json!(models
                .iter()
                .map(|m| serde_json::json!({"model": m.model, "ks": m.ks, "mean": m.mean, "variance": m.variance, "failures": m.failures}))
                .collect::<Vec<_>>())
        }
        ExperimentResult::Figure2 { rows } => {
            write_csv(
                &dir.join("figure2_loss.csv"),
                &["model", "n", "p", "mean_loss", "sd_loss", "reps", "failures"],
                rows.iter().map(|r| {
                    vec![
                        r.model.to_string(),
                        r.n.to_string(),
                        r.p.to_string(),
                        r.mean_loss.to_string(),
                        r.sd_loss.to_string(),
                        r.losses.len().to_string(),
                        r.failures.to_string(),
                    ]
                }),
            )?;
            files.push(("figure2_loss.csv".into(), "one record per (model, n)".into()));
            serde_json::json!(rows
                .iter()
                .map(|r| serde_json::json!({"model": r.model, "n": r.n, "mean_loss": r.mean_loss, "failures": r.failures}))
                .collect::<Vec<_>>())
        }
        ExperimentResult::Figure3 { study } | ExperimentResult::Custom { study } => {
            let name = if spec.kind == ExperimentKind::Figure3 {
                "figure3"
            } else {
                "custom"
            };
            files.push(write_study(dir, name, study)?);
            serde_json::json!({
                "coverage": study.coverage,
                "ks_t1": study.ks_t1,
                "mean_abs_mu_error": study.mean_abs_mu_error,
                "mean_abs_sigma2_error": study.mean_abs_sigma2_error,
                "failures": study.failures,
            })
        }
        ExperimentResult::Table1 { rows } => {
            write_csv(
                &dir.join("table1.csv"),
                &["model", "estimator", "mean", "sd", "reps", "failures"],
                rows.iter().map(|r| {
                    vec![
                        r.model.to_string(),
                        r.estimator.clone(),
                        r.mean.to_string(),
                        r.sd.to_string(),
                        r.values.len().to_string(),
                        r.failures.to_string(),
                    ]
                }),
            )?;
            files.push(("table1.csv".into(), "one record per (model, estimator)".into()));
            serde_json::json!(rows
                .iter()
                .map(|r| serde_json::json!({"model": r.model, "estimator": r.estimator, "mean": r.mean, "sd": r.sd}))
                .collect::<Vec<_>>())
        }
    };
    let manifest = serde_json::json!({
        "experiment": spec.kind,
        "spec": spec,
        "seed_scheme": "replication r uses splitmix64(base + r); streams for design, coefficients, responses and split are derived from it",
        "files": files.iter().map(|(f, d)| serde_json::json!({"file": f, "records": d})).collect::<Vec<_>>(),
        "summary": summary,
    });
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(())
}
