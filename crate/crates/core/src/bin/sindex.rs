use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sindex::experiment::{run_experiment, ExperimentKind, ExperimentResult, ExperimentSpec};
use sindex::io::{ingest_csv, write_dataset_csv};
use sindex::model::ModelVariant;
use sindex::pilot::PilotKind;
use sindex::pipeline::{run_pipeline, PipelineConfig, PipelineReport};
use sindex::surrogate::Penalty;
use sindex::{Error, Result};

/// Single-index model estimation and coordinate-wise inference.
#[derive(Parser)]
#[command(name = "sindex", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a dataset from a configured model and write it as CSV.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Fit the pilot, link and coefficients; writes report.json and link.csv.
    Fit {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        data: DataArgs,
    },
    /// Fit and report per-coordinate tests and intervals; writes inference.csv.
    Infer {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        data: DataArgs,
    },
    /// Run a Monte Carlo experiment: figure1, figure2, figure3, table1 or custom.
    Experiment {
        kind: String,
        #[command(flatten)]
        common: Common,
        /// Number of replications.
        #[arg(long)]
        reps: Option<usize>,
    },
}

#[derive(Args)]
struct Common {
    /// Pipeline configuration as a JSON file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Model variant; `experiment` accepts a comma-separated list.
    #[arg(long)]
    model: Option<String>,
    /// Pilot estimator: ridge, ls, logit-mle or pois-mle.
    #[arg(long)]
    pilot: Option<String>,
    /// Ridge penalty of the coefficient fit; 0 fits without a penalty.
    #[arg(long)]
    lambda: Option<f64>,
    /// Use every observation for both the link and the coefficients.
    #[arg(long)]
    no_split: bool,
    /// Level of the tests and intervals.
    #[arg(long)]
    alpha: Option<f64>,
}

#[derive(Args)]
struct DataArgs {
    /// CSV dataset; without it the configured model is simulated.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Name of the response column in `--data`.
    #[arg(long, default_value = "y")]
    response: String,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { common } => simulate(&common),
        Command::Fit { common, data } => {
            let report = fit(&common, &data)?;
            let dir = out_dir(&common)?;
            fs::write(dir.join("report.json"), report.to_json()?)?;
            if let Some(link) = &report.link {
                link.write_csv(&dir.join("link.csv"))?;
            }
            let inf = &report.inferential;
            println!(
                "n1={} n2={} p={} mu_hat={:.6} sigma2_hat={:.6} iterations={} -> {}",
                report.n1,
                report.n2,
                report.coef.beta_hat.len(),
                inf.mu_hat,
                inf.sigma2_hat,
                report.coef.iterations,
                dir.display()
            );
            Ok(())
        }
        Command::Infer { common, data } => {
            let report = fit(&common, &data)?;
            let dir = out_dir(&common)?;
            report.inference.write_csv(&dir.join("inference.csv"))?;
            fs::write(dir.join("inference.json"), report.inference.to_json()?)?;
            let rejected = report.inference.reject_zero.iter().filter(|&&r| r).count();
            println!(
                "alpha={} rejected {} of {} coordinates -> {}",
                report.inference.alpha,
                rejected,
                report.inference.reject_zero.len(),
                dir.display()
            );
            Ok(())
        }
        Command::Experiment { kind, common, reps } => experiment(&kind, &common, reps),
    }
}

fn out_dir(common: &Common) -> Result<PathBuf> {
    let dir = common.out.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn read_config(path: Option<&Path>) -> Result<(PipelineConfig, Option<serde_json::Value>)> {
    match path {
        None => Ok((PipelineConfig::default(), None)),
        Some(p) => {
            let text =
                fs::read_to_string(p).map_err(|e| Error::Config(format!("cannot read config {}: {e}", p.display())))?;
            let raw: serde_json::Value = serde_json::from_str(&text)?;
            Ok((PipelineConfig::from_json(&text)?, Some(raw)))
        }
    }
}

fn parse_model(name: &str) -> Result<ModelVariant> {
    name.parse()
        .map_err(|_| Error::Config(format!("unknown model `{name}`")))
}

fn configure(common: &Common, data_mode: bool) -> Result<PipelineConfig> {
    let (cfg, raw) = read_config(common.config.as_deref())?;
    // real data is used whole unless the config asks for a split
    let split_given = raw.as_ref().is_some_and(|v| v.get("split").is_some());
    apply_flags(cfg, common, data_mode && !split_given)
}

fn apply_flags(mut cfg: PipelineConfig, common: &Common, whole: bool) -> Result<PipelineConfig> {
    if let Some(seed) = common.seed {
        cfg.seed = seed;
        cfg.split.seed = seed;
    }
    if let Some(m) = &common.model {
        let first = m.split(',').next().unwrap_or_default();
        cfg.model = parse_model(first)?;
    }
    if let Some(kind) = &common.pilot {
        let lambda = match cfg.pilot {
            PilotKind::Ridge { lambda } => lambda,
            _ => 1.0,
        };
        cfg.pilot = PilotKind::from_name(kind, lambda)?;
    }
    if let Some(lambda) = common.lambda {
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(Error::Config(format!("--lambda must be >= 0, got {lambda}")));
        }
        cfg.penalty = if lambda == 0.0 {
            Penalty::None
        } else {
            Penalty::Ridge { lambda }
        };
    }
    if let Some(alpha) = common.alpha {
        cfg.inference.alpha = alpha;
    }
    if common.no_split || whole {
        cfg.split.no_split = true;
    }
    Ok(cfg)
}

fn simulate(common: &Common) -> Result<()> {
    let cfg = configure(common, false)?;
    let (data, beta, _) = cfg.simulate()?;
    let dir = out_dir(common)?;
    write_dataset_csv(&dir.join("data.csv"), &data, "y")?;
    let mut w = csv::Writer::from_path(dir.join("beta.csv"))?;
    w.write_record(["j", "beta"])?;
    for (j, b) in beta.beta.iter().enumerate() {
        w.write_record([(j + 1).to_string(), b.to_string()])?;
    }
    w.flush()?;
    println!(
        "{} n={} p={} seed={} -> {}",
        cfg.model,
        data.n(),
        data.p(),
        cfg.seed,
        dir.display()
    );
    Ok(())
}

fn fit(common: &Common, data: &DataArgs) -> Result<PipelineReport> {
    match &data.data {
        Some(path) => {
            let cfg = configure(common, true)?;
            if cfg.bypass {
                return Err(Error::Config("bypass needs a simulated model, not --data".into()));
            }
            let ds = ingest_csv(path, &data.response)?;
            run_pipeline(&ds, &cfg, None)
        }
        None => {
            let cfg = configure(common, false)?;
            let (ds, _, design) = cfg.simulate()?;
            run_pipeline(&ds, &cfg, Some(design.tau()))
        }
    }
}

fn experiment(kind: &str, common: &Common, reps: Option<usize>) -> Result<()> {
    let kind: ExperimentKind = kind.parse()?;
    let mut spec = ExperimentSpec::desk(kind);
    let base = match common.config {
        Some(_) => read_config(common.config.as_deref())?.0,
        None => spec.pipeline.clone(),
    };
    spec.pipeline = apply_flags(base, common, false)?;
    if let Some(r) = reps {
        spec.reps = r;
    }
    if let Some(seed) = common.seed {
        spec.seed = seed;
    }
    if let Some(models) = &common.model {
        spec.models = models.split(',').map(parse_model).collect::<Result<_>>()?;
    }
    spec.out = common.out.clone();
    let result = run_experiment(&spec)?;
    summarize(&result);
    if let Some(dir) = &spec.out {
        println!("wrote {}", dir.display());
    }
    Ok(())
}

fn summarize(result: &ExperimentResult) {
    match result {
        ExperimentResult::Figure1 { models } => {
            for m in models {
                println!(
                    "{:<10} ks={:.4} mean={:+.4} var={:.4} reps={} failures={}",
                    m.model.name(),
                    m.ks,
                    m.mean,
                    m.variance,
                    m.z.len(),
                    m.failures
                );
            }
        }
        ExperimentResult::Figure2 { rows } => {
            for r in rows {
                println!(
                    "{:<10} n={:<5} p={:<5} loss={:.5} sd={:.5} failures={}",
                    r.model.name(),
                    r.n,
                    r.p,
                    r.mean_loss,
                    r.sd_loss,
                    r.failures
                );
            }
        }
        ExperimentResult::Figure3 { study } | ExperimentResult::Custom { study } => {
            println!(
                "coverage={:.4} ks(T1)={:.4} |mu-mu_n|={:.4} |s2-s2_n|={:.4} reps={} failures={}",
                study.coverage,
                study.ks_t1,
                study.mean_abs_mu_error,
                study.mean_abs_sigma2_error,
                study.reps.len(),
                study.failures
            );
        }
        ExperimentResult::Table1 { rows } => {
            for r in rows {
                println!(
                    "{:<11} {:<10} {:.4} +- {:.4} failures={}",
                    r.model.name(),
                    r.estimator,
                    r.mean,
                    r.sd,
                    r.failures
                );
            }
        }
    }
}
