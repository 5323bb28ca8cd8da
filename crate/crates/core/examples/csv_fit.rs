//! Fit a CSV dataset end to end: write one, read it back, run without a split.

use sindex::io::{ingest_csv, write_dataset_csv};
use sindex::pipeline::{run_pipeline, PipelineConfig, SplitConfig};

fn main() -> sindex::Result<()> {
    let dir = std::env::temp_dir().join("sindex-csv-fit");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("data.csv");

    let sim = PipelineConfig::from_json(r#"{"model": "xsqrt", "n": 800, "p": 60, "seed": 2}"#)?;
    let (data, _, _) = sim.simulate()?;
    write_dataset_csv(&path, &data, "count")?;

    let data = ingest_csv(&path, "count")?;
    let cfg = PipelineConfig {
        split: SplitConfig {
            no_split: true,
            ..Default::default()
        },
        ..PipelineConfig::from_json(r#"{"pilot": {"kind": "pois-mle"}, "penalty": {"kind": "none"}}"#)?
    };
    let report = run_pipeline(&data, &cfg, None)?;
    let link = report.link.as_ref().expect("estimated link");
    link.write_csv(&dir.join("link.csv"))?;
    report.inference.write_csv(&dir.join("inference.csv"))?;
    println!(
        "read {} rows x {} features from {}; mu_hat={:.3} sigma_hat^2={:.3}; outputs in {}",
        data.n(),
        data.p(),
        path.display(),
        report.inference.mu_hat,
        report.inference.sigma2_hat,
        dir.display()
    );
    Ok(())
}
