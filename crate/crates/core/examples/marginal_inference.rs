//! End-to-end pipeline run with per-coordinate tests and intervals.

use sindex::inference::oracle_params;
use sindex::model::CoefScheme;
use sindex::pipeline::{run_pipeline, PipelineConfig};

fn main() -> sindex::Result<()> {
    let cfg = PipelineConfig::from_json(
        r#"{"model": "cloglog", "n": 600, "p": 120, "coefficients": {"sparse": 10},
            "pilot": {"kind": "logit-mle"}, "penalty": {"kind": "ridge", "lambda": 0.1}, "seed": 17}"#,
    )?;
    assert_eq!(cfg.coefficients, CoefScheme::Sparse(10));
    let (data, beta, design) = cfg.simulate()?;
    let report = run_pipeline(&data, &cfg, Some(design.tau()))?;
    let inf = &report.inference;
    let oracle = oracle_params(&report.coef.beta_hat, &beta.beta, &design)?;
    println!(
        "mu_hat={:.3} (oracle {:.3})  sigma_hat^2={:.3} (oracle {:.3})",
        inf.mu_hat,
        oracle.mu_oracle,
        inf.sigma2_hat,
        oracle.sigma_oracle.powi(2)
    );
    println!(
        "{:>3} {:>8} {:>8} {:>8} {:>17} {:>7}",
        "j", "beta", "beta_hat", "T", "CI", "p"
    );
    for j in [0, 1, 2, 9, 10, 11, 50] {
        println!(
            "{:>3} {:>8.3} {:>8.3} {:>8.3} [{:>7.3},{:>7.3}] {:>7.4}",
            j + 1,
            beta.beta[j],
            inf.beta_hat[j],
            inf.t_stats[j],
            inf.ci_lo[j],
            inf.ci_hi[j],
            inf.p_values[j]
        );
    }
    let hits = (0..10).filter(|&j| inf.reject_zero[j]).count();
    let false_hits = (10..beta.beta.len()).filter(|&j| inf.reject_zero[j]).count();
    println!(
        "rejected {hits}/10 signals and {false_hits}/{} nulls",
        beta.beta.len() - 10
    );
    Ok(())
}
