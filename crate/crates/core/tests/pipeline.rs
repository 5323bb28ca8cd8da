use sindex::experiment::{run_experiment, ExperimentKind, ExperimentResult, ExperimentSpec};
use sindex::model::{simulate, CoefScheme, DesignSpec, ModelVariant, SimModel};
use sindex::pipeline::{run_pipeline, PipelineConfig};
use sindex::surrogate::{fit_coefficients, NewtonOptions, Penalty, SurrogateProblem};

#[test]
fn true_link_recovers_direction() {
    for variant in [ModelVariant::Cubic, ModelVariant::Piecewise, ModelVariant::Poisson] {
        let design = DesignSpec::identity(40);
        let (data, beta) = simulate(8000, &design, CoefScheme::UniformSphere, &SimModel::new(variant), 11).unwrap();
        let link = variant.link();
        let prob = SurrogateProblem::new(&link, Penalty::None).unwrap();
        let fit = fit_coefficients(&data.x, &data.y, &prob, NewtonOptions::default()).unwrap();
        let mu = fit.beta_hat.dot(&beta.beta);
        let err = (&fit.beta_hat / mu - &beta.beta).norm();
        assert!(err < 0.1, "{variant}: {err}");
    }
}

#[test]
fn link_loss_falls_with_n() {
    let mut spec = ExperimentSpec::desk(ExperimentKind::Figure2);
    spec.models = vec![ModelVariant::Piecewise];
    spec.reps = 60;
    let ExperimentResult::Figure2 { rows } = run_experiment(&spec).unwrap() else {
        unreachable!()
    };
    let first = rows.first().unwrap();
    let last = rows.last().unwrap();
    assert!(last.n > first.n);
    assert!(
        last.mean_loss < first.mean_loss,
        "{} vs {}",
        last.mean_loss,
        first.mean_loss
    );
}

#[test]
fn split_pipeline_end_to_end() {
    let cfg = PipelineConfig::from_json(
        r#"{"model": "logit", "n": 4000, "p": 40, "pilot": {"kind": "logit-mle"}, "seed": 5}"#,
    )
    .unwrap();
    let (data, beta, design) = cfg.simulate().unwrap();
    let report = run_pipeline(&data, &cfg, Some(design.tau())).unwrap();
    assert_eq!(report.n1 + report.n2, 4000);
    assert!(report.coef.converged);
    let b = &report.coef.beta_hat;
    let cosine = b.dot(&beta.beta) / b.norm();
    assert!(cosine > 0.9, "cos = {cosine}");
    let inf = &report.inference;
    assert_eq!(inf.reject_zero.len(), 40);
    assert!(report.inferential.mu_hat > 0.0 && report.inferential.sigma2_hat > 0.0);
}
