//! A small efficiency table: proposed estimator against least squares, and
//! the closed-form efficiency condition for one instance.

use sindex::experiment::ExperimentResult;
use sindex::experiment::{run_experiment, ExperimentKind, ExperimentSpec};
use sindex::inference::efficiency_condition_unregularized;
use sindex::model::ModelVariant;
use sindex::pilot::PilotKind;
use sindex::pipeline::{run_pipeline, split_data, InferenceConfig, ModeKind, PipelineConfig};
use sindex::surrogate::{GridLink, Penalty};

fn main() -> sindex::Result<()> {
    let mut spec = ExperimentSpec::desk(ExperimentKind::Table1);
    spec.reps = 10;
    spec.models = vec![ModelVariant::Piecewise, ModelVariant::CubicPlus];
    spec.sizes = vec![(1000, 100)];
    if let ExperimentResult::Table1 { rows } = run_experiment(&spec)? {
        for r in rows {
            println!("{:<10} {:<9} {:.4} +- {:.4}", r.model.name(), r.estimator, r.mean, r.sd);
        }
    }

    let cfg = PipelineConfig {
        model: ModelVariant::Piecewise,
        n: 1000,
        p: 100,
        pilot: PilotKind::LeastSquares,
        penalty: Penalty::None,
        inference: InferenceConfig {
            mode: ModeKind::Unregularized,
            ..Default::default()
        },
        seed: 4,
        ..PipelineConfig::default()
    };
    let (data, _, _) = cfg.simulate()?;
    let report = run_pipeline(&data, &cfg, None)?;
    let (i1, i2) = split_data(data.n(), &cfg.split)?;
    let (d1, d2) = (data.rows(&i1), data.rows(&i2));
    let link = GridLink::new(report.link.clone().expect("estimated link"));
    let check =
        efficiency_condition_unregularized(&report.pilot, &d1.x, &d1.y, &report.coef.beta_hat, &d2.x, &d2.y, &link)?;
    println!(
        "condition ratio={:.3} holds={} direct comparison={} (exact when n1 = n2: {})",
        check.ratio, check.condition_holds, check.direct, check.applicable
    );
    Ok(())
}
