//! Surrogate-loss fits: the true link recovers the logistic MLE, and an
//! estimated link plugs in through `GridLink`.

use sindex::deconv::{estimate_link, DeconvConfig};
use sindex::index::debias_index;
use sindex::model::{simulate, CoefScheme, DesignSpec, LinkFunction, ModelVariant, SimModel};
use sindex::pilot::{fit_pilot, glm_mle_fit, GlmFamily, GlmOptions, PilotKind};
use sindex::surrogate::{fit_coefficients, GridLink, NewtonOptions, Penalty, SurrogateProblem};

fn main() -> sindex::Result<()> {
    let design = DesignSpec::identity(20);
    let (data, beta) = simulate(
        1500,
        &design,
        CoefScheme::UniformSphere,
        &SimModel::new(ModelVariant::Logit),
        3,
    )?;

    let logistic = LinkFunction::Logistic;
    let prob = SurrogateProblem::new(&logistic, Penalty::None)?;
    let fit = fit_coefficients(&data.x, &data.y, &prob, NewtonOptions::default())?;
    let mle = glm_mle_fit(&data.x, &data.y, GlmFamily::Logistic, GlmOptions::default())?;
    println!(
        "logistic link: {} Newton steps, |beta_hat - mle|_inf = {:.2e}",
        fit.iterations,
        (&fit.beta_hat - &mle).amax()
    );

    // estimate the link on half the data and fit on the other half
    let (a, b) = (
        data.rows(&(0..750).collect::<Vec<_>>()),
        data.rows(&(750..1500).collect::<Vec<_>>()),
    );
    let pilot = fit_pilot(&a.x, &a.y, PilotKind::LogitMle)?;
    let idx = debias_index(&a.x, &a.y, &pilot)?;
    let link = GridLink::new(estimate_link(&idx, &a.y, &DeconvConfig::default())?);
    let prob = SurrogateProblem::new(&link, Penalty::Ridge { lambda: 0.01 })?;
    let fit = fit_coefficients(&b.x, &b.y, &prob, NewtonOptions::default())?;
    let cosine = fit.beta_hat.dot(&beta.beta) / fit.beta_hat.norm();
    println!(
        "estimated link: {} steps, converged={}, cos(beta_hat, beta)={:.3}",
        fit.iterations, fit.converged, cosine
    );
    for (k, v) in fit.objective_trace.iter().enumerate() {
        println!("  iter {k:>2}  objective {v:.6}");
    }
    Ok(())
}
