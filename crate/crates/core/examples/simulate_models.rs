//! Draw one dataset per model variant and print response summaries.

use sindex::model::{simulate, CoefScheme, DesignSpec, ModelVariant, SimModel};
use sindex::stats::{mean, sd};

fn main() -> sindex::Result<()> {
    let design = DesignSpec::ar1(50, 0.3)?;
    for (k, &variant) in ModelVariant::ALL.iter().enumerate() {
        let (data, beta) = simulate(
            400,
            &design,
            CoefScheme::UniformSphere,
            &SimModel::new(variant),
            7 + k as u64,
        )?;
        let y = data.y.as_slice();
        println!(
            "{:<11} n={} p={} beta'Sigma beta={:.3} mean(y)={:+.3} sd(y)={:.3}",
            variant.name(),
            data.n(),
            data.p(),
            design.quad_form(&beta.beta),
            mean(y),
            sd(y)
        );
    }
    Ok(())
}
