//! Deconvolution estimate of the link from a noisy index, before and after
//! monotonization.

use sindex::deconv::{estimate_link, nw_deconv_grid, select_bandwidth, DeconvConfig};
use sindex::index::debias_index;
use sindex::model::{simulate, CoefScheme, DesignSpec, ModelVariant, SimModel};
use sindex::pilot::{fit_pilot, PilotKind};

fn main() -> sindex::Result<()> {
    let model = ModelVariant::Piecewise;
    let (data, _) = simulate(
        1000,
        &DesignSpec::identity(300),
        CoefScheme::UniformSphere,
        &SimModel::new(model),
        5,
    )?;
    let fit = fit_pilot(&data.x, &data.y, PilotKind::LeastSquares)?;
    let idx = debias_index(&data.x, &data.y, &fit)?;

    let cfg = DeconvConfig::default();
    let h = select_bandwidth(data.n(), idx.varsigma(), &cfg.kernel, cfg.bandwidth)?;
    let raw = nw_deconv_grid(&idx, &data.y, h, &cfg)?;
    let est = estimate_link(&idx, &data.y, &cfg)?;
    println!(
        "varsigma={:.3} h={:.3} masked={}",
        idx.varsigma(),
        h,
        raw.valid.iter().filter(|v| !**v).count()
    );

    println!("{:>6} {:>9} {:>9} {:>9} {:>9}", "x", "raw", "ghat", "ghat'", "g");
    for k in (0..est.grid.len()).step_by(25) {
        let x = est.grid[k];
        println!(
            "{x:>6.2} {:>9.3} {:>9.3} {:>9.3} {:>9.3}",
            raw.values[k],
            est.ghat[k],
            est.ghat_deriv[k],
            model.conditional_mean(x)
        );
    }
    let loss = est
        .grid
        .iter()
        .zip(&est.ghat)
        .map(|(x, g)| (g - model.conditional_mean(*x)).powi(2))
        .sum::<f64>()
        / est.grid.len() as f64;
    println!("mean squared loss on [-3, 3]: {loss:.4}");
    Ok(())
}
