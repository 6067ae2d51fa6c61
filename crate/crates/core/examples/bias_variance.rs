//! Per-index variance and squared bias of the held-out prediction error
//! `μ̃₋ᵢ − μᵢ`, checked against the directly accumulated mean square.
//!
//! ```bash
//! cargo run -p cvbias --release --example bias_variance
//! ```

use cvbias::dgp::{DgpSpec, ErrorSpec};
use cvbias::estimators::ModelSpec;
use cvbias::mc::{mc_bias_variance, McConfig, RunOptions};
use cvbias::CvScheme;

fn main() -> cvbias::Result<()> {
    let config = McConfig {
        dgp: DgpSpec::ar1(0.9, ErrorSpec::gaussian(1.0)),
        models: vec![ModelSpec::ar(1, true), ModelSpec::ar(2, true)],
        schemes: vec![CvScheme::Loo],
        t_grid: vec![20],
        reps: 20_000,
        seed: 3,
        max_lag: None,
    };
    let stats = mc_bias_variance(&config, "ar2c", &CvScheme::Loo, 20, &RunOptions::default())?;
    println!(
        "{:>3} {:>10} {:>10} {:>10} {:>10}",
        "i", "variance", "bias^2", "mse", "residual"
    );
    for s in stats {
        println!(
            "{:>3} {:>10.5} {:>10.2e} {:>10.5} {:>10.1e}",
            s.index, s.variance, s.sq_bias, s.mse, s.identity_residual
        );
    }
    Ok(())
}
