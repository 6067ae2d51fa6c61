//! Pooled CV bias of the AR(1) model as the sample grows.
//!
//! ```bash
//! cargo run -p cvbias --release --example bias_vs_sample_size
//! ```

use cvbias::dgp::{DgpSpec, ErrorSpec};
use cvbias::estimators::ModelSpec;
use cvbias::mc::{self, McConfig, RunOptions};
use cvbias::CvScheme;

fn main() -> cvbias::Result<()> {
    let config = McConfig {
        dgp: DgpSpec::ar1(0.9, ErrorSpec::gaussian(1.0)),
        models: vec![ModelSpec::ar(1, true)],
        schemes: vec![CvScheme::Loo],
        t_grid: vec![25, 50, 100, 200, 400],
        reps: 20_000,
        seed: 9,
        max_lag: None,
    };
    let report = mc::run(&config, &RunOptions::default())?;
    println!(
        "{:>5} {:>12} {:>10} {:>12} {:>12}",
        "T", "bias", "se", "mase_loo", "mase_full"
    );
    for c in &report.cells {
        println!(
            "{:>5} {:>+12.6} {:>10.6} {:>12.6} {:>12.6}",
            c.t, c.bias_pooled.mean, c.bias_pooled.se, c.mase_loo.mean, c.mase_full.mean
        );
    }
    Ok(())
}
