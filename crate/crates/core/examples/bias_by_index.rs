//! Monte Carlo estimate of `E[μ̃₋ᵢ εᵢ]` at each index of an AR(1) sample
//! with martingale-difference errors, for the true regression on `y_{i-1}`
//! and for the same regression with a constant. At `i = T` the left-out
//! error is independent of everything used to predict it.
//!
//! ```bash
//! cargo run -p cvbias --release --example bias_by_index -- 100000
//! ```

use cvbias::dgp::{DgpSpec, ErrorSpec};
use cvbias::estimators::ModelSpec;
use cvbias::mc::{self, McConfig, RunOptions};
use cvbias::CvScheme;

fn main() -> cvbias::Result<()> {
    let reps = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(20_000);
    for (name, errors) in [
        ("gaussian", ErrorSpec::gaussian(1.0)),
        ("arch(1)", ErrorSpec::arch1(1.0, 0.5)),
    ] {
        let config = McConfig {
            dgp: DgpSpec::ar1(0.9, errors),
            models: vec![ModelSpec::ar(1, false), ModelSpec::ar(1, true)],
            schemes: vec![CvScheme::Loo],
            t_grid: vec![20],
            reps,
            seed: 5,
            max_lag: None,
        };
        let report = mc::mc_bias_estimate(&config, &RunOptions::default())?;
        let (plain, with_const) = (&report.cells[0], &report.cells[1]);
        println!("{name} errors, T = 20, R = {reps}");
        println!(
            "  {:>3} {:>22} {:>22}",
            "i", "ar1: bias (z)", "ar1c: bias (z)"
        );
        for (a, b) in plain.by_index.iter().zip(&with_const.by_index) {
            println!(
                "  {:>3} {:>+14.5} ({:>5.1}) {:>+14.5} ({:>5.1})",
                a.index,
                a.bias.mean,
                a.bias.mean / a.bias.se,
                b.bias.mean,
                b.bias.mean / b.bias.se
            );
        }
        for c in [plain, with_const] {
            println!(
                "  {:<5} pooled {:+.5} (|z| {:.1}), before T {:+.5} (|z| {:.1})",
                c.model,
                c.bias_pooled.mean,
                c.bias_pooled.z(),
                c.bias_pooled_excl_last.mean,
                c.bias_pooled_excl_last.z()
            );
        }
        println!();
    }
    Ok(())
}
