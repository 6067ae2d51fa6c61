//! How often each CV scheme picks AR(1), AR(2) or AR(4) when the truth is
//! AR(1), and how often that pick has the smallest full-sample ASE.
//!
//! ```bash
//! cargo run -p cvbias --release --example model_selection
//! ```

use cvbias::cv::{ar_candidates, select};
use cvbias::dgp::{simulate, DgpSpec, ErrorSpec};
use cvbias::mc::{self, McConfig, RunOptions};
use cvbias::CvScheme;

fn main() -> cvbias::Result<()> {
    let dgp = DgpSpec::ar1(0.9, ErrorSpec::gaussian(1.0));
    let models = ar_candidates(&[1, 2, 4], false);
    let schemes = vec![
        CvScheme::Loo,
        CvScheme::HBlock { h: None },
        CvScheme::ExpandingWindow {
            min_train: 10,
            horizon: 1,
        },
    ];

    // a single selection, with the CV MSE table
    let path = simulate(&dgp, 50, 4, 1)?;
    let one = select(&models, &path, &CvScheme::Loo, false)?;
    println!("one path, loo picks {}", one.selected);
    for e in &one.table {
        println!("  {:<5} cv_mse {:.5}", e.id, e.cv_mse.unwrap_or(f64::NAN));
    }

    let config = McConfig {
        dgp,
        models,
        schemes,
        t_grid: vec![50],
        reps: 5_000,
        seed: 17,
        max_lag: None,
    };
    for s in mc::mc_selection(&config, &RunOptions::default())? {
        let freq: Vec<String> = s
            .freq
            .iter()
            .map(|(id, f)| format!("{id} {f:.3}"))
            .collect();
        println!(
            "{:<16} {}   agreement {:.3}",
            s.scheme,
            freq.join("  "),
            s.min_ase_agreement
        );
    }
    Ok(())
}
