//! Split the CV MSE of one simulated AR(1) path into its four terms under
//! each CV scheme.
//!
//! ```bash
//! cargo run -p cvbias --example decompose_cv_mse
//! ```

use cvbias::cv::{decompose_cv_mse, decompose_full_sample};
use cvbias::dgp::{simulate, DgpSpec, ErrorSpec};
use cvbias::estimators::ModelSpec;
use cvbias::CvScheme;

fn main() -> cvbias::Result<()> {
    let spec = DgpSpec::ar1(0.9, ErrorSpec::gaussian(1.0));
    let path = simulate(&spec, 50, 1, 2024)?;
    let model = ModelSpec::ar(1, true);
    let schemes = [
        CvScheme::Loo,
        CvScheme::HBlock { h: None },
        CvScheme::KFold {
            k: 5,
            contiguous: true,
        },
        CvScheme::ExpandingWindow {
            min_train: 10,
            horizon: 1,
        },
    ];

    println!(
        "{:<20} {:>6} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10}",
        "scheme", "n", "eps^2", "2 mu eps", "2 mu~ eps", "ase", "cv_mse", "resid"
    );
    let mut rows = Vec::new();
    for scheme in &schemes {
        rows.push((
            scheme.resolve(path.len()).label(),
            decompose_cv_mse(&path, &model, scheme, false)?,
        ));
    }
    rows.push(("full_sample".into(), decompose_full_sample(&path, &model)?));
    for (label, d) in rows {
        println!(
            "{:<20} {:>6} {:>10.5} {:>10.5} {:>10.5} {:>10.5} {:>10.5} {:>10.1e}",
            label,
            d.n_eval,
            d.term_eps2,
            d.term_mu_eps,
            d.term_muhat_eps,
            d.term_ase,
            d.cv_mse,
            d.identity_residual
        );
    }
    Ok(())
}
