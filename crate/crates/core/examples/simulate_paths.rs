//! Simulate each supported process and print a few observations with
//! sample moments.
//!
//! ```bash
//! cargo run -p cvbias --example simulate_paths
//! ```

use cvbias::dgp::{self, DgpSpec, ErrorSpec, MeanKind};

fn summarize(name: &str, spec: &DgpSpec, max_lag: usize) -> cvbias::Result<()> {
    let path = dgp::simulate(spec, 2_000, max_lag, 42)?;
    let n = path.len() as f64;
    let mean = path.y.iter().sum::<f64>() / n;
    let var = path.y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let eps_var = path.eps_true.iter().map(|e| e * e).sum::<f64>() / n;
    println!(
        "{name}: T = {}, columns {:?}",
        path.len(),
        path.column_names
    );
    println!("  sample mean {mean:+.4}, var(y) {var:.4}, mean eps^2 {eps_var:.4}");
    for i in 0..3 {
        println!(
            "  i={:<2} y={:+.4}  mu={:+.4}  eps={:+.4}",
            i + 1,
            path.y[i],
            path.mu_true[i],
            path.eps_true[i]
        );
    }
    Ok(())
}

fn main() -> cvbias::Result<()> {
    // var(y) = sigma^2 / (1 - rho^2) = 5.26 for rho = 0.9
    summarize(
        "ar1 gaussian",
        &DgpSpec::ar1(0.9, ErrorSpec::gaussian(1.0)),
        1,
    )?;
    summarize(
        "ar1 arch(1)",
        &DgpSpec::ar1(0.9, ErrorSpec::arch1(1.0, 0.5)),
        1,
    )?;

    let var2 = DgpSpec {
        mean_kind: MeanKind::VarP {
            coefficients: vec![
                vec![vec![0.5, 0.1], vec![0.0, 0.3]],
                vec![vec![0.1, 0.0], vec![0.05, 0.2]],
            ],
            k: 2,
            p: 2,
        },
        errors: ErrorSpec::gaussian(1.0),
        burn_in: 500,
    };
    println!(
        "var(2) companion spectral radius {:.4}",
        dgp::companion_spectral_radius(&var2)?
    );
    summarize("var(2)", &var2, 2)?;

    let iid = DgpSpec::iid_regression(
        vec![1.0, -0.5],
        vec![vec![1.0, 0.3], vec![0.3, 1.0]],
        ErrorSpec::gaussian(1.0),
    );
    summarize("iid regression", &iid, 0)?;

    match DgpSpec::ar1(1.0, ErrorSpec::gaussian(1.0)).validate() {
        Err(e) => println!("rho = 1 rejected: {e}"),
        Ok(()) => unreachable!(),
    }
    Ok(())
}
