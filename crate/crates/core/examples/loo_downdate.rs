//! Leave-one-out OLS by rank-one downdate versus refitting from scratch.
//!
//! ```bash
//! cargo run -p cvbias --release --example loo_downdate
//! ```

use std::time::Instant;

use cvbias::estimators::{full_fit, loo_fit_downdate, loo_fit_refit};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn main() -> cvbias::Result<()> {
    let (n, p) = (400, 6);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut draw = || -> f64 { StandardNormal.sample(&mut rng) };
    let x = DMatrix::from_fn(n, p, |_, _| draw());
    let y = DVector::from_fn(n, |i, _| x.row(i).sum() + draw());

    let start = Instant::now();
    let full = full_fit(&x, &y)?;
    let fast: Vec<_> = (0..n)
        .map(|i| loo_fit_downdate(&x, i, &full))
        .collect::<Result<_, _>>()?;
    let t_fast = start.elapsed();

    let start = Instant::now();
    let slow: Vec<_> = (0..n)
        .map(|i| loo_fit_refit(&x, &y, i))
        .collect::<Result<_, _>>()?;
    let t_slow = start.elapsed();

    let max_diff = fast
        .iter()
        .zip(&slow)
        .map(|(a, b)| (&a.beta - &b.beta).amax())
        .fold(0.0, f64::max);

    // leave-one-out residual times (1 - h_i) recovers the full-sample residual
    let max_leverage_gap = (0..n)
        .map(|i| {
            let loo_resid = y[i] - (x.row(i) * &slow[i].beta)[0];
            (loo_resid * (1.0 - full.leverage[i]) - full.residuals[i]).abs()
        })
        .fold(0.0, f64::max);

    println!("n = {n}, p = {p}");
    println!("downdate: {t_fast:?}   refit: {t_slow:?}");
    println!("max |beta_downdate - beta_refit| = {max_diff:.3e}");
    println!("max |e_loo (1 - h) - e_full|     = {max_leverage_gap:.3e}");
    Ok(())
}
