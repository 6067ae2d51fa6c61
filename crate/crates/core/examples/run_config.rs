//! Run a bias experiment from a JSON configuration file and write the same
//! artifacts as `cvbias bias`.
//!
//! ```bash
//! cargo run -p cvbias --release --example run_config -- \
//!     crates/core/configs/ar1_gaussian_bias.json /tmp/cvbias-out 20000
//! ```

use std::path::PathBuf;

use cvbias::cli::{cmd_bias, text_summary, CliOptions};

fn main() {
    let mut args = std::env::args().skip(1);
    let config = args.next().map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/ar1_gaussian_bias.json")
    });
    let out = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("cvbias-run-config"));
    let reps = args.next().and_then(|s| s.parse().ok()).or(Some(20_000));
    let opts = CliOptions {
        config,
        out: out.clone(),
        reps,
        ..CliOptions::default()
    };
    match cmd_bias(&opts) {
        Ok(report) => {
            print!("{}", text_summary(&report));
            println!("artifacts in {}", out.display());
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(cvbias::cli::exit_code(&e));
        }
    }
}
