//! Batch commands: configuration loading, experiment runs and the CSV/JSON
//! artifacts they write.
//!
//! A configuration file is one JSON document with the sections `dgp`,
//! `models`, `schemes` and `experiment`. Unknown keys are rejected.

use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cv::{self, CvScheme};
use crate::dgp::{self, DgpSpec, MeanKind};
use crate::error::{Error, ErrorClass, Result};
use crate::estimators::ModelSpec;
use crate::mc::{self, CellReport, McConfig, McReport, RunOptions, NONZERO_BAND, ZERO_BAND};
use crate::rng::replication_seed;
use crate::stats::Estimate;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Process exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err.class() {
        ErrorClass::Config => 2,
        ErrorClass::Numerical => 3,
        ErrorClass::Reliability => 4,
        ErrorClass::Io => 1,
    }
}

fn default_reps() -> usize {
    1_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Experiment {
    pub t_grid: Vec<usize>,
    #[serde(default = "default_reps")]
    pub reps: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_lag: Option<usize>,
    /// AR coefficients for `sweep`; requires an `ar1` process.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_grid: Option<Vec<f64>>,
    #[serde(default)]
    pub allow_unreliable: bool,
    #[serde(default)]
    pub crosscheck: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub dgp: DgpSpec,
    pub models: Vec<ModelSpec>,
    pub schemes: Vec<CvScheme>,
    pub experiment: Experiment,
}

impl ConfigFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("{e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn mc_config(&self) -> McConfig {
        McConfig {
            dgp: self.dgp.clone(),
            models: self.models.clone(),
            schemes: self.schemes.clone(),
            t_grid: self.experiment.t_grid.clone(),
            reps: self.experiment.reps,
            seed: self.experiment.seed,
            max_lag: self.experiment.max_lag,
        }
    }

    /// SHA-256 of the canonical JSON serialization.
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&canonical))
    }
}

/// Command-line settings shared by every command.
#[derive(Debug, Clone, Default)]
pub struct CliOptions {
    pub config: PathBuf,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub reps: Option<usize>,
    pub threads: Option<usize>,
    pub crosscheck: bool,
}

impl CliOptions {
    /// Loads the configuration and applies command-line overrides.
    pub fn resolve(&self) -> Result<(ConfigFile, RunOptions)> {
        let mut cfg = ConfigFile::load(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.experiment.seed = seed;
        }
        if let Some(reps) = self.reps {
            cfg.experiment.reps = reps;
        }
        if self.crosscheck {
            cfg.experiment.crosscheck = true;
        }
        let run = RunOptions {
            threads: self.threads,
            crosscheck: cfg.experiment.crosscheck,
            allow_unreliable: cfg.experiment.allow_unreliable,
        };
        Ok((cfg, run))
    }
}

/// Provenance written next to every artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_hash: String,
    pub master_seed: u64,
    pub tool_version: String,
    pub started_at: String,
    pub finished_at: String,
    pub outputs: Vec<String>,
    pub config: ConfigFile,
}

struct Clock {
    started_at: String,
    instant: Instant,
}

impl Clock {
    fn start() -> Self {
        Self {
            started_at: chrono::Utc::now().to_rfc3339(),
            instant: Instant::now(),
        }
    }

    fn manifest(&self, command: &str, cfg: &ConfigFile, outputs: Vec<String>) -> RunManifest {
        RunManifest {
            command: command.to_string(),
            config_hash: cfg.digest(),
            master_seed: cfg.experiment.seed,
            tool_version: TOOL_VERSION.to_string(),
            started_at: self.started_at.clone(),
            finished_at: chrono::Utc::now().to_rfc3339(),
            outputs,
            config: cfg.clone(),
        }
    }
}

/// Full-precision decimal: 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else {
        format!("{v:.16e}")
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = File::create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    Ok(())
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn manifest_beside(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

/// Writes one simulated path as CSV: `index, y, mu_true, eps_true`, then
/// the regressor columns.
pub fn cmd_simulate(opts: &CliOptions) -> Result<PathBuf> {
    let clock = Clock::start();
    let (cfg, _) = opts.resolve()?;
    let mc = cfg.mc_config();
    let t = *mc
        .t_grid
        .first()
        .ok_or_else(|| Error::Config("experiment.t_grid is empty".into()))?;
    let max_lag = mc.max_lag();
    let path = dgp::simulate(&cfg.dgp, t, max_lag, cfg.experiment.seed)?;

    if let Some(parent) = opts.out.parent() {
        if !parent.as_os_str().is_empty() {
            ensure_dir(parent)?;
        }
    }
    let mut w = csv::Writer::from_path(&opts.out)?;
    let mut header = vec![
        "index".to_string(),
        "y".into(),
        "mu_true".into(),
        "eps_true".into(),
    ];
    header.extend(path.column_names.iter().cloned());
    w.write_record(&header)?;
    for i in 0..path.len() {
        let mut row = vec![
            (i + 1).to_string(),
            fmt_f64(path.y[i]),
            fmt_f64(path.mu_true[i]),
            fmt_f64(path.eps_true[i]),
        ];
        row.extend((0..path.x_full.ncols()).map(|c| fmt_f64(path.x_full[(i, c)])));
        w.write_record(&row)?;
    }
    w.flush()?;
    let manifest = clock.manifest("simulate", &cfg, vec![file_name(&opts.out)]);
    write_json(&manifest_beside(&opts.out), &manifest)?;
    Ok(opts.out.clone())
}

/// One decomposition row per (path seed, model, scheme), plus a
/// `full_sample` row per model using the in-sample fit.
pub fn cmd_decompose(opts: &CliOptions) -> Result<PathBuf> {
    let clock = Clock::start();
    let (cfg, run) = opts.resolve()?;
    let mc = cfg.mc_config();
    mc.validate()?;
    let max_lag = mc.max_lag();

    if let Some(parent) = opts.out.parent() {
        if !parent.as_os_str().is_empty() {
            ensure_dir(parent)?;
        }
    }
    let mut w = csv::Writer::from_path(&opts.out)?;
    w.write_record([
        "seed",
        "t",
        "model",
        "scheme",
        "n_eval",
        "term_eps2",
        "term_mu_eps",
        "term_muhat_eps",
        "term_ase",
        "cv_mse",
        "identity_residual",
    ])?;
    for &t in &mc.t_grid {
        for rep in 0..mc.reps {
            let seed = replication_seed(mc.seed, rep as u64);
            let path = dgp::simulate(&mc.dgp, t, max_lag, seed)?;
            for model in &mc.models {
                let mut rows = Vec::new();
                for scheme in &mc.schemes {
                    let d = cv::decompose_cv_mse(&path, model, scheme, run.crosscheck)?;
                    rows.push((scheme.resolve(t).label(), d));
                }
                rows.push((
                    "full_sample".into(),
                    cv::decompose_full_sample(&path, model)?,
                ));
                for (label, d) in rows {
                    w.write_record([
                        seed.to_string(),
                        t.to_string(),
                        model.id.clone(),
                        label,
                        d.n_eval.to_string(),
                        fmt_f64(d.term_eps2),
                        fmt_f64(d.term_mu_eps),
                        fmt_f64(d.term_muhat_eps),
                        fmt_f64(d.term_ase),
                        fmt_f64(d.cv_mse),
                        fmt_f64(d.identity_residual),
                    ])?;
                }
            }
        }
    }
    w.flush()?;
    let manifest = clock.manifest("decompose", &cfg, vec![file_name(&opts.out)]);
    write_json(&manifest_beside(&opts.out), &manifest)?;
    Ok(opts.out.clone())
}

const LONG_HEADER: [&str; 8] = [
    "model",
    "scheme",
    "t",
    "index",
    "statistic",
    "value",
    "se",
    "n",
];

fn long_row(
    c: &CellReport,
    index: &str,
    stat: &str,
    value: f64,
    se: Option<f64>,
    n: u64,
) -> [String; 8] {
    [
        c.model.clone(),
        c.scheme.clone(),
        c.t.to_string(),
        index.to_string(),
        stat.to_string(),
        fmt_f64(value),
        se.map(fmt_f64).unwrap_or_default(),
        n.to_string(),
    ]
}

fn est_row(c: &CellReport, index: &str, stat: &str, e: &Estimate) -> [String; 8] {
    long_row(c, index, stat, e.mean, Some(e.se), e.n)
}

/// `bias_by_index.csv`: per-index bias and bias–variance components.
pub fn write_bias_by_index(report: &McReport, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(LONG_HEADER)?;
    for c in &report.cells {
        for s in &c.by_index {
            let idx = s.index.to_string();
            w.write_record(est_row(c, &idx, "bias", &s.bias))?;
            w.write_record(est_row(c, &idx, "error_mean", &s.error_mean))?;
            let n = s.bias.n;
            w.write_record(long_row(c, &idx, "variance", s.variance, None, n))?;
            w.write_record(long_row(c, &idx, "sq_bias", s.sq_bias, None, n))?;
            w.write_record(long_row(c, &idx, "mse", s.mse, None, n))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `bias_pooled.csv`: pooled bias, MASE and CV MSE per cell.
pub fn write_bias_pooled(report: &McReport, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(LONG_HEADER)?;
    for c in &report.cells {
        w.write_record(est_row(c, "pooled", "bias_pooled", &c.bias_pooled))?;
        w.write_record(est_row(
            c,
            "excl_last",
            "bias_pooled_excl_last",
            &c.bias_pooled_excl_last,
        ))?;
        if let Some(last) = &c.bias_last {
            w.write_record(est_row(c, &c.t.to_string(), "bias_last", last))?;
        }
        w.write_record(est_row(c, "pooled", "term_muhat_eps", &c.term_muhat_eps))?;
        w.write_record(est_row(c, "pooled", "cv_mse", &c.cv_mse))?;
        w.write_record(est_row(c, "pooled", "mase_loo", &c.mase_loo))?;
        w.write_record(est_row(c, "pooled", "mase_full", &c.mase_full))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_selection(report: &McReport, freq_path: &Path, agreement_path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(freq_path)?;
    w.write_record(["scheme", "t", "model", "count", "freq"])?;
    for s in &report.selection {
        for ((id, f), (_, n)) in s.freq.iter().zip(&s.counts) {
            w.write_record([
                s.scheme.clone(),
                s.t.to_string(),
                id.clone(),
                n.to_string(),
                fmt_f64(*f),
            ])?;
        }
    }
    w.flush()?;
    let mut w = csv::Writer::from_path(agreement_path)?;
    w.write_record(["scheme", "t", "reps_with_selection", "min_ase_agreement"])?;
    for s in &report.selection {
        w.write_record([
            s.scheme.clone(),
            s.t.to_string(),
            s.reps_with_selection.to_string(),
            fmt_f64(s.min_ase_agreement),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Whether each cell met the zero-bias and nonzero-bias bands.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellVerdict {
    pub model: String,
    pub scheme: String,
    pub t: usize,
    pub reliable: bool,
    pub failed_reps: usize,
    pub pooled_z: f64,
    pub pooled_zero: bool,
    pub excl_last_z: f64,
    pub excl_last_nonzero: bool,
    pub last_z: Option<f64>,
    pub last_zero: Option<bool>,
}

pub fn verdicts(report: &McReport) -> Vec<CellVerdict> {
    report
        .cells
        .iter()
        .map(|c| CellVerdict {
            model: c.model.clone(),
            scheme: c.scheme.clone(),
            t: c.t,
            reliable: c.reliable,
            failed_reps: c.failed_reps,
            pooled_z: c.bias_pooled.z(),
            pooled_zero: c.bias_pooled.within_band(ZERO_BAND),
            excl_last_z: c.bias_pooled_excl_last.z(),
            excl_last_nonzero: c.bias_pooled_excl_last.beyond_band(NONZERO_BAND),
            last_z: c.bias_last.map(|e| e.z()),
            last_zero: c.bias_last.map(|e| e.within_band(ZERO_BAND)),
        })
        .collect()
}

pub fn text_summary(report: &McReport) -> String {
    let mut out = format!(
        "seed {}  reps {}  failed fits {}\n",
        report.seed, report.reps, report.failed_fits
    );
    for (c, v) in report.cells.iter().zip(verdicts(report)) {
        out.push_str(&format!(
            "{} {} T={}: pooled bias {:+.6} (se {:.6}, z {:.2}) {}; before T {:+.6} (z {:.2}) {}",
            c.model,
            c.scheme,
            c.t,
            c.bias_pooled.mean,
            c.bias_pooled.se,
            v.pooled_z,
            if v.pooled_zero {
                "zero band met"
            } else {
                "outside zero band"
            },
            c.bias_pooled_excl_last.mean,
            v.excl_last_z,
            if v.excl_last_nonzero {
                "nonzero band met"
            } else {
                "nonzero band not met"
            },
        ));
        if let (Some(last), Some(zero)) = (c.bias_last, v.last_zero) {
            out.push_str(&format!(
                "; at i=T {:+.6} (z {:.2}) {}",
                last.mean,
                last.z(),
                if zero {
                    "zero band met"
                } else {
                    "outside zero band"
                }
            ));
        }
        if !c.reliable {
            out.push_str(" [unreliable]");
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Serialize)]
struct RunSummary<'a> {
    command: &'a str,
    seed: u64,
    reps: usize,
    failed_fits: usize,
    wall_time_secs: f64,
    cells: Vec<CellVerdict>,
}

fn write_summary(dir: &Path, command: &str, report: &McReport, clock: &Clock) -> Result<()> {
    let summary = RunSummary {
        command,
        seed: report.seed,
        reps: report.reps,
        failed_fits: report.failed_fits,
        wall_time_secs: clock.instant.elapsed().as_secs_f64(),
        cells: verdicts(report),
    };
    write_json(&dir.join("summary.json"), &summary)
}

/// Bias experiment: `bias_by_index.csv`, `bias_pooled.csv`, `summary.json`,
/// `summary.txt` and `manifest.json` in `opts.out`.
pub fn cmd_bias(opts: &CliOptions) -> Result<McReport> {
    let clock = Clock::start();
    let (cfg, run) = opts.resolve()?;
    let report = mc::mc_bias_estimate(&cfg.mc_config(), &run)?;
    ensure_dir(&opts.out)?;
    write_bias_by_index(&report, &opts.out.join("bias_by_index.csv"))?;
    write_bias_pooled(&report, &opts.out.join("bias_pooled.csv"))?;
    write_summary(&opts.out, "bias", &report, &clock)?;
    fs::write(opts.out.join("summary.txt"), text_summary(&report))?;
    let outputs = [
        "bias_by_index.csv",
        "bias_pooled.csv",
        "summary.json",
        "summary.txt",
    ];
    let manifest = clock.manifest(
        "bias",
        &cfg,
        outputs.iter().map(|s| s.to_string()).collect(),
    );
    write_json(&opts.out.join("manifest.json"), &manifest)?;
    Ok(report)
}

/// Selection experiment: `selection_freq.csv` and `agreement.csv`. A run in
/// which CV misses the minimum-ASE model is a result, not an error.
pub fn cmd_select(opts: &CliOptions) -> Result<McReport> {
    let clock = Clock::start();
    let (cfg, run) = opts.resolve()?;
    let report = mc::run(&cfg.mc_config(), &run)?;
    ensure_dir(&opts.out)?;
    write_selection(
        &report,
        &opts.out.join("selection_freq.csv"),
        &opts.out.join("agreement.csv"),
    )?;
    write_summary(&opts.out, "select", &report, &clock)?;
    let outputs = ["selection_freq.csv", "agreement.csv", "summary.json"];
    let manifest = clock.manifest(
        "select",
        &cfg,
        outputs.iter().map(|s| s.to_string()).collect(),
    );
    write_json(&opts.out.join("manifest.json"), &manifest)?;
    Ok(report)
}

/// One row of the sweep output.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub rho: Option<f64>,
    pub t: usize,
    pub model: String,
    pub scheme: String,
    pub statistic: &'static str,
    pub value: Estimate,
}

/// Runs the configuration over `t_grid` and, when `rho_grid` is present,
/// over every `(rho, T)` pair.
pub fn sweep(cfg: &ConfigFile, run: &RunOptions) -> Result<Vec<SweepRow>> {
    if cfg.experiment.t_grid.is_empty() {
        return Err(Error::Config("experiment.t_grid is empty".into()));
    }
    let rhos: Vec<Option<f64>> = match (&cfg.experiment.rho_grid, &cfg.dgp.mean_kind) {
        (None, MeanKind::Ar1 { rho }) => vec![Some(*rho)],
        (None, _) => vec![None],
        (Some(grid), _) if grid.is_empty() => {
            return Err(Error::Config("experiment.rho_grid is empty".into()))
        }
        (Some(grid), MeanKind::Ar1 { .. }) => grid.iter().copied().map(Some).collect(),
        (Some(_), _) => {
            return Err(Error::Config("rho_grid requires an ar1 process".into()));
        }
    };
    let mut rows = Vec::new();
    for rho in rhos {
        let mut mc = cfg.mc_config();
        if let Some(r) = rho {
            mc.dgp.mean_kind = MeanKind::Ar1 { rho: r };
        }
        let report = mc::run(&mc, run)?;
        for c in &report.cells {
            let mut push = |statistic, value| {
                rows.push(SweepRow {
                    rho,
                    t: c.t,
                    model: c.model.clone(),
                    scheme: c.scheme.clone(),
                    statistic,
                    value,
                })
            };
            push("bias_pooled", c.bias_pooled);
            push("bias_pooled_excl_last", c.bias_pooled_excl_last);
            if let Some(last) = c.bias_last {
                push("bias_last", last);
            }
            push("term_muhat_eps", c.term_muhat_eps);
            push("mase_loo", c.mase_loo);
            push("mase_full", c.mase_full);
        }
    }
    Ok(rows)
}

/// Long-format `sweep.csv` for external plotting.
pub fn cmd_sweep(opts: &CliOptions) -> Result<Vec<SweepRow>> {
    let clock = Clock::start();
    let (cfg, run) = opts.resolve()?;
    let rows = sweep(&cfg, &run)?;
    ensure_dir(&opts.out)?;
    let mut w = csv::Writer::from_path(opts.out.join("sweep.csv"))?;
    w.write_record([
        "rho",
        "t",
        "model",
        "scheme",
        "statistic",
        "value",
        "se",
        "abs_value",
        "n",
    ])?;
    for r in &rows {
        w.write_record([
            r.rho.map(fmt_f64).unwrap_or_default(),
            r.t.to_string(),
            r.model.clone(),
            r.scheme.clone(),
            r.statistic.to_string(),
            fmt_f64(r.value.mean),
            fmt_f64(r.value.se),
            fmt_f64(r.value.mean.abs()),
            r.value.n.to_string(),
        ])?;
    }
    w.flush()?;
    let manifest = clock.manifest("sweep", &cfg, vec!["sweep.csv".into()]);
    write_json(&opts.out.join("manifest.json"), &manifest)?;
    Ok(rows)
}
