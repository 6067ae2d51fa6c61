//! Monte Carlo estimation of the CV bias term, its per-index profile, the
//! bias–variance split of `μ̃₋ᵢ − μᵢ`, MASE and selection frequencies.
//!
//! Replication `r` draws its path from `replication_seed(seed, r)`.
//! Replications are evaluated in parallel in fixed-size chunks, collected in
//! index order, and folded sequentially, so a report is bit-identical for
//! any thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cv::{self, argmin_with_ties, CvScheme};
use crate::dgp::{self, DgpSpec, SimulatedPath};
use crate::error::{Error, Result};
use crate::estimators::ModelSpec;
use crate::rng::replication_seed;
use crate::stats::{Estimate, Moments};

/// Replications evaluated per parallel batch.
const CHUNK: usize = 512;

/// A cell whose failed-replication share exceeds this is unreliable.
pub const MAX_FAILURE_SHARE: f64 = 0.01;

/// Relative tolerance of the per-index bias–variance sample-moment identity.
pub const MOMENT_IDENTITY_TOL: f64 = 1e-10;

/// z-band for "no bias" claims.
pub const ZERO_BAND: f64 = 4.0;
/// z-band for "bias present" claims.
pub const NONZERO_BAND: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub dgp: DgpSpec,
    pub models: Vec<ModelSpec>,
    pub schemes: Vec<CvScheme>,
    pub t_grid: Vec<usize>,
    pub reps: usize,
    pub seed: u64,
    /// Lag depth of the shared regressor matrix. Derived from the models when
    /// absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_lag: Option<usize>,
}

/// Execution settings that do not change the numbers produced.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses rayon's default.
    pub threads: Option<usize>,
    /// Cross-check every downdate against a refit.
    pub crosscheck: bool,
    /// Report unreliable cells instead of failing the run.
    pub allow_unreliable: bool,
}

impl McConfig {
    pub fn max_lag(&self) -> usize {
        self.max_lag.unwrap_or_else(|| {
            self.models
                .iter()
                .filter_map(|m| m.columns.iter().max())
                .map(|&c| self.dgp.lags_for_column(c))
                .max()
                .unwrap_or(0)
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.dgp.validate()?;
        if self.reps < 2 {
            return Err(Error::Config(format!(
                "reps must be >= 2, got {}",
                self.reps
            )));
        }
        if self.t_grid.is_empty() {
            return Err(Error::Config("t_grid is empty".into()));
        }
        if self.models.is_empty() {
            return Err(Error::Config("no candidate models".into()));
        }
        if self.schemes.is_empty() {
            return Err(Error::Config("no CV schemes".into()));
        }
        for (k, m) in self.models.iter().enumerate() {
            if self.models[..k].iter().any(|o| o.id == m.id) {
                return Err(Error::Config(format!("duplicate model id {}", m.id)));
            }
        }
        for s in &self.schemes {
            s.validate()?;
        }
        let max_lag = self.max_lag();
        let p_max = self.dgp.regressor_count(max_lag);
        for m in &self.models {
            m.validate(p_max)?;
        }
        let widest = self
            .models
            .iter()
            .map(ModelSpec::n_params)
            .max()
            .unwrap_or(0);
        for &t in &self.t_grid {
            let needed = (max_lag + p_max + 2).max(widest + 2);
            if t < needed {
                return Err(Error::Config(format!(
                    "T = {t} is too small; this configuration needs T >= {needed}"
                )));
            }
        }
        Ok(())
    }
}

/// Per-index Monte Carlo summary. `index` is 1-based.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndexStat {
    pub index: usize,
    /// Mean of `μ̃₋ᵢεᵢ` over replications.
    pub bias: Estimate,
    /// Mean of `μ̃₋ᵢ − μᵢ` over replications.
    pub error_mean: Estimate,
    /// Variance of `μ̃₋ᵢ − μᵢ` across replications (denominator `R`).
    pub variance: f64,
    /// Squared mean of `μ̃₋ᵢ − μᵢ`.
    pub sq_bias: f64,
    /// `Σ(μ̃₋ᵢ − μᵢ)² / R`, accumulated directly.
    pub mse: f64,
    pub identity_residual: f64,
}

/// Results for one (model, scheme, T) cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellReport {
    pub model: String,
    pub scheme: String,
    pub t: usize,
    /// Evaluated indices per replication (less than `t` for expanding windows).
    pub n_eval: usize,
    pub reps_used: u64,
    pub failed_reps: usize,
    pub reliable: bool,
    pub by_index: Vec<IndexStat>,
    /// Mean over replications of `(1/n) Σᵢ μ̃₋ᵢεᵢ`.
    pub bias_pooled: Estimate,
    /// The same average restricted to indices before `T`.
    pub bias_pooled_excl_last: Estimate,
    /// Mean of `μ̃₋ᵢεᵢ` at `i = T`, when evaluated.
    pub bias_last: Option<Estimate>,
    /// Mean of the decomposition's `(2/n) Σ μ̃₋ᵢεᵢ` term.
    pub term_muhat_eps: Estimate,
    pub cv_mse: Estimate,
    pub mase_loo: Estimate,
    pub mase_full: Estimate,
}

impl CellReport {
    pub fn key(&self) -> (String, String, usize) {
        (self.model.clone(), self.scheme.clone(), self.t)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionReport {
    pub scheme: String,
    pub t: usize,
    /// `(model id, fraction selected)` in configuration order.
    pub freq: Vec<(String, f64)>,
    pub counts: Vec<(String, u64)>,
    /// Fraction of replications where CV picked the model with the smallest
    /// full-sample ASE.
    pub min_ase_agreement: f64,
    pub reps_with_selection: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McReport {
    pub seed: u64,
    pub reps: usize,
    pub cells: Vec<CellReport>,
    pub selection: Vec<SelectionReport>,
    pub failed_fits: usize,
}

impl McReport {
    pub fn cell(&self, model: &str, scheme: &CvScheme, t: usize) -> Option<&CellReport> {
        let label = scheme.label();
        self.cells
            .iter()
            .find(|c| c.model == model && c.scheme == label && c.t == t)
    }

    pub fn selection_for(&self, scheme: &CvScheme, t: usize) -> Option<&SelectionReport> {
        let label = scheme.label();
        self.selection
            .iter()
            .find(|s| s.scheme == label && s.t == t)
    }
}

struct CellOutcome {
    products: Vec<f64>,
    errors: Vec<f64>,
    cv_mse: f64,
    term_muhat_eps: f64,
    ase_loo: f64,
    ase_full: f64,
    pooled: f64,
    pooled_excl_last: f64,
}

struct RepOutcome {
    /// Indexed `model * n_schemes + scheme`; `None` when a fit failed.
    cells: Vec<Option<CellOutcome>>,
    full_ase: Vec<Option<f64>>,
}

fn evaluate_cell(
    path: &SimulatedPath,
    model: &ModelSpec,
    scheme: &CvScheme,
    ase_full: f64,
    crosscheck: bool,
) -> Result<CellOutcome> {
    let fitted = cv::cv_residuals(path, model, scheme, crosscheck)?;
    let d = cv::decompose(path, &fitted)?;
    let t = path.len();
    let errors: Vec<f64> = (0..t)
        .map(|i| {
            if fitted.mask[i] {
                fitted.mu[i] - path.mu_true[i]
            } else {
                f64::NAN
            }
        })
        .collect();
    let (mut head_sum, mut head_n) = (0.0, 0usize);
    let mut total = 0.0;
    for (i, &v) in d.muhat_eps.iter().enumerate() {
        if !fitted.mask[i] {
            continue;
        }
        total += v;
        if i + 1 < t {
            head_sum += v;
            head_n += 1;
        }
    }
    Ok(CellOutcome {
        pooled: total / d.n_eval as f64,
        pooled_excl_last: if head_n > 0 {
            head_sum / head_n as f64
        } else {
            f64::NAN
        },
        cv_mse: d.cv_mse,
        term_muhat_eps: d.term_muhat_eps,
        ase_loo: d.term_ase,
        ase_full,
        products: d.muhat_eps,
        errors,
    })
}

fn absorb<T>(r: Result<T>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(e) if e.is_fit_failure() => Ok(None),
        Err(e) => Err(e),
    }
}

fn evaluate_rep(
    config: &McConfig,
    t: usize,
    max_lag: usize,
    rep: usize,
    crosscheck: bool,
) -> Result<RepOutcome> {
    let path = dgp::simulate(
        &config.dgp,
        t,
        max_lag,
        replication_seed(config.seed, rep as u64),
    )?;
    let mut cells = Vec::with_capacity(config.models.len() * config.schemes.len());
    let mut full_ase = Vec::with_capacity(config.models.len());
    for model in &config.models {
        let full = absorb(cv::full_sample_fit(&path, model))?.map(|fit| {
            let n = path.len() as f64;
            path.mu_true
                .iter()
                .zip(&fit.mu)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                / n
        });
        full_ase.push(full);
        for scheme in &config.schemes {
            let cell = match full {
                Some(af) => absorb(evaluate_cell(&path, model, scheme, af, crosscheck))?,
                None => None,
            };
            cells.push(cell);
        }
    }
    Ok(RepOutcome { cells, full_ase })
}

struct CellAcc {
    bias: Vec<Moments>,
    error: Vec<Moments>,
    pooled: Moments,
    pooled_excl_last: Moments,
    term: Moments,
    cv_mse: Moments,
    ase_loo: Moments,
    ase_full: Moments,
    failed: usize,
    n_eval: usize,
}

impl CellAcc {
    fn new(t: usize) -> Self {
        Self {
            bias: vec![Moments::new(); t],
            error: vec![Moments::new(); t],
            pooled: Moments::new(),
            pooled_excl_last: Moments::new(),
            term: Moments::new(),
            cv_mse: Moments::new(),
            ase_loo: Moments::new(),
            ase_full: Moments::new(),
            failed: 0,
            n_eval: 0,
        }
    }

    fn push(&mut self, o: &CellOutcome) {
        let mut n_eval = 0;
        for (i, (&p, &e)) in o.products.iter().zip(&o.errors).enumerate() {
            if p.is_nan() {
                continue;
            }
            self.bias[i].push(p);
            self.error[i].push(e);
            n_eval += 1;
        }
        self.n_eval = self.n_eval.max(n_eval);
        self.pooled.push(o.pooled);
        if !o.pooled_excl_last.is_nan() {
            self.pooled_excl_last.push(o.pooled_excl_last);
        }
        self.term.push(o.term_muhat_eps);
        self.cv_mse.push(o.cv_mse);
        self.ase_loo.push(o.ase_loo);
        self.ase_full.push(o.ase_full);
    }

    fn finish(self, model: &str, scheme: &str, t: usize, reps: usize) -> Result<CellReport> {
        let mut by_index = Vec::new();
        for (i, (b, e)) in self.bias.iter().zip(&self.error).enumerate() {
            if b.count() == 0 {
                continue;
            }
            let mse = e.raw_second_moment();
            let variance = e.population_variance();
            let sq_bias = e.mean() * e.mean();
            let identity_residual = (mse - (variance + sq_bias)).abs() / mse.max(1e-300);
            if identity_residual.is_nan() || identity_residual > MOMENT_IDENTITY_TOL {
                return Err(Error::Identity {
                    residual: identity_residual,
                });
            }
            by_index.push(IndexStat {
                index: i + 1,
                bias: b.estimate(),
                error_mean: e.estimate(),
                variance,
                sq_bias,
                mse,
                identity_residual,
            });
        }
        let bias_last = by_index.last().filter(|s| s.index == t).map(|s| s.bias);
        let reliable = (self.failed as f64) <= MAX_FAILURE_SHARE * reps as f64;
        Ok(CellReport {
            model: model.to_string(),
            scheme: scheme.to_string(),
            t,
            n_eval: self.n_eval,
            reps_used: self.pooled.count(),
            failed_reps: self.failed,
            reliable,
            by_index,
            bias_pooled: self.pooled.estimate(),
            bias_pooled_excl_last: self.pooled_excl_last.estimate(),
            bias_last,
            term_muhat_eps: self.term.estimate(),
            cv_mse: self.cv_mse.estimate(),
            mase_loo: self.ase_loo.estimate(),
            mase_full: self.ase_full.estimate(),
        })
    }
}

struct SelectionAcc {
    counts: Vec<u64>,
    agree: u64,
    total: u64,
}

fn build_pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            return Err(Error::Config("threads must be >= 1".into()));
        }
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| Error::Config(format!("cannot start thread pool: {e}")))
}

/// Runs every (model, scheme, T) cell of `config`.
pub fn run(config: &McConfig, opts: &RunOptions) -> Result<McReport> {
    config.validate()?;
    let pool = build_pool(opts.threads)?;
    pool.install(|| run_in_pool(config, opts))
}

fn run_in_pool(config: &McConfig, opts: &RunOptions) -> Result<McReport> {
    let max_lag = config.max_lag();
    let n_models = config.models.len();
    let n_schemes = config.schemes.len();
    let mut cells = Vec::new();
    let mut selection = Vec::new();
    let mut failed_fits = 0;

    for &t in &config.t_grid {
        let mut accs: Vec<CellAcc> = (0..n_models * n_schemes).map(|_| CellAcc::new(t)).collect();
        let mut sel: Vec<SelectionAcc> = (0..n_schemes)
            .map(|_| SelectionAcc {
                counts: vec![0; n_models],
                agree: 0,
                total: 0,
            })
            .collect();

        let mut start = 0;
        while start < config.reps {
            let end = (start + CHUNK).min(config.reps);
            let outcomes: Vec<Result<RepOutcome>> = (start..end)
                .into_par_iter()
                .map(|r| evaluate_rep(config, t, max_lag, r, opts.crosscheck))
                .collect();
            for outcome in outcomes {
                let outcome = outcome?;
                for (acc, cell) in accs.iter_mut().zip(&outcome.cells) {
                    match cell {
                        Some(c) => acc.push(c),
                        None => acc.failed += 1,
                    }
                }
                let ase_pick = {
                    let scored: Vec<(&str, usize, f64)> = config
                        .models
                        .iter()
                        .zip(&outcome.full_ase)
                        .filter_map(|(m, a)| a.map(|v| (m.id.as_str(), m.n_params(), v)))
                        .collect();
                    argmin_with_ties(&scored).map(|k| scored[k].0)
                };
                for (s, acc) in sel.iter_mut().enumerate() {
                    let scored: Vec<(usize, (&str, usize, f64))> = config
                        .models
                        .iter()
                        .enumerate()
                        .filter_map(|(m, spec)| {
                            outcome.cells[m * n_schemes + s]
                                .as_ref()
                                .map(|c| (m, (spec.id.as_str(), spec.n_params(), c.cv_mse)))
                        })
                        .collect();
                    let flat: Vec<_> = scored.iter().map(|(_, c)| *c).collect();
                    if let Some(k) = argmin_with_ties(&flat) {
                        let (m, (id, _, _)) = scored[k];
                        acc.counts[m] += 1;
                        acc.total += 1;
                        if ase_pick == Some(id) {
                            acc.agree += 1;
                        }
                    }
                }
            }
            start = end;
        }

        for (k, acc) in accs.into_iter().enumerate() {
            let model = &config.models[k / n_schemes];
            let scheme = config.schemes[k % n_schemes].resolve(t).label();
            failed_fits += acc.failed;
            let report = acc.finish(&model.id, &scheme, t, config.reps)?;
            if !report.reliable && !opts.allow_unreliable {
                return Err(Error::Reliability {
                    cell: format!("{}/{}/T={}", report.model, report.scheme, t),
                    failed: report.failed_reps,
                    reps: config.reps,
                });
            }
            cells.push(report);
        }
        for (s, acc) in sel.into_iter().enumerate() {
            let total = acc.total.max(1) as f64;
            selection.push(SelectionReport {
                scheme: config.schemes[s].resolve(t).label(),
                t,
                freq: config
                    .models
                    .iter()
                    .zip(&acc.counts)
                    .map(|(m, &c)| (m.id.clone(), c as f64 / total))
                    .collect(),
                counts: config
                    .models
                    .iter()
                    .zip(&acc.counts)
                    .map(|(m, &c)| (m.id.clone(), c))
                    .collect(),
                min_ase_agreement: acc.agree as f64 / total,
                reps_with_selection: acc.total,
            });
        }
    }

    Ok(McReport {
        seed: config.seed,
        reps: config.reps,
        cells,
        selection,
        failed_fits,
    })
}

/// Bias of the cross term, per index and pooled, for every cell.
pub fn mc_bias_estimate(config: &McConfig, opts: &RunOptions) -> Result<McReport> {
    run(config, opts)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaseEntry {
    pub model: String,
    pub scheme: String,
    pub t: usize,
    pub mase_loo: Estimate,
    pub mase_full: Estimate,
}

/// Monte Carlo means of the held-out and full-sample ASE.
pub fn mc_mase(config: &McConfig, opts: &RunOptions) -> Result<Vec<MaseEntry>> {
    let report = run(config, opts)?;
    Ok(report
        .cells
        .into_iter()
        .map(|c| MaseEntry {
            model: c.model,
            scheme: c.scheme,
            t: c.t,
            mase_loo: c.mase_loo,
            mase_full: c.mase_full,
        })
        .collect())
}

/// Per-index variance and squared bias of `μ̃₋ᵢ − μᵢ` for one cell.
pub fn mc_bias_variance(
    config: &McConfig,
    model: &str,
    scheme: &CvScheme,
    t: usize,
    opts: &RunOptions,
) -> Result<Vec<IndexStat>> {
    let spec = config
        .models
        .iter()
        .find(|m| m.id == model)
        .ok_or_else(|| Error::Config(format!("unknown model {model}")))?;
    let narrowed = McConfig {
        models: vec![spec.clone()],
        schemes: vec![scheme.clone()],
        t_grid: vec![t],
        max_lag: Some(config.max_lag()),
        ..config.clone()
    };
    let report = run(&narrowed, opts)?;
    Ok(report
        .cells
        .into_iter()
        .next()
        .map(|c| c.by_index)
        .unwrap_or_default())
}

/// Selection frequencies and agreement with the minimum-ASE model.
pub fn mc_selection(config: &McConfig, opts: &RunOptions) -> Result<Vec<SelectionReport>> {
    run(config, opts).map(|r| r.selection)
}
