//! Cross-validation schemes, the CV mean squared error and its exact
//! four-term decomposition.
//!
//! For every evaluated index `i`,
//!
//! ```text
//! ẽᵢ² = εᵢ² + 2μᵢεᵢ − 2μ̃₋ᵢεᵢ + (μᵢ − μ̃₋ᵢ)²
//! ```
//!
//! so the averaged terms must add back up to the CV MSE. Each term is summed
//! separately from the stored truth and the identity is checked, not assumed.

use std::cmp::Ordering;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dgp::SimulatedPath;
use crate::error::{Error, Result};
use crate::estimators::{self, accumulate_row, full_fit, loo_mu, solve_normal, ModelSpec};

/// Relative tolerance of the decomposition identity.
pub const IDENTITY_TOL: f64 = 1e-10;

fn default_horizon() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum CvScheme {
    Loo,
    /// Train on indices `j` with `|j − i| > h`. `h = None` resolves to
    /// `⌈T^{1/4}⌉` for a sample of length `T`.
    HBlock {
        #[serde(default)]
        h: Option<usize>,
    },
    /// `k` folds; contiguous blocks, or indices `i ≡ f (mod k)` otherwise.
    KFold {
        k: usize,
        #[serde(default)]
        contiguous: bool,
    },
    /// Test index `i` trains on indices `0..=i − horizon` (0-based). Indices
    /// with fewer than `max(min_train, p + 1)` training rows are masked.
    ExpandingWindow {
        min_train: usize,
        #[serde(default = "default_horizon")]
        horizon: usize,
    },
}

/// Default h-block half-width, `⌈T^{1/4}⌉`.
pub fn default_block(t: usize) -> usize {
    let mut h = 0usize;
    while h.pow(4) < t {
        h += 1;
    }
    h
}

impl CvScheme {
    pub fn h_block(h: usize) -> Self {
        CvScheme::HBlock { h: Some(h) }
    }

    /// Stable label used in output files. Contains no commas.
    pub fn label(&self) -> String {
        match self {
            CvScheme::Loo => "loo".into(),
            CvScheme::HBlock { h: None } => "h_block:auto".into(),
            CvScheme::HBlock { h: Some(h) } => format!("h_block:{h}"),
            CvScheme::KFold { k, contiguous } => {
                format!(
                    "k_fold:{k}:{}",
                    if *contiguous {
                        "contiguous"
                    } else {
                        "interleaved"
                    }
                )
            }
            CvScheme::ExpandingWindow { min_train, horizon } => {
                format!("expanding:{min_train}:{horizon}")
            }
        }
    }

    /// Fixes data-dependent parameters for a sample of length `t`.
    pub fn resolve(&self, t: usize) -> CvScheme {
        match self {
            CvScheme::HBlock { h: None } => CvScheme::HBlock {
                h: Some(default_block(t)),
            },
            other => other.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            CvScheme::KFold { k, .. } if *k < 2 => {
                Err(Error::Config(format!("k_fold needs k >= 2, got {k}")))
            }
            CvScheme::ExpandingWindow { horizon: 0, .. } => Err(Error::Config(
                "expanding_window horizon must be >= 1".into(),
            )),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for CvScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Held-out predictions aligned to path indices. Masked entries are NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct CvResiduals {
    pub mu: Vec<f64>,
    pub resid: Vec<f64>,
    pub mask: Vec<bool>,
}

impl CvResiduals {
    pub fn n_eval(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn cv_mse(&self) -> Result<f64> {
        cv_mse(&self.resid, &self.mask)
    }
}

/// Mean squared residual over the evaluated indices.
pub fn cv_mse(resid: &[f64], mask: &[bool]) -> Result<f64> {
    let (sum, n) = resid
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .fold((0.0, 0usize), |(s, n), (r, _)| (s + r * r, n + 1));
    if n == 0 {
        return Err(Error::EmptyMask);
    }
    Ok(sum / n as f64)
}

fn training_error(scheme: &CvScheme, index: usize, size: usize, params: usize) -> Error {
    Error::TrainingSet {
        scheme: scheme.label(),
        index,
        size,
        params,
    }
}

/// Fits on `rows` and predicts the rows in `targets`.
fn fit_subset(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    rows: impl Iterator<Item = usize>,
) -> Result<DVector<f64>> {
    let p = x.ncols();
    let mut gram = DMatrix::zeros(p, p);
    let mut xty = DVector::zeros(p);
    let mut count = 0;
    for r in rows {
        accumulate_row(&mut gram, &mut xty, x, y, r);
        count += 1;
    }
    solve_normal(&gram, &xty, count).map(|(beta, _, _)| beta)
}

/// Held-out predictions of `model` under `scheme`.
pub fn cv_residuals(
    path: &SimulatedPath,
    model: &ModelSpec,
    scheme: &CvScheme,
    crosscheck: bool,
) -> Result<CvResiduals> {
    scheme.validate()?;
    let t = path.len();
    let scheme = scheme.resolve(t);
    let label = scheme.label();
    let tag = |e: Error, i: usize| e.with_model(&model.id).with_scheme(&label).with_index(i);

    if matches!(scheme, CvScheme::Loo | CvScheme::HBlock { h: Some(0) }) {
        let out =
            loo_mu(&path.x_full, &path.y, model, crosscheck).map_err(|e| e.with_scheme(&label))?;
        return Ok(CvResiduals {
            mu: out.mu,
            resid: out.resid,
            mask: vec![true; t],
        });
    }

    let x = model.design(&path.x_full)?;
    let y = DVector::from_column_slice(&path.y);
    let p = model.n_params();
    let mut mu = vec![f64::NAN; t];
    let mut mask = vec![false; t];

    match scheme {
        CvScheme::HBlock { h: Some(h) } => {
            for i in 0..t {
                let lo = i.saturating_sub(h);
                let hi = (i + h).min(t - 1);
                let size = t - (hi - lo + 1);
                if size <= p {
                    return Err(training_error(&scheme, i, size, p));
                }
                let rows = (0..lo).chain(hi + 1..t);
                let beta = fit_subset(&x, &y, rows).map_err(|e| tag(e, i))?;
                mu[i] = x.row(i).transpose().dot(&beta);
                mask[i] = true;
            }
        }
        CvScheme::KFold { k, contiguous } => {
            if k > t {
                return Err(Error::Config(format!("k_fold k = {k} exceeds T = {t}")));
            }
            let fold_of = |i: usize| if contiguous { i * k / t } else { i % k };
            for f in 0..k {
                let test: Vec<usize> = (0..t).filter(|&i| fold_of(i) == f).collect();
                let size = t - test.len();
                if size <= p {
                    return Err(training_error(&scheme, test[0], size, p));
                }
                let beta = fit_subset(&x, &y, (0..t).filter(|&i| fold_of(i) != f))
                    .map_err(|e| tag(e, test[0]))?;
                for &i in &test {
                    mu[i] = x.row(i).transpose().dot(&beta);
                    mask[i] = true;
                }
            }
        }
        CvScheme::ExpandingWindow { min_train, horizon } => {
            let needed = min_train.max(p + 1);
            let mut gram = DMatrix::zeros(p, p);
            let mut xty = DVector::zeros(p);
            let mut added = 0usize;
            for i in 0..t {
                // training rows are 0..train_end
                let train_end = (i + 1).saturating_sub(horizon);
                while added < train_end {
                    accumulate_row(&mut gram, &mut xty, &x, &y, added);
                    added += 1;
                }
                if train_end < needed {
                    continue;
                }
                let (beta, _, _) = solve_normal(&gram, &xty, train_end).map_err(|e| tag(e, i))?;
                mu[i] = x.row(i).transpose().dot(&beta);
                mask[i] = true;
            }
        }
        CvScheme::Loo | CvScheme::HBlock { h: None } => unreachable!("resolved above"),
    }

    let resid = path.y.iter().zip(&mu).map(|(yi, mi)| yi - mi).collect();
    Ok(CvResiduals { mu, resid, mask })
}

/// Averaged terms of the CV MSE identity over the evaluated indices.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvDecomposition {
    /// `(1/n) Σ εᵢ²`
    pub term_eps2: f64,
    /// `(2/n) Σ μᵢεᵢ`
    pub term_mu_eps: f64,
    /// `(2/n) Σ μ̃₋ᵢεᵢ`, entering the identity with a minus sign.
    pub term_muhat_eps: f64,
    /// `(1/n) Σ (μᵢ − μ̃₋ᵢ)²`, the ASE.
    pub term_ase: f64,
    /// `(1/n) Σ ẽᵢ²`
    pub cv_mse: f64,
    /// Relative gap between `cv_mse` and the signed sum of the four terms.
    pub identity_residual: f64,
    pub n_eval: usize,
    pub t: usize,
    /// Per-index products `μ̃₋ᵢεᵢ`; NaN where not evaluated.
    #[serde(skip)]
    pub muhat_eps: Vec<f64>,
}

impl CvDecomposition {
    pub fn signed_sum(&self) -> f64 {
        self.term_eps2 + self.term_mu_eps - self.term_muhat_eps + self.term_ase
    }
}

/// Computes each term from `path`'s stored truth and the supplied
/// predictions, then checks the identity.
pub fn decompose(path: &SimulatedPath, fitted: &CvResiduals) -> Result<CvDecomposition> {
    let t = path.len();
    let mut sums = [0.0f64; 5];
    let mut n = 0usize;
    let mut products = vec![f64::NAN; t];
    for i in (0..t).filter(|&i| fitted.mask[i]) {
        let (mu, eps, muhat) = (path.mu_true[i], path.eps_true[i], fitted.mu[i]);
        products[i] = muhat * eps;
        sums[0] += eps * eps;
        sums[1] += mu * eps;
        sums[2] += products[i];
        sums[3] += (mu - muhat) * (mu - muhat);
        sums[4] += fitted.resid[i] * fitted.resid[i];
        n += 1;
    }
    if n == 0 {
        return Err(Error::EmptyMask);
    }
    let nf = n as f64;
    let mut d = CvDecomposition {
        term_eps2: sums[0] / nf,
        term_mu_eps: 2.0 * sums[1] / nf,
        term_muhat_eps: 2.0 * sums[2] / nf,
        term_ase: sums[3] / nf,
        cv_mse: sums[4] / nf,
        identity_residual: 0.0,
        n_eval: n,
        t,
        muhat_eps: products,
    };
    d.identity_residual = (d.cv_mse - d.signed_sum()).abs() / d.cv_mse.max(1e-300);
    if d.identity_residual.is_nan() || d.identity_residual >= IDENTITY_TOL {
        return Err(Error::Identity {
            residual: d.identity_residual,
        });
    }
    Ok(d)
}

pub fn decompose_cv_mse(
    path: &SimulatedPath,
    model: &ModelSpec,
    scheme: &CvScheme,
    crosscheck: bool,
) -> Result<CvDecomposition> {
    let fitted = cv_residuals(path, model, scheme, crosscheck)?;
    decompose(path, &fitted)
}

/// Full-sample fitted values `μ̂ᵢ` and residuals, as a [`CvResiduals`] with
/// every index evaluated.
pub fn full_sample_fit(path: &SimulatedPath, model: &ModelSpec) -> Result<CvResiduals> {
    let x = model.design(&path.x_full)?;
    let y = DVector::from_column_slice(&path.y);
    let full = full_fit(&x, &y).map_err(|e| e.with_model(&model.id))?;
    Ok(CvResiduals {
        mu: full.fitted.iter().copied().collect(),
        resid: full.residuals.iter().copied().collect(),
        mask: vec![true; path.len()],
    })
}

/// The same decomposition with the in-sample `μ̂ᵢ` in place of `μ̃₋ᵢ`.
pub fn decompose_full_sample(path: &SimulatedPath, model: &ModelSpec) -> Result<CvDecomposition> {
    decompose(path, &full_sample_fit(path, model)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AseReport {
    /// `(1/n) Σ (μᵢ − μ̃₋ᵢ)²` over the scheme's evaluated indices.
    pub ase_loo: f64,
    /// `(1/T) Σ (μᵢ − μ̂ᵢ)²` from the full-sample fit.
    pub ase_full: f64,
}

fn mean_sq_gap(truth: &[f64], fitted: &CvResiduals) -> Result<f64> {
    let (sum, n) = truth
        .iter()
        .zip(&fitted.mu)
        .zip(&fitted.mask)
        .filter(|(_, &m)| m)
        .fold((0.0, 0usize), |(s, n), ((a, b), _)| {
            (s + (a - b) * (a - b), n + 1)
        });
    if n == 0 {
        return Err(Error::EmptyMask);
    }
    Ok(sum / n as f64)
}

pub fn ase(
    path: &SimulatedPath,
    model: &ModelSpec,
    scheme: &CvScheme,
    crosscheck: bool,
) -> Result<AseReport> {
    let held_out = cv_residuals(path, model, scheme, crosscheck)?;
    let full = full_sample_fit(path, model)?;
    Ok(AseReport {
        ase_loo: mean_sq_gap(&path.mu_true, &held_out)?,
        ase_full: mean_sq_gap(&path.mu_true, &full)?,
    })
}

/// Index of the best candidate: smallest score, then fewest parameters, then
/// lowest id. Candidates are `(id, n_params, score)`.
pub fn argmin_with_ties(candidates: &[(&str, usize, f64)]) -> Option<usize> {
    (0..candidates.len()).min_by(|&a, &b| {
        let (ia, pa, sa) = candidates[a];
        let (ib, pb, sb) = candidates[b];
        sa.total_cmp(&sb)
            .then(pa.cmp(&pb))
            .then_with(|| ia.cmp(ib))
            .then(Ordering::Equal)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionEntry {
    pub id: String,
    pub n_params: usize,
    pub cv_mse: Option<f64>,
    /// Why the model was dropped, if it could not be fit.
    pub excluded: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Selection {
    pub selected: String,
    pub table: Vec<SelectionEntry>,
}

/// CV model selection over `models`. A model that fails to fit is excluded
/// and recorded in the table; selection proceeds over the rest.
pub fn select(
    models: &[ModelSpec],
    path: &SimulatedPath,
    scheme: &CvScheme,
    crosscheck: bool,
) -> Result<Selection> {
    if models.len() < 2 {
        return Err(Error::Config("selection needs at least two models".into()));
    }
    let table: Vec<SelectionEntry> = models
        .iter()
        .map(
            |m| match cv_residuals(path, m, scheme, crosscheck).and_then(|r| r.cv_mse()) {
                Ok(v) => Ok(SelectionEntry {
                    id: m.id.clone(),
                    n_params: m.n_params(),
                    cv_mse: Some(v),
                    excluded: None,
                }),
                Err(e) if e.is_fit_failure() || matches!(e, Error::EmptyMask) => {
                    Ok(SelectionEntry {
                        id: m.id.clone(),
                        n_params: m.n_params(),
                        cv_mse: None,
                        excluded: Some(e.to_string()),
                    })
                }
                Err(e) => Err(e),
            },
        )
        .collect::<Result<_>>()?;
    let scored: Vec<(&str, usize, f64)> = table
        .iter()
        .filter_map(|e| e.cv_mse.map(|v| (e.id.as_str(), e.n_params, v)))
        .collect();
    let best = argmin_with_ties(&scored)
        .ok_or_else(|| Error::Config("every candidate model failed to fit".into()))?;
    Ok(Selection {
        selected: scored[best].0.to_string(),
        table,
    })
}

/// Shorthand for [`estimators::ModelSpec::ar`] candidate lists.
pub fn ar_candidates(orders: &[usize], intercept: bool) -> Vec<ModelSpec> {
    orders
        .iter()
        .map(|&o| estimators::ModelSpec::ar(o, intercept))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dgp::{simulate, DgpSpec, ErrorSpec};

    fn path_from(y: &[f64], x: DMatrix<f64>, mu: Vec<f64>) -> SimulatedPath {
        let eps = y.iter().zip(&mu).map(|(a, b)| a - b).collect();
        SimulatedPath {
            y: y.to_vec(),
            mu_true: mu,
            eps_true: eps,
            x_full: x,
            column_names: vec![],
            components: None,
        }
    }

    fn ar_path(rho: f64, t: usize, seed: u64) -> SimulatedPath {
        simulate(&DgpSpec::ar1(rho, ErrorSpec::gaussian(1.0)), t, 4, seed).unwrap()
    }

    fn exact_iid_path() -> SimulatedPath {
        let spec = DgpSpec::iid_regression(
            vec![1.0, -2.0],
            vec![vec![1.0, 0.2], vec![0.2, 1.0]],
            ErrorSpec::gaussian(1.0).with_zero_noise(),
        );
        simulate(&spec, 40, 0, 5).unwrap()
    }

    #[test]
    fn loo_hand_example() {
        let path = path_from(&[1.0, 2.0, 3.0], DMatrix::zeros(3, 0), vec![0.0; 3]);
        let r = cv_residuals(&path, &ModelSpec::intercept_only(), &CvScheme::Loo, true).unwrap();
        let expected = [-1.5, 0.0, 1.5];
        for (a, b) in r.resid.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((r.cv_mse().unwrap() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn cv_mse_edge_cases() {
        assert_eq!(cv_mse(&[0.0; 4], &[true; 4]).unwrap(), 0.0);
        assert!(matches!(cv_mse(&[1.0], &[false]), Err(Error::EmptyMask)));
    }

    #[test]
    fn block_covering_sample_is_an_error() {
        let path = ar_path(0.5, 30, 1);
        let err = cv_residuals(
            &path,
            &ModelSpec::ar(1, true),
            &CvScheme::h_block(30),
            false,
        )
        .unwrap_err();
        assert!(matches!(err, Error::TrainingSet { size: 0, .. }), "{err}");
    }

    #[test]
    fn t_fold_contiguous_equals_loo() {
        let path = ar_path(0.9, 40, 2);
        let model = ModelSpec::ar(2, true);
        let a = cv_residuals(&path, &model, &CvScheme::Loo, false).unwrap();
        let b = cv_residuals(
            &path,
            &model,
            &CvScheme::KFold {
                k: 40,
                contiguous: true,
            },
            false,
        )
        .unwrap();
        for i in 0..40 {
            assert!((a.resid[i] - b.resid[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_block_is_loo_bit_for_bit() {
        let path = ar_path(0.9, 35, 3);
        let model = ModelSpec::ar(1, true);
        let a = cv_residuals(&path, &model, &CvScheme::Loo, false).unwrap();
        let b = cv_residuals(&path, &model, &CvScheme::h_block(0), false).unwrap();
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a.resid), bits(&b.resid));
    }

    #[test]
    fn h_block_excludes_neighbours() {
        // brute-force oracle: refit on the surviving rows directly
        let path = ar_path(0.7, 25, 4);
        let model = ModelSpec::ar(1, true);
        let h = 2;
        let r = cv_residuals(&path, &model, &CvScheme::h_block(h), false).unwrap();
        let x = model.design(&path.x_full).unwrap();
        for i in [0usize, 7, 24] {
            let keep: Vec<usize> = (0..25usize).filter(|&j| j.abs_diff(i) > h).collect();
            let xs = x.select_rows(keep.iter());
            let ys = DVector::from_iterator(keep.len(), keep.iter().map(|&j| path.y[j]));
            let beta = estimators::ols_fit(&xs, &ys).unwrap().beta;
            let m = x.row(i).transpose().dot(&beta);
            assert!((r.mu[i] - m).abs() < 1e-10);
        }
    }

    #[test]
    fn expanding_window_masks_short_histories() {
        let path = ar_path(0.5, 30, 5);
        let scheme = CvScheme::ExpandingWindow {
            min_train: 5,
            horizon: 1,
        };
        let r = cv_residuals(&path, &ModelSpec::ar(1, true), &scheme, false).unwrap();
        // index i trains on rows 0..i, so the first evaluated index is 5
        assert!(r.mask[..5].iter().all(|m| !m));
        assert!(r.mask[5..].iter().all(|&m| m));
        assert_eq!(r.n_eval(), 25);
        let d = decompose(&path, &r).unwrap();
        assert_eq!(d.n_eval, 25);
    }

    #[test]
    fn expanding_window_ignores_the_future() {
        let path = ar_path(0.8, 40, 6);
        let scheme = CvScheme::ExpandingWindow {
            min_train: 4,
            horizon: 1,
        };
        let model = ModelSpec::ar(2, true);
        let base = cv_residuals(&path, &model, &scheme, false).unwrap();
        let mut perturbed = path.clone();
        let cut = 25;
        for j in cut..40 {
            perturbed.y[j] += 3.0;
            for c in 0..perturbed.x_full.ncols() {
                if j + c + 1 < 40 {
                    perturbed.x_full[(j + c + 1, c)] += 3.0;
                }
            }
        }
        let after = cv_residuals(&perturbed, &model, &scheme, false).unwrap();
        for i in 0..cut {
            assert_eq!(base.mu[i].to_bits(), after.mu[i].to_bits());
        }
        assert_ne!(base.mu[cut + 2], after.mu[cut + 2]);
    }

    #[test]
    fn null_model_decomposition() {
        let path = ar_path(0.9, 50, 7);
        let d = decompose_cv_mse(&path, &ModelSpec::null(), &CvScheme::Loo, false).unwrap();
        assert_eq!(d.term_muhat_eps, 0.0);
        let mean_y2 = path.y.iter().map(|v| v * v).sum::<f64>() / 50.0;
        assert!((d.cv_mse - mean_y2).abs() < 1e-12 * mean_y2);
    }

    #[test]
    fn exact_fit_has_zero_terms() {
        let path = exact_iid_path();
        let model = ModelSpec::new("true", vec![0, 1], false);
        let d = decompose_cv_mse(&path, &model, &CvScheme::Loo, true).unwrap();
        for v in [d.term_eps2, d.term_mu_eps, d.term_muhat_eps] {
            assert_eq!(v, 0.0);
        }
        assert!(d.term_ase < 1e-24 && d.cv_mse < 1e-24);
        let a = ase(&path, &model, &CvScheme::Loo, false).unwrap();
        assert!(a.ase_loo < 1e-24 && a.ase_full < 1e-24);
    }

    #[test]
    fn identity_over_many_seeds() {
        let model = ModelSpec::ar(1, true);
        for seed in 0..1_000u64 {
            let path = ar_path(0.9, 30, seed);
            let d = decompose_cv_mse(&path, &model, &CvScheme::Loo, false).unwrap();
            assert!(d.identity_residual < 1e-10);
        }
    }

    #[test]
    fn full_sample_decomposition_holds_too() {
        let path = ar_path(0.5, 60, 8);
        let d = decompose_full_sample(&path, &ModelSpec::ar(3, true)).unwrap();
        assert!(d.identity_residual < 1e-10);
        assert_eq!(d.n_eval, 60);
    }

    #[test]
    fn null_model_full_ase_is_mean_mu_squared() {
        let path = ar_path(0.9, 80, 9);
        let a = ase(&path, &ModelSpec::null(), &CvScheme::Loo, false).unwrap();
        let expected = path.mu_true.iter().map(|m| m * m).sum::<f64>() / 80.0;
        assert_eq!(a.ase_full, expected);
    }

    #[test]
    fn true_model_beats_intercept_only_on_ase() {
        let spec = DgpSpec::ar1(0.9, ErrorSpec::gaussian(1.0));
        let mut wins = 0;
        for seed in 0..1_000u64 {
            let path = simulate(&spec, 100, 1, seed).unwrap();
            let good = ase(&path, &ModelSpec::ar(1, false), &CvScheme::Loo, false).unwrap();
            let bad = ase(&path, &ModelSpec::intercept_only(), &CvScheme::Loo, false).unwrap();
            if good.ase_loo < bad.ase_loo {
                wins += 1;
            }
        }
        assert!(wins >= 950, "true model won {wins} of 1000");
    }

    #[test]
    fn identical_models_tie_to_lower_id() {
        let path = ar_path(0.5, 40, 10);
        let models = vec![
            ModelSpec::new("b", vec![0], true),
            ModelSpec::new("a", vec![0], true),
        ];
        let s = select(&models, &path, &CvScheme::Loo, false).unwrap();
        assert_eq!(s.selected, "a");
    }

    #[test]
    fn exact_model_wins_over_null() {
        let path = exact_iid_path();
        let models = vec![ModelSpec::null(), ModelSpec::new("true", vec![0, 1], false)];
        let s = select(&models, &path, &CvScheme::Loo, false).unwrap();
        assert_eq!(s.selected, "true");
    }

    #[test]
    fn failing_model_is_excluded_not_fatal() {
        let mut path = ar_path(0.5, 30, 11);
        let n = path.len();
        path.x_full = path.x_full.clone().insert_column(4, 0.0);
        assert_eq!(path.x_full.nrows(), n);
        let models = vec![
            ModelSpec::new("broken", vec![4], false),
            ModelSpec::ar(1, true),
        ];
        let s = select(&models, &path, &CvScheme::Loo, false).unwrap();
        assert_eq!(s.selected, "ar1c");
        assert!(s.table[0].excluded.is_some());
        assert!(select(&models[..1], &path, &CvScheme::Loo, false).is_err());
    }

    #[test]
    fn argmin_is_scale_invariant() {
        let ids = ["m0", "m1", "m2", "m3"];
        let scores = [2.0, 1.5, 1.5, 3.0];
        let params = [1, 3, 2, 1];
        let base: Vec<_> = (0..4).map(|i| (ids[i], params[i], scores[i])).collect();
        let expected = argmin_with_ties(&base);
        assert_eq!(expected, Some(2));
        for c in [1e-6, 0.3, 7.0, 1e9] {
            let scaled: Vec<_> = (0..4).map(|i| (ids[i], params[i], scores[i] * c)).collect();
            assert_eq!(argmin_with_ties(&scaled), expected);
        }
    }

    #[test]
    fn default_block_is_fourth_root_ceiling() {
        assert_eq!(default_block(16), 2);
        assert_eq!(default_block(17), 3);
        assert_eq!(default_block(50), 3);
        assert_eq!(default_block(81), 3);
        assert_eq!(default_block(82), 4);
    }

    #[test]
    fn scheme_json_forms() {
        let schemes: Vec<CvScheme> = serde_json::from_str(
            r#"["loo", {"h_block": {}}, {"h_block": {"h": 2}},
                {"k_fold": {"k": 5, "contiguous": true}},
                {"expanding_window": {"min_train": 10}}]"#,
        )
        .unwrap();
        assert_eq!(schemes[1], CvScheme::HBlock { h: None });
        assert_eq!(
            schemes[4],
            CvScheme::ExpandingWindow {
                min_train: 10,
                horizon: 1
            }
        );
        assert!(serde_json::from_str::<CvScheme>(r#"{"h_block": {"width": 2}}"#).is_err());
    }
}
