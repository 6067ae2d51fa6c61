//! OLS fits and leave-one-out refits for candidate linear models.
//!
//! The leave-one-out coefficients `β̃₋ᵢ` can be obtained two ways: by
//! refitting on the `T − 1` remaining rows ([`loo_fit_refit`]) or by a
//! Sherman–Morrison downdate of the full-sample fit ([`loo_fit_downdate`]).
//! The second is `O(p²)` per observation; the first is kept as its oracle.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reciprocal condition numbers below this are treated as singular.
pub const RCOND_THRESHOLD: f64 = 1e-12;

/// Leverages at or above this make the downdate undefined.
pub const LEVERAGE_LIMIT: f64 = 1.0 - 1e-10;

/// A candidate linear model: a selection of regressor columns, optionally
/// with an appended constant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub id: String,
    pub columns: Vec<usize>,
    #[serde(default)]
    pub intercept: bool,
}

impl ModelSpec {
    pub fn new(id: impl Into<String>, columns: Vec<usize>, intercept: bool) -> Self {
        Self {
            id: id.into(),
            columns,
            intercept,
        }
    }

    /// Autoregression on the first `order` lag columns of a scalar path.
    pub fn ar(order: usize, intercept: bool) -> Self {
        let id = if intercept {
            format!("ar{order}c")
        } else {
            format!("ar{order}")
        };
        Self::new(id, (0..order).collect(), intercept)
    }

    pub fn intercept_only() -> Self {
        Self::new("mean", vec![], true)
    }

    /// Predicts zero everywhere.
    pub fn null() -> Self {
        Self::new("null", vec![], false)
    }

    pub fn n_params(&self) -> usize {
        self.columns.len() + usize::from(self.intercept)
    }

    pub fn validate(&self, available: usize) -> Result<()> {
        for (k, &c) in self.columns.iter().enumerate() {
            if c >= available {
                return Err(Error::Config(format!(
                    "model {} uses column {c} but only {available} regressors exist",
                    self.id
                )));
            }
            if self.columns[..k].contains(&c) {
                return Err(Error::Config(format!(
                    "model {} lists column {c} twice",
                    self.id
                )));
            }
        }
        Ok(())
    }

    /// Design matrix: the selected columns of `x_full`, then a column of ones
    /// when the model has an intercept.
    pub fn design(&self, x_full: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.validate(x_full.ncols())?;
        let n = x_full.nrows();
        let p = self.n_params();
        Ok(DMatrix::from_fn(n, p, |r, c| match self.columns.get(c) {
            Some(&src) => x_full[(r, src)],
            None => 1.0,
        }))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub beta: DVector<f64>,
    /// 1-norm condition number of the Gram matrix the fit was solved with.
    pub gram_condition: f64,
}

/// Full-sample fit with the cached quantities the downdate needs.
#[derive(Debug, Clone)]
pub struct FullFit {
    pub fit: FitResult,
    pub gram: DMatrix<f64>,
    pub gram_inv: DMatrix<f64>,
    pub fitted: DVector<f64>,
    pub residuals: DVector<f64>,
    pub leverage: DVector<f64>,
}

fn norm1(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn singular(rcond: f64) -> Error {
    Error::Singular {
        model: None,
        scheme: None,
        index: None,
        rcond,
    }
}

fn condition_of(gram: &DMatrix<f64>, inv: &DMatrix<f64>) -> Result<f64> {
    if gram.nrows() == 0 {
        return Ok(1.0);
    }
    let cond = norm1(gram) * norm1(inv);
    let rcond = 1.0 / cond;
    if !(rcond.is_finite() && rcond >= RCOND_THRESHOLD) {
        return Err(singular(if rcond.is_finite() { rcond } else { 0.0 }));
    }
    Ok(cond)
}

/// Solves the normal equations `gram β = xty`, returning the coefficients,
/// the inverse Gram and its condition number. `rows` is the number of
/// observations behind `gram`; fewer than `p + 1` leaves no residual degree of
/// freedom and is reported as singular.
pub(crate) fn solve_normal(
    gram: &DMatrix<f64>,
    xty: &DVector<f64>,
    rows: usize,
) -> Result<(DVector<f64>, DMatrix<f64>, f64)> {
    let p = gram.nrows();
    if rows <= p {
        return Err(singular(0.0));
    }
    if p == 0 {
        return Ok((DVector::zeros(0), DMatrix::zeros(0, 0), 1.0));
    }
    let chol = gram.clone().cholesky().ok_or_else(|| singular(0.0))?;
    let inv = chol.inverse();
    let cond = condition_of(gram, &inv)?;
    let beta = chol.solve(xty);
    if beta.iter().any(|b| !b.is_finite()) {
        return Err(singular(0.0));
    }
    Ok((beta, inv, cond))
}

fn gram_of<'a>(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    rows: impl Iterator<Item = usize> + 'a,
) -> (DMatrix<f64>, DVector<f64>, usize) {
    let p = x.ncols();
    let mut gram = DMatrix::zeros(p, p);
    let mut xty = DVector::zeros(p);
    let mut count = 0;
    for r in rows {
        accumulate_row(&mut gram, &mut xty, x, y, r);
        count += 1;
    }
    (gram, xty, count)
}

pub(crate) fn accumulate_row(
    gram: &mut DMatrix<f64>,
    xty: &mut DVector<f64>,
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    r: usize,
) {
    let p = x.ncols();
    for a in 0..p {
        let xa = x[(r, a)];
        xty[a] += xa * y[r];
        for b in 0..p {
            gram[(a, b)] += xa * x[(r, b)];
        }
    }
}

/// Full-sample OLS with cached inverse Gram, fitted values, residuals and
/// leverages.
pub fn full_fit(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<FullFit> {
    assert_eq!(x.nrows(), y.len(), "x and y disagree on the sample length");
    let (gram, xty, rows) = gram_of(x, y, 0..x.nrows());
    let (beta, gram_inv, cond) = solve_normal(&gram, &xty, rows)?;
    let fitted = x * &beta;
    let residuals = y - &fitted;
    let leverage = DVector::from_fn(x.nrows(), |r, _| {
        let row = x.row(r);
        (row * &gram_inv * row.transpose())[(0, 0)]
    });
    Ok(FullFit {
        fit: FitResult {
            beta,
            gram_condition: cond,
        },
        gram,
        gram_inv,
        fitted,
        residuals,
        leverage,
    })
}

/// Ordinary least squares.
pub fn ols_fit(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<FitResult> {
    full_fit(x, y).map(|f| f.fit)
}

/// OLS on every row except `i`, accumulated from scratch.
pub fn loo_fit_refit(x: &DMatrix<f64>, y: &DVector<f64>, i: usize) -> Result<FitResult> {
    let (gram, xty, rows) = gram_of(x, y, (0..x.nrows()).filter(|&r| r != i));
    let (beta, _, cond) = solve_normal(&gram, &xty, rows).map_err(|e| e.with_index(i))?;
    Ok(FitResult {
        beta,
        gram_condition: cond,
    })
}

/// Leave-one-out coefficients by rank-one downdate of `full`:
/// `β̃₋ᵢ = β̂ − G⁻¹xᵢ' ε̂ᵢ / (1 − hᵢ)`.
pub fn loo_fit_downdate(x: &DMatrix<f64>, i: usize, full: &FullFit) -> Result<FitResult> {
    let p = x.ncols();
    if x.nrows() <= p + 1 {
        return Err(singular(0.0).with_index(i));
    }
    if p == 0 {
        return Ok(full.fit.clone());
    }
    let h = full.leverage[i];
    if h >= LEVERAGE_LIMIT {
        return Err(Error::LeverageDegenerate {
            index: i,
            leverage: h,
        });
    }
    let xi = x.row(i).transpose();
    let ginv_x = &full.gram_inv * &xi;
    let scale = full.residuals[i] / (1.0 - h);
    let beta = &full.fit.beta - &ginv_x * scale;

    let gram_minus = &full.gram - &xi * xi.transpose();
    let inv_minus = &full.gram_inv + &ginv_x * ginv_x.transpose() / (1.0 - h);
    let cond = condition_of(&gram_minus, &inv_minus).map_err(|e| e.with_index(i))?;
    Ok(FitResult {
        beta,
        gram_condition: cond,
    })
}

/// Leave-one-out predictions `μ̃₋ᵢ` and residuals `ẽᵢ = yᵢ − μ̃₋ᵢ`.
#[derive(Debug, Clone, PartialEq)]
pub struct LooPredictions {
    pub mu: Vec<f64>,
    pub resid: Vec<f64>,
}

/// Largest elementwise gap tolerated between downdate and refit in
/// cross-check mode, relative to `1 + ‖β‖∞`.
pub const CROSSCHECK_TOL: f64 = 1e-8;

/// Leave-one-out predictions for `model` on `(x_full, y)`.
///
/// Uses the downdate path; an observation with degenerate leverage falls
/// back to a refit, and the error is propagated if that fails too. With
/// `crosscheck` every downdate is compared against a refit.
pub fn loo_mu(
    x_full: &DMatrix<f64>,
    y: &[f64],
    model: &ModelSpec,
    crosscheck: bool,
) -> Result<LooPredictions> {
    let x = model.design(x_full)?;
    let yv = DVector::from_column_slice(y);
    let full = full_fit(&x, &yv).map_err(|e| e.with_model(&model.id))?;
    let n = y.len();
    let mut mu = Vec::with_capacity(n);
    let mut resid = Vec::with_capacity(n);
    for i in 0..n {
        let fit = match loo_fit_downdate(&x, i, &full) {
            Ok(f) => {
                if crosscheck {
                    let refit = loo_fit_refit(&x, &yv, i).map_err(|e| e.with_model(&model.id))?;
                    let diff = (&f.beta - &refit.beta).amax();
                    if diff > CROSSCHECK_TOL * (1.0 + refit.beta.amax()) {
                        return Err(Error::Crosscheck { index: i, diff });
                    }
                }
                f
            }
            Err(Error::LeverageDegenerate { .. }) => {
                loo_fit_refit(&x, &yv, i).map_err(|e| e.with_model(&model.id))?
            }
            Err(e) => return Err(e.with_model(&model.id)),
        };
        let m = x.row(i).dot(&fit.beta.transpose());
        mu.push(m);
        resid.push(y[i] - m);
    }
    Ok(LooPredictions { mu, resid })
}
