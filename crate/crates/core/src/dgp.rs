//! Data-generating processes with known conditional means and errors.
//!
//! A [`SimulatedPath`] carries the realized series together with the exact
//! `mu` and `eps` values that produced it, which is what makes the
//! cross-validation decomposition computable at all.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Purpose};

pub const DEFAULT_BURN_IN: usize = 1_000;

const VARIANCE_MATCH_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    IidGaussian,
    Arch1,
}

/// Error process. Both variants are martingale differences; `arch1` has
/// dependent squares.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorSpec {
    pub kind: ErrorKind,
    /// Unconditional variance.
    pub sigma2: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arch_omega: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arch_alpha: Option<f64>,
    /// Replace every draw by zero. Intended for tests of exact-fit behaviour.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub zero_noise: bool,
}

impl ErrorSpec {
    pub fn gaussian(sigma2: f64) -> Self {
        Self {
            kind: ErrorKind::IidGaussian,
            sigma2,
            arch_omega: None,
            arch_alpha: None,
            zero_noise: false,
        }
    }

    /// ARCH(1) with `sigma2 = omega / (1 - alpha)`.
    pub fn arch1(omega: f64, alpha: f64) -> Self {
        Self {
            kind: ErrorKind::Arch1,
            sigma2: omega / (1.0 - alpha),
            arch_omega: Some(omega),
            arch_alpha: Some(alpha),
            zero_noise: false,
        }
    }

    pub fn with_zero_noise(mut self) -> Self {
        self.zero_noise = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma2.is_finite() && self.sigma2 > 0.0) {
            return Err(Error::Parameter(format!(
                "sigma2 must be positive and finite, got {}",
                self.sigma2
            )));
        }
        match self.kind {
            ErrorKind::IidGaussian => {
                if self.arch_omega.is_some() || self.arch_alpha.is_some() {
                    return Err(Error::Parameter(
                        "arch_omega/arch_alpha only apply to arch1 errors".into(),
                    ));
                }
            }
            ErrorKind::Arch1 => {
                let (omega, alpha) = self.arch_params()?;
                if !(omega.is_finite() && omega > 0.0) {
                    return Err(Error::Parameter(format!(
                        "arch_omega must be > 0, got {omega}"
                    )));
                }
                if !(0.0..1.0).contains(&alpha) {
                    return Err(Error::Parameter(format!(
                        "arch_alpha must lie in [0, 1), got {alpha}"
                    )));
                }
                let implied = omega / (1.0 - alpha);
                if (implied - self.sigma2).abs() > VARIANCE_MATCH_TOL * self.sigma2 {
                    return Err(Error::Parameter(format!(
                        "arch_omega/(1-arch_alpha) = {implied} does not match sigma2 = {}",
                        self.sigma2
                    )));
                }
            }
        }
        Ok(())
    }

    fn arch_params(&self) -> Result<(f64, f64)> {
        match (self.arch_omega, self.arch_alpha) {
            (Some(o), Some(a)) => Ok((o, a)),
            _ => Err(Error::Parameter(
                "arch1 errors require arch_omega and arch_alpha".into(),
            )),
        }
    }
}

/// Conditional-mean recursion of a DGP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum MeanKind {
    Ar1 {
        rho: f64,
    },
    /// Vector autoregression. `coefficients[l]` is the `k x k` matrix on lag
    /// `l + 1`, stored row-major. The regression target is component 0.
    VarP {
        coefficients: Vec<Vec<Vec<f64>>>,
        k: usize,
        p: usize,
    },
    /// `y_i = x_i beta + eps_i` with `x_i ~ N(0, regressor_cov)` drawn
    /// independently of every error. When `design_seed` is set the regressors
    /// are drawn from it instead of the path seed, giving a fixed design
    /// across replications.
    IidRegression {
        beta: Vec<f64>,
        regressor_cov: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        design_seed: Option<u64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DgpSpec {
    pub mean_kind: MeanKind,
    pub errors: ErrorSpec,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
}

fn default_burn_in() -> usize {
    DEFAULT_BURN_IN
}

impl DgpSpec {
    pub fn ar1(rho: f64, errors: ErrorSpec) -> Self {
        Self {
            mean_kind: MeanKind::Ar1 { rho },
            errors,
            burn_in: DEFAULT_BURN_IN,
        }
    }

    pub fn iid_regression(beta: Vec<f64>, regressor_cov: Vec<Vec<f64>>, errors: ErrorSpec) -> Self {
        Self {
            mean_kind: MeanKind::IidRegression {
                beta,
                regressor_cov,
                design_seed: None,
            },
            errors,
            burn_in: DEFAULT_BURN_IN,
        }
    }

    pub fn with_burn_in(mut self, burn_in: usize) -> Self {
        self.burn_in = burn_in;
        self
    }

    /// Number of regressor columns a path built at `max_lag` will carry.
    pub fn regressor_count(&self, max_lag: usize) -> usize {
        match &self.mean_kind {
            MeanKind::Ar1 { .. } => max_lag,
            MeanKind::VarP { k, .. } => k * max_lag,
            MeanKind::IidRegression { beta, .. } => beta.len(),
        }
    }

    /// Smallest lag depth whose regressor matrix contains column `max_column`.
    pub fn lags_for_column(&self, max_column: usize) -> usize {
        match &self.mean_kind {
            MeanKind::Ar1 { .. } => max_column + 1,
            MeanKind::VarP { k, .. } => max_column / k + 1,
            MeanKind::IidRegression { .. } => 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.errors.validate()?;
        match &self.mean_kind {
            MeanKind::Ar1 { rho } => {
                if !rho.is_finite() || rho.abs() >= 1.0 {
                    return Err(Error::Stationarity(format!("|rho| must be < 1, got {rho}")));
                }
            }
            MeanKind::VarP { .. } => {
                let radius = companion_spectral_radius(self)?;
                if radius >= 1.0 {
                    return Err(Error::Stationarity(format!(
                        "companion spectral radius {radius} is not below 1"
                    )));
                }
            }
            MeanKind::IidRegression {
                beta,
                regressor_cov,
                ..
            } => {
                cov_cholesky(beta.len(), regressor_cov)?;
                if beta.iter().any(|b| !b.is_finite()) {
                    return Err(Error::Parameter("beta must be finite".into()));
                }
            }
        }
        Ok(())
    }
}

fn var_matrices(k: usize, p: usize, coefficients: &[Vec<Vec<f64>>]) -> Result<Vec<DMatrix<f64>>> {
    if k == 0 || p == 0 {
        return Err(Error::Parameter("var_p needs k >= 1 and p >= 1".into()));
    }
    if coefficients.len() != p {
        return Err(Error::Parameter(format!(
            "var_p declares p = {p} but has {} coefficient matrices",
            coefficients.len()
        )));
    }
    coefficients
        .iter()
        .enumerate()
        .map(|(l, rows)| {
            if rows.len() != k || rows.iter().any(|r| r.len() != k) {
                return Err(Error::Parameter(format!(
                    "coefficient matrix for lag {} is not {k}x{k}",
                    l + 1
                )));
            }
            if rows.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::Parameter("var_p coefficients must be finite".into()));
            }
            Ok(DMatrix::from_fn(k, k, |r, c| rows[r][c]))
        })
        .collect()
}

/// Spectral radius of the VAR companion matrix.
pub fn companion_spectral_radius(spec: &DgpSpec) -> Result<f64> {
    let MeanKind::VarP { coefficients, k, p } = &spec.mean_kind else {
        return Err(Error::Parameter(
            "companion matrix only exists for var_p".into(),
        ));
    };
    let (k, p) = (*k, *p);
    let mats = var_matrices(k, p, coefficients)?;
    let n = k * p;
    let mut companion = DMatrix::<f64>::zeros(n, n);
    for (l, a) in mats.iter().enumerate() {
        companion.view_mut((0, l * k), (k, k)).copy_from(a);
    }
    for r in k..n {
        companion[(r, r - k)] = 1.0;
    }
    let radius = companion
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0_f64, f64::max);
    Ok(radius)
}

fn cov_cholesky(p: usize, cov: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    if p == 0 {
        return Err(Error::Parameter(
            "iid_regression needs at least one regressor".into(),
        ));
    }
    if cov.len() != p || cov.iter().any(|r| r.len() != p) {
        return Err(Error::Parameter(format!("regressor_cov must be {p}x{p}")));
    }
    for r in 0..p {
        for c in 0..r {
            if (cov[r][c] - cov[c][r]).abs() > 1e-12 * (1.0 + cov[r][c].abs()) {
                return Err(Error::Parameter("regressor_cov is not symmetric".into()));
            }
        }
    }
    let m = DMatrix::from_fn(p, p, |r, c| cov[r][c]);
    m.cholesky()
        .map(|c| c.l())
        .ok_or_else(|| Error::Parameter("regressor_cov is not positive definite".into()))
}

/// One realized sample. Row `i` of `x_full` only uses information available
/// before time `i` for the time-series processes.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedPath {
    pub y: Vec<f64>,
    pub mu_true: Vec<f64>,
    pub eps_true: Vec<f64>,
    pub x_full: DMatrix<f64>,
    pub column_names: Vec<String>,
    /// All components of a vector process (`T x k`); `None` for scalar series.
    pub components: Option<DMatrix<f64>>,
}

impl SimulatedPath {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

fn draw_errors<R: Rng>(spec: &ErrorSpec, n: usize, rng: &mut R) -> Vec<f64> {
    if spec.zero_noise {
        return vec![0.0; n];
    }
    match spec.kind {
        ErrorKind::IidGaussian => {
            let sd = spec.sigma2.sqrt();
            (0..n)
                .map(|_| sd * rng.sample::<f64, _>(StandardNormal))
                .collect()
        }
        ErrorKind::Arch1 => {
            let omega = spec.arch_omega.unwrap_or(spec.sigma2);
            let alpha = spec.arch_alpha.unwrap_or(0.0);
            let mut prev_sq = spec.sigma2;
            (0..n)
                .map(|_| {
                    let cond_var = omega + alpha * prev_sq;
                    let e = cond_var.sqrt() * rng.sample::<f64, _>(StandardNormal);
                    prev_sq = e * e;
                    e
                })
                .collect()
        }
    }
}

/// Draws `n` errors from the process described by `spec`.
pub fn sample_error_process(spec: &ErrorSpec, n: usize, seed: u64) -> Result<Vec<f64>> {
    spec.validate()?;
    Ok(draw_errors(
        spec,
        n,
        &mut rng::stream(seed, Purpose::Errors),
    ))
}

/// Simulates `t` usable observations of `spec`, with a regressor matrix
/// holding `max_lag` lags (or the exogenous regressors for `iid_regression`).
pub fn simulate(spec: &DgpSpec, t: usize, max_lag: usize, seed: u64) -> Result<SimulatedPath> {
    spec.validate()?;
    let p_max = spec.regressor_count(max_lag);
    let needed = max_lag + p_max + 2;
    if t < needed {
        return Err(Error::Size { needed, got: t });
    }
    match &spec.mean_kind {
        MeanKind::Ar1 { rho } => Ok(simulate_ar1(spec, *rho, t, max_lag, seed)),
        MeanKind::VarP { coefficients, k, p } => {
            let mats = var_matrices(*k, *p, coefficients)?;
            Ok(simulate_var(spec, &mats, t, max_lag, seed))
        }
        MeanKind::IidRegression {
            beta,
            regressor_cov,
            design_seed,
        } => {
            let chol = cov_cholesky(beta.len(), regressor_cov)?;
            Ok(simulate_iid(spec, beta, &chol, *design_seed, t, seed))
        }
    }
}

fn lag_names(max_lag: usize) -> Vec<String> {
    (1..=max_lag).map(|l| format!("lag{l}")).collect()
}

fn simulate_ar1(spec: &DgpSpec, rho: f64, t: usize, max_lag: usize, seed: u64) -> SimulatedPath {
    let start = spec.burn_in + max_lag;
    let n = start + t;
    let eps = draw_errors(&spec.errors, n, &mut rng::stream(seed, Purpose::Errors));
    let mut series = Vec::with_capacity(n);
    let mut mu = Vec::with_capacity(n);
    let mut prev = 0.0;
    for &e in &eps {
        let m = rho * prev;
        let v = m + e;
        mu.push(m);
        series.push(v);
        prev = v;
    }
    let x_full = DMatrix::from_fn(t, max_lag, |i, c| series[start + i - (c + 1)]);
    SimulatedPath {
        y: series[start..].to_vec(),
        mu_true: mu[start..].to_vec(),
        eps_true: eps[start..].to_vec(),
        x_full,
        column_names: lag_names(max_lag),
        components: None,
    }
}

fn simulate_var(
    spec: &DgpSpec,
    mats: &[DMatrix<f64>],
    t: usize,
    max_lag: usize,
    seed: u64,
) -> SimulatedPath {
    let k = mats[0].nrows();
    let order = mats.len();
    let start = spec.burn_in + max_lag;
    let n = start + t;
    let shocks: Vec<Vec<f64>> = (0..k)
        .map(|j| {
            let mut rng = rng::stream(seed, Purpose::ComponentErrors(j as u32));
            draw_errors(&spec.errors, n, &mut rng)
        })
        .collect();
    // series[s * k + j]: component j at time s
    let mut series = vec![0.0; n * k];
    let mut mu0 = Vec::with_capacity(n);
    for s in 0..n {
        let mut mean = vec![0.0; k];
        for (l, a) in mats.iter().enumerate().take(order) {
            if s < l + 1 {
                break;
            }
            let past = &series[(s - l - 1) * k..(s - l) * k];
            for (r, m) in mean.iter_mut().enumerate() {
                for (c, v) in past.iter().enumerate() {
                    *m += a[(r, c)] * v;
                }
            }
        }
        for j in 0..k {
            series[s * k + j] = mean[j] + shocks[j][s];
        }
        mu0.push(mean[0]);
    }
    let x_full = DMatrix::from_fn(t, k * max_lag, |i, c| {
        let (lag, comp) = (c / k + 1, c % k);
        series[(start + i - lag) * k + comp]
    });
    let column_names = (1..=max_lag)
        .flat_map(|l| (1..=k).map(move |j| format!("y{j}_lag{l}")))
        .collect();
    let y = (start..n).map(|s| series[s * k]).collect();
    SimulatedPath {
        y,
        mu_true: mu0[start..].to_vec(),
        eps_true: shocks[0][start..].to_vec(),
        x_full,
        column_names,
        components: Some(DMatrix::from_fn(t, k, |i, j| series[(start + i) * k + j])),
    }
}

fn simulate_iid(
    spec: &DgpSpec,
    beta: &[f64],
    chol: &DMatrix<f64>,
    design_seed: Option<u64>,
    t: usize,
    seed: u64,
) -> SimulatedPath {
    let p = beta.len();
    let mut reg_rng = rng::stream(design_seed.unwrap_or(seed), Purpose::Regressors);
    let z = DMatrix::<f64>::from_fn(p, t, |_, _| reg_rng.sample(StandardNormal));
    let x_full = (chol * z).transpose();
    let eps_all = draw_errors(
        &spec.errors,
        spec.burn_in + t,
        &mut rng::stream(seed, Purpose::Errors),
    );
    let eps = eps_all[spec.burn_in..].to_vec();
    let mu: Vec<f64> = (0..t)
        .map(|i| (0..p).map(|c| x_full[(i, c)] * beta[c]).sum())
        .collect();
    let y = mu.iter().zip(&eps).map(|(m, e)| m + e).collect();
    SimulatedPath {
        y,
        mu_true: mu,
        eps_true: eps,
        x_full,
        column_names: (1..=p).map(|c| format!("x{c}")).collect(),
        components: None,
    }
}
