//! Least-squares fitting of rank-distribution families with RSS, R² and
//! AICc scoring.
//!
//! Six families are fitted in probability space by damped Gauss-Newton
//! (Levenberg-Marquardt) iteration with analytic Jacobians; the negative
//! hypergeometric family is fitted by a parameter-space search
//! ([`fit_nhg`]). [`fit_all`] runs every family and orders the results by
//! AICc.

mod init;
mod linalg;
mod lm;
mod model;
mod nhg;

pub use init::initial_guess;
pub use model::{eval_curve, eval_model, model_gradient, ModelFamily};
pub use nhg::{fit_nhg, GridAxis, NhgGrid, Spacing};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distribution::RankedDistribution;
use crate::io::float;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("{family} takes {expected} parameters, got {got}")]
    ParamCount {
        family: ModelFamily,
        expected: usize,
        got: usize,
    },
    #[error("{family}: outside the parameter domain ({reason})")]
    Domain { family: ModelFamily, reason: String },
    #[error("{0} has no analytic gradient")]
    NoGradient(ModelFamily),
    #[error("need n > k + 1 points (n = {n}, k = {k})")]
    DegreesOfFreedom { n: usize, k: usize },
    #[error("R² undefined: all probabilities are equal")]
    ZeroVariance,
    #[error("RSS must be a non-negative number, got {0}")]
    InvalidRss(f64),
    #[error("invalid fit configuration: {0}")]
    Config(String),
    #[error("the NHG search grid has no feasible point")]
    EmptyGrid,
    #[error("need at least {needed} ranks, got {n}")]
    TooFewPoints { n: usize, needed: usize },
}

/// Levenberg-Marquardt damping schedule. The damped normal matrix is
/// `JᵀJ + λ·diag(JᵀJ)`; `λ` is multiplied by `increase` after a rejected
/// step and by `decrease` after an accepted one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Damping<T: Scalar = f64> {
    pub initial: T,
    pub increase: T,
    pub decrease: T,
}

impl<T: Scalar> Default for Damping<T> {
    fn default() -> Self {
        Self {
            initial: T::lit(1e-3),
            increase: T::lit(10.0),
            decrease: T::lit(0.1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct FitConfig<T: Scalar = f64> {
    /// Starting parameters per family; families not listed start from
    /// [`initial_guess`].
    pub initial: BTreeMap<ModelFamily, Vec<T>>,
    pub max_iterations: usize,
    pub damping: Damping<T>,
    /// Relative RSS-change tolerance. The matching gradient test uses its square root.
    pub tolerance: T,
    /// Inclusive `(lower, upper)` bounds per parameter, per family.
    pub bounds: BTreeMap<ModelFamily, Vec<(T, T)>>,
    pub nhg: NhgGrid<T>,
}

impl<T: Scalar> Default for FitConfig<T> {
    fn default() -> Self {
        Self {
            initial: BTreeMap::new(),
            max_iterations: 500,
            damping: Damping::default(),
            tolerance: T::fit_tolerance(),
            bounds: BTreeMap::new(),
            nhg: NhgGrid::default(),
        }
    }
}

impl<T: Scalar> FitConfig<T> {
    pub fn validate(&self) -> Result<(), FitError> {
        let bad = |m: &str| Err(FitError::Config(m.into()));
        if !(self.tolerance > T::zero()) {
            return bad("tolerance must be positive");
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be at least 1");
        }
        let d = &self.damping;
        if !(d.initial > T::zero()
            && d.increase > T::one()
            && d.decrease > T::zero()
            && d.decrease < T::one())
        {
            return bad("damping needs initial > 0, increase > 1 and 0 < decrease < 1");
        }
        for (family, start) in &self.initial {
            if start.len() != family.param_count() {
                return bad(&format!(
                    "initial parameters for {family} have length {}",
                    start.len()
                ));
            }
        }
        for (family, bounds) in &self.bounds {
            if bounds.len() != family.param_count() || bounds.iter().any(|(lo, hi)| !(lo <= hi)) {
                return bad(&format!("bounds for {family} are malformed"));
            }
        }
        self.nhg.validate()
    }
}

/// Outcome of fitting one family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct FitResult<T: Scalar = f64> {
    pub family: ModelFamily,
    /// `(A, a)` or `(A, a, b)`.
    #[serde(with = "float::vec")]
    pub params: Vec<T>,
    /// Standard errors, absent for the grid-searched family or a singular fit.
    #[serde(with = "float::opt_vec")]
    pub std_errors: Option<Vec<T>>,
    #[serde(with = "float::scalar")]
    pub rss: T,
    #[serde(with = "float::scalar")]
    pub r_squared: T,
    #[serde(with = "float::scalar")]
    pub aicc: T,
    pub n: usize,
    pub converged: bool,
    pub iterations: usize,
    /// Some iterate left the configured bounds and was clamped back.
    pub clamped: bool,
    pub diagnostic: Option<String>,
}

impl<T: Scalar> FitResult<T> {
    pub fn k(&self) -> usize {
        self.family.param_count()
    }

    /// Non-converged placeholder for a family that could not be fitted.
    pub fn failed(family: ModelFamily, n: usize, reason: impl Into<String>) -> Self {
        Self {
            family,
            params: vec![T::nan(); family.param_count()],
            std_errors: None,
            rss: T::nan(),
            r_squared: T::nan(),
            aicc: T::nan(),
            n,
            converged: false,
            iterations: 0,
            clamped: false,
            diagnostic: Some(reason.into()),
        }
    }

    /// Scores `params` against `d`: RSS, R² and AICc all derive from the
    /// same fitted curve.
    pub(crate) fn scored(
        family: ModelFamily,
        probs: &[T],
        params: Vec<T>,
        std_errors: Option<Vec<T>>,
    ) -> Result<Self, FitError> {
        let fitted = eval_curve(family, &params, probs.len())?;
        let rss_value = rss(probs, &fitted);
        let mut notes = Vec::new();
        let r_squared = r_squared(probs, &fitted).unwrap_or_else(|e| {
            notes.push(e.to_string());
            T::nan()
        });
        let aicc = aicc(rss_value, probs.len(), family.param_count()).unwrap_or_else(|e| {
            notes.push(e.to_string());
            T::nan()
        });
        Ok(Self {
            family,
            params,
            std_errors,
            rss: rss_value,
            r_squared,
            aicc,
            n: probs.len(),
            converged: true,
            iterations: 0,
            clamped: false,
            diagnostic: (!notes.is_empty()).then(|| notes.join("; ")),
        })
    }

    fn note(&mut self, msg: impl Into<String>) {
        let msg = msg.into();
        self.diagnostic = Some(match self.diagnostic.take() {
            Some(prev) => format!("{prev}; {msg}"),
            None => msg,
        });
    }
}

/// Fit results for one labelled distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct FitReport<T: Scalar = f64> {
    pub label: String,
    pub results: Vec<FitResult<T>>,
}

/// `Σ (p_r − fitted_r)²`.
pub fn rss<T: Scalar>(probs: &[T], fitted: &[T]) -> T {
    probs
        .iter()
        .zip(fitted)
        .map(|(&p, &f)| (p - f) * (p - f))
        .fold(T::zero(), |acc, v| acc + v)
}

/// `1 − RSS / Σ (p_r − p̄)²`.
pub fn r_squared<T: Scalar>(probs: &[T], fitted: &[T]) -> Result<T, FitError> {
    let n = T::from_usize(probs.len()).unwrap();
    let mean = probs.iter().fold(T::zero(), |acc, &p| acc + p) / n;
    let total = probs
        .iter()
        .map(|&p| (p - mean) * (p - mean))
        .fold(T::zero(), |acc, v| acc + v);
    if !(total > T::zero()) {
        return Err(FitError::ZeroVariance);
    }
    Ok(T::one() - rss(probs, fitted) / total)
}

/// Small-sample corrected AIC, `n·ln(RSS/n) + 2k + 2k(k+1)/(n−k−1)`.
///
/// A zero RSS maps to `−∞`.
pub fn aicc<T: Scalar>(rss: T, n: usize, k: usize) -> Result<T, FitError> {
    if n <= k + 1 {
        return Err(FitError::DegreesOfFreedom { n, k });
    }
    if rss.is_nan() || rss < T::zero() || rss.is_infinite() {
        return Err(FitError::InvalidRss(rss.to_f64().unwrap_or(f64::NAN)));
    }
    if rss == T::zero() {
        return Ok(T::neg_infinity());
    }
    let nf = T::from_usize(n).unwrap();
    let kf = T::from_usize(k).unwrap();
    let two = T::lit(2.0);
    Ok(nf * (rss / nf).ln() + two * kf + two * kf * (kf + T::one()) / (nf - kf - T::one()))
}

/// Fits one family to the probabilities of `d`. The NHG family is
/// delegated to [`fit_nhg`].
pub fn fit<T: Scalar>(
    family: ModelFamily,
    d: &RankedDistribution<T>,
    config: &FitConfig<T>,
) -> Result<FitResult<T>, FitError> {
    fit_values(family, &d.probabilities(), config)
}

/// Fits one family to observed values at ranks `1..=n`, which need not
/// form a normalized or monotone distribution.
pub fn fit_values<T: Scalar>(
    family: ModelFamily,
    probs: &[T],
    config: &FitConfig<T>,
) -> Result<FitResult<T>, FitError> {
    config.validate()?;
    if family == ModelFamily::Nhg {
        return nhg::fit_nhg_values(probs, config);
    }
    let n = probs.len();
    let k = family.param_count();
    if n <= k + 1 {
        return Err(FitError::DegreesOfFreedom { n, k });
    }
    if probs.iter().any(|p| !p.is_finite()) {
        return Err(FitError::Config("observed values must be finite".into()));
    }
    let start = match config.initial.get(&family) {
        Some(p) => p.clone(),
        None => initial_guess(family, probs),
    };
    let bounds = config.bounds.get(&family).map(Vec::as_slice);
    let outcome = lm::minimize(probs, start, bounds, config, |theta| {
        let mut fitted = Vec::with_capacity(n);
        let mut jac = Vec::with_capacity(n);
        for r in 1..=n {
            fitted.push(eval_model(family, theta, r, n)?);
            jac.push(model_gradient(family, theta, r, n)?);
        }
        Ok((fitted, jac))
    })?;

    let std_errors = outcome.covariance_diag.map(|diag| {
        let scale = outcome.rss / T::from_usize(n - k).unwrap();
        diag.into_iter().map(|v| (scale * v).sqrt()).collect()
    });
    let singular = std_errors.is_none();
    let mut result = FitResult::scored(family, probs, outcome.params, std_errors)?;
    result.converged = outcome.converged && !singular;
    result.iterations = outcome.iterations;
    result.clamped = outcome.clamped;
    if let Some(msg) = outcome.diagnostic {
        result.note(msg);
    }
    if singular {
        result.note("singular normal equations at the solution");
    }
    if outcome.clamped {
        result.note("parameters clamped to bounds");
    }
    Ok(result)
}

/// Fits all seven families; see [`fit_families`].
pub fn fit_all<T: Scalar>(d: &RankedDistribution<T>, config: &FitConfig<T>) -> Vec<FitResult<T>> {
    fit_families(d, &ModelFamily::ALL, config)
}

/// Fits the given families. Converged results with a defined AICc come
/// first in ascending AICc; the rest follow in family order, failures
/// carrying their error as the diagnostic.
pub fn fit_families<T: Scalar>(
    d: &RankedDistribution<T>,
    families: &[ModelFamily],
    config: &FitConfig<T>,
) -> Vec<FitResult<T>> {
    let probs = d.probabilities();
    let mut results: Vec<FitResult<T>> = families
        .iter()
        .map(|&family| {
            fit_values(family, &probs, config)
                .unwrap_or_else(|e| FitResult::failed(family, probs.len(), e.to_string()))
        })
        .collect();
    let usable = |r: &FitResult<T>| r.converged && !r.aicc.is_nan();
    results.sort_by(|a, b| match (usable(a), usable(b)) {
        (true, true) => a
            .aicc
            .partial_cmp(&b.aicc)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.family.cmp(&b.family)),
        (true, false) => std::cmp::Ordering::Less,
        (false, true) => std::cmp::Ordering::Greater,
        (false, false) => a.family.cmp(&b.family),
    });
    results
}
