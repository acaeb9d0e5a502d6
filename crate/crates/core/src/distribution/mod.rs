//! Ranked probability distributions and the curves derived from them.
//!
//! A [`RankedDistribution`] is the object every statistic in this crate
//! operates on: units sorted by descending probability, rank `r = 1..n`.

mod ks;
mod matrix;

pub use ks::{ks, KsMode};
pub use matrix::{distance_matrix, DistanceMatrix, DistanceSummary, PairDistance};

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::TokenCounts;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DistributionError {
    #[error("distribution {0:?} has no units")]
    Empty(String),
    #[error("probability of {unit:?} is not a positive finite number ({value})")]
    BadProbability { unit: String, value: f64 },
    #[error("probabilities increase at rank {rank}")]
    NotDescending { rank: usize },
    #[error("probabilities sum to {sum}, not 1")]
    Mass { sum: f64 },
    #[error("group size must be at least 1")]
    GroupSize,
    #[error("need at least two distributions, got {0}")]
    TooFew(usize),
    #[error("duplicate label {0:?}")]
    DuplicateLabel(String),
    #[error("malformed distribution document: {0}")]
    Document(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct RankedUnit<T: Scalar = f64> {
    pub unit: String,
    pub probability: T,
}

/// Units sorted by non-increasing probability; probabilities are positive
/// and sum to one within [`Scalar::mass_tolerance`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    bound = "T: Scalar",
    into = "DistributionDoc<T>",
    try_from = "DistributionDoc<T>"
)]
pub struct RankedDistribution<T: Scalar = f64> {
    label: String,
    units: Vec<RankedUnit<T>>,
}

/// JSON document layout of a distribution.
#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
struct DistributionDoc<T: Scalar> {
    label: String,
    n: usize,
    units: Vec<RankedUnitDoc<T>>,
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
struct RankedUnitDoc<T: Scalar> {
    rank: usize,
    unit: String,
    probability: T,
}

impl<T: Scalar> From<RankedDistribution<T>> for DistributionDoc<T> {
    fn from(d: RankedDistribution<T>) -> Self {
        Self {
            n: d.len(),
            label: d.label,
            units: d
                .units
                .into_iter()
                .enumerate()
                .map(|(i, u)| RankedUnitDoc {
                    rank: i + 1,
                    unit: u.unit,
                    probability: u.probability,
                })
                .collect(),
        }
    }
}

impl<T: Scalar> TryFrom<DistributionDoc<T>> for RankedDistribution<T> {
    type Error = DistributionError;

    fn try_from(doc: DistributionDoc<T>) -> Result<Self, Self::Error> {
        if doc.n != doc.units.len() {
            return Err(DistributionError::Document(format!(
                "n = {} but {} units listed",
                doc.n,
                doc.units.len()
            )));
        }
        if let Some(pos) = doc
            .units
            .iter()
            .enumerate()
            .position(|(i, u)| u.rank != i + 1)
        {
            return Err(DistributionError::Document(format!(
                "rank out of sequence at position {}",
                pos + 1
            )));
        }
        Self::new(
            doc.label,
            doc.units
                .into_iter()
                .map(|u| (u.unit, u.probability))
                .collect(),
        )
    }
}

impl<T: Scalar> RankedDistribution<T> {
    /// Wraps already-ranked `(unit, probability)` pairs, validating the invariants.
    pub fn new(
        label: impl Into<String>,
        units: Vec<(String, T)>,
    ) -> Result<Self, DistributionError> {
        let label = label.into();
        if units.is_empty() {
            return Err(DistributionError::Empty(label));
        }
        for (unit, p) in &units {
            if !p.is_finite() || *p <= T::zero() {
                return Err(DistributionError::BadProbability {
                    unit: unit.clone(),
                    value: p.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        if let Some(i) = units.windows(2).position(|w| w[1].1 > w[0].1) {
            return Err(DistributionError::NotDescending { rank: i + 2 });
        }
        let sum: T = units.iter().map(|(_, p)| *p).sum();
        if (sum - T::one()).abs() > T::mass_tolerance() {
            return Err(DistributionError::Mass {
                sum: sum.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(Self {
            label,
            units: units
                .into_iter()
                .map(|(unit, probability)| RankedUnit { unit, probability })
                .collect(),
        })
    }

    /// Ranks positive weights by descending value (ties by label code
    /// points) and normalizes them to unit mass.
    pub fn from_weights(
        label: impl Into<String>,
        mut weights: Vec<(String, T)>,
    ) -> Result<Self, DistributionError> {
        let label = label.into();
        if weights.is_empty() {
            return Err(DistributionError::Empty(label));
        }
        if let Some((unit, w)) = weights
            .iter()
            .find(|(_, w)| !w.is_finite() || *w <= T::zero())
        {
            return Err(DistributionError::BadProbability {
                unit: unit.clone(),
                value: w.to_f64().unwrap_or(f64::NAN),
            });
        }
        weights.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .unwrap_or(Ordering::Equal)
                .then_with(|| a.0.cmp(&b.0))
        });
        let total: T = weights.iter().map(|(_, w)| *w).sum();
        Self::new(
            label,
            weights.into_iter().map(|(u, w)| (u, w / total)).collect(),
        )
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Number of unit types `n`.
    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    /// Unit at zero-based position `i` (rank `i + 1`).
    pub fn unit(&self, i: usize) -> &str {
        &self.units[i].unit
    }

    pub fn probability(&self, i: usize) -> T {
        self.units[i].probability
    }

    pub fn units(&self) -> &[RankedUnit<T>] {
        &self.units
    }

    pub fn units_iter(&self) -> impl Iterator<Item = (&str, T)> + '_ {
        self.units.iter().map(|u| (u.unit.as_str(), u.probability))
    }

    pub fn probabilities(&self) -> Vec<T> {
        self.units.iter().map(|u| u.probability).collect()
    }

    /// Converts the probabilities to another scalar type, renormalizing in
    /// the target precision so the mass check holds there.
    pub fn cast<U: Scalar>(&self) -> Result<RankedDistribution<U>, DistributionError> {
        let converted: Vec<(String, U)> = self
            .units
            .iter()
            .map(|u| {
                (
                    u.unit.clone(),
                    U::from(u.probability).unwrap_or_else(U::nan),
                )
            })
            .collect();
        let total: U = converted.iter().map(|(_, p)| *p).sum();
        RankedDistribution::new(
            self.label.clone(),
            converted.into_iter().map(|(u, p)| (u, p / total)).collect(),
        )
    }
}

/// Ranks counts into probabilities `count / total`, descending, ties broken
/// by unit label in code-point order.
pub fn rank<T: Scalar>(
    tc: &TokenCounts,
    label: impl Into<String>,
) -> Result<RankedDistribution<T>, DistributionError> {
    let label = label.into();
    if tc.is_empty() {
        return Err(DistributionError::Empty(label));
    }
    let mut entries: Vec<(&str, u64)> = tc.iter().collect();
    entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let total = T::from_count(tc.total());
    RankedDistribution::new(
        label,
        entries
            .into_iter()
            .map(|(u, c)| (u.to_string(), T::from_count(c) / total))
            .collect(),
    )
}

/// `(r / n, p_r)` for `r = 1..n`; the last abscissa is exactly 1.
pub fn rescaled_points<T: Scalar>(d: &RankedDistribution<T>) -> Vec<(T, T)> {
    let n = T::from_usize(d.len()).unwrap();
    d.units
        .iter()
        .enumerate()
        .map(|(i, u)| (T::from_usize(i + 1).unwrap() / n, u.probability))
        .collect()
}

/// Cumulative probability as a step function of rescaled rank.
///
/// Breakpoints are `u_i = i / n`; `F(u) = F_⌈u·n⌉` on `(0, 1]` and 0 for `u <= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepCdf<T: Scalar = f64> {
    values: Vec<T>,
}

impl<T: Scalar> StepCdf<T> {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `F_1, ..., F_n`.
    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn breakpoints(&self) -> Vec<T> {
        let n = T::from_usize(self.len()).unwrap();
        (1..=self.len())
            .map(|i| T::from_usize(i).unwrap() / n)
            .collect()
    }

    /// `F(num / den)` evaluated with exact integer index arithmetic.
    pub fn at_ratio(&self, num: usize, den: usize) -> T {
        if num == 0 {
            return T::zero();
        }
        let n = self.len();
        let idx = (num * n).div_ceil(den).min(n);
        self.values[idx - 1]
    }

    /// `F(u)` for a real abscissa; prefer [`StepCdf::at_ratio`] on grid points.
    pub fn eval(&self, u: T) -> T {
        if u <= T::zero() {
            return T::zero();
        }
        let n = self.len();
        let idx = (u * T::from_usize(n).unwrap())
            .ceil()
            .to_usize()
            .unwrap_or(n)
            .clamp(1, n);
        self.values[idx - 1]
    }

    /// The complementary curve `1 − F_i`.
    pub fn complement(&self) -> Vec<T> {
        self.values.iter().map(|&f| T::one() - f).collect()
    }
}

pub fn cdf<T: Scalar>(d: &RankedDistribution<T>) -> StepCdf<T> {
    let values = d
        .units
        .iter()
        .scan(T::zero(), |acc, u| {
            *acc = *acc + u.probability;
            Some(*acc)
        })
        .collect();
    StepCdf { values }
}

/// Inverse cumulative curve `1 − F_i` at the breakpoints `i / n`.
pub fn inverse_cdf<T: Scalar>(d: &RankedDistribution<T>) -> Vec<T> {
    cdf(d).complement()
}

/// Merges runs of `group_size` consecutive ranks into single units.
///
/// Yields `⌈n / m⌉` groups; the final group keeps any remainder. Group
/// labels name the rank span, e.g. `r1-11`.
pub fn group<T: Scalar>(
    d: &RankedDistribution<T>,
    group_size: usize,
) -> Result<RankedDistribution<T>, DistributionError> {
    if group_size == 0 {
        return Err(DistributionError::GroupSize);
    }
    if group_size == 1 {
        return Ok(d.clone());
    }
    let units = d
        .units
        .chunks(group_size)
        .enumerate()
        .map(|(g, chunk)| {
            let first = g * group_size + 1;
            let last = first + chunk.len() - 1;
            let mass = chunk.iter().fold(T::zero(), |acc, u| acc + u.probability);
            (format!("r{first}-{last}"), mass)
        })
        .collect();
    RankedDistribution::new(d.label.clone(), units)
}
