use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{ks, DistributionError, KsMode, RankedDistribution};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct PairDistance<T: Scalar = f64> {
    pub a: String,
    pub b: String,
    pub value: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct DistanceSummary<T: Scalar = f64> {
    /// Mean over the pairs `i < j`.
    pub mean: T,
    pub min_pair: PairDistance<T>,
    pub max_pair: PairDistance<T>,
    /// Row means excluding the diagonal, in label order.
    pub per_label_mean: Vec<(String, T)>,
}

/// Symmetric matrix of pairwise KS distances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct DistanceMatrix<T: Scalar = f64> {
    pub mode: KsMode,
    pub labels: Vec<String>,
    pub values: Vec<Vec<T>>,
    pub summary: DistanceSummary<T>,
}

impl<T: Scalar> DistanceMatrix<T> {
    pub fn get(&self, a: &str, b: &str) -> Option<T> {
        let i = self.labels.iter().position(|l| l == a)?;
        let j = self.labels.iter().position(|l| l == b)?;
        Some(self.values[i][j])
    }

    /// Off-diagonal pairs `i < j` with their distances.
    pub fn pairs(&self) -> Vec<PairDistance<T>> {
        let n = self.labels.len();
        let mut out = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                out.push(PairDistance {
                    a: self.labels[i].clone(),
                    b: self.labels[j].clone(),
                    value: self.values[i][j],
                });
            }
        }
        out
    }

    /// Rebuilds a matrix (with its summary) from labels and values.
    pub fn from_values(
        mode: KsMode,
        labels: Vec<String>,
        values: Vec<Vec<T>>,
    ) -> Result<Self, DistributionError> {
        let n = labels.len();
        if n < 2 {
            return Err(DistributionError::TooFew(n));
        }
        check_unique(labels.iter())?;
        let summary = summarize(&labels, &values);
        Ok(Self {
            mode,
            labels,
            values,
            summary,
        })
    }
}

fn check_unique<'a>(labels: impl Iterator<Item = &'a String>) -> Result<(), DistributionError> {
    let mut seen = HashSet::new();
    for l in labels {
        if !seen.insert(l.as_str()) {
            return Err(DistributionError::DuplicateLabel(l.clone()));
        }
    }
    Ok(())
}

fn summarize<T: Scalar>(labels: &[String], values: &[Vec<T>]) -> DistanceSummary<T> {
    let n = labels.len();
    let pair = |i: usize, j: usize| PairDistance {
        a: labels[i].clone(),
        b: labels[j].clone(),
        value: values[i][j],
    };
    let mut sum = T::zero();
    let (mut lo, mut hi) = ((0, 1), (0, 1));
    for i in 0..n {
        for j in i + 1..n {
            let v = values[i][j];
            sum = sum + v;
            if v < values[lo.0][lo.1] {
                lo = (i, j);
            }
            if v > values[hi.0][hi.1] {
                hi = (i, j);
            }
        }
    }
    let per_label_mean = (0..n)
        .map(|i| {
            let row: T = (0..n).filter(|&j| j != i).map(|j| values[i][j]).sum();
            (labels[i].clone(), row / T::from_usize(n - 1).unwrap())
        })
        .collect();
    DistanceSummary {
        mean: sum / T::from_usize(n * (n - 1) / 2).unwrap(),
        min_pair: pair(lo.0, lo.1),
        max_pair: pair(hi.0, hi.1),
        per_label_mean,
    }
}

/// All pairwise [`ks`] distances between distributions with distinct labels.
pub fn distance_matrix<T: Scalar>(
    dists: &[RankedDistribution<T>],
    mode: KsMode,
) -> Result<DistanceMatrix<T>, DistributionError> {
    let n = dists.len();
    if n < 2 {
        return Err(DistributionError::TooFew(n));
    }
    let labels: Vec<String> = dists.iter().map(|d| d.label().to_string()).collect();
    check_unique(labels.iter())?;
    let mut values = vec![vec![T::zero(); n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let d = ks(&dists[i], &dists[j], mode);
            values[i][j] = d;
            values[j][i] = d;
        }
    }
    DistanceMatrix::from_values(mode, labels, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(label: &str, ps: &[f64]) -> RankedDistribution {
        RankedDistribution::new(
            label,
            ps.iter()
                .enumerate()
                .map(|(i, &p)| (format!("u{i}"), p))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn identical_pair_is_zero_matrix() {
        let m = distance_matrix(
            &[dist("a", &[0.6, 0.4]), dist("b", &[0.6, 0.4])],
            KsMode::RankShare,
        )
        .unwrap();
        assert_eq!(m.values, vec![vec![0.0, 0.0], vec![0.0, 0.0]]);
        assert_eq!(m.summary.mean, 0.0);
    }

    #[test]
    fn matches_pairwise_calls() {
        let ds = [
            dist("a", &[0.7, 0.3]),
            dist("b", &[0.6, 0.4]),
            dist("c", &[0.5, 0.3, 0.2]),
        ];
        for mode in [KsMode::RankShare, KsMode::FreqEcdf] {
            let m = distance_matrix(&ds, mode).unwrap();
            for i in 0..3 {
                assert_eq!(m.values[i][i], 0.0);
                for j in 0..3 {
                    if i != j {
                        assert_eq!(m.values[i][j], ks(&ds[i], &ds[j], mode));
                        assert_eq!(m.values[i][j], m.values[j][i]);
                    }
                }
            }
        }
        let m = distance_matrix(&ds, KsMode::RankShare).unwrap();
        let (ab, ac, bc) = (m.values[0][1], m.values[0][2], m.values[1][2]);
        assert!((m.summary.mean - (ab + ac + bc) / 3.0).abs() < 1e-15);
        assert_eq!(
            (m.summary.min_pair.a.as_str(), m.summary.min_pair.b.as_str()),
            ("a", "b")
        );
        assert_eq!(m.summary.max_pair.value, ab.max(ac).max(bc));
        assert!((m.summary.per_label_mean[0].1 - (ab + ac) / 2.0).abs() < 1e-15);
        assert_eq!(m.get("c", "a"), Some(ac));
        assert_eq!(m.pairs().len(), 3);
    }

    #[test]
    fn rejects_duplicates_and_singletons() {
        let a = dist("a", &[1.0]);
        assert!(matches!(
            distance_matrix(&[a.clone(), a.clone()], KsMode::RankShare),
            Err(DistributionError::DuplicateLabel(_))
        ));
        assert!(matches!(
            distance_matrix(&[a], KsMode::RankShare),
            Err(DistributionError::TooFew(1))
        ));
    }
}
