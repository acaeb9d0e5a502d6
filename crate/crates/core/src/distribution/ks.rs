use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{cdf, RankedDistribution};
use crate::scalar::Scalar;

/// How two ranked distributions are compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KsMode {
    /// Sup-distance between the cumulative-probability step curves over
    /// rescaled rank `r / n`.
    #[default]
    RankShare,
    /// Two-sample KS statistic treating each distribution's probabilities as
    /// a sample of `n` values.
    FreqEcdf,
}

impl KsMode {
    pub fn as_str(self) -> &'static str {
        match self {
            KsMode::RankShare => "rank_share",
            KsMode::FreqEcdf => "freq_ecdf",
        }
    }
}

impl fmt::Display for KsMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for KsMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rank_share" => Ok(KsMode::RankShare),
            "freq_ecdf" => Ok(KsMode::FreqEcdf),
            other => Err(format!(
                "unknown KS mode {other:?} (expected rank_share or freq_ecdf)"
            )),
        }
    }
}

/// KS distance `D ∈ [0, 1]` between two distributions; symmetric in its arguments.
pub fn ks<T: Scalar>(a: &RankedDistribution<T>, b: &RankedDistribution<T>, mode: KsMode) -> T {
    match mode {
        KsMode::RankShare => rank_share(a, b),
        KsMode::FreqEcdf => freq_ecdf(&a.probabilities(), &b.probabilities()),
    }
}

/// Evaluates `|F_a − F_b|` on the union of both breakpoint grids. Between
/// consecutive union points both curves are constant, so the grid maximum is
/// the supremum over `(0, 1]`.
fn rank_share<T: Scalar>(a: &RankedDistribution<T>, b: &RankedDistribution<T>) -> T {
    let (fa, fb) = (cdf(a), cdf(b));
    let (na, nb) = (fa.len(), fb.len());
    let from_a = (1..=na).map(|i| (fa.values()[i - 1] - fb.at_ratio(i, na)).abs());
    let from_b = (1..=nb).map(|j| (fa.at_ratio(j, nb) - fb.values()[j - 1]).abs());
    from_a.chain(from_b).fold(T::zero(), T::max).min(T::one())
}

/// Standard two-sample statistic `sup_x |F_x(t) − F_y(t)|` over empirical
/// CDFs. The maximum is tracked as the exact integer `|i·ny − j·nx|`.
fn freq_ecdf<T: Scalar>(x: &[T], y: &[T]) -> T {
    let mut xs = x.to_vec();
    let mut ys = y.to_vec();
    let by_value = |p: &T, q: &T| p.partial_cmp(q).unwrap_or(Ordering::Equal);
    xs.sort_by(by_value);
    ys.sort_by(by_value);
    let (nx, ny) = (xs.len(), ys.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut best: u128 = 0;
    while i < nx && j < ny {
        let v = if xs[i] <= ys[j] { xs[i] } else { ys[j] };
        while i < nx && xs[i] <= v {
            i += 1;
        }
        while j < ny && ys[j] <= v {
            j += 1;
        }
        let diff = (i as i128 * ny as i128 - j as i128 * nx as i128).unsigned_abs();
        best = best.max(diff);
    }
    T::from_u128(best).unwrap() / T::from_u128((nx * ny) as u128).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(ps: &[f64]) -> RankedDistribution {
        RankedDistribution::new(
            "t",
            ps.iter()
                .enumerate()
                .map(|(i, &p)| (format!("u{i}"), p))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn identical_inputs_are_zero() {
        let d = dist(&[0.5, 0.3, 0.2]);
        assert_eq!(ks(&d, &d, KsMode::RankShare), 0.0);
        assert_eq!(ks(&d, &d, KsMode::FreqEcdf), 0.0);
    }

    #[test]
    fn hand_evaluated_step_cases() {
        let a = dist(&[0.7, 0.3]);
        let b = dist(&[0.6, 0.4]);
        assert!((ks(&a, &b, KsMode::RankShare) - 0.1).abs() < 1e-15);
        let c = dist(&[0.5, 0.3, 0.2]);
        assert!((ks(&a, &c, KsMode::RankShare) - 0.2).abs() < 1e-15);
        assert_eq!(ks(&a, &c, KsMode::RankShare), ks(&c, &a, KsMode::RankShare));
    }

    #[test]
    fn ecdf_matches_hand_count() {
        // x = {0.7, 0.3}, y = {0.5, 0.3, 0.2}: after t = 0.2 ECDFs are 0 vs 1/3,
        // after 0.3 they are 1/2 vs 2/3, after 0.5 they are 1/2 vs 1.
        let a = dist(&[0.7, 0.3]);
        let c = dist(&[0.5, 0.3, 0.2]);
        assert!((ks(&a, &c, KsMode::FreqEcdf) - 0.5).abs() < 1e-15);
        // disjoint supports give the maximum distance
        let lo = dist(&[0.25, 0.25, 0.25, 0.25]);
        let hi = dist(&[0.5, 0.5]);
        assert_eq!(ks(&lo, &hi, KsMode::FreqEcdf), 1.0);
    }

    #[test]
    fn mode_names_round_trip() {
        for m in [KsMode::RankShare, KsMode::FreqEcdf] {
            assert_eq!(m.as_str().parse::<KsMode>().unwrap(), m);
        }
        assert!("ks".parse::<KsMode>().is_err());
    }
}
