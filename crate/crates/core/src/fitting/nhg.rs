//! Parameter-space search for the negative hypergeometric family.

use serde::{Deserialize, Serialize};

use super::{FitConfig, FitError, FitResult, ModelFamily};
use crate::distribution::RankedDistribution;
use crate::scalar::Scalar;
use crate::special::ln_gamma;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    /// `min, min + step, …`
    Linear,
    /// `min, min·step, …`
    Geometric,
}

/// One search axis, inclusive of both ends. `min == max` gives a single point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct GridAxis<T: Scalar = f64> {
    pub min: T,
    pub max: T,
    pub step: T,
    pub spacing: Spacing,
}

impl<T: Scalar> GridAxis<T> {
    pub fn single(value: T) -> Self {
        Self {
            min: value,
            max: value,
            step: T::one(),
            spacing: Spacing::Linear,
        }
    }

    fn validate(&self, name: &str) -> Result<(), FitError> {
        let bad = |m: &str| Err(FitError::Config(format!("NHG {name} axis: {m}")));
        if !(self.min.is_finite() && self.max.is_finite() && self.min <= self.max) {
            return bad("needs finite min <= max");
        }
        if self.min == self.max {
            return Ok(());
        }
        match self.spacing {
            Spacing::Linear if !(self.step > T::zero()) => bad("linear step must be positive"),
            Spacing::Geometric if !(self.step > T::one() && self.min > T::zero()) => {
                bad("geometric axes need min > 0 and ratio > 1")
            }
            _ => Ok(()),
        }
    }

    pub fn points(&self) -> Vec<T> {
        if self.min == self.max {
            return vec![self.min];
        }
        let slack = T::one() + T::lit(1e-9);
        let mut out = Vec::new();
        let mut i = 0usize;
        loop {
            let v = match self.spacing {
                Spacing::Linear => self.min + self.step * T::from_usize(i).unwrap(),
                Spacing::Geometric => self.min * self.step.powi(i as i32),
            };
            let limit = match self.spacing {
                Spacing::Linear => self.max + self.step * T::lit(1e-9),
                Spacing::Geometric => self.max * slack,
            };
            if v > limit {
                break;
            }
            out.push(v.min(self.max));
            i += 1;
        }
        out
    }
}

/// Search region for `(A, a, b)`: `A` over an inclusive integer range
/// (default `n ..= 40n`), `a` over a grid, `b` over a grid refined by
/// golden-section search around the best grid value at each `(A, a)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct NhgGrid<T: Scalar = f64> {
    pub total: Option<(u64, u64)>,
    pub shape: GridAxis<T>,
    pub tail: GridAxis<T>,
    /// Golden-section iterations on `b`; 0 keeps the grid value.
    pub refine_iterations: usize,
}

impl<T: Scalar> Default for NhgGrid<T> {
    fn default() -> Self {
        Self {
            total: None,
            shape: GridAxis {
                min: T::lit(0.25),
                max: T::lit(3.0),
                step: T::lit(0.25),
                spacing: Spacing::Linear,
            },
            tail: GridAxis {
                min: T::lit(0.05),
                max: T::lit(1e4),
                step: T::lit(1.25),
                spacing: Spacing::Geometric,
            },
            refine_iterations: 60,
        }
    }
}

impl<T: Scalar> NhgGrid<T> {
    /// Searches exactly one triple.
    pub fn single(total: u64, shape: T, tail: T) -> Self {
        Self {
            total: Some((total, total)),
            shape: GridAxis::single(shape),
            tail: GridAxis::single(tail),
            refine_iterations: 0,
        }
    }

    pub fn validate(&self) -> Result<(), FitError> {
        if let Some((lo, hi)) = self.total {
            if lo > hi {
                return Err(FitError::Config("NHG A range is empty".into()));
            }
        }
        self.shape.validate("a")?;
        self.tail.validate("b")
    }

    pub fn total_range(&self, n: usize) -> (u64, u64) {
        self.total.unwrap_or((n as u64, 40 * n as u64))
    }
}

/// Log-space evaluation with the `(A, a)` dependent terms cached.
struct Cell<'a, T> {
    probs: &'a [T],
    big_a: T,
    a: T,
    /// `ln C(a+r−2, r−1)` for `r = 1..=n`.
    head: &'a [T],
    /// `ln Γ(A+1) − ln Γ(A−r+2)` for `r = 1..=n`.
    shift: &'a [T],
}

impl<T: Scalar> Cell<'_, T> {
    fn rss(&self, b: T) -> Option<T> {
        if !(b > self.a) {
            return None;
        }
        let n = self.probs.len();
        let d = b - self.a;
        let norm = ln_gamma(d) + ln_gamma(b + self.big_a) - ln_gamma(b);
        // ln Γ(d + A − r + 1) walking r downward from n
        let mut x = d + self.big_a - T::from_usize(n).unwrap() + T::one();
        let mut lg = ln_gamma(x);
        let mut total = T::zero();
        for r in (1..=n).rev() {
            let ln_p = self.head[r - 1] + self.shift[r - 1] + lg - norm;
            let e = self.probs[r - 1] - ln_p.exp();
            total = total + e * e;
            lg = lg + x.ln();
            x = x + T::one();
        }
        total.is_finite().then_some(total)
    }
}

fn head_terms<T: Scalar>(a: T, n: usize) -> Vec<T> {
    // ln Γ(a+r−1) − ln Γ(a) − ln Γ(r)
    let mut out = Vec::with_capacity(n);
    let (mut rising, mut ln_fact) = (T::zero(), T::zero());
    for r in 1..=n {
        out.push(rising - ln_fact);
        rising = rising + (a + T::from_usize(r - 1).unwrap()).ln();
        ln_fact = ln_fact + T::from_usize(r).unwrap().ln();
    }
    out
}

fn shift_terms<T: Scalar>(big_a: T, n: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(n);
    let mut acc = T::zero();
    for r in 1..=n {
        out.push(acc);
        acc = acc + (big_a - T::from_usize(r).unwrap() + T::one()).ln();
    }
    out
}

/// Minimizes over `[lo, hi]` starting from the known value at `mid`; never
/// returns anything worse than `(mid, f_mid)`.
fn golden<T: Scalar>(
    cell: &Cell<'_, T>,
    lo: T,
    hi: T,
    mid: T,
    f_mid: T,
    iterations: usize,
) -> (T, T) {
    let mut best = (mid, f_mid);
    if !(hi > lo) || iterations == 0 {
        return best;
    }
    let ratio = (T::lit(5.0).sqrt() - T::one()) / T::lit(2.0);
    let (mut lo, mut hi) = (lo, hi);
    let eval = |b: T| cell.rss(b).unwrap_or_else(T::infinity);
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut f1, mut f2) = (eval(x1), eval(x2));
    let tol = T::lit(1e-10);
    for _ in 0..iterations {
        if hi - lo <= tol * hi.abs() {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = eval(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = eval(x2);
        }
    }
    for (x, f) in [(x1, f1), (x2, f2)] {
        if f < best.1 {
            best = (x, f);
        }
    }
    best
}

/// Fits the negative hypergeometric family by searching `config.nhg`.
///
/// Returns the RSS-minimizing `(A, a, b)` without standard errors.
pub fn fit_nhg<T: Scalar>(
    d: &RankedDistribution<T>,
    config: &FitConfig<T>,
) -> Result<FitResult<T>, FitError> {
    config.validate()?;
    fit_nhg_values(&d.probabilities(), config)
}

pub(crate) fn fit_nhg_values<T: Scalar>(
    probs: &[T],
    config: &FitConfig<T>,
) -> Result<FitResult<T>, FitError> {
    let grid = &config.nhg;
    let n = probs.len();
    if n < 2 {
        return Err(FitError::TooFewPoints { n, needed: 2 });
    }
    let (a_lo, a_hi) = grid.total_range(n);
    let shapes = grid.shape.points();
    let tails = grid.tail.points();
    let heads: Vec<Option<Vec<T>>> = shapes
        .iter()
        .map(|&a| (a > T::zero()).then(|| head_terms(a, n)))
        .collect();

    let mut best: Option<(T, T, T, T)> = None;
    let mut cells = 0usize;
    for total in a_lo..=a_hi {
        // every Gamma argument A − r + 2 must stay positive
        if total + 2 <= n as u64 {
            continue;
        }
        let big_a = T::from_u64(total).unwrap();
        let shift = shift_terms(big_a, n);
        for (&a, head) in shapes.iter().zip(&heads) {
            let Some(head) = head else { continue };
            let cell = Cell {
                probs,
                big_a,
                a,
                head,
                shift: &shift,
            };
            let scores: Vec<Option<T>> = tails.iter().map(|&b| cell.rss(b)).collect();
            let Some((i, f)) = scores
                .iter()
                .enumerate()
                .filter_map(|(i, s)| s.map(|f| (i, f)))
                .fold(None, |acc: Option<(usize, T)>, (i, f)| match acc {
                    Some((_, g)) if g <= f => acc,
                    _ => Some((i, f)),
                })
            else {
                continue;
            };
            cells += 1;
            let lo = if i > 0 && scores[i - 1].is_some() {
                tails[i - 1]
            } else {
                tails[i]
            };
            let hi = if i + 1 < tails.len() {
                tails[i + 1]
            } else {
                tails[i]
            };
            let (b, f) = golden(&cell, lo, hi, tails[i], f, grid.refine_iterations);
            if best.is_none_or(|(g, ..)| f < g) {
                best = Some((f, big_a, a, b));
            }
        }
    }
    let (_, big_a, a, b) = best.ok_or(FitError::EmptyGrid)?;
    let mut result = FitResult::scored(ModelFamily::Nhg, probs, vec![big_a, a, b], None)?;
    result.iterations = cells;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fitting::eval_curve;

    fn two_point() -> RankedDistribution {
        RankedDistribution::new("t", vec![("x".into(), 0.9), ("y".into(), 0.1)]).unwrap()
    }

    #[test]
    fn axis_points() {
        let lin = GridAxis {
            min: 0.25,
            max: 1.0,
            step: 0.25,
            spacing: Spacing::Linear,
        };
        assert_eq!(lin.points(), vec![0.25, 0.5, 0.75, 1.0]);
        let geo = GridAxis {
            min: 1.0,
            max: 8.0,
            step: 2.0,
            spacing: Spacing::Geometric,
        };
        assert_eq!(geo.points(), vec![1.0, 2.0, 4.0, 8.0]);
        assert_eq!(GridAxis::single(3.5).points(), vec![3.5]);
    }

    #[test]
    fn fast_path_matches_direct_formula() {
        let d = two_point();
        let probs = d.probabilities();
        for (big_a, a, b) in [(3.0, 1.0, 5.0), (10.0, 0.5, 2.25), (40.0, 2.75, 300.0)] {
            let head = head_terms(a, 2);
            let shift = shift_terms(big_a, 2);
            let cell = Cell {
                probs: &probs,
                big_a,
                a,
                head: &head,
                shift: &shift,
            };
            let fitted = eval_curve(ModelFamily::Nhg, &[big_a, a, b], 2).unwrap();
            let direct: f64 = probs
                .iter()
                .zip(&fitted)
                .map(|(p, f)| (p - f) * (p - f))
                .sum();
            assert!(
                (cell.rss(b).unwrap() - direct).abs() < 1e-13,
                "{big_a} {a} {b}"
            );
        }
    }

    #[test]
    fn singleton_grid_returns_that_point() {
        let d = two_point();
        let cfg = FitConfig {
            nhg: NhgGrid::single(5, 1.0, 4.0),
            ..FitConfig::default()
        };
        let fit = fit_nhg(&d, &cfg).unwrap();
        assert_eq!(fit.params, vec![5.0, 1.0, 4.0]);
        let fitted = eval_curve(ModelFamily::Nhg, &fit.params, 2).unwrap();
        assert_eq!(fit.rss, super::super::rss(&d.probabilities(), &fitted));
        assert!(fit.std_errors.is_none());
    }

    #[test]
    fn infeasible_grid_is_an_error() {
        let d = two_point();
        let cfg = FitConfig {
            nhg: NhgGrid::single(5, 2.0, 1.0),
            ..FitConfig::default()
        };
        assert!(matches!(fit_nhg(&d, &cfg), Err(FitError::EmptyGrid)));
    }

    #[test]
    fn bad_axes_are_rejected() {
        let mut grid = NhgGrid::<f64>::default();
        grid.tail.step = 1.0;
        assert!(grid.validate().is_err());
        let grid = NhgGrid::<f64> {
            total: Some((9, 3)),
            ..NhgGrid::default()
        };
        assert!(grid.validate().is_err());
    }
}
