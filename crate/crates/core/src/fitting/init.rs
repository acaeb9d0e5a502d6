//! Starting points from linearized least squares.

use super::linalg::least_squares;
use super::ModelFamily;
use crate::scalar::Scalar;

/// Initial parameters for `family` given probabilities in rank order.
///
/// Multiplicative families are linearized through `ln p`; the logarithmic
/// families are already linear in their parameters. The NHG family gets
/// the centre of a typical search region.
pub fn initial_guess<T: Scalar>(family: ModelFamily, probs: &[T]) -> Vec<T> {
    let n = probs.len();
    let rank = |r: usize| T::from_usize(r).unwrap();
    let ln_p: Vec<T> = probs.iter().map(|p| p.ln()).collect();
    let design = |row: &dyn Fn(usize) -> Vec<T>| (1..=n).map(row).collect::<Vec<_>>();
    let one = T::one();
    let solved = match family {
        ModelFamily::Power => {
            least_squares(&design(&|r| vec![one, -rank(r).ln()]), &ln_p).map(exp_first)
        }
        ModelFamily::Exp => least_squares(&design(&|r| vec![one, -rank(r)]), &ln_p).map(exp_first),
        ModelFamily::Log => least_squares(&design(&|r| vec![one, -rank(r).ln()]), probs),
        ModelFamily::Log2 => least_squares(
            &design(&|r| {
                let l = rank(r).ln();
                vec![one, -l, -l * l]
            }),
            probs,
        ),
        ModelFamily::InvGamma => least_squares(
            &design(&|r| vec![one, -rank(r).ln(), -rank(r).recip()]),
            &ln_p,
        )
        .map(exp_first),
        ModelFamily::CochoBeta => least_squares(
            &design(&|r| vec![one, -rank(r).ln(), rank(n + 1 - r).ln()]),
            &ln_p,
        )
        .map(exp_first),
        ModelFamily::Nhg => None,
    };
    match solved {
        Some(p) if p.iter().all(|v| v.is_finite()) => p,
        _ => fallback(family, probs, n),
    }
}

fn exp_first<T: Scalar>(mut p: Vec<T>) -> Vec<T> {
    p[0] = p[0].exp();
    p
}

fn fallback<T: Scalar>(family: ModelFamily, probs: &[T], n: usize) -> Vec<T> {
    let head = probs.first().copied().unwrap_or_else(T::one);
    let z = T::zero();
    match family {
        ModelFamily::Power => vec![head, T::one()],
        ModelFamily::Exp => vec![head, T::lit(0.1)],
        ModelFamily::Log => vec![head, z],
        ModelFamily::Log2 => vec![head, z, z],
        ModelFamily::InvGamma => vec![head, T::one(), z],
        ModelFamily::CochoBeta => vec![head, T::one(), z],
        ModelFamily::Nhg => vec![T::from_usize(2 * n).unwrap(), T::one(), T::lit(5.0)],
    }
}
