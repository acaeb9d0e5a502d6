//! Log-Gamma and generalized binomial coefficients.

use crate::scalar::Scalar;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the Gamma function for `x > 0`.
///
/// Uses the Lanczos approximation (g = 7, nine terms) with the reflection
/// formula below 0.5. Returns NaN for `x <= 0` or non-finite input; callers
/// that need a positive argument check their domain before calling.
pub fn ln_gamma<T: Scalar>(x: T) -> T {
    if !x.is_finite() || x <= T::zero() {
        return T::nan();
    }
    let half = T::lit(0.5);
    if x < half {
        // Gamma(x) Gamma(1 - x) = pi / sin(pi x), and sin(pi x) > 0 on (0, 0.5)
        let pi = T::PI();
        return (pi / (pi * x).sin()).ln() - ln_gamma(T::one() - x);
    }
    let x = x - T::one();
    let mut acc = T::lit(LANCZOS_COEFFS[0]);
    for (i, &c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        acc = acc + T::lit(c) / (x + T::from_usize(i).unwrap());
    }
    let t = x + T::lit(LANCZOS_G) + half;
    half * (T::lit(2.0) * T::PI()).ln() + (x + half) * t.ln() - t + acc.ln()
}

/// `ln C(x, y) = ln Γ(x+1) − ln Γ(y+1) − ln Γ(x−y+1)`.
///
/// `None` when any Gamma argument is non-positive (a pole or a sign change
/// the log form cannot represent).
pub fn ln_binomial<T: Scalar>(x: T, y: T) -> Option<T> {
    let one = T::one();
    let (a, b, c) = (x + one, y + one, x - y + one);
    if a <= T::zero() || b <= T::zero() || c <= T::zero() {
        return None;
    }
    Some(ln_gamma(a) - ln_gamma(b) - ln_gamma(c))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ln_factorial(n: u64) -> f64 {
        (1..=n).map(|k| (k as f64).ln()).sum()
    }

    #[test]
    fn integer_arguments_match_log_factorials() {
        for n in 1..=170u64 {
            let got = ln_gamma(n as f64);
            let want = ln_factorial(n - 1);
            assert!(
                (got - want).abs() <= 1e-12 * want.abs().max(1.0),
                "n={n}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn half_integer_and_small_arguments() {
        let sqrt_pi = std::f64::consts::PI.sqrt();
        assert!((ln_gamma(0.5) - sqrt_pi.ln()).abs() < 1e-14);
        assert!((ln_gamma(1.5) - (0.5 * sqrt_pi).ln()).abs() < 1e-14);
        // Gamma(0.1) = 9.513507698668731836...
        assert!((ln_gamma(0.1_f64) - 9.513_507_698_668_732_f64.ln()).abs() < 1e-13);
    }

    #[test]
    fn non_positive_is_nan() {
        assert!(ln_gamma(0.0_f64).is_nan());
        assert!(ln_gamma(-2.5_f64).is_nan());
        assert!(ln_binomial(-3.0_f64, 1.0).is_none());
    }

    #[test]
    fn single_precision_is_usable() {
        let got: f32 = ln_gamma(10.0_f32);
        assert!((got - 362_880f32.ln()).abs() < 1e-4);
    }

    #[test]
    fn binomial_matches_exact_integers() {
        fn exact(n: u128, k: u128) -> u128 {
            let mut acc = 1u128;
            for i in 0..k {
                acc = acc * (n - i) / (i + 1);
            }
            acc
        }
        for n in 0..=60u128 {
            for k in 0..=n {
                let got = ln_binomial(n as f64, k as f64).unwrap().exp();
                let want = exact(n, k) as f64;
                assert!((got - want).abs() <= 1e-11 * want, "C({n},{k})");
            }
        }
    }
}
