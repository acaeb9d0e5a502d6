use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::FitError;
use crate::scalar::Scalar;
use crate::special::ln_binomial;

/// The seven rank-distribution families, with stable ids 1 to 7.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelFamily {
    /// `A·r^−a`
    Power,
    /// `A·e^−ar`
    Exp,
    /// `A − a·ln r`
    Log,
    /// `A − a·ln r − b·(ln r)²`
    Log2,
    /// `A·r^−a·e^−b/r`
    InvGamma,
    /// `A·r^−a·(n+1−r)^b`
    CochoBeta,
    /// `C(a+r−2, r−1)·C(b−a+A−r, A−r+1) / C(b+A−1, A)` with Gamma-generalized binomials
    Nhg,
}

impl ModelFamily {
    pub const ALL: [ModelFamily; 7] = [
        ModelFamily::Power,
        ModelFamily::Exp,
        ModelFamily::Log,
        ModelFamily::Log2,
        ModelFamily::InvGamma,
        ModelFamily::CochoBeta,
        ModelFamily::Nhg,
    ];

    /// Families fitted by damped Gauss-Newton (everything except NHG).
    pub const CONTINUOUS: [ModelFamily; 6] = [
        ModelFamily::Power,
        ModelFamily::Exp,
        ModelFamily::Log,
        ModelFamily::Log2,
        ModelFamily::InvGamma,
        ModelFamily::CochoBeta,
    ];

    /// Row number 1..7.
    pub fn id(self) -> u8 {
        self as u8 + 1
    }

    pub fn from_id(id: u8) -> Option<Self> {
        Self::ALL.get(usize::from(id).checked_sub(1)?).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelFamily::Power => "power",
            ModelFamily::Exp => "exp",
            ModelFamily::Log => "log",
            ModelFamily::Log2 => "log2",
            ModelFamily::InvGamma => "invgamma",
            ModelFamily::CochoBeta => "cocho_beta",
            ModelFamily::Nhg => "nhg",
        }
    }

    pub fn equation(self) -> &'static str {
        match self {
            ModelFamily::Power => "A*r^-a",
            ModelFamily::Exp => "A*exp(-a*r)",
            ModelFamily::Log => "A - a*ln(r)",
            ModelFamily::Log2 => "A - a*ln(r) - b*ln(r)^2",
            ModelFamily::InvGamma => "A*r^-a*exp(-b/r)",
            ModelFamily::CochoBeta => "A*r^-a*(n+1-r)^b",
            ModelFamily::Nhg => "C(a+r-2,r-1)*C(b-a+A-r,A-r+1)/C(b+A-1,A)",
        }
    }

    /// Number of free parameters `k`.
    pub fn param_count(self) -> usize {
        match self {
            ModelFamily::Power | ModelFamily::Exp | ModelFamily::Log => 2,
            _ => 3,
        }
    }

    pub fn is_continuous(self) -> bool {
        self != ModelFamily::Nhg
    }
}

impl fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelFamily {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if let Ok(id) = s.parse::<u8>() {
            return Self::from_id(id).ok_or_else(|| format!("family id {id} out of range 1..7"));
        }
        Self::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown model family {s:?}"))
    }
}

fn check_args<T: Scalar>(
    family: ModelFamily,
    params: &[T],
    r: usize,
    n: usize,
) -> Result<(), FitError> {
    if params.len() != family.param_count() {
        return Err(FitError::ParamCount {
            family,
            expected: family.param_count(),
            got: params.len(),
        });
    }
    if r == 0 || r > n {
        return Err(FitError::Domain {
            family,
            reason: format!("rank {r} outside 1..={n}"),
        });
    }
    Ok(())
}

fn finite_or_domain<T: Scalar>(family: ModelFamily, v: T, r: usize) -> Result<T, FitError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(FitError::Domain {
            family,
            reason: format!("non-finite value at rank {r}"),
        })
    }
}

/// `p(r)` for the family at `params`, with `n` the number of ranks.
pub fn eval_model<T: Scalar>(
    family: ModelFamily,
    params: &[T],
    r: usize,
    n: usize,
) -> Result<T, FitError> {
    check_args(family, params, r, n)?;
    let rr = T::from_usize(r).unwrap();
    let lr = rr.ln();
    let v = match family {
        ModelFamily::Power => params[0] * rr.powf(-params[1]),
        ModelFamily::Exp => params[0] * (-params[1] * rr).exp(),
        ModelFamily::Log => params[0] - params[1] * lr,
        ModelFamily::Log2 => params[0] - params[1] * lr - params[2] * lr * lr,
        ModelFamily::InvGamma => params[0] * rr.powf(-params[1]) * (-params[2] / rr).exp(),
        ModelFamily::CochoBeta => {
            let tail = T::from_usize(n + 1 - r).unwrap();
            params[0] * rr.powf(-params[1]) * tail.powf(params[2])
        }
        ModelFamily::Nhg => nhg_value(params, rr)?,
    };
    finite_or_domain(family, v, r)
}

fn nhg_value<T: Scalar>(params: &[T], r: T) -> Result<T, FitError> {
    let (big_a, a, b) = (params[0], params[1], params[2]);
    let one = T::one();
    let two = T::lit(2.0);
    let domain = |what: &str| FitError::Domain {
        family: ModelFamily::Nhg,
        reason: format!("Gamma pole or negative argument in {what}"),
    };
    let head = ln_binomial(a + r - two, r - one).ok_or_else(|| domain("C(a+r-2, r-1)"))?;
    let tail = ln_binomial(b - a + big_a - r, big_a - r + one)
        .ok_or_else(|| domain("C(b-a+A-r, A-r+1)"))?;
    let norm = ln_binomial(b + big_a - one, big_a).ok_or_else(|| domain("C(b+A-1, A)"))?;
    Ok((head + tail - norm).exp())
}

/// Partial derivatives `∂p/∂θ_j` at rank `r` for a continuous family.
pub fn model_gradient<T: Scalar>(
    family: ModelFamily,
    params: &[T],
    r: usize,
    n: usize,
) -> Result<Vec<T>, FitError> {
    check_args(family, params, r, n)?;
    let rr = T::from_usize(r).unwrap();
    let lr = rr.ln();
    let g = match family {
        ModelFamily::Power => {
            let base = rr.powf(-params[1]);
            vec![base, -params[0] * base * lr]
        }
        ModelFamily::Exp => {
            let base = (-params[1] * rr).exp();
            vec![base, -params[0] * rr * base]
        }
        ModelFamily::Log => vec![T::one(), -lr],
        ModelFamily::Log2 => vec![T::one(), -lr, -lr * lr],
        ModelFamily::InvGamma => {
            let base = rr.powf(-params[1]) * (-params[2] / rr).exp();
            let f = params[0] * base;
            vec![base, -f * lr, -f / rr]
        }
        ModelFamily::CochoBeta => {
            let tail = T::from_usize(n + 1 - r).unwrap();
            let base = rr.powf(-params[1]) * tail.powf(params[2]);
            let f = params[0] * base;
            vec![base, -f * lr, f * tail.ln()]
        }
        ModelFamily::Nhg => return Err(FitError::NoGradient(family)),
    };
    for &v in &g {
        finite_or_domain(family, v, r)?;
    }
    Ok(g)
}

/// Model values at ranks `1..=n`.
pub fn eval_curve<T: Scalar>(
    family: ModelFamily,
    params: &[T],
    n: usize,
) -> Result<Vec<T>, FitError> {
    (1..=n).map(|r| eval_model(family, params, r, n)).collect()
}
