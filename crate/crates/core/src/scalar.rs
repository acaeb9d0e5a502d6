//! Floating-point scalar abstraction shared by the numeric modules.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Real scalar the distributions and fits are computed in: `f32` or `f64`.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Default
    + Debug
    + Display
    + LowerExp
    + FromStr
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Allowed deviation of a probability mass from 1.
    fn mass_tolerance() -> Self;

    /// Default relative RSS-change tolerance for the iterative fitters.
    fn fit_tolerance() -> Self;

    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar")
    }

    fn from_count(x: u64) -> Self {
        Self::from_u64(x).expect("count representable in scalar")
    }
}

impl Scalar for f64 {
    fn mass_tolerance() -> Self {
        1e-9
    }

    fn fit_tolerance() -> Self {
        1e-12
    }
}

impl Scalar for f32 {
    fn mass_tolerance() -> Self {
        1e-3
    }

    fn fit_tolerance() -> Self {
        1e-5
    }
}
