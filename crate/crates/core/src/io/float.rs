//! Serde adapters that keep non-finite floats representable in JSON as the
//! strings `"nan"`, `"inf"` and `"-inf"`.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::scalar::Scalar;

#[derive(Serialize, Deserialize)]
#[serde(untagged, bound = "T: Scalar")]
enum Repr<T: Scalar> {
    Num(T),
    Text(String),
}

fn to_repr<T: Scalar>(v: T) -> Repr<T> {
    if v.is_finite() {
        Repr::Num(v)
    } else if v.is_nan() {
        Repr::Text("nan".into())
    } else if v > T::zero() {
        Repr::Text("inf".into())
    } else {
        Repr::Text("-inf".into())
    }
}

fn from_repr<T: Scalar, E: serde::de::Error>(r: Repr<T>) -> Result<T, E> {
    match r {
        Repr::Num(v) => Ok(v),
        Repr::Text(s) => match s.as_str() {
            "nan" => Ok(T::nan()),
            "inf" => Ok(T::infinity()),
            "-inf" => Ok(T::neg_infinity()),
            other => Err(E::custom(format!("expected a number, got {other:?}"))),
        },
    }
}

pub mod scalar {
    use super::*;

    pub fn serialize<T: Scalar, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
        to_repr(*v).serialize(s)
    }

    pub fn deserialize<'de, T: Scalar, D: Deserializer<'de>>(d: D) -> Result<T, D::Error> {
        from_repr(Repr::deserialize(d)?)
    }
}

pub mod vec {
    use super::*;

    pub fn serialize<T: Scalar, S: Serializer>(v: &[T], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|&x| to_repr(x)))
    }

    pub fn deserialize<'de, T: Scalar, D: Deserializer<'de>>(d: D) -> Result<Vec<T>, D::Error> {
        Vec::<Repr<T>>::deserialize(d)?
            .into_iter()
            .map(from_repr)
            .collect()
    }
}

pub mod opt_vec {
    use super::*;

    pub fn serialize<T: Scalar, S: Serializer>(
        v: &Option<Vec<T>>,
        s: S,
    ) -> Result<S::Ok, S::Error> {
        match v {
            Some(v) => s.serialize_some(&v.iter().map(|&x| to_repr(x)).collect::<Vec<_>>()),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, T: Scalar, D: Deserializer<'de>>(
        d: D,
    ) -> Result<Option<Vec<T>>, D::Error> {
        Option::<Vec<Repr<T>>>::deserialize(d)?
            .map(|v| v.into_iter().map(from_repr).collect())
            .transpose()
    }
}
