//! JSON encoding for floats that may be infinite or NaN.
//!
//! `serde_json` writes non-finite floats as `null`; reports here carry
//! `±∞` sentinels, so those are written as the strings `"inf"`, `"-inf"`, `"nan"`.

use serde::de::{self, Deserializer, Visitor};
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtFloat(pub f64);

impl Serialize for ExtFloat {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let v = self.0;
        if v.is_finite() {
            s.serialize_f64(v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }
}

struct ExtVisitor;

impl Visitor<'_> for ExtVisitor {
    type Value = ExtFloat;
    fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
        f.write_str("a number or one of \"inf\", \"-inf\", \"nan\"")
    }
    fn visit_f64<E: de::Error>(self, v: f64) -> Result<ExtFloat, E> {
        Ok(ExtFloat(v))
    }
    fn visit_i64<E: de::Error>(self, v: i64) -> Result<ExtFloat, E> {
        Ok(ExtFloat(v as f64))
    }
    fn visit_u64<E: de::Error>(self, v: u64) -> Result<ExtFloat, E> {
        Ok(ExtFloat(v as f64))
    }
    fn visit_str<E: de::Error>(self, v: &str) -> Result<ExtFloat, E> {
        match v {
            "inf" | "+inf" | "infinity" => Ok(ExtFloat(f64::INFINITY)),
            "-inf" | "-infinity" => Ok(ExtFloat(f64::NEG_INFINITY)),
            "nan" => Ok(ExtFloat(f64::NAN)),
            _ => Err(E::custom(format!("not a float: {v}"))),
        }
    }
}

impl<'de> Deserialize<'de> for ExtFloat {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        d.deserialize_any(ExtVisitor)
    }
}

/// `#[serde(with = "crate::json::ext")]` for `f64` fields.
pub mod ext {
    use super::*;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        ExtFloat(*v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(ExtFloat::deserialize(d)?.0)
    }
}

/// `#[serde(with = "crate::json::ext_vec")]` for `Vec<f64>` fields.
pub mod ext_vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for x in v {
            seq.serialize_element(&ExtFloat(*x))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        let v: Vec<ExtFloat> = Vec::deserialize(d)?;
        Ok(v.into_iter().map(|x| x.0).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize, Deserialize, PartialEq, Debug)]
    struct S {
        #[serde(with = "ext")]
        a: f64,
        #[serde(with = "ext_vec")]
        b: Vec<f64>,
    }

    #[test]
    fn infinities_round_trip() {
        let s = S {
            a: f64::NEG_INFINITY,
            b: vec![1.5, f64::INFINITY],
        };
        let text = serde_json::to_string(&s).unwrap();
        assert_eq!(text, r#"{"a":"-inf","b":[1.5,"inf"]}"#);
        assert_eq!(serde_json::from_str::<S>(&text).unwrap(), s);
    }
}
