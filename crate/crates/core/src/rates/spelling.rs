//! Canonical textual spellings of the rate descriptors.
//!
//! | descriptor        | spellings                                              |
//! |-------------------|--------------------------------------------------------|
//! | spatial field     | `1.5`, `const(1.5)`, `cos(1; 0.2@1, -0.1@3)`, `values(1, 2, 3)` |
//! | age profile       | `2`, `const(2)`, `exp(4, 0.5)`, `table(0:0, 10:10)`     |
//! | density response  | `const`, `saturating(K)`, `exp(r)`, `linear(r, cap)`    |
//! | age horizon       | `inf`, `12.5`                                          |
//!
//! `Display` always produces the canonical (parenthesised) form and parsing
//! it back gives the same value.

use std::fmt;
use std::str::FromStr;

use serde::de::{self, Deserializer};
use serde::{Deserialize, Serialize, Serializer};

use super::{AgeProfile, DensityResponse, FieldSpec, Horizon};
use crate::error::Error;

fn parse_err(input: &str, reason: impl Into<String>) -> Error {
    Error::Parse {
        input: input.to_string(),
        reason: reason.into(),
    }
}

/// Splits `name(args)` into its parts; a bare token has no arguments.
fn split_call(s: &str) -> Result<(&str, Option<&str>), Error> {
    let s = s.trim();
    match s.find('(') {
        None => Ok((s, None)),
        Some(open) => {
            if !s.ends_with(')') {
                return Err(parse_err(s, "missing closing parenthesis"));
            }
            Ok((s[..open].trim(), Some(&s[open + 1..s.len() - 1])))
        }
    }
}

fn number(input: &str, tok: &str) -> Result<f64, Error> {
    let t = tok.trim();
    let v: f64 = t
        .parse()
        .map_err(|_| parse_err(input, format!("`{t}` is not a number")))?;
    if !v.is_finite() {
        return Err(parse_err(input, format!("`{t}` is not finite")));
    }
    Ok(v)
}

fn numbers(input: &str, args: &str) -> Result<Vec<f64>, Error> {
    if args.trim().is_empty() {
        return Ok(Vec::new());
    }
    args.split(',').map(|t| number(input, t)).collect()
}

fn exactly<const N: usize>(input: &str, args: Option<&str>) -> Result<[f64; N], Error> {
    let args = args.ok_or_else(|| parse_err(input, format!("expected {N} argument(s)")))?;
    let v = numbers(input, args)?;
    v.try_into()
        .map_err(|v: Vec<f64>| parse_err(input, format!("expected {N} argument(s), got {}", v.len())))
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", ")
}

impl FromStr for FieldSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        if s.trim().parse::<f64>().is_ok() {
            return Ok(FieldSpec::Constant(number(s, s)?));
        }
        let (name, args) = split_call(s)?;
        match name {
            "const" => Ok(FieldSpec::Constant(exactly::<1>(s, args)?[0])),
            "values" => {
                let v = numbers(s, args.unwrap_or(""))?;
                if v.is_empty() {
                    return Err(parse_err(s, "values() needs at least one entry"));
                }
                Ok(FieldSpec::Values(v))
            }
            "cos" => {
                let args = args.ok_or_else(|| parse_err(s, "cos needs arguments"))?;
                let (mean, rest) = match args.split_once(';') {
                    Some((m, r)) => (m, r),
                    None => (args, ""),
                };
                let mean = number(s, mean)?;
                let mut terms = Vec::new();
                for term in rest.split(',').filter(|t| !t.trim().is_empty()) {
                    let (amp, mode) = term
                        .split_once('@')
                        .ok_or_else(|| parse_err(s, format!("cosine term `{term}` must be amp@mode")))?;
                    let mode: u32 = mode
                        .trim()
                        .parse()
                        .map_err(|_| parse_err(s, format!("mode `{mode}` must be a non-negative integer")))?;
                    terms.push((number(s, amp)?, mode));
                }
                Ok(FieldSpec::Cosine { mean, terms })
            }
            _ => Err(parse_err(s, format!("unknown field spelling `{name}`"))),
        }
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldSpec::Constant(v) => write!(f, "const({v})"),
            FieldSpec::Values(v) => write!(f, "values({})", join(v)),
            FieldSpec::Cosine { mean, terms } => {
                let terms: Vec<String> = terms.iter().map(|(a, m)| format!("{a}@{m}")).collect();
                write!(f, "cos({mean}; {})", terms.join(", "))
            }
        }
    }
}

impl FromStr for AgeProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        if s.trim().parse::<f64>().is_ok() {
            let v = number(s, s)?;
            if v < 0.0 {
                return Err(parse_err(s, "age profile must be >= 0"));
            }
            return Ok(AgeProfile::Constant(v));
        }
        let (name, args) = split_call(s)?;
        let profile = match name {
            "const" => AgeProfile::Constant(exactly::<1>(s, args)?[0]),
            "exp" => {
                let [initial, decay] = exactly::<2>(s, args)?;
                AgeProfile::Exponential { initial, decay }
            }
            "table" => {
                let args = args.ok_or_else(|| parse_err(s, "table needs breakpoints"))?;
                let mut ages = Vec::new();
                let mut values = Vec::new();
                for pair in args.split(',') {
                    let (a, v) = pair
                        .split_once(':')
                        .ok_or_else(|| parse_err(s, format!("table entry `{pair}` must be age:value")))?;
                    ages.push(number(s, a)?);
                    values.push(number(s, v)?);
                }
                AgeProfile::Table { ages, values }
            }
            _ => return Err(parse_err(s, format!("unknown age profile `{name}`"))),
        };
        profile.validate().map_err(|e| parse_err(s, e.to_string()))?;
        Ok(profile)
    }
}

impl fmt::Display for AgeProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AgeProfile::Constant(v) => write!(f, "const({v})"),
            AgeProfile::Exponential { initial, decay } => write!(f, "exp({initial}, {decay})"),
            AgeProfile::Table { ages, values } => {
                let pairs: Vec<String> = ages.iter().zip(values).map(|(a, v)| format!("{a}:{v}")).collect();
                write!(f, "table({})", pairs.join(", "))
            }
        }
    }
}

impl FromStr for DensityResponse {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let (name, args) = split_call(s)?;
        let response = match name {
            "const" | "constant" => {
                if args.is_some_and(|a| !a.trim().is_empty()) {
                    return Err(parse_err(s, "const takes no arguments"));
                }
                DensityResponse::Constant
            }
            "saturating" => DensityResponse::Saturating {
                half: exactly::<1>(s, args)?[0],
            },
            "exp" => DensityResponse::Exponential {
                rate: exactly::<1>(s, args)?[0],
            },
            "linear" => {
                let [slope, cap] = exactly::<2>(s, args)?;
                DensityResponse::LinearThreshold { slope, cap }
            }
            _ => return Err(parse_err(s, format!("unknown density response `{name}`"))),
        };
        response.validate().map_err(|e| parse_err(s, e.to_string()))?;
        Ok(response)
    }
}

impl fmt::Display for DensityResponse {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DensityResponse::Constant => write!(f, "const"),
            DensityResponse::Saturating { half } => write!(f, "saturating({half})"),
            DensityResponse::Exponential { rate } => write!(f, "exp({rate})"),
            DensityResponse::LinearThreshold { slope, cap } => write!(f, "linear({slope}, {cap})"),
        }
    }
}

impl FromStr for Horizon {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.trim() {
            "inf" | "infinite" | "infinity" => Ok(Horizon::Infinite),
            t => {
                let v = number(s, t)?;
                if v <= 0.0 {
                    return Err(parse_err(s, "a_max must be > 0"));
                }
                Ok(Horizon::Finite(v))
            }
        }
    }
}

impl fmt::Display for Horizon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Horizon::Finite(h) => write!(f, "{h}"),
            Horizon::Infinite => write!(f, "inf"),
        }
    }
}

/// Config values may be written as bare numbers or as strings.
#[derive(Deserialize)]
#[serde(untagged)]
enum Spelled {
    Int(i64),
    Num(f64),
    Text(String),
}

impl Spelled {
    fn into_text(self) -> String {
        match self {
            Spelled::Int(v) => v.to_string(),
            Spelled::Num(v) => v.to_string(),
            Spelled::Text(s) => s,
        }
    }
}

macro_rules! spelled_serde {
    ($($ty:ty),*) => {$(
        impl Serialize for $ty {
            fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
                serializer.collect_str(self)
            }
        }

        impl<'de> Deserialize<'de> for $ty {
            fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
                let text = Spelled::deserialize(deserializer)?.into_text();
                text.parse().map_err(de::Error::custom)
            }
        }
    )*};
}

spelled_serde!(FieldSpec, AgeProfile, DensityResponse, Horizon);

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_documented_spellings() {
        assert_eq!("1.5".parse::<FieldSpec>().unwrap(), FieldSpec::Constant(1.5));
        assert_eq!(
            "cos(1; 0.2@1, -0.1@3)".parse::<FieldSpec>().unwrap(),
            FieldSpec::Cosine {
                mean: 1.0,
                terms: vec![(0.2, 1), (-0.1, 3)]
            }
        );
        assert_eq!(
            "exp(4, 0.5)".parse::<AgeProfile>().unwrap(),
            AgeProfile::Exponential {
                initial: 4.0,
                decay: 0.5
            }
        );
        assert_eq!(
            "table(0:0, 10:10)".parse::<AgeProfile>().unwrap(),
            AgeProfile::Table {
                ages: vec![0.0, 10.0],
                values: vec![0.0, 10.0]
            }
        );
        assert_eq!(
            "saturating(1)".parse::<DensityResponse>().unwrap(),
            DensityResponse::Saturating { half: 1.0 }
        );
        assert_eq!(
            "linear(0.5, 3)".parse::<DensityResponse>().unwrap(),
            DensityResponse::LinearThreshold { slope: 0.5, cap: 3.0 }
        );
        assert_eq!("inf".parse::<Horizon>().unwrap(), Horizon::Infinite);
        assert_eq!("2".parse::<Horizon>().unwrap(), Horizon::Finite(2.0));
    }

    #[test]
    fn rejects_malformed_spellings() {
        for bad in ["cos(1; 0.2)", "values()", "wave(3)", "const(1", "const(nan)"] {
            assert!(bad.parse::<FieldSpec>().is_err(), "{bad}");
        }
        for bad in ["saturating(0)", "exp(-1)", "linear(1, 0.5)", "const(3)", "logistic"] {
            assert!(bad.parse::<DensityResponse>().is_err(), "{bad}");
        }
        for bad in ["table(1:1, 0:2)", "exp(1)", "const(-1)"] {
            assert!(bad.parse::<AgeProfile>().is_err(), "{bad}");
        }
        assert!("-1".parse::<Horizon>().is_err());
    }

    fn finite() -> impl Strategy<Value = f64> {
        -1e6f64..1e6
    }

    fn field() -> impl Strategy<Value = FieldSpec> {
        prop_oneof![
            finite().prop_map(FieldSpec::Constant),
            prop::collection::vec(finite(), 1..6).prop_map(FieldSpec::Values),
            (finite(), prop::collection::vec((finite(), 0u32..20), 0..4))
                .prop_map(|(mean, terms)| FieldSpec::Cosine { mean, terms }),
        ]
    }

    proptest! {
        #[test]
        fn display_then_parse_is_identity(f in field(), half in 1e-3f64..1e3, slope in -5f64..5.0) {
            prop_assert_eq!(f.to_string().parse::<FieldSpec>().unwrap(), f);
            let d = DensityResponse::Saturating { half };
            prop_assert_eq!(d.to_string().parse::<DensityResponse>().unwrap(), d);
            let d = DensityResponse::LinearThreshold { slope, cap: 1.0 + slope.abs() };
            prop_assert_eq!(d.to_string().parse::<DensityResponse>().unwrap(), d);
        }
    }
}
