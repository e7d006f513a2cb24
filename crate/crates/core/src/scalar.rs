//! Exact scalar types used for edge lengths.
//!
//! Everything metric in this crate is generic over [`Scalar`]. Only exact
//! ordered fields qualify: slope integrality `l'(e')/l(e) in Z` has to be a
//! decision, not a tolerance.

use std::fmt::{Debug, Display};
use std::hash::Hash;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{Num, Signed, ToPrimitive};

/// An exact ordered field element that can be parsed from and printed as `p/q`.
pub trait Scalar:
    Clone + Debug + Display + Ord + Hash + Num + Signed + FromStr + Send + Sync + 'static
{
    fn from_int(n: i64) -> Self;

    /// `Some(n)` when the value is an integer representable as `i64`.
    fn to_int(&self) -> Option<i64>;
}

impl Scalar for Ratio<i64> {
    fn from_int(n: i64) -> Self {
        Ratio::from_integer(n)
    }

    fn to_int(&self) -> Option<i64> {
        self.is_integer().then(|| *self.numer())
    }
}

impl Scalar for Ratio<i128> {
    fn from_int(n: i64) -> Self {
        Ratio::from_integer(n as i128)
    }

    fn to_int(&self) -> Option<i64> {
        if self.is_integer() {
            self.numer().to_i64()
        } else {
            None
        }
    }
}

impl Scalar for BigRational {
    fn from_int(n: i64) -> Self {
        Ratio::from_integer(BigInt::from(n))
    }

    fn to_int(&self) -> Option<i64> {
        if self.is_integer() {
            self.numer().to_i64()
        } else {
            None
        }
    }
}

/// Parses `p/q` (or a bare integer) into lowest terms.
pub fn parse_scalar<S: Scalar>(text: &str) -> Option<S> {
    let text = text.trim();
    if text.is_empty() {
        return None;
    }
    // Zero denominators are refused here rather than by the parser.
    if let Some((_, den)) = text.split_once('/') {
        if den.trim().trim_start_matches(['+', '-']).chars().all(|c| c == '0') {
            return None;
        }
    }
    text.parse::<S>().ok()
}

/// Renders a scalar in canonical form: `n` for integers, `p/q` otherwise.
pub fn format_scalar<S: Scalar>(value: &S) -> String {
    value.to_string()
}

/// Serde adapter that writes a scalar as its canonical string and reads it back.
pub mod as_string {
    use super::{format_scalar, parse_scalar, Scalar};
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Scalar, Z: Serializer>(value: &S, out: Z) -> Result<Z::Ok, Z::Error> {
        out.serialize_str(&format_scalar(value))
    }

    pub fn deserialize<'de, S: Scalar, D: Deserializer<'de>>(input: D) -> Result<S, D::Error> {
        let text = String::deserialize(input)?;
        parse_scalar(&text).ok_or_else(|| D::Error::custom(format!("not a rational number: {text:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Rational64;

    #[test]
    fn parses_and_reduces() {
        let half: Rational64 = parse_scalar("2/4").unwrap();
        assert_eq!(format_scalar(&half), "1/2");
        let big: BigRational = parse_scalar("6/3").unwrap();
        assert_eq!(format_scalar(&big), "2");
        assert_eq!(big.to_int(), Some(2));
        assert_eq!(half.to_int(), None);
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_scalar::<Rational64>("1/0").is_none());
        assert!(parse_scalar::<Rational64>("").is_none());
        assert!(parse_scalar::<BigRational>("x/2").is_none());
        assert!(parse_scalar::<Ratio<i128>>("1.5").is_none());
    }
}
