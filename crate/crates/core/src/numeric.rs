//! Exact rational numbers, extended reals, and codomain values.
//!
//! Finite-space computations run on arbitrary-precision rationals so that
//! decomposition identities can be asserted with *equality*, not tolerance.
//! `+∞` is an explicit marker rather than a floating-point sentinel.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, ToPrimitive, Zero};

use crate::error::Error;

/// Exact rational scalar.
pub type Rat = BigRational;

/// Convenience constructor from an integer pair.
pub fn rat(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

/// Convenience constructor from an integer.
pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Lossy conversion to `f64` (used only on explicitly approximate paths).
pub fn rat_to_f64(r: &Rat) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Exact conversion of a finite `f64` into a rational.
///
/// Every finite double is a dyadic rational, so this embedding is lossless;
/// it lets fitted (floating) estimators participate in exact identities.
pub fn rat_from_f64(x: f64) -> Option<Rat> {
    Rat::from_float(x)
}

/// Render a rational as `p`, or `p/q` when the denominator is not one.
pub fn rat_string(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parse `p`, `p/q`, or a decimal literal like `-3.25` into an exact rational.
pub fn parse_rat(s: &str) -> Option<Rat> {
    let s = s.trim();
    if s.is_empty() {
        return None;
    }
    if let Some((num, den)) = s.split_once('/') {
        let n = BigInt::from_str(num.trim()).ok()?;
        let d = BigInt::from_str(den.trim()).ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(Rat::new(n, d));
    }
    if let Some((int_part, frac_part)) = s.split_once('.') {
        if frac_part.is_empty() || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let negative = int_part.trim_start().starts_with('-');
        let whole = if int_part.is_empty() || int_part == "-" || int_part == "+" {
            BigInt::zero()
        } else {
            BigInt::from_str(int_part).ok()?
        };
        let scale = BigInt::from(10u32).pow(frac_part.len() as u32);
        let frac = BigInt::from_str(frac_part).ok()?;
        let numer = whole * &scale + if negative { -frac } else { frac };
        return Some(Rat::new(numer, scale));
    }
    BigInt::from_str(s).ok().map(Rat::from_integer)
}

/// A non-negative-capable extended real: finite rational or `+∞`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExtReal {
    Finite(Rat),
    Infinite,
}

impl ExtReal {
    pub fn zero() -> Self {
        ExtReal::Finite(Rat::zero())
    }

    pub fn from_int(n: i64) -> Self {
        ExtReal::Finite(rat_int(n))
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ExtReal::Finite(r) if r.is_zero())
    }

    /// The finite value, if any.
    pub fn as_rat(&self) -> Option<&Rat> {
        match self {
            ExtReal::Finite(r) => Some(r),
            ExtReal::Infinite => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            ExtReal::Finite(r) => rat_to_f64(r),
            ExtReal::Infinite => f64::INFINITY,
        }
    }

    /// Extended-real addition: any sum with an infinite term is infinite.
    pub fn add(&self, other: &ExtReal) -> ExtReal {
        match (self, other) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => ExtReal::Finite(a + b),
            _ => ExtReal::Infinite,
        }
    }

    /// Parse `inf`, `p/q`, decimal, or integer text.
    pub fn parse(s: &str) -> Option<ExtReal> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("inf") || t == "+inf" || t == "∞" {
            return Some(ExtReal::Infinite);
        }
        parse_rat(t).map(ExtReal::Finite)
    }
}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(match (self, other) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => a.cmp(b),
            (ExtReal::Finite(_), ExtReal::Infinite) => Ordering::Less,
            (ExtReal::Infinite, ExtReal::Finite(_)) => Ordering::Greater,
            (ExtReal::Infinite, ExtReal::Infinite) => Ordering::Equal,
        })
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::Finite(r) => write!(f, "{}", rat_string(r)),
            ExtReal::Infinite => write!(f, "inf"),
        }
    }
}

/// Sum a slice of extended reals; infinite as soon as one term is.
pub fn ext_sum<'a, I: IntoIterator<Item = &'a ExtReal>>(items: I) -> ExtReal {
    let mut acc = Rat::zero();
    for item in items {
        match item {
            ExtReal::Finite(r) => acc += r,
            ExtReal::Infinite => return ExtReal::Infinite,
        }
    }
    ExtReal::Finite(acc)
}

/// A codomain value: an exact number or an opaque label.
///
/// Numeric-looking text (`"3"`, `"1/2"`) canonicalizes to `Num` so that a
/// value round-trips identically through JSON whether it was written as a
/// number or as a string.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Value {
    Num(Rat),
    Label(String),
}

impl Value {
    /// Canonicalizing constructor: text that parses as a rational becomes `Num`.
    pub fn label<S: Into<String>>(s: S) -> Value {
        let s = s.into();
        match parse_rat(&s) {
            Some(r) => Value::Num(r),
            None => Value::Label(s),
        }
    }

    pub fn num(r: Rat) -> Value {
        Value::Num(r)
    }

    pub fn int(n: i64) -> Value {
        Value::Num(rat_int(n))
    }

    pub fn as_rat(&self) -> Option<&Rat> {
        match self {
            Value::Num(r) => Some(r),
            Value::Label(_) => None,
        }
    }

    pub fn to_f64(&self) -> Option<f64> {
        self.as_rat().map(rat_to_f64)
    }

    /// Parse a JSON scalar into a value (numbers exactly; strings canonicalized).
    pub fn from_json(v: &serde_json::Value) -> Result<Value, Error> {
        match v {
            serde_json::Value::Number(n) => {
                if let Some(i) = n.as_i64() {
                    Ok(Value::int(i))
                } else if let Some(u) = n.as_u64() {
                    Ok(Value::Num(Rat::from_integer(BigInt::from(u))))
                } else if let Some(f) = n.as_f64().and_then(rat_from_f64) {
                    Ok(Value::Num(f))
                } else {
                    Err(Error::InvalidField {
                        field: "value".into(),
                        reason: format!("cannot represent number {n}"),
                    })
                }
            }
            serde_json::Value::String(s) => Ok(Value::label(s.clone())),
            other => Err(Error::InvalidField {
                field: "value".into(),
                reason: format!("expected number or string, got {other}"),
            }),
        }
    }

    /// Serialize to a JSON scalar, inverse to [`Value::from_json`].
    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Value::Num(r) => {
                if r.denom().is_one() {
                    if let Some(i) = r.numer().to_i64() {
                        return serde_json::Value::from(i);
                    }
                }
                serde_json::Value::String(rat_string(r))
            }
            Value::Label(s) => serde_json::Value::String(s.clone()),
        }
    }
}

impl Ord for Value {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Value::Num(a), Value::Num(b)) => a.cmp(b),
            (Value::Num(_), Value::Label(_)) => Ordering::Less,
            (Value::Label(_), Value::Num(_)) => Ordering::Greater,
            (Value::Label(a), Value::Label(b)) => a.cmp(b),
        }
    }
}

impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Num(r) => write!(f, "{}", rat_string(r)),
            Value::Label(s) => write!(f, "{s}"),
        }
    }
}
