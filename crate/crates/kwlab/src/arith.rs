//! Exact rational helpers for ladder membership.
//!
//! Slopes are carried as `c` together with `c^2` when the square is rational,
//! which covers inputs such as `3/5`, `0.8` and `sqrt(1/2)`. Window half-widths
//! are carried as rationals when they are written as finite decimals or
//! fractions.

use crate::error::{invalid, Result};
use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use std::fmt;

pub type Q = Ratio<i64>;

/// Parse `"3/5"`, `"0.25"`, `"-2"` into an exact rational.
pub fn parse_rational(s: &str) -> Option<Q> {
    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        let a = parse_rational(num)?;
        let b = parse_rational(den)?;
        if *b.numer() == 0 {
            return None;
        }
        return Some(a / b);
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    if body.is_empty() || !body.chars().all(|ch| ch.is_ascii_digit() || ch == '.') {
        return None;
    }
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if frac_part.contains('.') || frac_part.len() > 15 || int_part.len() > 15 {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let num: i64 = if digits.is_empty() { 0 } else { digits.parse().ok()? };
    let den = 10i64.checked_pow(frac_part.len() as u32)?;
    let q = Q::new(num, den);
    Some(if neg { -q } else { q })
}

fn q_to_f64(q: Q) -> f64 {
    *q.numer() as f64 / *q.denom() as f64
}

/// Ladder slope `c`, with `c^2` kept exactly when possible.
#[derive(Clone, Debug, PartialEq)]
pub struct Slope {
    value: f64,
    square: Option<Q>,
    text: String,
}

impl Slope {
    pub fn parse(s: &str) -> Result<Self> {
        let t = s.trim();
        let inner = t
            .strip_prefix("sqrt(")
            .and_then(|r| r.strip_suffix(')'));
        let slope = if let Some(arg) = inner {
            match parse_rational(arg) {
                Some(q) if q >= Q::from_integer(0) => Slope {
                    value: q_to_f64(q).sqrt(),
                    square: Some(q),
                    text: t.to_string(),
                },
                _ => {
                    let v: f64 = arg
                        .trim()
                        .parse()
                        .map_err(|_| crate::error::LabError::InvalidParameter(format!("bad slope `{s}`")))?;
                    Slope { value: v.sqrt(), square: None, text: t.to_string() }
                }
            }
        } else if let Some(q) = parse_rational(t) {
            Slope { value: q_to_f64(q), square: Some(q * q), text: t.to_string() }
        } else {
            let v: f64 = t
                .parse()
                .map_err(|_| crate::error::LabError::InvalidParameter(format!("bad slope `{s}`")))?;
            Slope { value: v, square: None, text: t.to_string() }
        };
        if !(slope.value.is_finite() && slope.value >= 0.0) {
            return invalid(format!("slope must be finite and nonnegative, got `{s}`"));
        }
        Ok(slope)
    }

    pub fn from_f64(c: f64) -> Self {
        Slope { value: c, square: None, text: format!("{c:?}") }
    }

    pub fn from_square(q: Q) -> Self {
        Slope {
            value: q_to_f64(q).sqrt(),
            square: Some(q),
            text: format!("sqrt({}/{})", q.numer(), q.denom()),
        }
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn square(&self) -> Option<Q> {
        self.square
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    /// `sqrt(1 - c^2)`.
    pub fn cosine_complement(&self) -> f64 {
        match self.square {
            Some(q) => q_to_f64(Q::from_integer(1) - q).max(0.0).sqrt(),
            None => (1.0 - self.value * self.value).max(0.0).sqrt(),
        }
    }
}

impl fmt::Display for Slope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

impl Serialize for Slope {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.text)
    }
}

impl<'de> Deserialize<'de> for Slope {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Slope::from_f64(v)),
            Raw::Text(t) => Slope::parse(&t).map_err(serde::de::Error::custom),
        }
    }
}

/// Nonnegative real with an optional exact rational value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HalfWidth {
    value: f64,
    exact: Option<Q>,
}

impl HalfWidth {
    pub fn new(value: f64) -> Result<Self> {
        if !(value.is_finite() && value >= 0.0) {
            return invalid(format!("half-width must be finite and nonnegative, got {value}"));
        }
        // Finite decimals typed by a user round-trip through their shortest repr.
        let exact = parse_rational(&format!("{value}")).filter(|q| q_to_f64(*q) == value);
        Ok(HalfWidth { value, exact })
    }

    pub fn rational(q: Q) -> Result<Self> {
        if q < Q::from_integer(0) {
            return invalid("half-width must be nonnegative");
        }
        Ok(HalfWidth { value: q_to_f64(q), exact: Some(q) })
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn exact(&self) -> Option<Q> {
        self.exact
    }
}

type R128 = (i128, i128);

fn to128(q: Q) -> R128 {
    (*q.numer() as i128, *q.denom() as i128)
}

/// Closed test `|sqrt(a) - sqrt(c)| <= e` for nonnegative rationals given as
/// (numerator, positive denominator). `None` when i128 arithmetic overflows.
pub fn sqrt_gap_within(a: R128, c: R128, e: R128) -> Option<bool> {
    let (an, ad) = a;
    let (cn, cd) = c;
    let (en, ed) = e;
    let ed2 = ed.checked_mul(ed)?;
    let a_s = an.checked_mul(cd)?.checked_mul(ed2)?;
    let c_s = cn.checked_mul(ad)?.checked_mul(ed2)?;
    let e_s = en.checked_mul(en)?.checked_mul(ad)?.checked_mul(cd)?;
    let side = |x: i128, y: i128| -> Option<bool> {
        // x - y - e <= 2 e^{1/2} y^{1/2}, all scaled by the common denominator
        let lhs = x.checked_sub(y)?.checked_sub(e_s)?;
        if lhs <= 0 {
            return Some(true);
        }
        let sq = lhs.checked_mul(lhs)?;
        let rhs = e_s.checked_mul(y)?.checked_mul(4)?;
        Some(sq <= rhs)
    };
    Some(side(a_s, c_s)? && side(c_s, a_s)?)
}

/// Exact ladder membership `|mu - c lambda| <= eps` with `mu^2 = mu2` and
/// `lambda^2 = lam2`; `None` if any input lacks an exact form or arithmetic
/// overflows.
pub fn ladder_member_exact(mu2: Q, lam2: i128, slope: &Slope, eps: &HalfWidth) -> Option<bool> {
    let c2 = slope.square()?;
    let e = eps.exact()?;
    let (cn, cd) = to128(c2);
    let c_val = (cn.checked_mul(lam2)?, cd);
    sqrt_gap_within(to128(mu2), c_val, to128(e))
}

/// Guard band used when membership must be decided in floating point.
pub const GUARD_BAND: f64 = 1e-12;

/// Floating membership; the second flag reports a guard-band hit.
pub fn ladder_member_float(mu: f64, lambda: f64, c: f64, eps: f64) -> (bool, bool) {
    let gap = (mu - c * lambda).abs();
    let near = (gap - eps).abs() <= GUARD_BAND * (1.0 + eps.max(c * lambda));
    (gap <= eps || near, near)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_parsing() {
        assert_eq!(parse_rational("0.25"), Some(Q::new(1, 4)));
        assert_eq!(parse_rational("3/5"), Some(Q::new(3, 5)));
        assert_eq!(parse_rational("-1.5"), Some(Q::new(-3, 2)));
        assert_eq!(parse_rational("abc"), None);
        assert_eq!(parse_rational("1e-3"), None);
    }

    #[test]
    fn slope_forms() {
        let s = Slope::parse("sqrt(1/2)").unwrap();
        assert_eq!(s.square(), Some(Q::new(1, 2)));
        assert!((s.value() - 0.5f64.sqrt()).abs() < 1e-16);
        let s = Slope::parse("0.6").unwrap();
        assert_eq!(s.square(), Some(Q::new(9, 25)));
        assert!((s.cosine_complement() - 0.8).abs() < 1e-15);
        let s = Slope::parse("0.7071067811865476").unwrap();
        assert!(s.square().is_none());
        assert!(Slope::parse("-0.3").is_err());
    }

    #[test]
    fn gap_boundary_is_closed() {
        // |sqrt(4) - sqrt(1)| = 1
        let one = (1, 1);
        assert_eq!(sqrt_gap_within((4, 1), (1, 1), one), Some(true));
        assert_eq!(sqrt_gap_within((4, 1), (1, 1), (99, 100)), Some(false));
        assert_eq!(sqrt_gap_within((1, 1), (4, 1), one), Some(true));
        // |3 - 0.6 * 5| = 0
        let slope = Slope::parse("3/5").unwrap();
        let eps = HalfWidth::new(0.0).unwrap();
        assert_eq!(ladder_member_exact(Q::from_integer(9), 25, &slope, &eps), Some(true));
    }
}
