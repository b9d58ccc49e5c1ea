//! Fixed-point decimal with nine fractional digits.
//!
//! Quote-asset amounts (SOL, USDC, ...) and USD prices are carried in this
//! type so that profit totals are exact sums, never float accumulations.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Number of fractional digits.
pub const SCALE_DIGITS: u32 = 9;
const SCALE: i128 = 1_000_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid decimal literal {0:?}")]
pub struct ParseFixedError(pub String);

/// Signed decimal stored as an integer count of 10^-9 units.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fixed(i128);

impl Fixed {
    pub const ZERO: Fixed = Fixed(0);

    pub const fn from_raw(units: i128) -> Self {
        Fixed(units)
    }

    pub const fn raw(self) -> i128 {
        self.0
    }

    pub fn from_int(v: i64) -> Self {
        Fixed(v as i128 * SCALE)
    }

    /// `units * 10^-decimals`, rounded half away from zero when `decimals`
    /// exceeds nine.
    pub fn from_units(units: i128, decimals: u32) -> Fixed {
        if decimals <= SCALE_DIGITS {
            Fixed(units * 10i128.pow(SCALE_DIGITS - decimals))
        } else {
            Fixed(div_round(units, 10i128.pow(decimals - SCALE_DIGITS)))
        }
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    pub fn is_positive(self) -> bool {
        self.0 > 0
    }

    pub fn is_negative(self) -> bool {
        self.0 < 0
    }

    pub fn abs(self) -> Self {
        Fixed(self.0.abs())
    }

    /// Division by an integer count, rounded half away from zero.
    pub fn div_int(self, n: i128) -> Fixed {
        assert!(n != 0, "division by zero");
        Fixed(div_round(self.0, n))
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / SCALE as f64
    }
}

fn div_round(num: i128, den: i128) -> i128 {
    let q = num / den;
    let r = num % den;
    if 2 * r.abs() >= den.abs() {
        if (num < 0) ^ (den < 0) {
            q - 1
        } else {
            q + 1
        }
    } else {
        q
    }
}

impl fmt::Display for Fixed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        let int = abs / SCALE as u128;
        let frac = abs % SCALE as u128;
        write!(f, "{sign}{int}.{frac:09}")
    }
}

impl FromStr for Fixed {
    type Err = ParseFixedError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseFixedError(s.to_string());
        let t = s.trim();
        let (neg, body) = match t.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, t.strip_prefix('+').unwrap_or(t)),
        };
        let (int_part, frac_part) = match body.split_once('.') {
            Some((i, f)) => (i, f),
            None => (body, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(err());
        }
        if !int_part.bytes().all(|b| b.is_ascii_digit())
            || !frac_part.bytes().all(|b| b.is_ascii_digit())
            || frac_part.len() > SCALE_DIGITS as usize
        {
            return Err(err());
        }
        let int: i128 = if int_part.is_empty() {
            0
        } else {
            int_part.parse().map_err(|_| err())?
        };
        let mut frac: i128 = if frac_part.is_empty() {
            0
        } else {
            frac_part.parse().map_err(|_| err())?
        };
        frac *= 10i128.pow(SCALE_DIGITS - frac_part.len() as u32);
        let v = int
            .checked_mul(SCALE)
            .and_then(|x| x.checked_add(frac))
            .ok_or_else(err)?;
        Ok(Fixed(if neg { -v } else { v }))
    }
}

impl Add for Fixed {
    type Output = Fixed;
    fn add(self, rhs: Fixed) -> Fixed {
        Fixed(self.0 + rhs.0)
    }
}

impl AddAssign for Fixed {
    fn add_assign(&mut self, rhs: Fixed) {
        self.0 += rhs.0;
    }
}

impl Sub for Fixed {
    type Output = Fixed;
    fn sub(self, rhs: Fixed) -> Fixed {
        Fixed(self.0 - rhs.0)
    }
}

impl SubAssign for Fixed {
    fn sub_assign(&mut self, rhs: Fixed) {
        self.0 -= rhs.0;
    }
}

/// Product rounded half away from zero to nine digits.
impl Mul for Fixed {
    type Output = Fixed;

    fn mul(self, other: Fixed) -> Fixed {
        Fixed(div_round(self.0 * other.0, SCALE))
    }
}

impl Neg for Fixed {
    type Output = Fixed;
    fn neg(self) -> Fixed {
        Fixed(-self.0)
    }
}

impl Sum for Fixed {
    fn sum<I: Iterator<Item = Fixed>>(iter: I) -> Fixed {
        iter.fold(Fixed::ZERO, Add::add)
    }
}

impl<'a> Sum<&'a Fixed> for Fixed {
    fn sum<I: Iterator<Item = &'a Fixed>>(iter: I) -> Fixed {
        iter.copied().sum()
    }
}

impl Serialize for Fixed {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Fixed {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn from_units_scales() {
        assert_eq!(Fixed::from_units(1_500_000, 6).to_string(), "1.500000000");
        assert_eq!(Fixed::from_units(15, 0), Fixed::from_int(15));
        assert_eq!(Fixed::from_units(15, 10), Fixed::from_raw(2));
        assert_eq!(Fixed::from_units(-15, 10), Fixed::from_raw(-2));
    }

    #[test]
    fn parses_and_prints() {
        assert_eq!("15".parse::<Fixed>().unwrap(), Fixed::from_int(15));
        assert_eq!("-0.5".parse::<Fixed>().unwrap().to_string(), "-0.500000000");
        assert_eq!(".25".parse::<Fixed>().unwrap().raw(), 250_000_000);
        assert_eq!("0.000000001".parse::<Fixed>().unwrap().raw(), 1);
        assert!("1.0000000001".parse::<Fixed>().is_err());
        assert!("abc".parse::<Fixed>().is_err());
        assert!("".parse::<Fixed>().is_err());
        assert!("-".parse::<Fixed>().is_err());
    }

    #[test]
    fn mul_rounds_half_away() {
        let a: Fixed = "15".parse().unwrap();
        let p: Fixed = "150".parse().unwrap();
        assert_eq!(a * p, Fixed::from_int(2250));
        let tiny = Fixed::from_raw(1);
        let half: Fixed = "0.5".parse().unwrap();
        assert_eq!(tiny * half, Fixed::from_raw(1));
        assert_eq!(-tiny * half, Fixed::from_raw(-1));
        assert_eq!(Fixed::from_raw(5).div_int(2), Fixed::from_raw(3));
    }

    proptest! {
        #[test]
        fn display_parse_identity(raw in -10i128.pow(27)..10i128.pow(27)) {
            let v = Fixed::from_raw(raw);
            prop_assert_eq!(v.to_string().parse::<Fixed>().unwrap(), v);
        }
    }
}
