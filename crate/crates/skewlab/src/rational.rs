//! Exact rational arithmetic.
//!
//! Every quantity in this crate (measures, norms, defects, distances) is a
//! rational number and is computed exactly. `Rational` wraps
//! `num_rational::BigRational`, pinning the crate-wide conventions:
//! canonical lowest terms with a positive denominator, `num/den` text form
//! on both input and output (the denominator is always printed, so `1/2`
//! round-trips as `1/2` and one as `1/1`), and comparisons of squared norms
//! instead of square roots so nothing ever leaves the rationals.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::{BigInt, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Arbitrary-precision rational in canonical lowest terms, denominator > 0.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rational(BigRational);

impl Rational {
    /// Builds `num/den`. Errors when `den == 0`.
    pub fn new(num: i64, den: i64) -> Result<Self> {
        if den == 0 {
            return Err(Error::invalid("rational", "denominator is zero"));
        }
        Ok(Rational(BigRational::new(BigInt::from(num), BigInt::from(den))))
    }

    pub fn from_integer(n: i64) -> Self {
        Rational(BigRational::from_integer(BigInt::from(n)))
    }

    /// `num/den` with big integer parts; `den` must be nonzero.
    pub fn from_big(num: BigInt, den: BigInt) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::invalid("rational", "denominator is zero"));
        }
        Ok(Rational(BigRational::new(num, den)))
    }

    pub fn zero() -> Self {
        Rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Rational(BigRational::one())
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn abs(&self) -> Self {
        Rational(self.0.abs())
    }

    pub fn square(&self) -> Self {
        Rational(&self.0 * &self.0)
    }

    pub fn recip(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::invalid("rational", "reciprocal of zero"));
        }
        Ok(Rational(self.0.recip()))
    }

    /// Largest integer `<= self`.
    pub fn floor_int(&self) -> BigInt {
        self.0.floor().to_integer()
    }

    /// True when `self` is an integer.
    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn min(self, other: Self) -> Self {
        if self <= other {
            self
        } else {
            other
        }
    }

    pub fn max(self, other: Self) -> Self {
        if self >= other {
            self
        } else {
            other
        }
    }

    /// Fixed-significance decimal rendering, round half to even.
    ///
    /// Used only for optional display columns; the exact value always
    /// travels as `num/den`.
    pub fn to_decimal(&self, sig_digits: usize) -> String {
        assert!(sig_digits > 0, "need at least one significant digit");
        if self.is_zero() {
            return "0".to_string();
        }
        let neg = self.is_negative();
        let a = self.0.numer().abs().to_biguint().expect("abs is nonnegative");
        let b = self.0.denom().to_biguint().expect("denominator is positive");
        let ten = num_bigint::BigUint::from(10u32);

        // e = floor(log10(a/b)): largest e with 10^e <= a/b.
        let mut e: i64 = (a.to_string().len() as i64) - (b.to_string().len() as i64);
        let le = |e: i64| -> bool {
            // 10^e <= a/b  <=>  b * 10^e <= a (shifted to integers)
            if e >= 0 {
                &b * ten.pow(e as u32) <= a
            } else {
                b <= &a * ten.pow((-e) as u32)
            }
        };
        while le(e + 1) {
            e += 1;
        }
        while !le(e) {
            e -= 1;
        }

        // Scale so the integer part has exactly sig_digits digits, then
        // round half to even.
        let shift = sig_digits as i64 - 1 - e;
        let (num, den) = if shift >= 0 {
            (&a * ten.pow(shift as u32), b.clone())
        } else {
            (a.clone(), &b * ten.pow((-shift) as u32))
        };
        let mut q = &num / &den;
        let rem = &num % &den;
        let twice = &rem * 2u32;
        match twice.cmp(&den) {
            Ordering::Greater => q += 1u32,
            Ordering::Equal => {
                if (&q % 2u32) == num_bigint::BigUint::from(1u32) {
                    q += 1u32;
                }
            }
            Ordering::Less => {}
        }
        let mut digits = q.to_string();
        if digits.len() > sig_digits {
            // Rounding carried into a new leading digit (e.g. 999.97 -> 1000).
            digits.truncate(sig_digits);
            e += 1;
        }

        let mut out = String::new();
        if neg {
            out.push('-');
        }
        if e >= 0 {
            let int_len = (e + 1) as usize;
            if int_len >= digits.len() {
                out.push_str(&digits);
                out.extend(std::iter::repeat_n('0', int_len - digits.len()));
            } else {
                out.push_str(&digits[..int_len]);
                out.push('.');
                out.push_str(&digits[int_len..]);
            }
        } else {
            out.push_str("0.");
            out.extend(std::iter::repeat_n('0', (-e - 1) as usize));
            out.push_str(&digits);
        }
        out
    }

    pub fn to_f64_lossy(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }
}

impl fmt::Display for Rational {
    /// Canonical `num/den`; the denominator is always present.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl FromStr for Rational {
    type Err = Error;

    /// Parses `num/den` (or a bare integer as `n/1`). Whitespace is not
    /// trimmed; signs belong on the numerator.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| Error::Parse(format!("rational {s:?}: {why}"));
        let (num_s, den_s) = match s.split_once('/') {
            Some((n, d)) => (n, Some(d)),
            None => (s, None),
        };
        let num = BigInt::from_str(num_s).map_err(|_| bad("numerator is not an integer"))?;
        let den = match den_s {
            Some(d) => {
                let den = BigInt::from_str(d).map_err(|_| bad("denominator is not an integer"))?;
                if den.sign() != Sign::Plus {
                    return Err(bad("denominator must be positive"));
                }
                den
            }
            None => BigInt::one(),
        };
        Ok(Rational(BigRational::new(num, den)))
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(de::Error::custom)
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident) => {
        impl $trait for &Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                Rational((&self.0).$method(&rhs.0))
            }
        }
        impl $trait for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational(self.0.$method(rhs.0))
            }
        }
    };
}

binop!(Add, add);
binop!(Sub, sub);
binop!(Mul, mul);

impl Div for &Rational {
    type Output = Rational;
    fn div(self, rhs: &Rational) -> Rational {
        assert!(!rhs.is_zero(), "division by zero");
        Rational(&self.0 / &rhs.0)
    }
}

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-&self.0)
    }
}

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

impl AddAssign<&Rational> for Rational {
    fn add_assign(&mut self, rhs: &Rational) {
        self.0 += &rhs.0;
    }
}

impl SubAssign<&Rational> for Rational {
    fn sub_assign(&mut self, rhs: &Rational) {
        self.0 -= &rhs.0;
    }
}

/// `1/p^k` as an exact rational.
pub(crate) fn unit_cell_measure(p: u32, rank: u32) -> Rational {
    let den = BigInt::from(p).pow(rank);
    Rational(BigRational::new(BigInt::one(), den))
}

/// `count/p^rank` as an exact rational.
pub(crate) fn cells_measure(count: u64, p: u32, rank: u32) -> Rational {
    let den = BigInt::from(p).pow(rank);
    Rational(BigRational::new(BigInt::from(count), den))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn canonical_form_and_display() {
        let r: Rational = "3/6".parse().unwrap();
        assert_eq!(r.to_string(), "1/2");
        let r: Rational = "-2/4".parse().unwrap();
        assert_eq!(r.to_string(), "-1/2");
        let r: Rational = "5".parse().unwrap();
        assert_eq!(r.to_string(), "5/1");
        assert_eq!(Rational::zero().to_string(), "0/1");
    }

    #[test]
    fn parse_rejects_bad_input() {
        assert!("1/0".parse::<Rational>().is_err());
        assert!("1/-2".parse::<Rational>().is_err());
        assert!("a/2".parse::<Rational>().is_err());
        assert!("".parse::<Rational>().is_err());
        assert!(Rational::new(1, 0).is_err());
    }

    #[test]
    fn arithmetic_is_exact() {
        let a = Rational::new(1, 3).unwrap();
        let b = Rational::new(1, 6).unwrap();
        assert_eq!(&a + &b, Rational::new(1, 2).unwrap());
        assert_eq!(&a - &b, Rational::new(1, 6).unwrap());
        assert_eq!(&a * &b, Rational::new(1, 18).unwrap());
        assert_eq!(&a / &b, Rational::from_integer(2));
        assert_eq!(a.square(), Rational::new(1, 9).unwrap());
    }

    #[test]
    fn decimal_rendering_rounds_half_even() {
        let r = Rational::new(1, 16).unwrap();
        assert_eq!(r.to_decimal(20), "0.062500000000000000000");
        let r = Rational::new(1, 8).unwrap();
        assert_eq!(r.to_decimal(3), "0.125");
        // ties: 0.125 at two digits -> 0.12 (even), 0.135 -> 0.14 (even)
        assert_eq!(r.to_decimal(2), "0.12");
        let r = Rational::new(27, 200).unwrap();
        assert_eq!(r.to_decimal(2), "0.14");
        let r = Rational::new(1, 3).unwrap();
        assert_eq!(r.to_decimal(5), "0.33333");
        let r = Rational::new(2, 3).unwrap();
        assert_eq!(r.to_decimal(5), "0.66667");
        // carry into a new leading digit
        let r = Rational::new(9999, 10).unwrap();
        assert_eq!(r.to_decimal(3), "1000");
        let r = Rational::from_integer(-1) * Rational::new(1, 8).unwrap();
        assert_eq!(r.to_decimal(3), "-0.125");
        assert_eq!(Rational::zero().to_decimal(5), "0");
        let r = Rational::from_integer(1234);
        assert_eq!(r.to_decimal(2), "1200");
    }

    proptest! {
        #[test]
        fn display_parse_round_trip(n in -1000i64..1000, d in 1i64..1000) {
            let r = Rational::new(n, d).unwrap();
            let back: Rational = r.to_string().parse().unwrap();
            prop_assert_eq!(back, r);
        }

        #[test]
        fn field_laws_hold(a in -50i64..50, b in 1i64..20, c in -50i64..50, d in 1i64..20) {
            let x = Rational::new(a, b).unwrap();
            let y = Rational::new(c, d).unwrap();
            prop_assert_eq!(&x + &y, &y + &x);
            prop_assert_eq!(&x * &y, &y * &x);
            prop_assert_eq!(&(&x + &y) - &y, x.clone());
            if !y.is_zero() {
                prop_assert_eq!(&(&x / &y) * &y, x);
            }
        }
    }
}
