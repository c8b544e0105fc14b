//! Certified decimal machinery: exact rational enclosures, integer-root
//! enclosures for fractional powers, and truncated decimal rendering.
//!
//! Inequalities between irrational quantities are decided on exact powers
//! whenever possible; otherwise on rational enclosures whose width shrinks
//! on demand. Nothing in this module rounds through floating point.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;

use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// A closed interval `[lo, hi]` with exact rational endpoints, known to
/// contain the value it stands for.
#[derive(Clone, Debug, PartialEq)]
pub struct Enclosure {
    pub lo: BigRational,
    pub hi: BigRational,
}

fn pow10(k: u32) -> BigInt {
    BigInt::from(10u32).pow(k)
}

impl Enclosure {
    pub fn exact(r: BigRational) -> Self {
        Enclosure { lo: r.clone(), hi: r }
    }

    pub fn zero() -> Self {
        Enclosure::exact(BigRational::zero())
    }

    pub fn from_scalar(x: &Scalar, digits: u32) -> Self {
        let (lo, hi) = x.enclosure(digits);
        Enclosure { lo, hi }
    }

    pub fn width(&self) -> BigRational {
        &self.hi - &self.lo
    }

    pub fn add(&self, other: &Enclosure) -> Enclosure {
        Enclosure {
            lo: &self.lo + &other.lo,
            hi: &self.hi + &other.hi,
        }
    }

    pub fn scale(&self, c: &BigRational) -> Enclosure {
        if c.is_negative() {
            Enclosure {
                lo: &self.hi * c,
                hi: &self.lo * c,
            }
        } else {
            Enclosure {
                lo: &self.lo * c,
                hi: &self.hi * c,
            }
        }
    }

    /// Product of enclosures of nonnegative values.
    pub fn mul_nonneg(&self, other: &Enclosure) -> Enclosure {
        debug_assert!(!self.lo.is_negative() && !other.lo.is_negative());
        Enclosure {
            lo: &self.lo * &other.lo,
            hi: &self.hi * &other.hi,
        }
    }

    pub fn max(&self, other: &Enclosure) -> Enclosure {
        Enclosure {
            lo: self.lo.clone().max(other.lo.clone()),
            hi: self.hi.clone().max(other.hi.clone()),
        }
    }

    /// `n`-th root of an enclosure of a nonnegative value.
    pub fn nth_root(&self, n: u32, digits: u32) -> Enclosure {
        debug_assert!(n >= 1);
        Enclosure {
            lo: nth_root_lower(&self.lo, n, digits),
            hi: nth_root_upper(&self.hi, n, digits),
        }
    }

    pub fn pow_u32(&self, e: u32) -> Enclosure {
        // nonnegative values only
        let mut acc = Enclosure::exact(BigRational::one());
        for _ in 0..e {
            acc = acc.mul_nonneg(self);
        }
        acc
    }

    /// `r^(s/t)` for a nonnegative rational `r`.
    pub fn pow_rational(r: &BigRational, s: u32, t: u32, digits: u32) -> Enclosure {
        debug_assert!(!r.is_negative() && t >= 1);
        let powered = num_traits::pow(r.clone(), s as usize);
        Enclosure::exact(powered).nth_root(t, digits)
    }

    /// Three-way comparison when the intervals do not overlap.
    pub fn cmp_certain(&self, other: &Enclosure) -> Option<Ordering> {
        if self.hi < other.lo {
            Some(Ordering::Less)
        } else if self.lo > other.hi {
            Some(Ordering::Greater)
        } else if self.lo == self.hi && other.lo == other.hi && self.lo == other.lo {
            Some(Ordering::Equal)
        } else {
            None
        }
    }

    /// Midpoint as `f64`, for reporting only.
    pub fn to_f64(&self) -> f64 {
        let mid = (&self.lo + &self.hi) / BigRational::from_integer(BigInt::from(2));
        mid.to_f64().unwrap_or(f64::NAN)
    }
}

/// Largest `m/10^digits <= r^(1/n)` (so a certified lower bound).
fn nth_root_lower(r: &BigRational, n: u32, digits: u32) -> BigRational {
    debug_assert!(!r.is_negative());
    let scale = pow10(digits);
    // floor(r * 10^(digits*n))
    let scaled = r * BigRational::from_integer(scale.pow(n));
    let fl = scaled.floor().to_integer();
    let root = fl.nth_root(n);
    BigRational::new(root, scale)
}

/// Smallest `m/10^digits >= r^(1/n)` (so a certified upper bound).
fn nth_root_upper(r: &BigRational, n: u32, digits: u32) -> BigRational {
    debug_assert!(!r.is_negative());
    let scale = pow10(digits);
    let scaled = r * BigRational::from_integer(scale.pow(n));
    let ceil = scaled.ceil().to_integer();
    let root = ceil.nth_root(n);
    // root^n <= ceil; bump until (root')^n >= ceil
    let mut up = root;
    while num_traits::pow(up.clone(), n as usize) < ceil {
        up += BigInt::one();
    }
    BigRational::new(up, scale)
}

/// A truncated decimal plus an explicit one-ulp bound: the value lies in
/// `[digits, digits + 10^ulp_exp)` for nonnegative values and mirrored for
/// negative ones.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decimal {
    pub digits: String,
    pub ulp_exp: i64,
}

/// Truncation of `x` toward zero to `sig` significant digits.
pub fn decimal_truncate(x: &Scalar, sig: u32) -> Decimal {
    debug_assert!(sig >= 1);
    if x.is_zero() {
        return Decimal {
            digits: "0".into(),
            ulp_exp: -(sig as i64),
        };
    }
    let neg = x.signum() < 0;
    let ax = x.abs();
    // exponent e with 10^e <= |x| < 10^(e+1)
    let mut e: i64 = 0;
    let ten = Scalar::from_integer(10);
    let mut probe = ax.clone();
    if ax >= Scalar::one() {
        loop {
            probe = probe.checked_div(&ten).unwrap();
            if probe < Scalar::one() {
                break;
            }
            e += 1;
        }
    } else {
        loop {
            probe = probe.checked_mul(&ten).unwrap();
            e -= 1;
            if probe >= Scalar::one() {
                break;
            }
        }
    }
    // mantissa = floor(|x| * 10^(sig-1-e)), has exactly `sig` digits
    let shift = sig as i64 - 1 - e;
    let scaled = scale_by_pow10(&ax, shift);
    let mantissa = scaled.floor_int();
    let mant_str = mantissa.to_string();
    debug_assert_eq!(mant_str.len(), sig as usize);
    let body = if e >= 0 {
        let point = (e + 1) as usize;
        if point >= mant_str.len() {
            // integer with trailing zeros beyond the mantissa
            let mut s = mant_str.clone();
            s.push_str(&"0".repeat(point - mant_str.len()));
            s
        } else {
            format!("{}.{}", &mant_str[..point], &mant_str[point..])
        }
    } else {
        format!("0.{}{}", "0".repeat((-e - 1) as usize), mant_str)
    };
    Decimal {
        digits: if neg { format!("-{body}") } else { body },
        ulp_exp: -shift,
    }
}

fn scale_by_pow10(x: &Scalar, shift: i64) -> Scalar {
    let p = pow10(shift.unsigned_abs() as u32);
    let factor = if shift >= 0 {
        BigRational::from_integer(p)
    } else {
        BigRational::new(BigInt::one(), p)
    };
    x.checked_mul(&Scalar::Rational(factor)).unwrap()
}

/// Render an enclosure to `sig` significant digits if its width permits,
/// widening precision requests as needed by the caller otherwise.
pub fn enclosure_decimal(enc: &Enclosure, sig: u32) -> Decimal {
    let mid = Scalar::Rational((&enc.lo + &enc.hi) / BigRational::from_integer(BigInt::from(2)));
    decimal_truncate(&mid, sig)
}

impl fmt::Display for Decimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.digits)
    }
}
