//! Exact scalars: arbitrary-precision rationals and elements of one real
//! quadratic extension ℚ(√d), stored as `a + b√d` with rational `a`, `b`.
//!
//! All arithmetic is exact. Comparisons are decided by exact sign analysis
//! (for `a + b√d` by comparing `a²` against `b²·d`), never by floating point.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::{self, MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Radicand used by the built-in gallery (the worked examples need √6).
pub const GALLERY_RADICAND: u64 = 6;

/// An exact number: a rational or `a + b√d` with `b ≠ 0`.
///
/// Invariants: rationals are kept in lowest terms with positive denominator
/// (guaranteed by `BigRational`); a quadratic with `b = 0` is normalized to
/// the `Rational` variant, so equality of the enum is value equality.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Scalar {
    Rational(BigRational),
    Quadratic {
        a: BigRational,
        b: BigRational,
        d: u64,
    },
}

pub(crate) fn is_square_free(d: u64) -> bool {
    if d < 2 {
        return false;
    }
    let mut n = d;
    let mut p = 2u64;
    while p * p <= n {
        if n % p == 0 {
            n /= p;
            if n % p == 0 {
                return false;
            }
        }
        p += 1;
    }
    true
}

fn big(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

impl Scalar {
    pub fn zero() -> Self {
        Scalar::Rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Scalar::Rational(BigRational::one())
    }

    pub fn from_integer(n: i64) -> Self {
        Scalar::Rational(big(n))
    }

    pub fn from_ratio(num: i64, den: i64) -> Result<Self> {
        if den == 0 {
            return Err(Error::ZeroDenominator);
        }
        Ok(Scalar::Rational(BigRational::new(
            BigInt::from(num),
            BigInt::from(den),
        )))
    }

    pub fn from_rational(r: BigRational) -> Self {
        Scalar::Rational(r)
    }

    /// Builds `a + b√d`, normalizing `b = 0` down to a rational.
    pub fn quadratic(a: BigRational, b: BigRational, d: u64) -> Result<Self> {
        if !is_square_free(d) {
            return Err(Error::InvalidRadicand(d));
        }
        if b.is_zero() {
            Ok(Scalar::Rational(a))
        } else {
            Ok(Scalar::Quadratic { a, b, d })
        }
    }

    /// `√d` itself.
    pub fn sqrt_of(d: u64) -> Result<Self> {
        Scalar::quadratic(BigRational::zero(), BigRational::one(), d)
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Rational(r) => r.is_zero(),
            // b != 0 and d square-free imply a + b√d != 0
            Scalar::Quadratic { .. } => false,
        }
    }

    pub fn is_rational(&self) -> bool {
        matches!(self, Scalar::Rational(_))
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match self {
            Scalar::Rational(r) => Some(r),
            Scalar::Quadratic { .. } => None,
        }
    }

    pub fn radicand(&self) -> Option<u64> {
        match self {
            Scalar::Rational(_) => None,
            Scalar::Quadratic { d, .. } => Some(*d),
        }
    }

    fn parts(&self, d: u64) -> Result<(BigRational, BigRational)> {
        match self {
            Scalar::Rational(r) => Ok((r.clone(), BigRational::zero())),
            Scalar::Quadratic { a, b, d: dd } => {
                if *dd == d {
                    Ok((a.clone(), b.clone()))
                } else {
                    Err(Error::MismatchedRadicand(*dd, d))
                }
            }
        }
    }

    fn common_radicand(&self, other: &Scalar) -> Result<Option<u64>> {
        match (self.radicand(), other.radicand()) {
            (None, None) => Ok(None),
            (Some(d), None) | (None, Some(d)) => Ok(Some(d)),
            (Some(d1), Some(d2)) => {
                if d1 == d2 {
                    Ok(Some(d1))
                } else {
                    Err(Error::MismatchedRadicand(d1, d2))
                }
            }
        }
    }

    pub fn checked_add(&self, other: &Scalar) -> Result<Scalar> {
        match self.common_radicand(other)? {
            None => Ok(Scalar::Rational(
                self.as_rational().unwrap() + other.as_rational().unwrap(),
            )),
            Some(d) => {
                let (a1, b1) = self.parts(d)?;
                let (a2, b2) = other.parts(d)?;
                Scalar::quadratic(a1 + a2, b1 + b2, d)
            }
        }
    }

    pub fn checked_sub(&self, other: &Scalar) -> Result<Scalar> {
        self.checked_add(&other.clone().neg())
    }

    pub fn checked_mul(&self, other: &Scalar) -> Result<Scalar> {
        match self.common_radicand(other)? {
            None => Ok(Scalar::Rational(
                self.as_rational().unwrap() * other.as_rational().unwrap(),
            )),
            Some(d) => {
                let (a1, b1) = self.parts(d)?;
                let (a2, b2) = other.parts(d)?;
                let dd = BigRational::from_integer(BigInt::from(d));
                let a = &a1 * &a2 + &b1 * &b2 * &dd;
                let b = &a1 * &b2 + &b1 * &a2;
                Scalar::quadratic(a, b, d)
            }
        }
    }

    /// Multiplicative inverse; `(a + b√d)⁻¹ = (a − b√d)/(a² − b²d)`.
    pub fn checked_inv(&self) -> Result<Scalar> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        match self {
            Scalar::Rational(r) => Ok(Scalar::Rational(r.recip())),
            Scalar::Quadratic { a, b, d } => {
                let dd = BigRational::from_integer(BigInt::from(*d));
                let norm = a * a - b * b * dd;
                // norm != 0 because √d is irrational and b != 0
                debug_assert!(!norm.is_zero());
                Scalar::quadratic(a / &norm, -(b / &norm), *d)
            }
        }
    }

    pub fn checked_div(&self, other: &Scalar) -> Result<Scalar> {
        self.checked_mul(&other.checked_inv()?)
    }

    pub fn neg(self) -> Scalar {
        match self {
            Scalar::Rational(r) => Scalar::Rational(-r),
            Scalar::Quadratic { a, b, d } => Scalar::Quadratic { a: -a, b: -b, d },
        }
    }

    /// Exact sign: -1, 0 or 1.
    pub fn signum(&self) -> i32 {
        match self {
            Scalar::Rational(r) => {
                if r.is_zero() {
                    0
                } else if r.is_positive() {
                    1
                } else {
                    -1
                }
            }
            Scalar::Quadratic { a, b, d } => {
                // b != 0 here
                let sa = if a.is_zero() {
                    0
                } else if a.is_positive() {
                    1
                } else {
                    -1
                };
                let sb = if b.is_positive() { 1 } else { -1 };
                if sa == sb || sa == 0 {
                    return sb;
                }
                // opposite signs: compare a² with b²·d
                let dd = BigRational::from_integer(BigInt::from(*d));
                let lhs = a * a;
                let rhs = b * b * dd;
                match lhs.cmp(&rhs) {
                    Ordering::Greater => sa,
                    Ordering::Less => sb,
                    Ordering::Equal => 0, // unreachable for square-free d
                }
            }
        }
    }

    pub fn abs(&self) -> Scalar {
        if self.signum() < 0 {
            self.clone().neg()
        } else {
            self.clone()
        }
    }

    pub fn pow_u32(&self, e: u32) -> Scalar {
        let mut acc = Scalar::one();
        for _ in 0..e {
            acc = acc.checked_mul(self).expect("same radicand");
        }
        acc
    }

    pub fn min(self, other: Scalar) -> Scalar {
        if self <= other {
            self
        } else {
            other
        }
    }

    pub fn max(self, other: Scalar) -> Scalar {
        if self >= other {
            self
        } else {
            other
        }
    }

    /// Exact floor.
    pub fn floor_int(&self) -> BigInt {
        match self {
            Scalar::Rational(r) => r.floor().to_integer(),
            Scalar::Quadratic { a, b, d } => {
                // write as (A + B√d)/C with integers A, B and C > 0
                let c = a.denom().lcm(b.denom());
                let aa = a.numer() * (&c / a.denom());
                let bb = b.numer() * (&c / b.denom());
                let t = &bb * &bb * BigInt::from(*d);
                // d square-free and b != 0 make t a non-square, so
                // floor(B√d) = isqrt(t) for B > 0 and -isqrt(t)-1 for B < 0.
                let fl_bsqrt = if bb.is_positive() {
                    t.sqrt()
                } else {
                    -t.sqrt() - BigInt::one()
                };
                let n0 = (aa + fl_bsqrt).div_floor(&c);
                // candidate interval has width < 1/C; check n0 + 1
                let n1 = &n0 + BigInt::one();
                let cand = Scalar::Rational(BigRational::from_integer(n1.clone()));
                if self >= &cand {
                    n1
                } else {
                    n0
                }
            }
        }
    }

    /// Exact rational enclosure `[lo, hi]` with `hi - lo = 10^{-digits}`.
    pub fn enclosure(&self, digits: u32) -> (BigRational, BigRational) {
        match self {
            Scalar::Rational(r) => (r.clone(), r.clone()),
            _ => {
                let scale = BigRational::from_integer(BigInt::from(10u32).pow(digits));
                let scaled = self
                    .checked_mul(&Scalar::Rational(scale.clone()))
                    .expect("radicand");
                let f = scaled.floor_int();
                let lo = BigRational::from_integer(f.clone()) / &scale;
                let hi = BigRational::from_integer(f + BigInt::one()) / &scale;
                (lo, hi)
            }
        }
    }

    /// `f64` approximation (for iterative numerics only; never for decisions).
    pub fn to_f64(&self) -> f64 {
        match self {
            Scalar::Rational(r) => r.to_f64().unwrap_or(f64::NAN),
            Scalar::Quadratic { a, b, d } => {
                let af = a.to_f64().unwrap_or(f64::NAN);
                let bf = b.to_f64().unwrap_or(f64::NAN);
                af + bf * (*d as f64).sqrt()
            }
        }
    }

    /// Exact square root when representable as a rational or `b√d`.
    pub fn sqrt_exact(&self, d: u64) -> Option<Scalar> {
        let r = self.as_rational()?.clone();
        if r.is_negative() {
            return None;
        }
        if r.is_zero() {
            return Some(Scalar::zero());
        }
        if let Some(s) = rational_sqrt(&r) {
            return Some(Scalar::Rational(s));
        }
        // r = b²·d  ⇒  √r = b√d
        let rd = &r / BigRational::from_integer(BigInt::from(d));
        if let Some(b) = rational_sqrt(&rd) {
            return Scalar::quadratic(BigRational::zero(), b, d).ok();
        }
        None
    }
}

fn rational_sqrt(r: &BigRational) -> Option<BigRational> {
    let n = r.numer();
    let dn = r.denom();
    let sn = n.sqrt();
    let sd = dn.sqrt();
    if &(&sn * &sn) == n && &(&sd * &sd) == dn {
        Some(BigRational::new(sn, sd))
    } else {
        None
    }
}

impl PartialOrd for Scalar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scalar {
    fn cmp(&self, other: &Self) -> Ordering {
        let diff = self
            .checked_sub(other)
            .expect("ordering requires a common radicand");
        match diff.signum() {
            1 => Ordering::Greater,
            -1 => Ordering::Less,
            _ => Ordering::Equal,
        }
    }
}

/// The four exact field operations, as one entry point for documents and CLI.
pub fn scalar_arith(x: &Scalar, y: &Scalar, op: ArithOp) -> Result<Scalar> {
    match op {
        ArithOp::Add => x.checked_add(y),
        ArithOp::Sub => x.checked_sub(y),
        ArithOp::Mul => x.checked_mul(y),
        ArithOp::Div => x.checked_div(y),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

fn rational_string(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let n = BigInt::from_str(num).map_err(|e| Error::Parse(format!("bad numerator `{num}`: {e}")))?;
    let d = BigInt::from_str(den).map_err(|e| Error::Parse(format!("bad denominator `{den}`: {e}")))?;
    if d.is_zero() {
        return Err(Error::ZeroDenominator);
    }
    Ok(BigRational::new(n, d))
}

impl FromStr for Scalar {
    type Err = Error;

    /// Parses the document form of a rational: `"p/q"` or `"p"`.
    fn from_str(s: &str) -> Result<Self> {
        Ok(Scalar::Rational(parse_rational(s)?))
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Rational(r) => write!(f, "{}", rational_string(r)),
            Scalar::Quadratic { a, b, d } => {
                write!(f, "{} + {}*sqrt({})", rational_string(a), rational_string(b), d)
            }
        }
    }
}

impl Serialize for Scalar {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Scalar::Rational(r) => serializer.serialize_str(&rational_string(r)),
            Scalar::Quadratic { a, b, d } => {
                use serde::ser::SerializeStruct;
                let mut st = serializer.serialize_struct("Scalar", 3)?;
                st.serialize_field("a", &rational_string(a))?;
                st.serialize_field("b", &rational_string(b))?;
                st.serialize_field("d", d)?;
                st.end()
            }
        }
    }
}

impl<'de> Deserialize<'de> for Scalar {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct ScalarVisitor;

        impl<'de> Visitor<'de> for ScalarVisitor {
            type Value = Scalar;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a rational string \"p/q\" or an object {\"a\",\"b\",\"d\"}")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Scalar, E> {
                Scalar::from_str(v).map_err(E::custom)
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Scalar, E> {
                Ok(Scalar::from_integer(v))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Scalar, E> {
                Ok(Scalar::Rational(BigRational::from_integer(BigInt::from(v))))
            }

            fn visit_map<M: MapAccess<'de>>(self, mut map: M) -> std::result::Result<Scalar, M::Error> {
                let mut a: Option<String> = None;
                let mut b: Option<String> = None;
                let mut d: Option<u64> = None;
                while let Some(key) = map.next_key::<String>()? {
                    match key.as_str() {
                        "a" => a = Some(map.next_value()?),
                        "b" => b = Some(map.next_value()?),
                        "d" => d = Some(map.next_value()?),
                        other => return Err(de::Error::unknown_field(other, &["a", "b", "d"])),
                    }
                }
                let a = a.ok_or_else(|| de::Error::missing_field("a"))?;
                let b = b.ok_or_else(|| de::Error::missing_field("b"))?;
                let d = d.ok_or_else(|| de::Error::missing_field("d"))?;
                let a = parse_rational(&a).map_err(de::Error::custom)?;
                let b = parse_rational(&b).map_err(de::Error::custom)?;
                Scalar::quadratic(a, b, d).map_err(de::Error::custom)
            }
        }

        deserializer.deserialize_any(ScalarVisitor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Scalar {
        Scalar::from_ratio(n, d).unwrap()
    }

    /// x = (√6 − 1)/8
    fn x_root6() -> Scalar {
        Scalar::quadratic(
            BigRational::new(BigInt::from(-1), BigInt::from(8)),
            BigRational::new(BigInt::from(1), BigInt::from(8)),
            6,
        )
        .unwrap()
    }

    #[test]
    fn sum_with_root_six_squares_to_three_thirtyseconds() {
        // (1/8 + (√6−1)/8)² = (√6/8)² = 6/64 = 3/32
        let s = q(1, 8).checked_add(&x_root6()).unwrap();
        let sq = s.checked_mul(&s).unwrap();
        assert_eq!(sq, q(3, 32));
    }

    #[test]
    fn multiplicative_identity() {
        let cases = [q(0, 1), q(-7, 3), x_root6()];
        for c in cases {
            assert_eq!(c.checked_mul(&Scalar::one()).unwrap(), c);
        }
    }

    #[test]
    fn conjugate_product() {
        // (1+√6)(1−√6) = 1 − 6 = −5
        let one_plus = Scalar::quadratic(big_r(1), big_r(1), 6).unwrap();
        let one_minus = Scalar::quadratic(big_r(1), big_r(-1), 6).unwrap();
        assert_eq!(one_plus.checked_mul(&one_minus).unwrap(), q(-5, 1));
    }

    fn big_r(n: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(n))
    }

    #[test]
    fn division_by_zero_rejected() {
        assert!(matches!(
            q(1, 2).checked_div(&Scalar::zero()),
            Err(Error::DivisionByZero)
        ));
    }

    #[test]
    fn mismatched_radicands_rejected() {
        let a = Scalar::sqrt_of(6).unwrap();
        let b = Scalar::sqrt_of(7).unwrap();
        assert!(matches!(
            a.checked_add(&b),
            Err(Error::MismatchedRadicand(6, 7))
        ));
    }

    #[test]
    fn square_free_validation() {
        assert!(Scalar::sqrt_of(4).is_err());
        assert!(Scalar::sqrt_of(12).is_err());
        assert!(Scalar::sqrt_of(1).is_err());
        assert!(Scalar::sqrt_of(2).is_ok());
        assert!(Scalar::sqrt_of(30).is_ok());
    }

    #[test]
    fn quadratic_with_zero_b_normalizes_to_rational() {
        let s = Scalar::quadratic(BigRational::new(BigInt::from(3), BigInt::from(4)), BigRational::zero(), 6).unwrap();
        assert_eq!(s, q(3, 4));
        assert!(s.is_rational());
    }

    #[test]
    fn exact_sign_of_quadratics() {
        // √6 − 2 > 0, √6 − 3 < 0
        let r6 = Scalar::sqrt_of(6).unwrap();
        assert_eq!(r6.checked_sub(&q(2, 1)).unwrap().signum(), 1);
        assert_eq!(r6.checked_sub(&q(3, 1)).unwrap().signum(), -1);
        // -(√6) + 5/2 > 0 since 25/4 > 6
        let v = q(5, 2).checked_sub(&r6).unwrap();
        assert_eq!(v.signum(), 1);
        assert_eq!(v.abs(), v);
    }

    #[test]
    fn ordering_is_total_and_exact() {
        let x = x_root6(); // ≈ 0.18119
        assert!(x > q(18, 100));
        assert!(x < q(19, 100));
        assert!(x < q(1, 4));
    }

    #[test]
    fn floor_of_quadratic_values() {
        let r6 = Scalar::sqrt_of(6).unwrap(); // 2.449...
        assert_eq!(r6.floor_int(), BigInt::from(2));
        let neg = r6.clone().neg(); // -2.449...
        assert_eq!(neg.floor_int(), BigInt::from(-3));
        let ten_r6 = r6.checked_mul(&q(10, 1)).unwrap(); // 24.49...
        assert_eq!(ten_r6.floor_int(), BigInt::from(24));
        assert_eq!(q(-7, 2).floor_int(), BigInt::from(-4));
    }

    #[test]
    fn enclosure_brackets_value() {
        let x = x_root6();
        let (lo, hi) = x.enclosure(30);
        assert!(Scalar::Rational(lo.clone()) <= x && x <= Scalar::Rational(hi.clone()));
        let width = hi - lo;
        assert_eq!(
            width,
            BigRational::new(BigInt::one(), BigInt::from(10u32).pow(30))
        );
    }

    #[test]
    fn sqrt_exact_cases() {
        assert_eq!(q(9, 4).sqrt_exact(6), Some(q(3, 2)));
        // 3/32 = (1/8)²·6  ⇒  √(3/32) = (1/8)√6
        let expected = Scalar::quadratic(BigRational::zero(), BigRational::new(BigInt::from(1), BigInt::from(8)), 6).unwrap();
        assert_eq!(q(3, 32).sqrt_exact(6), Some(expected));
        assert_eq!(q(2, 1).sqrt_exact(6), None);
        assert_eq!(q(-1, 1).sqrt_exact(6), None);
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let vals = [q(0, 1), q(-3, 7), x_root6()];
        for v in &vals {
            let s = serde_json::to_string(v).unwrap();
            let back: Scalar = serde_json::from_str(&s).unwrap();
            assert_eq!(&back, v);
            let s2 = serde_json::to_string(&back).unwrap();
            assert_eq!(s, s2);
        }
        assert_eq!(serde_json::to_string(&q(0, 1)).unwrap(), "\"0/1\"");
    }

    #[test]
    fn parse_forms() {
        assert_eq!("3/4".parse::<Scalar>().unwrap(), q(3, 4));
        assert_eq!("-2/8".parse::<Scalar>().unwrap(), q(-1, 4));
        assert_eq!("5".parse::<Scalar>().unwrap(), q(5, 1));
        assert!("1/0".parse::<Scalar>().is_err());
        assert!("a/b".parse::<Scalar>().is_err());
        let quad: Scalar = serde_json::from_str(r#"{"a":"-1/8","b":"1/8","d":6}"#).unwrap();
        assert_eq!(quad, x_root6());
        // non-square-free d rejected at the document boundary
        assert!(serde_json::from_str::<Scalar>(r#"{"a":"0/1","b":"1/1","d":8}"#).is_err());
    }

    proptest::proptest! {
        #[test]
        fn field_laws(
            an in -20i64..20, bn in -20i64..20, cn in -20i64..20,
            aq in -5i64..5, bq in -5i64..5, cq in -5i64..5,
        ) {
            let mk = |r: i64, s: i64| Scalar::quadratic(
                BigRational::new(BigInt::from(r), BigInt::from(7)),
                BigRational::new(BigInt::from(s), BigInt::from(3)),
                6,
            ).unwrap();
            let x = mk(an, aq);
            let y = mk(bn, bq);
            let z = mk(cn, cq);
            // associativity
            let l = x.checked_add(&y).unwrap().checked_add(&z).unwrap();
            let r = x.checked_add(&y.checked_add(&z).unwrap()).unwrap();
            proptest::prop_assert_eq!(l, r);
            let l = x.checked_mul(&y).unwrap().checked_mul(&z).unwrap();
            let r = x.checked_mul(&y.checked_mul(&z).unwrap()).unwrap();
            proptest::prop_assert_eq!(l, r);
            // distributivity
            let l = x.checked_mul(&y.checked_add(&z).unwrap()).unwrap();
            let r = x.checked_mul(&y).unwrap().checked_add(&x.checked_mul(&z).unwrap()).unwrap();
            proptest::prop_assert_eq!(l, r);
            // sign multiplicativity
            let prod = x.checked_mul(&y).unwrap();
            proptest::prop_assert_eq!(x.signum() * y.signum(), prod.signum());
            // inverse
            if !x.is_zero() {
                let inv = x.checked_inv().unwrap();
                proptest::prop_assert_eq!(x.checked_mul(&inv).unwrap(), Scalar::one());
            }
        }
    }
}
