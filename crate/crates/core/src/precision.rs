//! Scalar backends for the extended-precision factorizations.
//!
//! Three real types implement [`Real`]: plain `f64`, a double-double [`Dd`]
//! (about 106 significant bits) and [`Big`], an arbitrary precision binary
//! float. [`Precision::from_bits`] picks the cheapest backend that carries at
//! least the requested number of bits.

use std::fmt::Debug;
use std::str::FromStr;

use dashu_float::round::mode::HalfEven;
use dashu_float::FBig;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Arithmetic needed by the generic QR / Cholesky / triangular solvers.
pub trait Real: Clone + Send + Sync + Debug + 'static {
    fn from_f64(x: f64, bits: u32) -> Self;
    fn to_f64(&self) -> f64;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    fn sqrt(&self) -> Self;
    fn is_zero(&self) -> bool;
    fn lt(&self, o: &Self) -> bool;
    fn to_dd(&self) -> Dd;
    /// Decimal rendering that parses back to the same value at `bits`.
    fn to_decimal(&self, bits: u32) -> String;
    fn parse_decimal(s: &str, bits: u32) -> Result<Self>;

    fn abs(&self) -> Self {
        if self.lt(&Self::from_f64(0.0, 53)) {
            self.neg()
        } else {
            self.clone()
        }
    }
}

/// Which backend serves a requested precision.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precision {
    Double,
    DoubleDouble,
    Multi(u32),
}

impl Precision {
    pub fn from_bits(bits: u32) -> Result<Self> {
        match bits {
            0..=52 => Err(Error::Argument(format!(
                "precision_bits must be at least 53, got {bits}"
            ))),
            53 => Ok(Precision::Double),
            54..=106 => Ok(Precision::DoubleDouble),
            b => Ok(Precision::Multi(b)),
        }
    }

    /// Effective mantissa bits carried by the backend.
    pub fn effective_bits(self) -> u32 {
        match self {
            Precision::Double => 53,
            Precision::DoubleDouble => 106,
            Precision::Multi(b) => b,
        }
    }
}

impl Real for f64 {
    #[inline]
    fn from_f64(x: f64, _bits: u32) -> Self {
        x
    }
    #[inline]
    fn to_f64(&self) -> f64 {
        *self
    }
    #[inline]
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    #[inline]
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    #[inline]
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    #[inline]
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    #[inline]
    fn neg(&self) -> Self {
        -self
    }
    #[inline]
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
    #[inline]
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    #[inline]
    fn lt(&self, o: &Self) -> bool {
        self < o
    }
    fn to_dd(&self) -> Dd {
        Dd::new(*self)
    }
    fn to_decimal(&self, _bits: u32) -> String {
        format!("{:e}", self)
    }
    fn parse_decimal(s: &str, _bits: u32) -> Result<Self> {
        s.trim()
            .parse::<f64>()
            .map_err(|e| Error::Parse(format!("bad decimal {s:?}: {e}")))
    }
}

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    #[inline]
    pub const fn new(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    #[inline]
    pub fn add_dd(self, b: Dd) -> Dd {
        let (s1, s2) = two_sum(self.hi, b.hi);
        let (t1, t2) = two_sum(self.lo, b.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        let (hi, lo) = quick_two_sum(s1, s2 + t2);
        Dd { hi, lo }
    }

    #[inline]
    pub fn sub_dd(self, b: Dd) -> Dd {
        self.add_dd(Dd {
            hi: -b.hi,
            lo: -b.lo,
        })
    }

    #[inline]
    pub fn mul_dd(self, b: Dd) -> Dd {
        let (p1, p2) = two_prod(self.hi, b.hi);
        let p2 = p2 + (self.hi * b.lo + self.lo * b.hi);
        let (hi, lo) = quick_two_sum(p1, p2);
        Dd { hi, lo }
    }

    #[inline]
    pub fn mul_f64(self, b: f64) -> Dd {
        let (p1, p2) = two_prod(self.hi, b);
        let (hi, lo) = quick_two_sum(p1, p2 + self.lo * b);
        Dd { hi, lo }
    }

    pub fn div_dd(self, b: Dd) -> Dd {
        let q1 = self.hi / b.hi;
        let r = self.sub_dd(b.mul_f64(q1));
        let q2 = r.hi / b.hi;
        let r = r.sub_dd(b.mul_f64(q2));
        let q3 = r.hi / b.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo }.add_dd(Dd::new(q3))
    }

    pub fn sqrt_dd(self) -> Dd {
        if self.hi <= 0.0 {
            return Dd::new(self.hi.sqrt());
        }
        let q = self.hi.sqrt();
        let (p, e) = two_prod(q, q);
        let corr = ((self.hi - p - e) + self.lo) / (2.0 * q);
        let (hi, lo) = quick_two_sum(q, corr);
        Dd { hi, lo }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.hi + self.lo
    }
}

impl Real for Dd {
    #[inline]
    fn from_f64(x: f64, _bits: u32) -> Self {
        Dd::new(x)
    }
    #[inline]
    fn to_f64(&self) -> f64 {
        self.value()
    }
    #[inline]
    fn add(&self, o: &Self) -> Self {
        self.add_dd(*o)
    }
    #[inline]
    fn sub(&self, o: &Self) -> Self {
        self.sub_dd(*o)
    }
    #[inline]
    fn mul(&self, o: &Self) -> Self {
        self.mul_dd(*o)
    }
    #[inline]
    fn div(&self, o: &Self) -> Self {
        self.div_dd(*o)
    }
    #[inline]
    fn neg(&self) -> Self {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
    fn sqrt(&self) -> Self {
        self.sqrt_dd()
    }
    #[inline]
    fn is_zero(&self) -> bool {
        self.hi == 0.0
    }
    #[inline]
    fn lt(&self, o: &Self) -> bool {
        self.hi < o.hi || (self.hi == o.hi && self.lo < o.lo)
    }
    fn to_dd(&self) -> Dd {
        *self
    }
    fn to_decimal(&self, _bits: u32) -> String {
        if !self.hi.is_finite() {
            return format!("{}", self.hi);
        }
        let x = big_from_f64(self.hi, 128).add(&big_from_f64(self.lo, 128));
        x.to_decimal(106)
    }
    fn parse_decimal(s: &str, _bits: u32) -> Result<Self> {
        let b = Big::parse_decimal(s, 128)?;
        let hi = b.to_f64();
        let lo = b.sub(&big_from_f64(hi, 128)).to_f64();
        Ok(Dd { hi, lo })
    }
}

type Fb = FBig<HalfEven, 2>;

/// Arbitrary precision binary float; every value carries its own precision.
#[derive(Debug, Clone)]
pub struct Big(Fb);

fn big_from_f64(x: f64, bits: u32) -> Big {
    let v = Fb::try_from(x).unwrap_or(Fb::ZERO);
    Big(v.with_precision(bits as usize).value())
}

impl Real for Big {
    fn from_f64(x: f64, bits: u32) -> Self {
        big_from_f64(x, bits)
    }
    fn to_f64(&self) -> f64 {
        self.0.to_f64().value()
    }
    fn add(&self, o: &Self) -> Self {
        Big(&self.0 + &o.0)
    }
    fn sub(&self, o: &Self) -> Self {
        Big(&self.0 - &o.0)
    }
    fn mul(&self, o: &Self) -> Self {
        Big(&self.0 * &o.0)
    }
    fn div(&self, o: &Self) -> Self {
        Big(&self.0 / &o.0)
    }
    fn neg(&self) -> Self {
        Big(-self.0.clone())
    }
    fn sqrt(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        Big(self.0.sqrt())
    }
    fn is_zero(&self) -> bool {
        self.0.repr().significand().is_zero()
    }
    fn lt(&self, o: &Self) -> bool {
        self.0 < o.0
    }
    fn to_dd(&self) -> Dd {
        let hi = self.to_f64();
        if !hi.is_finite() {
            return Dd::new(hi);
        }
        let lo = self.sub(&big_from_f64(hi, 53)).to_f64();
        Dd { hi, lo }
    }
    fn to_decimal(&self, bits: u32) -> String {
        // ceil(bits * log10(2)) + 2 guard digits round-trips at `bits`
        let digits = (bits as f64 * std::f64::consts::LOG10_2).ceil() as usize + 2;
        let dec = self
            .0
            .clone()
            .with_base_and_precision::<10>(digits)
            .value();
        format!("{}", dec)
    }
    fn parse_decimal(s: &str, bits: u32) -> Result<Self> {
        let dec = FBig::<HalfEven, 10>::from_str(s.trim())
            .map_err(|e| Error::Parse(format!("bad decimal {s:?}: {e:?}")))?;
        let bin = dec
            .with_base_and_precision::<2>(bits as usize)
            .value();
        Ok(Big(bin))
    }
}

/// Complex number over a generic [`Real`].
#[derive(Debug, Clone)]
pub struct Cx<R> {
    pub re: R,
    pub im: R,
}

impl<R: Real> Cx<R> {
    pub fn new(re: R, im: R) -> Self {
        Cx { re, im }
    }

    pub fn zero(bits: u32) -> Self {
        Cx::new(R::from_f64(0.0, bits), R::from_f64(0.0, bits))
    }

    pub fn from_c64(z: Complex64, bits: u32) -> Self {
        Cx::new(R::from_f64(z.re, bits), R::from_f64(z.im, bits))
    }

    pub fn from_real(r: R, bits: u32) -> Self {
        Cx::new(r, R::from_f64(0.0, bits))
    }

    pub fn to_c64(&self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }

    pub fn add(&self, o: &Self) -> Self {
        Cx::new(self.re.add(&o.re), self.im.add(&o.im))
    }

    pub fn sub(&self, o: &Self) -> Self {
        Cx::new(self.re.sub(&o.re), self.im.sub(&o.im))
    }

    pub fn mul(&self, o: &Self) -> Self {
        Cx::new(
            self.re.mul(&o.re).sub(&self.im.mul(&o.im)),
            self.re.mul(&o.im).add(&self.im.mul(&o.re)),
        )
    }

    /// `conj(self) * o`
    pub fn conj_mul(&self, o: &Self) -> Self {
        Cx::new(
            self.re.mul(&o.re).add(&self.im.mul(&o.im)),
            self.re.mul(&o.im).sub(&self.im.mul(&o.re)),
        )
    }

    pub fn scale(&self, s: &R) -> Self {
        Cx::new(self.re.mul(s), self.im.mul(s))
    }

    pub fn conj(&self) -> Self {
        Cx::new(self.re.clone(), self.im.neg())
    }

    pub fn neg(&self) -> Self {
        Cx::new(self.re.neg(), self.im.neg())
    }

    pub fn norm_sqr(&self) -> R {
        self.re.mul(&self.re).add(&self.im.mul(&self.im))
    }

    pub fn abs(&self) -> R {
        self.norm_sqr().sqrt()
    }

    pub fn div(&self, o: &Self) -> Self {
        let d = o.norm_sqr();
        let n = o.conj_mul(self);
        Cx::new(n.re.div(&d), n.im.div(&d))
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }
}

/// Double-double complex used for fast compensated evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DdComplex {
    pub re: Dd,
    pub im: Dd,
}

impl DdComplex {
    pub const ZERO: DdComplex = DdComplex {
        re: Dd::ZERO,
        im: Dd::ZERO,
    };

    #[inline]
    pub fn from_c64(z: Complex64) -> Self {
        DdComplex {
            re: Dd::new(z.re),
            im: Dd::new(z.im),
        }
    }

    #[inline]
    pub fn add(self, o: Self) -> Self {
        DdComplex {
            re: self.re.add_dd(o.re),
            im: self.im.add_dd(o.im),
        }
    }

    #[inline]
    pub fn mul(self, o: Self) -> Self {
        DdComplex {
            re: self.re.mul_dd(o.re).sub_dd(self.im.mul_dd(o.im)),
            im: self.re.mul_dd(o.im).add_dd(self.im.mul_dd(o.re)),
        }
    }

    #[inline]
    pub fn to_c64(self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backend_selection() {
        assert!(Precision::from_bits(32).is_err());
        assert_eq!(Precision::from_bits(53).unwrap(), Precision::Double);
        assert_eq!(Precision::from_bits(64).unwrap(), Precision::DoubleDouble);
        assert_eq!(Precision::from_bits(256).unwrap(), Precision::Multi(256));
    }

    #[test]
    fn dd_carries_more_than_double() {
        // (1 + 2^-70) - 1 is lost in f64 but kept in double-double
        let tiny = 2f64.powi(-70);
        let x = Dd::ONE.add_dd(Dd::new(tiny)).sub_dd(Dd::ONE);
        assert_eq!(x.value(), tiny);
        let third = Dd::ONE.div_dd(Dd::new(3.0));
        let back = third.mul_dd(Dd::new(3.0)).sub_dd(Dd::ONE);
        assert!(back.value().abs() < 1e-31);
        let s = Dd::new(2.0).sqrt_dd();
        assert!(s.mul_dd(s).sub_dd(Dd::new(2.0)).value().abs() < 1e-31);
    }

    #[test]
    fn big_sqrt_and_decimal_round_trip() {
        let two = Big::from_f64(2.0, 256);
        let r = two.sqrt();
        let err = r.mul(&r).sub(&two);
        assert!(err.to_f64().abs() < 1e-70);
        let text = r.to_decimal(256);
        let back = Big::parse_decimal(&text, 256).unwrap();
        assert!(back.sub(&r).to_f64().abs() < 1e-75);
        assert!((r.to_f64() - 2f64.sqrt()).abs() < 1e-16);
    }

    #[test]
    fn dd_decimal_round_trip() {
        let x = Dd::ONE.div_dd(Dd::new(7.0));
        let back = Dd::parse_decimal(&x.to_decimal(106), 106).unwrap();
        assert!(back.sub_dd(x).value().abs() < 1e-32);
    }
}
