//! Arbitrary-precision real and complex arithmetic.
//!
//! [`BigReal`] wraps an `astro_float::BigFloat` together with the working
//! precision it was produced at; binary operations run at the smaller of the
//! two operand precisions. Error control is a posteriori: [`precision_guard`]
//! recomputes at a higher precision and compares.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use astro_float::{BigFloat, Consts, RoundingMode, Sign};
use num_bigint::{BigInt, BigUint, Sign as BigSign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

const RM: RoundingMode = RoundingMode::ToEven;

/// Default working precision in bits.
pub const DEFAULT_PRECISION: usize = 192;
/// Smallest precision accepted by [`BigReal`].
pub const MIN_PRECISION: usize = 64;

thread_local! {
    static CONSTS: RefCell<Consts> = RefCell::new(Consts::new().expect("astro-float constants cache"));
}

fn with_consts<T>(f: impl FnOnce(&mut Consts) -> T) -> T {
    CONSTS.with(|c| f(&mut c.borrow_mut()))
}

/// Working, guard and verification precisions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct PrecisionPolicy {
    pub work_bits: usize,
    pub guard_bits: usize,
    pub verify_delta: usize,
}

impl Default for PrecisionPolicy {
    fn default() -> Self {
        PrecisionPolicy { work_bits: DEFAULT_PRECISION, guard_bits: 32, verify_delta: 64 }
    }
}

impl PrecisionPolicy {
    pub fn new(work_bits: usize, guard_bits: usize, verify_delta: usize) -> Result<Self> {
        if work_bits < MIN_PRECISION || guard_bits >= work_bits || verify_delta == 0 {
            return Err(Error::InvalidInput(format!(
                "precision policy P={work_bits}, G={guard_bits}, D={verify_delta}"
            )));
        }
        Ok(PrecisionPolicy { work_bits, guard_bits, verify_delta })
    }
}

/// Real number at an explicit working precision.
#[derive(Clone)]
pub struct BigReal {
    v: BigFloat,
    prec: usize,
}

impl BigReal {
    fn wrap(v: BigFloat, prec: usize) -> Self {
        debug_assert!(!v.is_nan(), "NaN produced at precision {prec}");
        BigReal { v, prec }
    }

    pub fn zero(prec: usize) -> Self {
        Self::from_i64(0, prec)
    }

    pub fn one(prec: usize) -> Self {
        Self::from_i64(1, prec)
    }

    pub fn from_i64(x: i64, prec: usize) -> Self {
        Self::wrap(BigFloat::from_i64(x, prec), prec)
    }

    pub fn from_f64(x: f64, prec: usize) -> Self {
        Self::wrap(BigFloat::from_f64(x, prec), prec)
    }

    /// Exact conversion of an integer (rounded only if it exceeds `prec` bits).
    pub fn from_bigint(n: &BigInt, prec: usize) -> Self {
        if n.is_zero() {
            return Self::zero(prec);
        }
        let (sign, mag) = n.clone().into_parts();
        let bits = mag.bits() as usize;
        let words = bits.div_ceil(64).max(prec.div_ceil(64));
        let shifted: BigUint = mag << (words * 64 - bits);
        let mut digits = shifted.to_u64_digits();
        digits.resize(words, 0);
        let s = if sign == BigSign::Minus { Sign::Neg } else { Sign::Pos };
        let mut v = BigFloat::from_words(&digits, s, bits as i32);
        v.set_precision(prec, RM).expect("precision");
        Self::wrap(v, prec)
    }

    pub fn from_rational(r: &BigRational, prec: usize) -> Self {
        let p = prec + 64;
        let n = Self::from_bigint(r.numer(), p);
        let d = Self::from_bigint(r.denom(), p);
        (n / d).with_precision(prec)
    }

    pub fn from_ratio(num: i64, den: i64, prec: usize) -> Self {
        Self::from_rational(&BigRational::new(num.into(), den.into()), prec)
    }

    /// Parses the output of [`BigReal::to_decimal`] (or any `[-]d[.ddd][e±n]`).
    pub fn from_decimal(s: &str, prec: usize) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("malformed decimal {s:?}"));
        let (mant, exp) = match s.split_once(['e', 'E']) {
            Some((m, e)) => (m, e.parse::<i64>().map_err(|_| bad())?),
            None => (s, 0),
        };
        let (int, frac) = mant.split_once('.').unwrap_or((mant, ""));
        let digits: BigInt = format!("{int}{frac}").parse().map_err(|_| bad())?;
        let e = exp - frac.len() as i64;
        let ten = BigInt::from(10u32).pow(e.unsigned_abs() as u32);
        let r = if e >= 0 { BigRational::from_integer(digits * ten) } else { BigRational::new(digits, ten) };
        Ok(Self::from_rational(&r, prec))
    }

    /// `2^e` exactly.
    pub fn pow2(e: i64, prec: usize) -> Self {
        Self::one(prec).mul_pow2(e)
    }

    pub fn pi(prec: usize) -> Self {
        Self::wrap(with_consts(|cc| cc.pi(prec, RM)), prec)
    }

    pub fn ln2(prec: usize) -> Self {
        Self::wrap(with_consts(|cc| cc.ln_2(prec, RM)), prec)
    }

    pub fn precision(&self) -> usize {
        self.prec
    }

    pub fn with_precision(&self, prec: usize) -> Self {
        let mut v = self.v.clone();
        v.set_precision(prec, RM).expect("precision");
        Self::wrap(v, prec)
    }

    pub fn is_zero(&self) -> bool {
        self.v.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.v.is_negative() && !self.v.is_zero()
    }

    pub fn abs(&self) -> Self {
        Self::wrap(self.v.abs(), self.prec)
    }

    pub fn sqr(&self) -> Self {
        self * self
    }

    pub fn sqrt(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        assert!(!self.is_negative(), "sqrt of negative BigReal");
        Self::wrap(self.v.sqrt(self.prec, RM), self.prec)
    }

    pub fn exp(&self) -> Self {
        Self::wrap(with_consts(|cc| self.v.exp(self.prec, RM, cc)), self.prec)
    }

    pub fn ln(&self) -> Self {
        assert!(!self.is_negative() && !self.is_zero(), "ln of non-positive BigReal");
        Self::wrap(with_consts(|cc| self.v.ln(self.prec, RM, cc)), self.prec)
    }

    pub fn sin(&self) -> Self {
        Self::wrap(with_consts(|cc| self.v.sin(self.prec, RM, cc)), self.prec)
    }

    pub fn cos(&self) -> Self {
        Self::wrap(with_consts(|cc| self.v.cos(self.prec, RM, cc)), self.prec)
    }

    pub fn atan(&self) -> Self {
        Self::wrap(with_consts(|cc| self.v.atan(self.prec, RM, cc)), self.prec)
    }

    /// Angle of the point `(x, y)` in `(-π, π]`.
    pub fn atan2(y: &BigReal, x: &BigReal) -> BigReal {
        let prec = y.prec.min(x.prec);
        let pi = Self::pi(prec);
        if x.is_zero() {
            if y.is_zero() {
                return Self::zero(prec);
            }
            let half = pi.mul_pow2(-1);
            return if y.is_negative() { -half } else { half };
        }
        if y.abs() <= x.abs() {
            let a = (y / x).atan();
            if !x.is_negative() {
                a
            } else if y.is_negative() {
                a - pi
            } else {
                a + pi
            }
        } else {
            let a = (x / y).atan();
            let half = pi.mul_pow2(-1);
            if y.is_negative() {
                -half - a
            } else {
                half - a
            }
        }
    }

    /// Multiply by `2^e` (exact).
    pub fn mul_pow2(&self, e: i64) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let mut v = self.v.clone();
        let cur = v.exponent().expect("finite") as i64;
        v.set_exponent((cur + e) as i32);
        Self::wrap(v, self.prec)
    }

    pub fn floor(&self) -> Self {
        Self::wrap(self.v.floor(), self.prec)
    }

    /// `floor(log2 |x|)`, or `None` for zero.
    pub fn log2_floor(&self) -> Option<i64> {
        if self.is_zero() {
            None
        } else {
            self.v.exponent().map(|e| e as i64 - 1)
        }
    }

    /// Approximate `log2 |x|` as `f64`; `-inf` for zero.
    pub fn log2_approx(&self) -> f64 {
        match self.to_parts() {
            None => f64::NEG_INFINITY,
            Some((m, e)) => {
                let bits = m.bits() as i64;
                let shift = (bits - 60).max(0);
                let top = (m.abs() >> shift as usize).to_f64().unwrap_or(1.0);
                top.log2() + (shift + e) as f64
            }
        }
    }

    /// Exact decomposition `x = m * 2^e`, `None` for zero.
    pub fn to_parts(&self) -> Option<(BigInt, i64)> {
        if self.is_zero() {
            return None;
        }
        let (words, _, sign, exp, _) = self.v.as_raw_parts()?;
        let mag = BigUint::from_slice(&words.iter().flat_map(|w| [*w as u32, (*w >> 32) as u32]).collect::<Vec<u32>>());
        let e = exp as i64 - 64 * words.len() as i64;
        let s = if sign == Sign::Neg { BigSign::Minus } else { BigSign::Plus };
        Some((BigInt::from_biguint(s, mag), e))
    }

    pub fn to_rational(&self) -> BigRational {
        match self.to_parts() {
            None => BigRational::zero(),
            Some((m, e)) if e >= 0 => BigRational::from_integer(m << e as usize),
            Some((m, e)) => BigRational::new(m, BigInt::one() << (-e) as usize),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self.to_parts() {
            None => 0.0,
            Some((m, e)) => {
                let bits = m.bits() as i64;
                let shift = (bits - 62).max(0);
                let top = (&m >> shift as usize).to_f64().unwrap_or(0.0);
                top * 2f64.powi((shift + e).clamp(-2000, 2000) as i32)
            }
        }
    }

    /// Nearest integer (ties away from zero).
    pub fn round_to_bigint(&self) -> BigInt {
        let half = Self::from_ratio(1, 2, self.prec);
        let r = if self.is_negative() { -((-self) + half).floor() } else { (self + &half).floor() };
        match r.to_parts() {
            None => BigInt::zero(),
            Some((m, e)) if e >= 0 => m << e as usize,
            Some((m, e)) => m >> (-e) as usize,
        }
    }

    /// Decimal rendering with `digits` significant digits.
    pub fn to_decimal(&self, digits: usize) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let r = self.to_rational();
        let neg = r.is_negative();
        let r = r.abs();
        let l10 = self.log2_approx() * std::f64::consts::LN_2 / std::f64::consts::LN_10;
        let exp10 = l10.floor() as i64;
        let shift = digits as i64 - 1 - exp10;
        let scaled = if shift >= 0 {
            r * BigRational::from_integer(BigInt::from(10u32).pow(shift as u32))
        } else {
            r / BigRational::from_integer(BigInt::from(10u32).pow((-shift) as u32))
        };
        let n = scaled.round().to_integer().to_string();
        let e = n.len() as i64 - 1 - shift;
        let (head, tail) = n.split_at(1);
        format!("{}{}.{}e{}", if neg { "-" } else { "" }, head, tail, e)
    }
}

impl fmt::Debug for BigReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_decimal(20))
    }
}

impl fmt::Display for BigReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = (self.prec as f64 * std::f64::consts::LOG10_2) as usize;
        write!(f, "{}", self.to_decimal(digits.max(2)))
    }
}

impl PartialEq for BigReal {
    fn eq(&self, other: &Self) -> bool {
        self.v.cmp(&other.v) == Some(0)
    }
}

impl PartialOrd for BigReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.v.cmp(&other.v).map(|c| c.cmp(&0))
    }
}

macro_rules! real_binop {
    ($tr:ident, $m:ident) => {
        impl $tr<&BigReal> for &BigReal {
            type Output = BigReal;
            fn $m(self, rhs: &BigReal) -> BigReal {
                let p = self.prec.min(rhs.prec);
                BigReal::wrap(self.v.$m(&rhs.v, p, RM), p)
            }
        }
        impl $tr<BigReal> for BigReal {
            type Output = BigReal;
            fn $m(self, rhs: BigReal) -> BigReal {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&BigReal> for BigReal {
            type Output = BigReal;
            fn $m(self, rhs: &BigReal) -> BigReal {
                (&self).$m(rhs)
            }
        }
        impl $tr<BigReal> for &BigReal {
            type Output = BigReal;
            fn $m(self, rhs: BigReal) -> BigReal {
                self.$m(&rhs)
            }
        }
    };
}

real_binop!(Add, add);
real_binop!(Sub, sub);
real_binop!(Mul, mul);
real_binop!(Div, div);

impl Neg for BigReal {
    type Output = BigReal;
    fn neg(self) -> BigReal {
        BigReal::wrap(BigFloat::neg(&self.v), self.prec)
    }
}

impl Neg for &BigReal {
    type Output = BigReal;
    fn neg(self) -> BigReal {
        BigReal::wrap(BigFloat::neg(&self.v), self.prec)
    }
}

/// Complex number whose parts share one precision.
#[derive(Clone, PartialEq)]
pub struct BigComplex {
    pub re: BigReal,
    pub im: BigReal,
}

impl BigComplex {
    pub fn new(re: BigReal, im: BigReal) -> Self {
        let p = re.prec.min(im.prec);
        BigComplex { re: re.with_precision(p), im: im.with_precision(p) }
    }

    pub fn from_real(re: BigReal) -> Self {
        let p = re.prec;
        BigComplex { re, im: BigReal::zero(p) }
    }

    pub fn zero(prec: usize) -> Self {
        BigComplex { re: BigReal::zero(prec), im: BigReal::zero(prec) }
    }

    pub fn one(prec: usize) -> Self {
        BigComplex { re: BigReal::one(prec), im: BigReal::zero(prec) }
    }

    pub fn i(prec: usize) -> Self {
        BigComplex { re: BigReal::zero(prec), im: BigReal::one(prec) }
    }

    pub fn from_i64(x: i64, prec: usize) -> Self {
        Self::from_real(BigReal::from_i64(x, prec))
    }

    pub fn from_f64(re: f64, im: f64, prec: usize) -> Self {
        BigComplex { re: BigReal::from_f64(re, prec), im: BigReal::from_f64(im, prec) }
    }

    pub fn precision(&self) -> usize {
        self.re.prec.min(self.im.prec)
    }

    pub fn with_precision(&self, prec: usize) -> Self {
        BigComplex { re: self.re.with_precision(prec), im: self.im.with_precision(prec) }
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        BigComplex { re: self.re.clone(), im: -&self.im }
    }

    pub fn norm_sqr(&self) -> BigReal {
        self.re.sqr() + self.im.sqr()
    }

    pub fn abs(&self) -> BigReal {
        self.norm_sqr().sqrt()
    }

    pub fn arg(&self) -> BigReal {
        BigReal::atan2(&self.im, &self.re)
    }

    pub fn scale(&self, k: &BigReal) -> Self {
        BigComplex { re: &self.re * k, im: &self.im * k }
    }

    pub fn mul_i(&self) -> Self {
        BigComplex { re: -&self.im, im: self.re.clone() }
    }

    pub fn mul_pow2(&self, e: i64) -> Self {
        BigComplex { re: self.re.mul_pow2(e), im: self.im.mul_pow2(e) }
    }

    pub fn sqr(&self) -> Self {
        self * self
    }

    pub fn inv(&self) -> Self {
        let n = self.norm_sqr();
        BigComplex { re: &self.re / &n, im: -(&self.im / &n) }
    }

    pub fn powi(&self, mut n: u64) -> Self {
        let mut base = self.clone();
        let mut acc = BigComplex::one(self.precision());
        while n > 0 {
            if n & 1 == 1 {
                acc = &acc * &base;
            }
            base = base.sqr();
            n >>= 1;
        }
        acc
    }

    /// Principal square root (branch cut on the negative real axis).
    pub fn sqrt(&self) -> Self {
        let p = self.precision();
        if self.is_zero() {
            return BigComplex::zero(p);
        }
        let r = self.abs();
        if !self.re.is_negative() {
            let a = ((&r + &self.re).mul_pow2(-1)).sqrt();
            let b = &self.im / a.mul_pow2(1);
            BigComplex { re: a, im: b }
        } else {
            let b = ((&r - &self.re).mul_pow2(-1)).sqrt();
            let b = if self.im.is_negative() { -b } else { b };
            let a = &self.im / b.mul_pow2(1);
            BigComplex { re: a, im: b }
        }
    }

    /// Principal logarithm.
    pub fn ln(&self) -> Self {
        BigComplex { re: self.abs().ln(), im: self.arg() }
    }

    /// `exp(z)`; rejects `|Re z| > 2^40`.
    pub fn exp(&self) -> Result<Self> {
        complex_exp(self)
    }

    /// `exp(2πi·x)` for real `x`.
    pub fn unit(x: &BigReal) -> Self {
        let theta = x * BigReal::pi(x.prec).mul_pow2(1);
        BigComplex { re: theta.cos(), im: theta.sin() }
    }

    /// `|self - other| <= 2^{-bits} * max(1, |other|)`.
    pub fn close_to(&self, other: &BigComplex, bits: i64) -> bool {
        let d = (self - other).abs();
        let scale = other.abs();
        let one = BigReal::one(d.prec);
        let s = if scale > one { scale } else { one };
        d <= s.mul_pow2(-bits)
    }

    pub fn to_f64(&self) -> (f64, f64) {
        (self.re.to_f64(), self.im.to_f64())
    }
}

impl fmt::Debug for BigComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:?} + {:?}i)", self.re, self.im)
    }
}

impl Add<&BigComplex> for &BigComplex {
    type Output = BigComplex;
    fn add(self, rhs: &BigComplex) -> BigComplex {
        BigComplex { re: &self.re + &rhs.re, im: &self.im + &rhs.im }
    }
}

impl Sub<&BigComplex> for &BigComplex {
    type Output = BigComplex;
    fn sub(self, rhs: &BigComplex) -> BigComplex {
        BigComplex { re: &self.re - &rhs.re, im: &self.im - &rhs.im }
    }
}

impl Mul<&BigComplex> for &BigComplex {
    type Output = BigComplex;
    fn mul(self, rhs: &BigComplex) -> BigComplex {
        BigComplex { re: &self.re * &rhs.re - &self.im * &rhs.im, im: &self.re * &rhs.im + &self.im * &rhs.re }
    }
}

impl Div<&BigComplex> for &BigComplex {
    type Output = BigComplex;
    fn div(self, rhs: &BigComplex) -> BigComplex {
        let n = rhs.norm_sqr();
        let re = &self.re * &rhs.re + &self.im * &rhs.im;
        let im = &self.im * &rhs.re - &self.re * &rhs.im;
        BigComplex { re: re / &n, im: im / n }
    }
}

macro_rules! complex_owned {
    ($tr:ident, $m:ident) => {
        impl $tr<BigComplex> for BigComplex {
            type Output = BigComplex;
            fn $m(self, rhs: BigComplex) -> BigComplex {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&BigComplex> for BigComplex {
            type Output = BigComplex;
            fn $m(self, rhs: &BigComplex) -> BigComplex {
                (&self).$m(rhs)
            }
        }
        impl $tr<BigComplex> for &BigComplex {
            type Output = BigComplex;
            fn $m(self, rhs: BigComplex) -> BigComplex {
                self.$m(&rhs)
            }
        }
    };
}

complex_owned!(Add, add);
complex_owned!(Sub, sub);
complex_owned!(Mul, mul);
complex_owned!(Div, div);

impl Neg for BigComplex {
    type Output = BigComplex;
    fn neg(self) -> BigComplex {
        BigComplex { re: -self.re, im: -self.im }
    }
}

impl Neg for &BigComplex {
    type Output = BigComplex;
    fn neg(self) -> BigComplex {
        BigComplex { re: -&self.re, im: -&self.im }
    }
}

/// Complex exponential with overflow guard on the real part.
pub fn complex_exp(z: &BigComplex) -> Result<BigComplex> {
    let limit = BigReal::pow2(40, z.precision());
    if z.re.abs() > limit {
        return Err(Error::Overflow(z.re.to_f64()));
    }
    let m = z.re.exp();
    Ok(BigComplex { re: &m * z.im.cos(), im: m * z.im.sin() })
}

/// Arithmetic-geometric mean with the "right" square-root branch at every step.
pub fn complex_agm(a: &BigComplex, b: &BigComplex) -> Result<BigComplex> {
    let p = a.precision().min(b.precision());
    if a.is_zero() || b.is_zero() {
        return Err(Error::InvalidInput("agm argument is zero".into()));
    }
    if (a + b).is_zero() {
        return Err(Error::InvalidInput("agm arguments are antipodal".into()));
    }
    let max_iter = 8 * (usize::BITS - p.leading_zeros()) as usize;
    let (mut a, mut b) = (a.clone(), b.clone());
    for _ in 0..max_iter {
        if a.close_to(&b, p as i64 - 4) {
            return Ok(a);
        }
        let a1 = (&a + &b).mul_pow2(-1);
        let mut b1 = (&a * &b).sqrt();
        if (&a1 - &b1).norm_sqr() > (&a1 + &b1).norm_sqr() {
            b1 = -b1;
        }
        a = a1;
        b = b1;
    }
    Err(Error::AgmNonConvergence(max_iter))
}

/// Runs `f` at the working precision and at `P + D`; returns the first result
/// when both agree to `2^{-(P-G)}` relative to the higher-precision value.
pub fn precision_guard<F>(policy: &PrecisionPolicy, f: F) -> Result<BigComplex>
where
    F: Fn(usize) -> Result<BigComplex>,
{
    let lo = f(policy.work_bits)?;
    let hi = f(policy.work_bits + policy.verify_delta)?;
    let diff = (&lo.with_precision(hi.precision()) - &hi).abs();
    let scale = hi.abs();
    let ok = if scale.is_zero() {
        diff.is_zero()
    } else {
        diff <= scale.mul_pow2(-((policy.work_bits - policy.guard_bits) as i64))
    };
    if ok {
        Ok(lo)
    } else {
        let gap = if scale.is_zero() { diff.log2_approx() } else { diff.log2_approx() - scale.log2_approx() };
        Err(Error::PrecisionLoss { low: policy.work_bits, high: policy.work_bits + policy.verify_delta, log2_gap: gap })
    }
}

/// All complex roots of `Σ c_i x^i` (coefficients low to high) by simultaneous
/// Weierstrass iteration.
pub fn poly_roots(coeffs: &[BigComplex]) -> Result<Vec<BigComplex>> {
    let deg = coeffs.len().saturating_sub(1);
    if deg == 0 || coeffs[deg].is_zero() {
        return Err(Error::InvalidInput("polynomial must have a nonzero leading coefficient".into()));
    }
    let p = coeffs.iter().map(BigComplex::precision).min().unwrap_or(64);
    let lead = &coeffs[deg];
    let monic: Vec<BigComplex> = coeffs.iter().map(|c| c / lead).collect();
    let eval = |z: &BigComplex| monic.iter().rev().fold(BigComplex::zero(p), |acc, c| &(&acc * z) + c);
    // Cauchy bound on the root moduli
    let bound = monic[..deg].iter().map(|c| c.abs().to_f64()).fold(0.0, f64::max) + 1.0;
    let seed = BigComplex::from_f64(0.4, 0.9, p);
    let mut z: Vec<BigComplex> =
        (0..deg).map(|k| seed.powi(k as u64 + 1).scale(&BigReal::from_f64(bound, p))).collect();
    let tol_bits = p as i64 - 8;
    for _ in 0..(64 * deg + 4 * p) {
        let mut done = true;
        for i in 0..deg {
            let mut den = BigComplex::one(p);
            for (k, zk) in z.iter().enumerate() {
                if k != i {
                    den = den * (&z[i] - zk);
                }
            }
            if den.is_zero() {
                den = BigComplex::from_f64(1e-10, 1e-10, p);
            }
            let step = eval(&z[i]) / den;
            let zi = &z[i] - &step;
            if !zi.close_to(&z[i], tol_bits) {
                done = false;
            }
            z[i] = zi;
        }
        if done {
            return Ok(z);
        }
    }
    Err(Error::PrecisionExhausted("polynomial root iteration did not settle".into()))
}
