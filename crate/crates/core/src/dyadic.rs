//! 2-adic numbers to finite precision and the embedding of `T` into `Q_2`
//! at the degree-one prime above `𝔭`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hecke::{GrossCharacter, TElement};
use crate::quadfield::{ImagQuadField, KElement, KIdeal};

pub const DEFAULT_PRECISION: u32 = 128;

/// `2^v·u` with `u` odd and known modulo `2^rel`; `rel = 0` is zero known modulo `2^v`.
#[derive(Clone, PartialEq, Eq)]
pub struct DyadicNumber {
    v: i64,
    u: BigInt,
    rel: u32,
}

fn pow2(e: u32) -> BigInt {
    BigInt::one() << e
}

fn two_adic_val(n: &BigInt) -> u64 {
    n.trailing_zeros().unwrap_or(0)
}

impl DyadicNumber {
    /// Zero known modulo `2^abs`.
    pub fn zero(abs: i64) -> Self {
        DyadicNumber { v: abs, u: BigInt::zero(), rel: 0 }
    }

    /// Normalizes `x·2^e` known modulo `2^abs`.
    fn normalize(x: BigInt, e: i64, abs: i64) -> Self {
        if abs <= e {
            return Self::zero(abs);
        }
        let span = (abs - e) as u32;
        let x = x.mod_floor(&pow2(span));
        if x.is_zero() {
            return Self::zero(abs);
        }
        let t = two_adic_val(&x);
        let v = e + t as i64;
        let rel = (abs - v) as u32;
        DyadicNumber { v, u: (x >> t).mod_floor(&pow2(rel)), rel }
    }

    pub fn from_integer(n: &BigInt, prec: u32) -> Self {
        if n.is_zero() {
            return Self::zero(prec as i64);
        }
        let t = two_adic_val(n);
        Self::normalize(n.clone(), 0, t as i64 + prec as i64)
    }

    pub fn from_i64(n: i64, prec: u32) -> Self {
        Self::from_integer(&BigInt::from(n), prec)
    }

    /// Relative precision `prec`.
    pub fn from_rational(r: &BigRational, prec: u32) -> Self {
        if r.is_zero() {
            return Self::zero(prec as i64);
        }
        let (n, d) = (r.numer(), r.denom());
        let (tn, td) = (two_adic_val(n), two_adic_val(d));
        let v = tn as i64 - td as i64;
        let m = pow2(prec);
        let dn = (d >> td).mod_floor(&m);
        let inv = mod_inverse_pow2(&dn, prec);
        let u = ((n >> tn) * inv).mod_floor(&m);
        DyadicNumber { v, u, rel: prec }
    }

    pub fn is_zero(&self) -> bool {
        self.rel == 0
    }

    /// Absolute precision: the value is known modulo `2^abs`.
    pub fn abs_precision(&self) -> i64 {
        self.v + self.rel as i64
    }

    pub fn relative_precision(&self) -> u32 {
        self.rel
    }

    pub fn unit(&self) -> &BigInt {
        &self.u
    }

    /// `ord_2`, or `PrecisionExhausted` when the value is indistinguishable from zero.
    pub fn valuation(&self) -> Result<i64> {
        if self.is_zero() {
            Err(Error::PrecisionExhausted(format!("value is zero modulo 2^{}", self.v)))
        } else {
            Ok(self.v)
        }
    }

    pub fn inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::PrecisionExhausted("inverse of a value indistinguishable from zero".into()));
        }
        Ok(DyadicNumber { v: -self.v, u: mod_inverse_pow2(&self.u, self.rel), rel: self.rel })
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = DyadicNumber { v: 0, u: BigInt::one(), rel: self.rel.max(1) };
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// The same value known only modulo `2^abs`.
    pub fn with_abs(&self, abs: i64) -> Self {
        if abs >= self.abs_precision() {
            return self.clone();
        }
        Self::normalize(self.u.clone(), self.v, abs)
    }

    /// Integer representative of a value with `v ≥ 0`, modulo `2^abs`.
    pub fn to_integer(&self) -> Option<BigInt> {
        if self.v < 0 && !self.is_zero() {
            return None;
        }
        if self.is_zero() {
            return Some(BigInt::zero());
        }
        Some(&self.u << self.v as u32)
    }
}

fn mod_inverse_pow2(u: &BigInt, bits: u32) -> BigInt {
    // Newton: x ← x(2 - ux) doubles the correct bits
    let m = pow2(bits.max(1));
    let mut x = BigInt::one();
    let mut good = 1u32;
    while good < bits {
        x = (&x * (BigInt::from(2) - u * &x)).mod_floor(&m);
        good *= 2;
    }
    x.mod_floor(&m)
}

impl fmt::Debug for DyadicNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            write!(f, "O(2^{})", self.v)
        } else {
            write!(f, "2^{}·{} + O(2^{})", self.v, self.u, self.abs_precision())
        }
    }
}

impl Add<&DyadicNumber> for &DyadicNumber {
    type Output = DyadicNumber;
    fn add(self, rhs: &DyadicNumber) -> DyadicNumber {
        let abs = self.abs_precision().min(rhs.abs_precision());
        let e = self.v.min(rhs.v);
        let x = (&self.u << (self.v - e) as u32) + (&rhs.u << (rhs.v - e) as u32);
        DyadicNumber::normalize(x, e, abs)
    }
}

impl Neg for &DyadicNumber {
    type Output = DyadicNumber;
    fn neg(self) -> DyadicNumber {
        if self.is_zero() {
            return self.clone();
        }
        DyadicNumber { v: self.v, u: (-&self.u).mod_floor(&pow2(self.rel)), rel: self.rel }
    }
}

impl Sub<&DyadicNumber> for &DyadicNumber {
    type Output = DyadicNumber;
    fn sub(self, rhs: &DyadicNumber) -> DyadicNumber {
        self + &(-rhs)
    }
}

impl Mul<&DyadicNumber> for &DyadicNumber {
    type Output = DyadicNumber;
    fn mul(self, rhs: &DyadicNumber) -> DyadicNumber {
        match (self.is_zero(), rhs.is_zero()) {
            (true, true) => DyadicNumber::zero(self.v + rhs.v),
            (true, false) => DyadicNumber::zero(self.v + rhs.v),
            (false, true) => DyadicNumber::zero(self.v + rhs.v),
            (false, false) => {
                let rel = self.rel.min(rhs.rel);
                DyadicNumber { v: self.v + rhs.v, u: (&self.u * &rhs.u).mod_floor(&pow2(rel)), rel }
            }
        }
    }
}

/// Square root `≡ 1 mod 4` of an integer `a ≡ 1 mod 8`, to `prec` bits.
pub fn dyadic_sqrt(a: &BigInt, prec: u32) -> Result<DyadicNumber> {
    if a.mod_floor(&BigInt::from(8)) != BigInt::one() {
        return Err(Error::NotASquare(format!("{a} is not 1 mod 8")));
    }
    // x² ≡ a mod 2^{k+1} lifts to mod 2^{k+2} by adding 0 or 2^k
    let mut x = BigInt::one();
    for k in 2..=prec {
        let m = pow2(k + 2);
        if (&x * &x - a).mod_floor(&m) != BigInt::zero() {
            x += pow2(k);
        }
    }
    Ok(DyadicNumber::normalize(x, 0, prec as i64))
}

/// The unique `x` with `x^n = c` for odd `n`; `c` must have valuation divisible by `n`.
pub fn dyadic_nth_root(c: &DyadicNumber, n: u32) -> Result<DyadicNumber> {
    if n.is_multiple_of(2) {
        return Err(Error::InvalidInput("root degree must be odd".into()));
    }
    let v = c.valuation()?;
    if v.rem_euclid(n as i64) != 0 {
        return Err(Error::InvalidInput(format!("valuation {v} is not divisible by {n}")));
    }
    let rel = c.rel;
    let m = pow2(rel);
    // x ↦ x^n is a bijection on (Z/2^k)^×; fix one bit at a time
    let mut x = BigInt::one();
    for k in 1..rel {
        let mk = pow2(k + 1);
        if (x.modpow(&BigInt::from(n), &mk) - &c.u).mod_floor(&mk) != BigInt::zero() {
            x += pow2(k);
        }
    }
    Ok(DyadicNumber { v: v / n as i64, u: x.mod_floor(&m), rel })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Splitting {
    Inert,
    Split,
}

/// `K ↪ Q_2` through `√-q ↦ s`, extended to `T` through `t ↦ t_P`.
#[derive(Debug, Clone)]
pub struct PadicEmbedding {
    pub q: u64,
    pub h: u32,
    pub s: DyadicNumber,
    pub t_p: DyadicNumber,
    pub prec: u32,
    /// True when `s ≡ 3 mod 4`, i.e. the completion is at `𝔭*`.
    pub flipped: bool,
}

impl PadicEmbedding {
    pub fn new(chi: &GrossCharacter, prec: u32) -> Result<Self> {
        Self::with_orientation(chi, prec, false)
    }

    pub fn with_orientation(chi: &GrossCharacter, prec: u32, flipped: bool) -> Result<Self> {
        let q = chi.field().q();
        let s = dyadic_sqrt(&BigInt::from(-(q as i64)), prec + 8)?;
        let s = if flipped { -&s } else { s };
        let mut e = PadicEmbedding { q, h: chi.h(), t_p: DyadicNumber::from_i64(1, prec), s, prec, flipped };
        let c = e.embed_k(chi.c());
        e.t_p = dyadic_nth_root(&c, chi.h())?;
        Ok(e)
    }

    /// `a + b·ω` with `ω ↦ (1 + s)/2`.
    pub fn embed_k(&self, x: &KElement) -> DyadicNumber {
        let a = DyadicNumber::from_rational(&x.a, self.prec + 8);
        if x.b.is_zero() {
            return a;
        }
        let b = DyadicNumber::from_rational(&x.b, self.prec + 8);
        let omega = &(&DyadicNumber::from_i64(1, self.prec + 8) + &self.s)
            * &DyadicNumber::from_rational(&BigRational::new(1.into(), 2.into()), self.prec + 8);
        &a + &(&b * &omega)
    }

    pub fn embed_t(&self, x: &TElement) -> DyadicNumber {
        let mut acc = DyadicNumber::zero(self.prec as i64 + 64);
        let mut tp = DyadicNumber::from_i64(1, self.prec + 8);
        for k in &x.coeffs {
            if !k.is_zero() {
                acc = &acc + &(&self.embed_k(k) * &tp);
            }
            tp = &tp * &self.t_p;
        }
        acc
    }

    pub fn ord_t(&self, x: &TElement) -> Result<i64> {
        self.embed_t(x).valuation()
    }

    /// The prime of `K` above 2 at which this embedding completes: the one
    /// whose generator `m + ω` has positive valuation.
    pub fn prime(&self, field: &ImagQuadField) -> KIdeal {
        let primes = field.primes_above(2);
        for (p, _) in &primes {
            let g = KElement::new(field.q(), p.basis()[1].0, p.basis()[1].1);
            if self.embed_k(&g).valuation().map(|v| v > 0).unwrap_or(true) {
                return *p;
            }
        }
        unreachable!("one prime above 2 has positive valuation")
    }

    /// The conjugate prime above 2.
    pub fn other_prime(&self, field: &ImagQuadField) -> KIdeal {
        self.prime(field).conj()
    }
}

/// Whether `𝔭*` stays inert in `K(√-√-q)`: the roots of `X² + X + (√-q + 1)/4` reduced mod `𝔭*`.
pub fn inertia_check(q: u64) -> Result<Splitting> {
    let field = ImagQuadField::new(q)?;
    if q % 8 != 7 {
        return Err(Error::UnsupportedField(q, "q must be 7 mod 8".into()));
    }
    let s = dyadic_sqrt(&BigInt::from(-(q as i64)), 32)?;
    // completion at 𝔭* sends √-q to -s
    let s_star = -&s;
    let one = DyadicNumber::from_i64(1, 32);
    let quarter = DyadicNumber::from_rational(&BigRational::new(1.into(), 4.into()), 32);
    let c0 = &(&s_star + &one) * &quarter;
    let v = if c0.is_zero() { i64::MAX } else { c0.v };
    if v < 0 {
        return Err(Error::CheckFailed(format!("constant term is not integral at 𝔭* for q = {}", field.q())));
    }
    // X² + X + 1 has no root in F_2; X² + X does
    Ok(if v == 0 { Splitting::Inert } else { Splitting::Split })
}

/// `ord_𝔓(φ(𝔭*) - 1)` at the degree-one prime of `T` above `𝔭`.
pub fn char_unit_ord(chi: &GrossCharacter, emb: &PadicEmbedding) -> Result<i64> {
    let field = chi.field();
    let p_star = emb.other_prime(&field);
    let v = chi.value_t(&p_star)?;
    let one = TElement::one(chi.t_field().clone());
    emb.ord_t(&(&v - &one))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadfield::ClassGroup;
    use proptest::prelude::*;

    fn chi(q: u64) -> GrossCharacter {
        GrossCharacter::new(&ClassGroup::new(ImagQuadField::new(q).unwrap()).unwrap()).unwrap()
    }

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn square_roots() {
        let s = dyadic_sqrt(&BigInt::from(-7), 16).unwrap();
        let x = s.to_integer().unwrap();
        assert_eq!((&x * &x + BigInt::from(7)).mod_floor(&BigInt::from(1 << 16)), BigInt::zero());
        assert_eq!(x.mod_floor(&BigInt::from(4)), BigInt::one());
        assert_eq!(dyadic_sqrt(&BigInt::one(), 64).unwrap(), DyadicNumber::from_i64(1, 64));
        let r = dyadic_sqrt(&BigInt::from(17), 64).unwrap();
        assert_eq!(&r * &r, DyadicNumber::from_i64(17, 64));
        assert_eq!(r.unit().mod_floor(&BigInt::from(4)), BigInt::one());
        assert!(matches!(dyadic_sqrt(&BigInt::from(5), 16), Err(Error::NotASquare(_))));
        assert!(matches!(dyadic_sqrt(&BigInt::from(3), 16), Err(Error::NotASquare(_))));
    }

    #[test]
    fn nth_roots() {
        let c = DyadicNumber::from_i64(-13, 128);
        assert_eq!(dyadic_nth_root(&c, 1).unwrap(), c);
        let r = dyadic_nth_root(&c, 5).unwrap();
        assert_eq!(r.pow(5), c);
        let x = chi(23);
        let e = PadicEmbedding::new(&x, 128).unwrap();
        let c23 = e.embed_k(x.c());
        assert_eq!(e.t_p.pow(3).valuation().unwrap(), c23.valuation().unwrap());
        let diff = &e.t_p.pow(3) - &c23;
        assert!(diff.is_zero() || diff.valuation().unwrap() >= 120);
    }

    #[test]
    fn embedding_basics() {
        let x = chi(7);
        let e = PadicEmbedding::new(&x, DEFAULT_PRECISION).unwrap();
        let f = x.t_field().clone();
        assert_eq!(e.ord_t(&TElement::one(f.clone())).unwrap(), 0);
        let half = TElement::from_k(f.clone(), KElement::from_rationals(7, rat(1, 2), rat(0, 1)));
        assert_eq!(e.ord_t(&half).unwrap(), -1);
        assert!(matches!(e.ord_t(&TElement::zero(f)), Err(Error::PrecisionExhausted(_))));
        // (1 - √-q)/2 lies in 𝔭
        let field = ImagQuadField::new(7).unwrap();
        let omega_bar = KElement::new(7, 1, -1);
        assert!(e.prime(&field).contains(&omega_bar));
        assert!(e.embed_k(&omega_bar).valuation().unwrap() > 0);
    }

    #[test]
    fn inertia() {
        assert_eq!(inertia_check(7).unwrap(), Splitting::Inert);
        assert_eq!(inertia_check(23).unwrap(), Splitting::Inert);
        assert_eq!(inertia_check(31).unwrap(), Splitting::Split);
        for q in crate::quadfield::primes_up_to(1000).into_iter().filter(|q| q % 8 == 7) {
            let expect = if q % 16 == 7 { Splitting::Inert } else { Splitting::Split };
            assert_eq!(inertia_check(q).unwrap(), expect, "q={q}");
        }
    }

    #[test]
    fn character_unit_orders() {
        for (q, lo, exact) in [(7u64, 1, true), (23, 1, true), (31, 2, false), (47, 2, false), (71, 1, true)] {
            let x = chi(q);
            let e = PadicEmbedding::new(&x, DEFAULT_PRECISION).unwrap();
            let v = char_unit_ord(&x, &e).unwrap();
            if exact {
                assert_eq!(v, lo, "q={q}");
            } else {
                assert!(v >= lo, "q={q} ord={v}");
            }
            // φ(𝔭) has positive valuation, so φ(𝔭) - 1 is a unit
            let field = x.field();
            let vp = x.value_t(&e.prime(&field)).unwrap();
            assert!(e.ord_t(&vp).unwrap() > 0);
            let one = TElement::one(x.t_field().clone());
            assert_eq!(e.ord_t(&(&vp - &one)).unwrap(), 0);
        }
    }

    #[test]
    fn orientation_swap() {
        let x = chi(7);
        let field = x.field();
        let e = PadicEmbedding::new(&x, DEFAULT_PRECISION).unwrap();
        let f = PadicEmbedding::with_orientation(&x, DEFAULT_PRECISION, true).unwrap();
        assert_eq!(e.prime(&field), f.other_prime(&field));
        assert_eq!(e.other_prime(&field), f.prime(&field));
        let one = TElement::one(x.t_field().clone());
        let at = |emb: &PadicEmbedding, p: &KIdeal| emb.ord_t(&(&x.value_t(p).unwrap() - &one)).unwrap();
        let (p, ps) = (e.prime(&field), e.other_prime(&field));
        assert_eq!((at(&e, &p), at(&e, &ps)), (0, 1));
        assert_eq!((at(&f, &p), at(&f, &ps)), (1, 0));
        assert_eq!(char_unit_ord(&x, &f).unwrap(), char_unit_ord(&x, &e).unwrap());
    }

    proptest! {
        #[test]
        fn valuation_axioms(a in -10_000i64..10_000, b in -10_000i64..10_000, da in 1i64..64, db in 1i64..64) {
            prop_assume!(a != 0 && b != 0);
            let x = DyadicNumber::from_rational(&rat(a, da), 96);
            let y = DyadicNumber::from_rational(&rat(b, db), 96);
            prop_assert_eq!((&x * &y).valuation().unwrap(), x.valuation().unwrap() + y.valuation().unwrap());
            let s = &x + &y;
            if a * db + b * da != 0 {
                prop_assert!(s.valuation().unwrap() >= x.valuation().unwrap().min(y.valuation().unwrap()));
                let abs = s.abs_precision();
                prop_assert_eq!(s, DyadicNumber::from_rational(&(rat(a, da) + rat(b, db)), 96).with_abs(abs));
            }
            let xi = x.inv().unwrap();
            prop_assert_eq!(&x * &xi, DyadicNumber::from_i64(1, 96));
        }
    }
}
