//! Exact arithmetic in `K = Q(sqrt(-q))` for primes `q ≡ 7 (mod 8)`.
//!
//! Elements are written in the integral basis `{1, ω}` with
//! `ω = (1 + sqrt(-q))/2`, so `ω² = ω - (1+q)/4`. Integral ideals are kept in
//! Hermite normal form `c·(Z·n + Z·(m + ω))`. Ideal classes are realized
//! through reduced binary quadratic forms of discriminant `-q`.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::numerics::{BigComplex, BigReal};

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Prime factorization by trial division, ascending.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        let mut e = 0;
        while n.is_multiple_of(d) {
            n /= d;
            e += 1;
        }
        if e > 0 {
            out.push((d, e));
        }
        d += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

pub fn primes_up_to(n: u64) -> Vec<u64> {
    let n = n as usize;
    let mut sieve = vec![true; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if sieve[i] {
            out.push(i as u64);
            let mut j = i * i;
            while j <= n {
                sieve[j] = false;
                j += i;
            }
        }
    }
    out
}

/// Jacobi symbol `(a | n)` for odd positive `n`.
pub fn jacobi(a: i64, n: u64) -> i32 {
    assert!(n % 2 == 1, "jacobi symbol needs odd modulus");
    let mut a = a.rem_euclid(n as i64) as u64;
    let mut n = n;
    let mut t = 1;
    while a != 0 {
        while a.is_multiple_of(2) {
            a /= 2;
            if n % 8 == 3 || n % 8 == 5 {
                t = -t;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            t = -t;
        }
        a %= n;
    }
    if n == 1 {
        t
    } else {
        0
    }
}

/// Kronecker symbol `(-q | ℓ)` for a prime `ℓ` and `q ≡ 7 mod 8`.
pub fn kronecker_minus_q(q: u64, ell: u64) -> i32 {
    if ell == 2 {
        // -q ≡ 1 mod 8
        return 1;
    }
    jacobi(-(q as i64), ell)
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1u128;
    let mut bb = (b % m) as u128;
    let m128 = m as u128;
    while e > 0 {
        if e & 1 == 1 {
            r = r * bb % m128;
        }
        bb = bb * bb % m128;
        e >>= 1;
    }
    b = r as u64;
    b
}

/// Square root of a quadratic residue modulo an odd prime (Tonelli–Shanks).
pub fn sqrt_mod_prime(a: u64, p: u64) -> Option<u64> {
    let a = a % p;
    if a == 0 {
        return Some(0);
    }
    if pow_mod(a, (p - 1) / 2, p) != 1 {
        return None;
    }
    let mut s = 0;
    let mut qq = p - 1;
    while qq.is_multiple_of(2) {
        qq /= 2;
        s += 1;
    }
    let mut z = 2;
    while pow_mod(z, (p - 1) / 2, p) != p - 1 {
        z += 1;
    }
    let mut m = s;
    let mut c = pow_mod(z, qq, p);
    let mut t = pow_mod(a, qq, p);
    let mut r = pow_mod(a, qq.div_ceil(2), p);
    while t != 1 {
        let mut i = 0;
        let mut tt = t;
        while tt != 1 {
            tt = (tt as u128 * tt as u128 % p as u128) as u64;
            i += 1;
        }
        let b = pow_mod(c, 1 << (m - i - 1), p);
        m = i;
        c = (b as u128 * b as u128 % p as u128) as u64;
        t = (t as u128 * c as u128 % p as u128) as u64;
        r = (r as u128 * b as u128 % p as u128) as u64;
    }
    Some(r)
}

/// The imaginary quadratic field `Q(sqrt(-q))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ImagQuadField {
    q: u64,
}

impl ImagQuadField {
    pub fn new(q: u64) -> Result<Self> {
        if !is_prime(q) {
            return Err(Error::UnsupportedField(q, "q is not prime".into()));
        }
        if q % 8 != 7 {
            return Err(Error::UnsupportedField(q, "q is not 7 mod 8, so 2 does not split".into()));
        }
        Ok(ImagQuadField { q })
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn discriminant(&self) -> i64 {
        -(self.q as i64)
    }

    /// `(1+q)/4`, the constant term of the minimal polynomial of `ω`.
    pub fn omega_norm(&self) -> i64 {
        (1 + self.q as i64) / 4
    }

    pub fn element(&self, a: i64, b: i64) -> KElement {
        KElement::new(self.q, a, b)
    }

    pub fn omega(&self) -> KElement {
        self.element(0, 1)
    }

    /// `sqrt(-q) = 2ω - 1`.
    pub fn sqrt_minus_q(&self) -> KElement {
        self.element(-1, 2)
    }

    pub fn unit_ideal(&self) -> KIdeal {
        KIdeal { q: self.q, c: 1, n: 1, m: 0 }
    }

    /// The ramified prime `sqrt(-q)·O_K`.
    pub fn conductor_prime(&self) -> KIdeal {
        KIdeal::primitive(self.q, self.q as i64, (self.q as i64 - 1) / 2)
    }

    /// Primes of `K` above the rational prime `ell`, with residue degrees.
    pub fn primes_above(&self, ell: u64) -> Vec<(KIdeal, u32)> {
        let q = self.q as i64;
        let w = self.omega_norm();
        if ell == self.q {
            return vec![(self.conductor_prime(), 1)];
        }
        if ell == 2 {
            // m² + m + (1+q)/4 ≡ 0 mod 2 for both m = 0, 1
            return vec![(KIdeal::primitive(self.q, 2, 0), 1), (KIdeal::primitive(self.q, 2, 1), 1)];
        }
        let l = ell as i64;
        match kronecker_minus_q(self.q, ell) {
            -1 => vec![(KIdeal { q: self.q, c: l, n: 1, m: 0 }, 2)],
            _ => {
                // m = (-1 ± s)/2 mod ℓ with s² ≡ -q
                let s = sqrt_mod_prime((-q).rem_euclid(l) as u64, ell).expect("split prime has a root") as i64;
                let inv2 = (l + 1) / 2;
                let m1 = ((-1 + s) * inv2).rem_euclid(l);
                let m2 = ((-1 - s) * inv2).rem_euclid(l);
                debug_assert_eq!((m1 * m1 + m1 + w).rem_euclid(l), 0);
                let mut v = vec![(KIdeal::primitive(self.q, l, m1), 1), (KIdeal::primitive(self.q, l, m2), 1)];
                v.sort_by_key(|(i, _)| i.m);
                v
            }
        }
    }

    /// Every integral ideal of norm at most `x`, sorted by (norm, HNF).
    pub fn ideals_of_norm_up_to(&self, x: u64) -> Vec<(u64, KIdeal)> {
        let mut out = vec![(1u64, self.unit_ideal())];
        for ell in primes_up_to(x) {
            let primes = self.primes_above(ell);
            let mut local: Vec<(u64, KIdeal)> = Vec::new();
            match primes.as_slice() {
                [(p, 1), (ps, 1)] => {
                    let mut e = 1u32;
                    while ell.checked_pow(e).is_some_and(|v| v <= x) {
                        for a in 0..=e {
                            let ideal = p.pow(a).mul(&ps.pow(e - a));
                            local.push((ell.pow(e), ideal));
                        }
                        e += 1;
                    }
                }
                [(p, f)] => {
                    let nrm = ell.pow(*f);
                    let mut e = 1u32;
                    while nrm.checked_pow(e).is_some_and(|v| v <= x) {
                        local.push((nrm.pow(e), p.pow(e)));
                        e += 1;
                    }
                }
                _ => unreachable!("at most two primes above a rational prime"),
            }
            if local.is_empty() {
                continue;
            }
            let mut extra = Vec::new();
            for (n0, i0) in &out {
                for (n1, i1) in &local {
                    if n0 * n1 <= x {
                        extra.push((n0 * n1, i0.mul(i1)));
                    }
                }
            }
            out.extend(extra);
        }
        out.sort_by_key(|a| (a.0, a.1.c, a.1.n, a.1.m));
        out
    }
}

/// The fixed embedding `sqrt(-q) ↦ i·sqrt(q)` at a given precision.
#[derive(Debug, Clone)]
pub struct ComplexEmbedding {
    q: u64,
    half_sqrt_q: BigReal,
    prec: usize,
}

impl ComplexEmbedding {
    pub fn new(q: u64, prec: usize) -> Self {
        let half_sqrt_q = BigReal::from_i64(q as i64, prec + 32).sqrt().mul_pow2(-1).with_precision(prec + 16);
        ComplexEmbedding { q, half_sqrt_q, prec }
    }

    pub fn precision(&self) -> usize {
        self.prec
    }

    pub fn embed(&self, x: &KElement) -> BigComplex {
        debug_assert_eq!(x.q, self.q);
        let p = self.prec + 16;
        let b = BigReal::from_rational(&x.b, p);
        let re = BigReal::from_rational(&x.a, p) + b.mul_pow2(-1);
        let im = b * &self.half_sqrt_q;
        BigComplex::new(re.with_precision(self.prec), im.with_precision(self.prec))
    }
}

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Element `a + b·ω` of `K` with rational coordinates.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct KElement {
    q: u64,
    pub a: BigRational,
    pub b: BigRational,
}

impl KElement {
    pub fn new(q: u64, a: i64, b: i64) -> Self {
        KElement { q, a: rat(a), b: rat(b) }
    }

    pub fn from_rationals(q: u64, a: BigRational, b: BigRational) -> Self {
        KElement { q, a, b }
    }

    pub fn zero(q: u64) -> Self {
        Self::new(q, 0, 0)
    }

    pub fn one(q: u64) -> Self {
        Self::new(q, 1, 0)
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn is_integral(&self) -> bool {
        self.a.is_integer() && self.b.is_integer()
    }

    /// Integer coordinates, if integral and small.
    pub fn int_coords(&self) -> Option<(i64, i64)> {
        if !self.is_integral() {
            return None;
        }
        Some((self.a.to_integer().to_i64()?, self.b.to_integer().to_i64()?))
    }

    pub fn conj(&self) -> Self {
        // ω̄ = 1 - ω
        KElement { q: self.q, a: &self.a + &self.b, b: -&self.b }
    }

    pub fn norm(&self) -> BigRational {
        let w = rat((1 + self.q as i64) / 4);
        &self.a * &self.a + &self.a * &self.b + &self.b * &self.b * w
    }

    pub fn trace(&self) -> BigRational {
        &self.a * rat(2) + &self.b
    }

    pub fn inv(&self) -> Self {
        let n = self.norm();
        assert!(!n.is_zero(), "inverse of zero in K");
        let c = self.conj();
        KElement { q: self.q, a: c.a / &n, b: c.b / n }
    }

    pub fn scale(&self, r: &BigRational) -> Self {
        KElement { q: self.q, a: &self.a * r, b: &self.b * r }
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = KElement::one(self.q);
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// Least common denominator of the two coordinates.
    pub fn denominator(&self) -> BigInt {
        self.a.denom().lcm(self.b.denom())
    }

    /// Complex value under the fixed embedding `sqrt(-q) ↦ +i·sqrt(q)`.
    pub fn to_complex(&self, prec: usize) -> BigComplex {
        ComplexEmbedding::new(self.q, prec).embed(self)
    }

    /// Canonical sign: first nonzero coordinate positive.
    pub fn canonical_sign(self) -> Self {
        if self.a.is_negative() || (self.a.is_zero() && self.b.is_negative()) {
            -self
        } else {
            self
        }
    }

    /// Residue of an integral element in `O_K / sqrt(-q) ≅ Z/q` (`ω ↦ 1/2`).
    /// Elements with denominators prime to `q` are reduced as well.
    pub fn residue_mod_sqrt_minus_q(&self) -> u64 {
        let q = BigInt::from(self.q);
        let half = BigInt::from(self.q.div_ceil(2));
        let num = |r: &BigRational| -> BigInt {
            let d = r.denom().mod_floor(&q);
            let dinv = mod_inverse(&d, &q).expect("denominator prime to q");
            (r.numer() * dinv).mod_floor(&q)
        };
        let v = (num(&self.a) + num(&self.b) * half).mod_floor(&q);
        v.to_u64().expect("small residue")
    }
}

pub fn mod_inverse(a: &BigInt, m: &BigInt) -> Option<BigInt> {
    let g = a.extended_gcd(m);
    if !g.gcd.is_one() {
        return None;
    }
    Some(g.x.mod_floor(m))
}

impl fmt::Debug for KElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} + {}ω)", self.a, self.b)
    }
}

impl fmt::Display for KElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + {}*w", self.a, self.b)
    }
}

impl Add<&KElement> for &KElement {
    type Output = KElement;
    fn add(self, rhs: &KElement) -> KElement {
        KElement { q: self.q, a: &self.a + &rhs.a, b: &self.b + &rhs.b }
    }
}

impl Sub<&KElement> for &KElement {
    type Output = KElement;
    fn sub(self, rhs: &KElement) -> KElement {
        KElement { q: self.q, a: &self.a - &rhs.a, b: &self.b - &rhs.b }
    }
}

impl Mul<&KElement> for &KElement {
    type Output = KElement;
    fn mul(self, rhs: &KElement) -> KElement {
        debug_assert_eq!(self.q, rhs.q);
        let w = rat((1 + self.q as i64) / 4);
        let bd = &self.b * &rhs.b;
        KElement { q: self.q, a: &self.a * &rhs.a - &bd * w, b: &self.a * &rhs.b + &self.b * &rhs.a + bd }
    }
}

impl Div<&KElement> for &KElement {
    type Output = KElement;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: &KElement) -> KElement {
        self * &rhs.inv()
    }
}

impl Neg for KElement {
    type Output = KElement;
    fn neg(self) -> KElement {
        KElement { q: self.q, a: -self.a, b: -self.b }
    }
}

impl Add for KElement {
    type Output = KElement;
    fn add(self, rhs: KElement) -> KElement {
        &self + &rhs
    }
}

impl Sub for KElement {
    type Output = KElement;
    fn sub(self, rhs: KElement) -> KElement {
        &self - &rhs
    }
}

impl Mul for KElement {
    type Output = KElement;
    fn mul(self, rhs: KElement) -> KElement {
        &self * &rhs
    }
}

/// Norm of the integral element `x + y·ω`.
fn int_norm(q: u64, x: i64, y: i64) -> i128 {
    let w = (1 + q as i128) / 4;
    let (x, y) = (x as i128, y as i128);
    x * x + x * y + y * y * w
}

/// Integral ideal `c·(Z·n + Z·(m + ω))` in Hermite normal form.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct KIdeal {
    q: u64,
    pub c: i64,
    pub n: i64,
    pub m: i64,
}

impl fmt::Debug for KIdeal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.c == 1 {
            write!(f, "[{}, {}+ω]", self.n, self.m)
        } else {
            write!(f, "{}·[{}, {}+ω]", self.c, self.n, self.m)
        }
    }
}

impl KIdeal {
    fn primitive(q: u64, n: i64, m: i64) -> Self {
        let ideal = KIdeal { q, c: 1, n, m: m.rem_euclid(n) };
        debug_assert_eq!(int_norm(q, ideal.m, 1) % n as i128, 0);
        ideal
    }

    /// Ideal generated (as a Z-module) by the integral elements `(x, y) ↦ x + yω`;
    /// the caller guarantees the module is an ideal.
    pub fn from_z_generators(q: u64, gens: &[(i64, i64)]) -> Self {
        let mut rows: Vec<(i128, i128)> = gens.iter().map(|&(x, y)| (x as i128, y as i128)).collect();
        // Euclid on the ω-coordinates
        let mut pivot: Option<(i128, i128)> = None;
        let mut pure: i128 = 0;
        for r in rows.drain(..) {
            let mut r = r;
            if let Some(mut p) = pivot {
                while r.1 != 0 {
                    let k = p.1.div_euclid(r.1);
                    p = (p.0 - k * r.0, p.1 - k * r.1);
                    std::mem::swap(&mut p, &mut r);
                }
                pure = pure.gcd(&r.0);
                pivot = Some(p);
            } else if r.1 != 0 {
                pivot = Some(r);
            } else {
                pure = pure.gcd(&r.0);
            }
        }
        let (mut mx, mut g) = pivot.expect("rank-2 module");
        if g < 0 {
            g = -g;
            mx = -mx;
        }
        let n1 = pure.abs();
        assert!(n1 > 0, "module is not of full rank");
        let mx = mx.rem_euclid(n1);
        assert!(n1 % g == 0 && mx % g == 0, "module is not an ideal");
        KIdeal::primitive(q, (n1 / g) as i64, (mx / g) as i64).scaled(g as i64)
    }

    fn scaled(mut self, c: i64) -> Self {
        self.c *= c;
        self
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn norm(&self) -> u64 {
        (self.c * self.c * self.n) as u64
    }

    pub fn is_unit(&self) -> bool {
        self.c == 1 && self.n == 1
    }

    /// Z-basis `(c·n, c·(m + ω))` as integer coordinate pairs.
    pub fn basis(&self) -> [(i64, i64); 2] {
        [(self.c * self.n, 0), (self.c * self.m, self.c)]
    }

    pub fn contains(&self, x: &KElement) -> bool {
        let Some((a, b)) = x.int_coords() else { return false };
        if b % self.c != 0 {
            return false;
        }
        let k = b / self.c;
        let rest = a - k * self.c * self.m;
        rest % (self.c * self.n) == 0
    }

    pub fn mul(&self, other: &KIdeal) -> KIdeal {
        let w = (1 + self.q as i64) / 4;
        let mut gens = Vec::with_capacity(4);
        for &(x1, y1) in &self.basis_primitive() {
            for &(x2, y2) in &other.basis_primitive() {
                // (x1 + y1ω)(x2 + y2ω), ω² = ω - w
                gens.push((x1 * x2 - y1 * y2 * w, x1 * y2 + y1 * x2 + y1 * y2));
            }
        }
        KIdeal::from_z_generators(self.q, &gens).scaled(self.c * other.c)
    }

    fn basis_primitive(&self) -> [(i64, i64); 2] {
        [(self.n, 0), (self.m, 1)]
    }

    pub fn pow(&self, e: u32) -> KIdeal {
        let mut acc = KIdeal { q: self.q, c: 1, n: 1, m: 0 };
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    pub fn conj(&self) -> KIdeal {
        // m + ω̄ = (m + 1) - ω
        KIdeal::from_z_generators(self.q, &[(self.n, 0), (self.m + 1, -1)]).scaled(self.c)
    }

    pub fn principal(x: &KElement) -> KIdeal {
        let (a, b) = x.int_coords().expect("integral generator");
        let w = (1 + x.q as i64) / 4;
        // x and x·ω
        KIdeal::from_z_generators(x.q, &[(a, b), (-b * w, a + b)])
    }

    /// Rational integer `r·O_K`.
    pub fn rational(q: u64, r: i64) -> KIdeal {
        KIdeal { q, c: r.abs(), n: 1, m: 0 }
    }

    pub fn is_coprime_to(&self, n: u64) -> bool {
        self.norm().gcd(&n) == 1
    }

    /// Primitive form `(n, -(2m+1), C)` attached to the ideal (content dropped).
    pub fn to_form(&self) -> QuadForm {
        let a = self.n;
        let b = -(2 * self.m + 1);
        let c = (b as i128 * b as i128 + self.q as i128) / (4 * a as i128);
        QuadForm { a, b, c: c as i64 }
    }

    /// Gauss-reduced shortest element; the ideal is principal iff its norm
    /// equals the ideal norm.
    pub fn shortest_vector(&self) -> (i64, i64) {
        let q = self.q;
        let [mut u, mut v] = self.basis();
        let nrm = |p: (i64, i64)| int_norm(q, p.0, p.1);
        loop {
            if nrm(v) < nrm(u) {
                std::mem::swap(&mut u, &mut v);
            }
            let nu = nrm(u);
            let two_b = nrm((u.0 + v.0, u.1 + v.1)) - nu - nrm(v);
            // μ = round(B(u,v)/N(u)) = round(2B / 2N(u))
            let mu = div_round(two_b, 2 * nu);
            if mu == 0 {
                break;
            }
            v = (v.0 - mu as i64 * u.0, v.1 - mu as i64 * u.1);
        }
        if nrm(v) < nrm(u) {
            u = v;
        }
        u
    }

    pub fn principal_generator(&self) -> Result<KElement> {
        let (x, y) = self.shortest_vector();
        if int_norm(self.q, x, y) as u64 == self.norm() {
            Ok(KElement::new(self.q, x, y).canonical_sign())
        } else {
            Err(Error::NotPrincipal)
        }
    }
}

fn div_round(a: i128, b: i128) -> i128 {
    // nearest integer to a/b for b > 0
    (2 * a + b).div_euclid(2 * b)
}

/// Primitive positive definite form `a x² + b xy + c y²` of discriminant `-q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QuadForm {
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

impl QuadForm {
    pub fn discriminant(&self) -> i64 {
        self.b * self.b - 4 * self.a * self.c
    }

    pub fn is_reduced(&self) -> bool {
        self.b.abs() <= self.a && self.a <= self.c && !((self.b.abs() == self.a || self.a == self.c) && self.b < 0)
    }

    fn normalize(&self) -> QuadForm {
        let (a, b) = (self.a as i128, self.b as i128);
        let k = (a - b).div_euclid(2 * a);
        let b2 = b + 2 * k * a;
        let d = self.discriminant() as i128;
        let c2 = (b2 * b2 - d) / (4 * a);
        QuadForm { a: self.a, b: b2 as i64, c: c2 as i64 }
    }

    pub fn reduce(&self) -> QuadForm {
        let mut f = self.normalize();
        while f.a > f.c {
            f = QuadForm { a: f.c, b: -f.b, c: f.a }.normalize();
        }
        if f.a == f.c && f.b < 0 {
            f.b = -f.b;
        }
        f
    }

    /// Ideal `Z·a + Z·(-b + sqrt(-q))/2`.
    pub fn to_ideal(&self, q: u64) -> KIdeal {
        KIdeal::primitive(q, self.a, (-self.b - 1).div_euclid(2))
    }
}

/// Cyclic ideal class group of `K` with a fixed generator.
#[derive(Debug, Clone)]
pub struct ClassGroup {
    field: ImagQuadField,
    forms: Vec<QuadForm>,
    generator: QuadForm,
    dlog: HashMap<QuadForm, u32>,
}

impl ClassGroup {
    pub fn new(field: ImagQuadField) -> Result<Self> {
        let forms = reduced_forms(field.q());
        let h = forms.len() as u32;
        let q = field.q();
        let compose = |f: &QuadForm, g: &QuadForm| f.to_ideal(q).mul(&g.to_ideal(q)).to_form().reduce();
        let identity = forms[0];
        debug_assert_eq!(identity.a, 1);
        let mut generator = None;
        // smallest a first, then b > 0 before b < 0
        let mut candidates = forms.clone();
        candidates.sort_by_key(|f| (f.a, -f.b));
        for f in candidates {
            let mut g = f;
            let mut order = 1;
            while g != identity {
                g = compose(&g, &f);
                order += 1;
            }
            if order == h {
                generator = Some(f);
                break;
            }
        }
        let generator = generator.ok_or(Error::NonCyclicClassGroup(q))?;
        let mut dlog = HashMap::new();
        let mut g = identity;
        for j in 0..h {
            dlog.insert(g, j);
            g = compose(&g, &generator);
        }
        Ok(ClassGroup { field, forms, generator, dlog })
    }

    pub fn field(&self) -> ImagQuadField {
        self.field
    }

    pub fn order(&self) -> u32 {
        self.forms.len() as u32
    }

    pub fn reduced_forms(&self) -> &[QuadForm] {
        &self.forms
    }

    pub fn generator_form(&self) -> QuadForm {
        self.generator
    }

    /// Ideal of smallest norm in the generating class (`O_K` when `h = 1`).
    pub fn generator_ideal(&self) -> KIdeal {
        if self.order() == 1 {
            self.field.unit_ideal()
        } else {
            self.generator.to_ideal(self.field.q())
        }
    }

    /// Exponent `j` with `[ideal] = [generator]^j`.
    pub fn reduce_to_class(&self, ideal: &KIdeal) -> u32 {
        self.dlog[&ideal.to_form().reduce()]
    }

    /// Canonical representative of class `j`: the `j`-th power of the generator ideal.
    pub fn class_representative(&self, j: u32) -> KIdeal {
        self.generator_ideal().pow(j % self.order())
    }
}

/// All reduced forms of discriminant `-q`, principal form first.
pub fn reduced_forms(q: u64) -> Vec<QuadForm> {
    let q = q as i64;
    let mut out = Vec::new();
    let mut a = 1;
    while 3 * a * a <= q {
        let mut b = -a + 1;
        while b <= a {
            let num = b * b + q;
            if num % (4 * a) == 0 {
                let f = QuadForm { a, b, c: num / (4 * a) };
                if f.is_reduced() {
                    out.push(f);
                }
            }
            b += 1;
        }
        a += 1;
    }
    out.sort_by_key(|f| (f.a, -f.b));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn field(q: u64) -> ImagQuadField {
        ImagQuadField::new(q).unwrap()
    }

    #[test]
    fn class_numbers() {
        // oracle: direct count of reduced forms with a ≤ sqrt(q/3)
        let count = |q: i64| {
            let mut n = 0;
            for a in 1..=((q / 3) as f64).sqrt() as i64 {
                for b in -a..=a {
                    if (b * b + q) % (4 * a) == 0 {
                        let c = (b * b + q) / (4 * a);
                        if a <= c && !(b < 0 && (-b == a || a == c)) {
                            n += 1;
                        }
                    }
                }
            }
            n
        };
        for (q, h) in [(7, 1), (23, 3), (31, 3), (47, 5), (71, 7)] {
            let g = ClassGroup::new(field(q)).unwrap();
            assert_eq!(g.order(), h, "q = {q}");
            assert_eq!(count(q as i64), h);
        }
    }

    #[test]
    fn field_validation() {
        assert!(ImagQuadField::new(11).is_err());
        assert!(ImagQuadField::new(15).is_err());
        assert!(ImagQuadField::new(103).is_ok());
    }

    #[test]
    fn primes_above_two_and_five() {
        let k = field(7);
        let two = k.primes_above(2);
        assert_eq!(two.len(), 2);
        assert_ne!(two[0].0, two[1].0);
        assert_eq!(two[0].0.mul(&two[1].0), KIdeal::rational(7, 2));
        assert!(two.iter().all(|(p, f)| p.norm() == 2 && *f == 1));
        let five = k.primes_above(5);
        assert_eq!(five, vec![(KIdeal::rational(7, 5), 2)]);
        assert_eq!(five[0].0.norm(), 25);
        let qq = k.primes_above(7);
        assert_eq!(qq[0].0.norm(), 7);
        assert_eq!(qq[0].0.pow(2), KIdeal::rational(7, 7));
        let eleven = k.primes_above(11);
        assert_eq!(eleven.len(), 2);
        assert_eq!(eleven[0].0.mul(&eleven[1].0), KIdeal::rational(7, 11));
    }

    #[test]
    fn principal_generators() {
        let k = field(7);
        let p = KIdeal::primitive(7, 2, 0);
        let g = p.principal_generator().unwrap();
        assert_eq!(g.norm(), rat(2));
        assert!(g == k.omega() || g == k.omega().conj());
        assert_eq!(KIdeal::rational(7, 5).principal_generator().unwrap(), k.element(5, 0));
        let p23 = KIdeal::primitive(23, 2, 0);
        assert_eq!(p23.principal_generator(), Err(Error::NotPrincipal));
        let p8 = p23.pow(3);
        let g = p8.principal_generator().unwrap();
        assert_eq!(g.norm(), rat(8));
        assert_eq!(KIdeal::principal(&g), p8);
    }

    #[test]
    fn classes_compose() {
        let k = field(23);
        let g = ClassGroup::new(k).unwrap();
        assert_eq!(g.reduce_to_class(&k.unit_ideal()), 0);
        for (p, _) in k.primes_above(2) {
            let j = g.reduce_to_class(&p);
            assert!(j == 1 || j == 2);
            assert_eq!(g.reduce_to_class(&p.pow(2)), (2 * j) % 3);
            assert_eq!(g.reduce_to_class(&p.mul(&p.conj())), 0);
        }
        for (j, f) in g.reduced_forms().iter().enumerate() {
            let _ = j;
            let i = f.to_ideal(23);
            assert_eq!(i.to_form().reduce(), *f);
        }
        assert_eq!(g.generator_ideal().norm(), 2);
        assert_eq!(g.reduce_to_class(&g.generator_ideal()), 1);
    }

    #[test]
    fn ideal_enumeration() {
        let k = field(7);
        let one = k.ideals_of_norm_up_to(1);
        assert_eq!(one, vec![(1, k.unit_ideal())]);
        let two = k.ideals_of_norm_up_to(2);
        assert_eq!(two.len(), 3);
        // oracle: number of ideals of norm n equals (number of representations of n by all
        // reduced forms) / |units| summed over classes
        for q in [7u64, 23, 31] {
            let k = field(q);
            let x = 2000u64;
            let ideals = k.ideals_of_norm_up_to(x);
            let mut reps = 0u64;
            for f in reduced_forms(q) {
                // 4a·f(x, y) = (2ax + by)² + q y²
                let s = ((4 * f.a as u64 * x) as f64).sqrt() as i64 + 1;
                let ymax = s / (q as f64).sqrt() as i64 + 1;
                for y in -ymax..=ymax {
                    let lo = (-f.b * y - s).div_euclid(2 * f.a) - 1;
                    let hi = (-f.b * y + s).div_euclid(2 * f.a) + 1;
                    for xx in lo..=hi {
                        let v = f.a * xx * xx + f.b * xx * y + f.c * y * y;
                        if v >= 1 && v as u64 <= x {
                            reps += 1;
                        }
                    }
                }
            }
            assert_eq!(ideals.len() as u64, reps / 2, "q = {q}");
            let mut seen = std::collections::HashSet::new();
            for (n, i) in &ideals {
                assert_eq!(i.norm(), *n);
                assert!(seen.insert(*i));
            }
        }
    }

    #[test]
    fn jacobi_and_sqrt() {
        assert_eq!(jacobi(2, 5), -1);
        assert_eq!(jacobi(-7, 5), -1);
        assert_eq!(jacobi(-7, 29), 1);
        assert_eq!(jacobi(4, 7), 1);
        for p in [3u64, 5, 13, 17, 97, 10007] {
            for a in 1..p.min(200) {
                if let Some(r) = sqrt_mod_prime(a, p) {
                    assert_eq!(r * r % p, a % p);
                    assert_eq!(jacobi(a as i64, p), 1);
                } else {
                    assert_eq!(jacobi(a as i64, p), -1);
                }
            }
        }
    }

    #[test]
    fn residues() {
        let k = field(7);
        // ω ↦ 1/2 ≡ 4 mod 7
        assert_eq!(k.omega().residue_mod_sqrt_minus_q(), 4);
        assert_eq!(k.sqrt_minus_q().residue_mod_sqrt_minus_q(), 0);
        assert_eq!(k.element(3, 0).residue_mod_sqrt_minus_q(), 3);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn ideal_norms_and_classes_are_multiplicative(q in prop::sample::select(vec![7u64, 23, 31, 47]),
                                                       i in 0usize..200, j in 0usize..200) {
            let k = field(q);
            let g = ClassGroup::new(k).unwrap();
            let ideals = k.ideals_of_norm_up_to(300);
            let (a, b) = (&ideals[i % ideals.len()].1, &ideals[j % ideals.len()].1);
            let ab = a.mul(b);
            prop_assert_eq!(ab.norm(), a.norm() * b.norm());
            prop_assert_eq!(g.reduce_to_class(&ab), (g.reduce_to_class(a) + g.reduce_to_class(b)) % g.order());
            prop_assert_eq!(ab, b.mul(a));
        }

        #[test]
        fn element_arithmetic(a in -50i64..50, b in -50i64..50, c in -50i64..50, d in -50i64..50) {
            let x = KElement::new(23, a, b);
            let y = KElement::new(23, c, d);
            prop_assert_eq!((&x * &y).norm(), x.norm() * y.norm());
            if !y.is_zero() {
                prop_assert_eq!(&(&x / &y) * &y, x.clone());
            }
            let z = x.to_complex(128);
            let n = BigReal::from_rational(&x.norm(), 128);
            prop_assert!(BigComplex::from_real(z.norm_sqr()).close_to(&BigComplex::from_real(n), 100));
        }
    }
}
