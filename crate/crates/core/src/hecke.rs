//! The Grossencharacter `φ` of `K` with values in `T = K[t]/(t^h - c)`,
//! its complex realizations, the quadratic twist characters and the
//! twisted Dirichlet series.
//!
//! On principal ideals `φ((α)) = ε(α)·α`, where `ε` is the quadratic residue
//! symbol modulo `sqrt(-q)`. The generator class `p0` is sent to the formal
//! root `t`, so `t^h = c = ε(π0)·π0` with `(π0) = p0^h`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_rational::BigRational;
use num_traits::ToPrimitive;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics::{BigComplex, BigReal};
use crate::quadfield::{factorize, jacobi, ClassGroup, ComplexEmbedding, ImagQuadField, KElement, KIdeal};

/// The field `T = K[t]/(t^h - c)` in the power basis over `K`.
#[derive(Debug, Clone, PartialEq)]
pub struct TField {
    pub q: u64,
    pub h: u32,
    pub c: KElement,
}

/// Element `κ_0 + κ_1 t + … + κ_{h-1} t^{h-1}` of `T`.
#[derive(Clone, PartialEq)]
pub struct TElement {
    field: Arc<TField>,
    pub coeffs: Vec<KElement>,
}

impl TElement {
    pub fn from_coeffs(field: Arc<TField>, coeffs: Vec<KElement>) -> Self {
        assert_eq!(coeffs.len(), field.h as usize);
        TElement { field, coeffs }
    }

    pub fn zero(field: Arc<TField>) -> Self {
        let coeffs = vec![KElement::zero(field.q); field.h as usize];
        TElement { field, coeffs }
    }

    pub fn from_k(field: Arc<TField>, x: KElement) -> Self {
        let mut e = Self::zero(field);
        e.coeffs[0] = x;
        e
    }

    pub fn one(field: Arc<TField>) -> Self {
        let q = field.q;
        Self::from_k(field, KElement::one(q))
    }

    /// `u·t^j`, with `j` reduced through `t^h = c`.
    pub fn monomial(field: Arc<TField>, u: KElement, j: u32) -> Self {
        let h = field.h;
        let mut u = u;
        for _ in 0..j / h {
            u = &u * &field.c;
        }
        let mut e = Self::zero(field);
        e.coeffs[(j % h) as usize] = u;
        e
    }

    pub fn field(&self) -> &Arc<TField> {
        &self.field
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(KElement::is_zero)
    }

    pub fn is_one(&self) -> bool {
        self.coeffs[0] == KElement::one(self.field.q) && self.coeffs[1..].iter().all(KElement::is_zero)
    }

    pub fn scale_k(&self, x: &KElement) -> Self {
        TElement { field: self.field.clone(), coeffs: self.coeffs.iter().map(|k| k * x).collect() }
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = TElement::one(self.field.clone());
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            e >>= 1;
        }
        acc
    }
}

impl fmt::Debug for TElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.coeffs.iter().enumerate().map(|(j, k)| format!("{k:?}·t^{j}")).collect();
        write!(f, "{}", parts.join(" + "))
    }
}

impl Add<&TElement> for &TElement {
    type Output = TElement;
    fn add(self, rhs: &TElement) -> TElement {
        let coeffs = self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect();
        TElement { field: self.field.clone(), coeffs }
    }
}

impl Sub<&TElement> for &TElement {
    type Output = TElement;
    fn sub(self, rhs: &TElement) -> TElement {
        let coeffs = self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a - b).collect();
        TElement { field: self.field.clone(), coeffs }
    }
}

impl Neg for &TElement {
    type Output = TElement;
    fn neg(self) -> TElement {
        TElement { field: self.field.clone(), coeffs: self.coeffs.iter().map(|a| -a.clone()).collect() }
    }
}

impl Mul<&TElement> for &TElement {
    type Output = TElement;
    fn mul(self, rhs: &TElement) -> TElement {
        let h = self.field.h as usize;
        let q = self.field.q;
        let mut low = vec![KElement::zero(q); h];
        let mut high = vec![KElement::zero(q); h];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                let p = a * b;
                if i + j < h {
                    low[i + j] = &low[i + j] + &p;
                } else {
                    high[i + j - h] = &high[i + j - h] + &p;
                }
            }
        }
        for (l, hi) in low.iter_mut().zip(high) {
            if !hi.is_zero() {
                *l = &*l + &(&hi * &self.field.c);
            }
        }
        TElement { field: self.field.clone(), coeffs: low }
    }
}

/// Exact character value `u·t^j`.
#[derive(Debug, Clone, PartialEq)]
pub struct CharValue {
    pub j: u32,
    pub u: KElement,
}

impl CharValue {
    pub fn to_t(&self, field: &Arc<TField>) -> TElement {
        TElement::monomial(field.clone(), self.u.clone(), self.j)
    }
}

/// The Gross character together with its class-group data.
#[derive(Debug, Clone)]
pub struct GrossCharacter {
    field: ImagQuadField,
    group: ClassGroup,
    p0: KIdeal,
    pi0: KElement,
    c: KElement,
    t_field: Arc<TField>,
    residue_sign: Vec<i8>,
}

impl GrossCharacter {
    pub fn new(group: &ClassGroup) -> Result<Self> {
        let field = group.field();
        let q = field.q();
        let h = group.order();
        let p0 = group.generator_ideal();
        let pi0 = p0.pow(h).principal_generator()?;
        let mut residue_sign = vec![0i8; q as usize];
        for (r, s) in residue_sign.iter_mut().enumerate().skip(1) {
            *s = jacobi(r as i64, q) as i8;
        }
        let mut chi = GrossCharacter {
            field,
            group: group.clone(),
            p0,
            pi0: pi0.clone(),
            c: KElement::one(q),
            t_field: Arc::new(TField { q, h, c: KElement::one(q) }),
            residue_sign,
        };
        let c = pi0.scale(&BigRational::from_integer(chi.epsilon(&pi0)?.into()));
        chi.c = c.clone();
        chi.t_field = Arc::new(TField { q, h, c });
        Ok(chi)
    }

    pub fn field(&self) -> ImagQuadField {
        self.field
    }

    pub fn class_group(&self) -> &ClassGroup {
        &self.group
    }

    pub fn h(&self) -> u32 {
        self.group.order()
    }

    pub fn p0(&self) -> KIdeal {
        self.p0
    }

    pub fn pi0(&self) -> &KElement {
        &self.pi0
    }

    /// `c = ε(π0)·π0 = t^h`.
    pub fn c(&self) -> &KElement {
        &self.c
    }

    pub fn t_field(&self) -> &Arc<TField> {
        &self.t_field
    }

    /// Quadratic residue symbol of `α` modulo `sqrt(-q)`.
    pub fn epsilon(&self, alpha: &KElement) -> Result<i32> {
        let r = alpha.residue_mod_sqrt_minus_q();
        match self.residue_sign[r as usize] {
            0 => Err(Error::RamifiedAtConductor),
            s => Ok(s as i32),
        }
    }

    /// `φ((α)) = ε(α)·α`.
    pub fn principal_value(&self, alpha: &KElement) -> Result<KElement> {
        Ok(alpha.scale(&BigRational::from_integer(self.epsilon(alpha)?.into())))
    }

    pub fn char_value(&self, b: &KIdeal) -> Result<CharValue> {
        if b.norm().is_multiple_of(self.field.q()) {
            return Err(Error::RamifiedAtConductor);
        }
        let h = self.h();
        let j = self.group.reduce_to_class(b);
        if j == 0 {
            let beta = b.principal_generator()?;
            return Ok(CharValue { j: 0, u: self.principal_value(&beta)? });
        }
        // b·p0^{h-j} = (β′), so φ(b) = ε(β′)β′·t^{j-h}
        let beta = b.mul(&self.p0.pow(h - j)).principal_generator()?;
        let u = &self.principal_value(&beta)? / &self.c;
        Ok(CharValue { j, u })
    }

    pub fn value_t(&self, b: &KIdeal) -> Result<TElement> {
        Ok(self.char_value(b)?.to_t(&self.t_field))
    }

    /// The `h` complex realizations of `T`, in the order `t_ι = t_0·e^{2πiι/h}`.
    pub fn embeddings(&self, prec: usize) -> Vec<CharacterEmbedding> {
        let h = self.h();
        let p = prec + 32;
        let cz = self.c.to_complex(p);
        let t0 = if h == 1 {
            cz
        } else {
            let lg = cz.ln().scale(&BigReal::from_ratio(1, h as i64, p));
            lg.exp().expect("bounded exponent")
        };
        (0..h)
            .map(|iota| {
                let zeta = BigComplex::unit(&BigReal::from_ratio(iota as i64, h as i64, p));
                let t = (&t0 * &zeta).with_precision(prec);
                CharacterEmbedding::new(self.field, iota, t, h, prec)
            })
            .collect()
    }
}

/// `ι: T → C` extending the fixed embedding `sqrt(-q) ↦ i·sqrt(q)`.
#[derive(Debug, Clone)]
pub struct CharacterEmbedding {
    pub iota: u32,
    pub t_iota: BigComplex,
    t_powers: Vec<BigComplex>,
    k_embedding: ComplexEmbedding,
    prec: usize,
}

impl CharacterEmbedding {
    fn new(field: ImagQuadField, iota: u32, t_iota: BigComplex, h: u32, prec: usize) -> Self {
        let mut t_powers = vec![BigComplex::one(prec)];
        for _ in 1..h {
            let next = t_powers.last().unwrap() * &t_iota;
            t_powers.push(next);
        }
        let k_embedding = ComplexEmbedding::new(field.q(), prec);
        CharacterEmbedding { iota, t_iota, t_powers, k_embedding, prec }
    }

    pub fn precision(&self) -> usize {
        self.prec
    }

    pub fn embed_k(&self, x: &KElement) -> BigComplex {
        self.k_embedding.embed(x)
    }

    pub fn embed_t(&self, x: &TElement) -> BigComplex {
        let mut acc = BigComplex::zero(self.prec);
        for (k, tp) in x.coeffs.iter().zip(&self.t_powers) {
            if !k.is_zero() {
                acc = acc + self.embed_k(k) * tp;
            }
        }
        acc
    }

    pub fn embed_value(&self, v: &CharValue) -> BigComplex {
        let h = self.t_powers.len() as u32;
        let mut z = self.embed_k(&v.u) * &self.t_powers[(v.j % h) as usize];
        for _ in 0..v.j / h {
            z = z * self.t_powers.last().unwrap() * &self.t_iota;
        }
        z
    }

    /// `t_ι^j`.
    pub fn t_power(&self, j: u32) -> BigComplex {
        let h = self.t_powers.len() as u32;
        self.t_iota.powi((j / h * h) as u64) * &self.t_powers[(j % h) as usize]
    }
}

/// `χ_d(b)`: the quadratic character of `K(sqrt(d))/K`, computed as `(N b | d)`.
pub fn chi_quadratic(b: &KIdeal, d: u64) -> Result<i32> {
    if d == 1 {
        return Ok(1);
    }
    let n = b.norm();
    if num_integer::gcd(n, d) != 1 {
        return Err(Error::NotCoprime(format!("N(b) = {n}, d = {d}")));
    }
    Ok(jacobi((n % d) as i64, d))
}

/// `χ_d` on an integral element, through its norm.
pub fn chi_quadratic_element(x: &KElement, d: u64) -> i32 {
    if d == 1 {
        return 1;
    }
    let n = x.norm().to_integer() % num_bigint::BigInt::from(d);
    jacobi(n.to_i64().unwrap(), d)
}

/// Exact Dirichlet coefficients `S_n = Σ_{N b = n} χ_d(b)·φ(b)` in `T`.
#[derive(Debug, Clone)]
pub struct ExactSeries {
    pub d: u64,
    /// Euler factors at primes of this integer removed (1 for the primitive series).
    pub imprimitive_at: u64,
    /// `coeffs[n]` for `0 ≤ n ≤ N`; index 0 unused.
    pub coeffs: Vec<TElement>,
}

impl ExactSeries {
    pub fn len(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Builds `S_n` for `n ≤ len` by a multiplicative sieve over prime powers.
#[allow(clippy::needless_range_loop)]
pub fn twisted_series_exact(chi: &GrossCharacter, d: u64, imprimitive_at: u64, len: usize) -> Result<ExactSeries> {
    let k = chi.field();
    let q = k.q();
    let tf = chi.t_field().clone();
    let zero = TElement::zero(tf.clone());
    let mut spf = vec![0u32; len + 1];
    for i in 2..=len {
        if spf[i] == 0 {
            let mut j = i;
            while j <= len {
                if spf[j] == 0 {
                    spf[j] = i as u32;
                }
                j += i;
            }
        }
    }
    let excluded = |p: u64| p == q || d.is_multiple_of(p) || (imprimitive_at > 0 && imprimitive_at.is_multiple_of(p));
    // prime-power values, keyed by n = p^e
    let mut local: Vec<Option<TElement>> = vec![None; len + 1];
    for p in 2..=len {
        if spf[p] as usize != p {
            continue;
        }
        let pu = p as u64;
        if excluded(pu) {
            let mut pe = p;
            while pe <= len {
                local[pe] = Some(zero.clone());
                pe = match pe.checked_mul(p) {
                    Some(v) => v,
                    None => break,
                };
            }
            continue;
        }
        let primes = k.primes_above(pu);
        match primes.as_slice() {
            [(pp, 1), (ps, 1)] => {
                let v1 = chi.value_t(pp)?.scale_k(&sign(q, chi_quadratic(pp, d)?));
                let v2 = chi.value_t(ps)?.scale_k(&sign(q, chi_quadratic(ps, d)?));
                // S_{p^e} = Σ_{a+b=e} v1^a v2^b, via S_e = v1^e + v2·S_{e-1}
                let mut pe = p;
                let mut prev = TElement::one(tf.clone());
                let mut v1e = TElement::one(tf.clone());
                while pe <= len {
                    v1e = &v1e * &v1;
                    let cur = &v1e + &(&v2 * &prev);
                    local[pe] = Some(cur.clone());
                    prev = cur;
                    pe = match pe.checked_mul(p) {
                        Some(v) => v,
                        None => break,
                    };
                }
            }
            [(pr, 2)] => {
                let v = chi.value_t(pr)?.scale_k(&sign(q, chi_quadratic(pr, d)?));
                let mut pe = p;
                let mut e = 1u32;
                let mut acc = TElement::one(tf.clone());
                while pe <= len {
                    local[pe] = Some(if e.is_multiple_of(2) {
                        acc = &acc * &v;
                        acc.clone()
                    } else {
                        zero.clone()
                    });
                    e += 1;
                    pe = match pe.checked_mul(p) {
                        Some(v) => v,
                        None => break,
                    };
                }
            }
            _ => unreachable!("unramified prime"),
        }
    }
    let mut coeffs: Vec<TElement> = Vec::with_capacity(len + 1);
    coeffs.push(zero.clone());
    if len >= 1 {
        coeffs.push(TElement::one(tf.clone()));
    }
    for n in 2..=len {
        let p = spf[n] as usize;
        let mut pe = p;
        while (n / pe).is_multiple_of(p) {
            pe *= p;
        }
        let rest = n / pe;
        let lp = local[pe].as_ref().expect("prime power filled");
        let v = if rest == 1 {
            lp.clone()
        } else if lp.is_zero() || coeffs[rest].is_zero() {
            zero.clone()
        } else {
            lp * &coeffs[rest]
        };
        coeffs.push(v);
    }
    Ok(ExactSeries { d, imprimitive_at, coeffs })
}

fn sign(q: u64, s: i32) -> KElement {
    KElement::new(q, s as i64, 0)
}

/// Complex Dirichlet coefficients `a_n = conj(ι(S_n))` of `L(φ̄_d^ι, s)`.
#[derive(Debug, Clone)]
pub struct CoefficientSeries {
    pub q: u64,
    pub iota: u32,
    pub d: u64,
    pub imprimitive_at: u64,
    /// Norm of the conductor `d·sqrt(-q)`, i.e. `d²q`.
    pub conductor_norm: u64,
    /// `coeffs[n]`, index 0 unused.
    pub coeffs: Vec<BigComplex>,
}

impl CoefficientSeries {
    pub fn len(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn embed_series(series: &ExactSeries, emb: &CharacterEmbedding) -> CoefficientSeries {
    let q = series.coeffs[0].field().q;
    let coeffs: Vec<BigComplex> = series
        .coeffs
        .par_iter()
        .map(|s| if s.is_zero() { BigComplex::zero(emb.precision()) } else { emb.embed_t(s).conj() })
        .collect();
    CoefficientSeries {
        q,
        iota: emb.iota,
        d: series.d,
        imprimitive_at: series.imprimitive_at,
        conductor_norm: series.d * series.d * q,
        coeffs,
    }
}

/// Twisted coefficients of `L(φ̄_d^ι, s)`; with `imprimitive` set, the Euler
/// factors at primes dividing `r` are removed as well.
pub fn twisted_coefficients(
    chi: &GrossCharacter,
    emb: &CharacterEmbedding,
    r: u64,
    d: u64,
    len: usize,
    imprimitive: bool,
) -> Result<CoefficientSeries> {
    if !r.is_multiple_of(d) {
        return Err(Error::InvalidInput(format!("d = {d} does not divide R = {r}")));
    }
    let exact = twisted_series_exact(chi, d, if imprimitive { r } else { 1 }, len)?;
    Ok(embed_series(&exact, emb))
}

/// Squarefree check used by the twist parameters.
pub fn is_squarefree(n: u64) -> bool {
    factorize(n).iter().all(|&(_, e)| e == 1)
}
