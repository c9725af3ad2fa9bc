//! Partial L-values as traces of `E1*` over division values.
//!
//! For an ideal `𝔞` prime to `M = R·sqrt(-q)`,
//! `φ_d(𝔞)·M·L_R(φ̄_d, [𝔞], 1) = Σ_β εχ_d(β)·E1*(β/M, 𝔞^{-1})`,
//! the sum running over `(O_K/M)^× / ±1`. Period lattices are taken with unit
//! scale, so every value here is an `L`-value divided by `Ω_∞`.

use rayon::prelude::*;

use crate::eisenstein::{e1star, quasi_periods, EisensteinCtx, Lattice};
use crate::error::{Error, Result};
use crate::hecke::{chi_quadratic, CharacterEmbedding, GrossCharacter};
use crate::induction::validate_twist;
use crate::numerics::{BigComplex, BigReal};
use crate::quadfield::{jacobi, ComplexEmbedding, ImagQuadField, KElement, KIdeal};

const GUARD: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RayConstraint {
    All,
    /// Keep `β` with `χ_{r_i}(β) = +1` for every `r_i | R`.
    FixHR,
}

/// One representative per class of `(O_K/R·sqrt(-q))^× / ±1`.
#[derive(Debug, Clone)]
pub struct RayReps {
    pub q: u64,
    pub r: u64,
    pub primes: Vec<u64>,
    /// `R·sqrt(-q)`.
    pub modulus: KElement,
    pub reps: Vec<KElement>,
    /// `ε(β)`.
    pub eps: Vec<i8>,
    /// Bit `i` set iff `χ_{r_i}(β) = -1`.
    pub chi_mask: Vec<u32>,
}

fn crt(a: i64, m: i64, b: i64, n: i64) -> i64 {
    // x ≡ a mod m, x ≡ b mod n, gcd(m, n) = 1
    let inv = modinv(m.rem_euclid(n), n);
    let t = ((b - a).rem_euclid(n) as i128 * inv as i128).rem_euclid(n as i128) as i64;
    (a + m * t).rem_euclid(m * n)
}

fn modinv(a: i64, n: i64) -> i64 {
    let (mut r0, mut r1, mut s0, mut s1) = (a, n, 1i64, 0i64);
    while r1 != 0 {
        let k = r0 / r1;
        (r0, r1) = (r1, r0 - k * r1);
        (s0, s1) = (s1, s0 - k * s1);
    }
    debug_assert_eq!(r0, 1);
    s0.rem_euclid(n)
}

impl RayReps {
    /// Attaches `ε` and the `χ_{r_i}` signs to a caller-supplied representative list.
    pub fn from_elements(field: &ImagQuadField, r: u64, primes: Vec<u64>, reps: Vec<KElement>) -> Result<Self> {
        let q = field.q();
        let modulus = &field.sqrt_minus_q() * &field.element(r as i64, 0);
        let mut eps = Vec::with_capacity(reps.len());
        let mut chi_mask = Vec::with_capacity(reps.len());
        for b in &reps {
            let res = b.residue_mod_sqrt_minus_q();
            if res == 0 {
                return Err(Error::RamifiedAtConductor);
            }
            eps.push(jacobi(res as i64, q) as i8);
            let n = b.norm().to_integer();
            let mut mask = 0u32;
            for (i, &p) in primes.iter().enumerate() {
                let np: num_bigint::BigInt = &n % num_bigint::BigInt::from(p);
                let v: i64 = np.try_into().expect("small residue");
                match jacobi(v, p) {
                    0 => return Err(Error::NotCoprime(format!("{b:?} and {p}"))),
                    -1 => mask |= 1 << i,
                    _ => {}
                }
            }
            chi_mask.push(mask);
        }
        Ok(RayReps { q, r, primes, modulus, reps, eps, chi_mask })
    }

    pub fn len(&self) -> usize {
        self.reps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reps.is_empty()
    }

    fn d_mask(&self, d: u64) -> u32 {
        self.primes.iter().enumerate().filter(|(_, &p)| d.is_multiple_of(p)).fold(0, |m, (i, _)| m | 1 << i)
    }

    /// `χ_d(β_i)` for `d | R`.
    pub fn chi_d(&self, i: usize, d: u64) -> i32 {
        if (self.chi_mask[i] & self.d_mask(d)).count_ones().is_multiple_of(2) {
            1
        } else {
            -1
        }
    }
}

pub fn ray_representatives(field: &ImagQuadField, r: u64, constraint: RayConstraint) -> Result<RayReps> {
    let fam = validate_twist(field, r)?;
    let q = field.q() as i64;
    // (X, Y, modulus) with X + Yω ≡ a mod sqrt(-q) via Y ≡ 0 mod q
    let mut partial: Vec<(i64, i64, i64)> = (1..=(q - 1) / 2).map(|a| (a, 0, q)).collect();
    for &p in &fam.factors {
        let p = p as i64;
        let mut next = Vec::with_capacity(partial.len() * (p * p - 1) as usize);
        for &(x, y, m) in &partial {
            for xr in 0..p {
                for yr in 0..p {
                    if xr == 0 && yr == 0 {
                        continue;
                    }
                    next.push((crt(x, m, xr, p), crt(y, m, yr, p), m * p));
                }
            }
        }
        partial = next;
    }
    let reps: Vec<KElement> = partial.into_iter().map(|(x, y, _)| field.element(x, y)).collect();
    let all = RayReps::from_elements(field, r, fam.factors.clone(), reps)?;
    Ok(match constraint {
        RayConstraint::All => all,
        RayConstraint::FixHR => {
            let keep: Vec<usize> = (0..all.len()).filter(|&i| all.chi_mask[i] == 0).collect();
            RayReps {
                reps: keep.iter().map(|&i| all.reps[i].clone()).collect(),
                eps: keep.iter().map(|&i| all.eps[i]).collect(),
                chi_mask: vec![0; keep.len()],
                ..all
            }
        }
    })
}

/// Complex lattice of the fractional ideal `𝔞^{-1} = conj(𝔞)/N(𝔞)`.
pub fn inverse_ideal_lattice(ideal: &KIdeal, prec: usize) -> Result<Lattice> {
    let q = ideal.q();
    let nrm = KElement::new(q, ideal.norm() as i64, 0);
    let [b1, b2] = ideal.conj().basis();
    let e1 = &KElement::new(q, b1.0, b1.1) / &nrm;
    let e2 = &KElement::new(q, b2.0, b2.1) / &nrm;
    Lattice::from_k_basis(&e1, &e2, prec)
}

/// `E1*(β/M, 𝔞^{-1})` for every representative, in representative order.
pub fn division_values(reps: &RayReps, ideal: &KIdeal, prec: usize) -> Result<Vec<BigComplex>> {
    if !ideal.is_coprime_to(reps.r * reps.q) {
        return Err(Error::NotCoprime(format!("{ideal:?} and {}", reps.r * reps.q)));
    }
    let lattice = inverse_ideal_lattice(ideal, prec + GUARD)?;
    let ctx = quasi_periods(&lattice, prec)?;
    let emb = ComplexEmbedding::new(reps.q, prec + GUARD);
    let m_inv = KElement::one(reps.q);
    let m_inv = &m_inv / &reps.modulus;
    reps.reps.par_iter().map(|b| e1star(&emb.embed(&(b * &m_inv)), &ctx)).collect()
}

fn ordered_sum(values: impl Iterator<Item = BigComplex>, prec: usize) -> BigComplex {
    values.fold(BigComplex::zero(prec), |acc, v| acc + v)
}

/// Division values for every class representative `𝔞_j = p0^j`, shared by all `d | R`.
#[derive(Debug, Clone)]
pub struct EisensteinTable {
    pub reps: RayReps,
    pub ideals: Vec<KIdeal>,
    pub values: Vec<Vec<BigComplex>>,
    modulus: BigComplex,
    prec: usize,
}

impl EisensteinTable {
    pub fn new(chi: &GrossCharacter, r: u64, prec: usize) -> Result<Self> {
        let field = chi.field();
        let reps = ray_representatives(&field, r, RayConstraint::All)?;
        let group = chi.class_group();
        let ideals: Vec<KIdeal> = (0..chi.h()).map(|j| group.class_representative(j)).collect();
        let values = ideals.iter().map(|a| division_values(&reps, a, prec)).collect::<Result<Vec<_>>>()?;
        let modulus = reps.modulus.to_complex(prec + GUARD);
        Ok(EisensteinTable { reps, ideals, values, modulus, prec })
    }

    /// `L_R(φ̄_d^ι, class j, 1)`.
    pub fn partial(&self, chi: &GrossCharacter, emb: &CharacterEmbedding, d: u64, j: u32) -> Result<BigComplex> {
        if !self.reps.r.is_multiple_of(d) {
            return Err(Error::InvalidInput(format!("d = {d} does not divide R = {}", self.reps.r)));
        }
        let p = self.prec + GUARD;
        let vals = &self.values[j as usize];
        let sum = ordered_sum(
            vals.iter().enumerate().map(|(i, v)| {
                let s = self.reps.eps[i] as i32 * self.reps.chi_d(i, d);
                if s > 0 {
                    v.clone()
                } else {
                    -v
                }
            }),
            p,
        );
        let a = &self.ideals[j as usize];
        let chi_a = chi_quadratic(a, d)?;
        let phi_a = emb.t_power(j).with_precision(p).scale(&BigReal::from_i64(chi_a as i64, p));
        debug_assert_eq!(chi.class_group().reduce_to_class(a), j);
        Ok((sum / (phi_a * &self.modulus)).with_precision(self.prec))
    }

    /// `L_R(φ̄_d^ι, 1)` summed over classes.
    pub fn full(&self, chi: &GrossCharacter, emb: &CharacterEmbedding, d: u64) -> Result<BigComplex> {
        let mut acc = BigComplex::zero(self.prec);
        for j in 0..chi.h() {
            acc = acc + self.partial(chi, emb, d, j)?;
        }
        Ok(acc)
    }
}

/// `L_R(φ̄_d^ι, class j, 1)/Ω` evaluated literally with lattice `Ω·𝔞_j^{-1}/sqrt(d)`
/// and division values `φ_d((β))·ξ_d·Ω/(R·sqrt(-qd))`, where `ξ_d = χ_d(𝔞_j)`.
#[allow(clippy::too_many_arguments)]
pub fn partial_l_eisenstein_scaled(
    chi: &GrossCharacter,
    emb: &CharacterEmbedding,
    d: u64,
    r: u64,
    j: u32,
    omega: &BigComplex,
    prec: usize,
) -> Result<BigComplex> {
    if !r.is_multiple_of(d) {
        return Err(Error::InvalidInput(format!("d = {d} does not divide R = {r}")));
    }
    let field = chi.field();
    let q = field.q();
    let p = prec + GUARD;
    let reps = ray_representatives(&field, r, RayConstraint::All)?;
    let a = chi.class_group().class_representative(j);
    let xi = chi_quadratic(&a, d)?;
    let sqrt_d = BigReal::from_i64(d as i64, p).sqrt();
    let sqrt_qd = BigReal::from_i64((q * d) as i64, p).sqrt();
    // R·sqrt(-qd) = i·R·sqrt(qd)
    let big_m = BigComplex::new(BigReal::zero(p), sqrt_qd * BigReal::from_i64(r as i64, p));
    let omega = omega.with_precision(p);
    let lattice = inverse_ideal_lattice(&a, p)?.scale(&(&omega / &BigComplex::from_real(sqrt_d)));
    let ctx: EisensteinCtx = quasi_periods(&lattice, prec)?;
    let kemb = ComplexEmbedding::new(q, p);
    let shift = &omega.scale(&BigReal::from_i64(xi as i64, p)) / &big_m;
    let terms: Vec<BigComplex> = (0..reps.len())
        .into_par_iter()
        .map(|i| {
            let s = reps.eps[i] as i64 * reps.chi_d(i, d) as i64;
            let phi_beta = kemb.embed(&reps.reps[i]).scale(&BigReal::from_i64(s, p));
            e1star(&(&phi_beta * &shift), &ctx).map(|v| v.with_precision(p))
        })
        .collect::<Result<_>>()?;
    let sum = ordered_sum(terms.into_iter(), p);
    let phi_a = emb.t_power(j).with_precision(p).scale(&BigReal::from_i64(xi as i64, p));
    let pref = BigComplex::from_i64(xi as i64, p) / (phi_a * big_m);
    Ok((pref * sum).with_precision(prec))
}

pub fn partial_l_eisenstein(
    chi: &GrossCharacter,
    emb: &CharacterEmbedding,
    d: u64,
    r: u64,
    j: u32,
    prec: usize,
) -> Result<BigComplex> {
    partial_l_eisenstein_scaled(chi, emb, d, r, j, &BigComplex::one(prec + GUARD), prec)
}

/// `(1/M)·Σ_{β fixing H_R} ε(β)·E1*(β/M, 𝔞^{-1})` for an integral ideal `𝔞`.
pub fn psi_sum(chi: &GrossCharacter, r: u64, ideal: &KIdeal, prec: usize) -> Result<BigComplex> {
    if r <= 1 {
        return Err(Error::InvalidInput("psi_sum needs R > 1".into()));
    }
    let reps = ray_representatives(&chi.field(), r, RayConstraint::FixHR)?;
    let values = division_values(&reps, ideal, prec)?;
    let p = prec + GUARD;
    let sum = ordered_sum(values.into_iter().zip(&reps.eps).map(|(v, &e)| if e > 0 { v } else { -v }), p);
    let m = reps.modulus.to_complex(p);
    Ok((sum / m).with_precision(prec))
}
