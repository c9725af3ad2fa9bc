//! Central values `L(φ̄_d^ι, 1)` by the smoothed approximate functional equation.
//!
//! With `Λ(s) = C^s Γ(s) L(s)` and `Λ(s) = w·Λ̃(2-s)`, for every `δ > 0`
//! `L(1) = Σ a_n/n·e^{-nδ/C} + w·Σ conj(a_n)/n·e^{-n/(δC)}`.
//! Two values of `δ` determine `(L(1), w)`; a third one is a consistency check.

use num_bigint::BigInt;
use num_rational::BigRational;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hecke::{embed_series, twisted_series_exact, CoefficientSeries, GrossCharacter};
use crate::numerics::{BigComplex, BigReal};
use crate::quadfield::factorize;

const GUARD: usize = 32;

/// Smoothing parameters: the solve uses the first two, the third validates.
pub const DELTAS: [(i64, i64); 3] = [(1, 1), (11, 10), (5, 4)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Afe,
    Eisenstein,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AfeParams {
    /// `C = dq/(2π)`.
    pub c: f64,
    pub terms: usize,
    pub deltas: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct LValueResult {
    pub value: BigComplex,
    pub error_bound: BigReal,
    pub root_number: BigComplex,
    pub method: Method,
    pub params: AfeParams,
    /// `|L(1)| at δ = 5/4 minus the solved value|`.
    pub validation_residual: BigReal,
}

/// Smallest `N` with `N·min(δ, 1/δ)/C ≥ P·ln2 + 8` over the three smoothing parameters.
pub fn required_terms(d: u64, q: u64, prec: usize) -> usize {
    let c = (d * q) as f64 / (2.0 * std::f64::consts::PI);
    let min_ratio =
        DELTAS.iter().map(|&(a, b)| (a as f64 / b as f64).min(b as f64 / a as f64)).fold(f64::INFINITY, f64::min);
    (c * ((prec + GUARD) as f64 * std::f64::consts::LN_2 + 8.0) / min_ratio).ceil() as usize + 1
}

/// `Σ_{n ≤ N} c_n/n·r^n` with `r = e^{-x}`, the powers refreshed periodically.
fn weighted_sum(coeffs: &[BigComplex], x: &BigReal, p: usize) -> BigComplex {
    let n_max = coeffs.len() - 1;
    const BLOCK: usize = 512;
    let blocks: Vec<BigComplex> = (0..n_max.div_ceil(BLOCK))
        .into_par_iter()
        .map(|b| {
            let start = b * BLOCK + 1;
            let end = ((b + 1) * BLOCK).min(n_max);
            let step = (-x).exp();
            let mut w = (-(x * &BigReal::from_i64(start as i64, p))).exp();
            let mut acc = BigComplex::zero(p);
            for (n, c) in coeffs.iter().enumerate().take(end + 1).skip(start) {
                if !c.is_zero() {
                    let k = &w / &BigReal::from_i64(n as i64, p);
                    acc = acc + c.scale(&k);
                }
                w = &w * &step;
            }
            acc
        })
        .collect();
    blocks.into_iter().fold(BigComplex::zero(p), |a, b| a + b)
}

pub fn l_value_afe(series: &CoefficientSeries) -> Result<LValueResult> {
    let q = series.q;
    let d = ((series.conductor_norm / q) as f64).sqrt().round() as u64;
    if series.imprimitive_at > 1 && series.imprimitive_at != d {
        return Err(Error::InvalidInput("the functional equation needs the primitive series".into()));
    }
    let p = series.coeffs[1].precision();
    let prec = p.saturating_sub(GUARD).max(64);
    let needed = required_terms(d, q, prec);
    if series.len() < needed {
        return Err(Error::InvalidInput(format!("series has {} terms, {} needed", series.len(), needed)));
    }
    let coeffs = &series.coeffs[..=needed];
    let duals: Vec<BigComplex> = coeffs.iter().map(BigComplex::conj).collect();
    let pi = BigReal::pi(p);
    let c = BigReal::from_i64((d * q) as i64, p) / pi.mul_pow2(1);
    let mut a = Vec::new();
    let mut b = Vec::new();
    for &(num, den) in &DELTAS {
        let delta = BigReal::from_ratio(num, den, p);
        a.push(weighted_sum(coeffs, &(&delta / &c), p));
        b.push(weighted_sum(&duals, &(BigReal::one(p) / (&delta * &c)), p));
    }
    let denom = &b[1] - &b[0];
    if denom.is_zero() {
        return Err(Error::SingularSolve);
    }
    let w = &(&a[0] - &a[1]) / &denom;
    let value = &a[0] + &(&w * &b[0]);
    let check = &a[2] + &(&w * &b[2]);
    let residual = (&check - &value).abs();
    // tail: |a_n|/n ≤ 2 and e^{-Nx}/(1 - e^{-x}) with x ≥ 0.8/C
    let cf = c.to_f64();
    let x = 0.8 / cf;
    let tail_log2 = (-(needed as f64) * x + (2.0 / (1.0 - (-x).exp())).ln()) / std::f64::consts::LN_2;
    let rounding_log2 = (needed as f64).log2() + 4.0 - p as f64;
    let eps = 2f64.powf(tail_log2.max(rounding_log2) + 1.0);
    let amp = 2.0 / denom.abs().to_f64().max(1e-300);
    let analytic = eps * (1.0 + amp * (1.0 + b[0].abs().to_f64()));
    let analytic = BigReal::from_f64(analytic, p);
    let error_bound = if residual > analytic { residual.clone() } else { analytic };
    let limit = BigReal::pow2(-(prec as i64) / 2, p);
    if residual > limit {
        return Err(Error::InconsistentFunctionalEquation(residual.log2_approx()));
    }
    Ok(LValueResult {
        value: value.with_precision(prec),
        error_bound: error_bound.with_precision(prec),
        root_number: w.with_precision(prec),
        method: Method::Afe,
        params: AfeParams { c: cf, terms: needed, deltas: DELTAS.iter().map(|&(a, b)| a as f64 / b as f64).collect() },
        validation_residual: residual.with_precision(prec),
    })
}

/// `L(φ̄_d^ι, 1)` of the primitive series for every embedding `ι`, in embedding order.
pub fn l_values_all_embeddings(chi: &GrossCharacter, d: u64, prec: usize) -> Result<Vec<LValueResult>> {
    let q = chi.field().q();
    let n = required_terms(d, q, prec);
    let exact = twisted_series_exact(chi, d, 1, n)?;
    chi.embeddings(prec + GUARD).iter().map(|emb| l_value_afe(&embed_series(&exact, emb))).collect()
}

/// `∏_{r | R/d} (1 + 1/r)`, the Euler factors at the inert primes removed from `L_R`.
pub fn imprimitivity_factor(d: u64, r: u64) -> Result<BigRational> {
    if !r.is_multiple_of(d) {
        return Err(Error::InvalidInput(format!("d = {d} does not divide R = {r}")));
    }
    let mut f = BigRational::from_integer(BigInt::from(1));
    for (p, _) in factorize(r / d) {
        f *= BigRational::new(BigInt::from(p + 1), BigInt::from(p));
    }
    Ok(f)
}

/// Partial value for class `j` from the full values at all embeddings:
/// `L^ι_j = ζ_h^{-ιj}·(1/h)·Σ_κ ζ_h^{κj}·L^κ`, since `t_ι = t_0·ζ_h^ι`.
pub fn partial_from_embeddings(full: &[BigComplex], j: u32, iota: u32) -> BigComplex {
    let h = full.len() as i64;
    let p = full[0].precision();
    let mut acc = BigComplex::zero(p);
    for (kappa, v) in full.iter().enumerate() {
        let e = (kappa as i64 * j as i64).rem_euclid(h);
        acc = acc + v * &BigComplex::unit(&BigReal::from_ratio(e, h, p));
    }
    let e = (-(iota as i64) * j as i64).rem_euclid(h);
    let zeta = BigComplex::unit(&BigReal::from_ratio(e, h, p));
    (acc * zeta).scale(&BigReal::from_ratio(1, h, p))
}

/// `L_R(φ̄_d^ι, class j, 1)` from the AFE values of the primitive series.
pub fn partial_l_afe(chi: &GrossCharacter, d: u64, r: u64, j: u32, iota: u32, prec: usize) -> Result<BigComplex> {
    let factor = imprimitivity_factor(d, r)?;
    let full: Vec<BigComplex> = l_values_all_embeddings(chi, d, prec)?.into_iter().map(|x| x.value).collect();
    let v = partial_from_embeddings(&full, j, iota);
    Ok(v.scale(&BigReal::from_rational(&factor, prec)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cmpoints::EisensteinTable;
    use crate::quadfield::{ClassGroup, ImagQuadField};

    const P: usize = 128;

    fn character(q: u64) -> GrossCharacter {
        GrossCharacter::new(&ClassGroup::new(ImagQuadField::new(q).unwrap()).unwrap()).unwrap()
    }

    #[test]
    fn imprimitivity() {
        let one = BigRational::from_integer(1.into());
        assert_eq!(imprimitivity_factor(5, 5).unwrap(), one);
        assert_eq!(imprimitivity_factor(1, 5).unwrap(), BigRational::new(6.into(), 5.into()));
        assert_eq!(
            imprimitivity_factor(1, 65).unwrap(),
            BigRational::new(6.into(), 5.into()) * BigRational::new(14.into(), 13.into())
        );
        assert!(imprimitivity_factor(3, 65).is_err());
    }

    #[test]
    fn root_numbers_and_truncation() {
        let chi = character(7);
        for d in [1u64, 5] {
            let res = &l_values_all_embeddings(&chi, d, P).unwrap()[0];
            let one = BigComplex::one(P);
            assert!(res.root_number.close_to(&one, P as i64 / 2), "w = {:?}", res.root_number);
            assert!(res.error_bound < BigReal::pow2(-(P as i64) / 2, P));
            let n = required_terms(d, 7, P);
            let exact = twisted_series_exact(&chi, d, 1, 2 * n).unwrap();
            let emb = &chi.embeddings(P + GUARD)[0];
            let long = embed_series(&exact, emb);
            let mut trimmed = long.clone();
            trimmed.coeffs.truncate(n + 1);
            let a = l_value_afe(&long).unwrap();
            let b = l_value_afe(&trimmed).unwrap();
            assert!((&a.value - &b.value).abs() <= a.error_bound);
        }
    }

    #[test]
    fn wrong_conductor_is_detected() {
        // the series imprimitive at 5 does not satisfy the functional equation of level 7
        let chi = character(7);
        let n = required_terms(1, 7, P);
        let exact = twisted_series_exact(&chi, 1, 5, n).unwrap();
        let emb = &chi.embeddings(P + GUARD)[0];
        let mut s = embed_series(&exact, emb);
        s.imprimitive_at = 1;
        assert!(matches!(l_value_afe(&s), Err(Error::InconsistentFunctionalEquation(_))));
    }

    #[test]
    fn partials_sum_to_full_and_match_eisenstein() {
        let chi = character(23);
        let embs = chi.embeddings(P + GUARD);
        let table = EisensteinTable::new(&chi, 5, P).unwrap();
        for d in [1u64, 5] {
            let full = l_values_all_embeddings(&chi, d, P).unwrap();
            let vals: Vec<BigComplex> = full.iter().map(|r| r.value.clone()).collect();
            let factor = BigReal::from_rational(&imprimitivity_factor(d, 5).unwrap(), P);
            for (iota, emb) in embs.iter().enumerate() {
                let mut sum = BigComplex::zero(P);
                for j in 0..3 {
                    let part = partial_from_embeddings(&vals, j, iota as u32);
                    sum = sum + &part;
                    let eis = table.partial(&chi, emb, d, j).unwrap();
                    assert!(eis.close_to(&part.scale(&factor), P as i64 - 40), "d={d} ι={iota} j={j}");
                }
                assert!(sum.close_to(&vals[iota], P as i64 - 8));
            }
        }
    }
}
