//! Exact recognition of high-precision numbers as elements of `K` and `T`,
//! and integer relations by lattice reduction.

use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::hecke::{CharacterEmbedding, TField};
use crate::numerics::{BigComplex, BigReal};
use crate::quadfield::{ComplexEmbedding, KElement};

pub use crate::hecke::TElement;

pub const DEFAULT_DENOM_BOUND: u64 = 1 << 24;
pub const MAX_DENOM_BOUND: u64 = 1 << 48;

/// A recognized value and `|x - embed(value)|`.
#[derive(Debug, Clone)]
pub struct Recognized<T> {
    pub value: T,
    pub residual: BigReal,
}

fn residual_limit(x: &BigComplex) -> BigReal {
    let p = x.precision();
    let scale = x.abs();
    let one = BigReal::one(p);
    let s = if scale > one { scale } else { one };
    s.mul_pow2(-((p / 3) as i64))
}

/// First continued-fraction convergent of `y` within `tol`, or `None` once the
/// denominator exceeds `bound`.
fn convergent_within(y: &BigRational, tol: &BigRational, bound: u64) -> Option<BigRational> {
    let bound = BigInt::from(bound);
    let (mut p0, mut q0) = (BigInt::zero(), BigInt::one());
    let (mut p1, mut q1) = (BigInt::one(), BigInt::zero());
    let mut rest = y.clone();
    loop {
        let a = rest.floor().to_integer();
        let p2 = &a * &p1 + &p0;
        let q2 = &a * &q1 + &q0;
        if q2 > bound {
            return None;
        }
        let c = BigRational::new(p2.clone(), q2.clone());
        if (&c - y).abs() <= *tol {
            return Some(c);
        }
        let frac = &rest - BigRational::from_integer(a);
        if frac.is_zero() {
            return Some(c);
        }
        rest = frac.recip();
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
    }
}

/// Nearest `(u + v·ω)/den` with `den ≤ denom_bound`.
pub fn round_to_k(x: &BigComplex, q: u64, denom_bound: u64) -> Result<Recognized<KElement>> {
    let p = x.precision();
    if x.abs().to_f64() >= 2f64.powi(60) {
        return Err(Error::RecognitionFailed("value too large to round".into()));
    }
    let sqrt_q = BigReal::from_i64(q as i64, p).sqrt();
    let v = (&x.im / &sqrt_q).mul_pow2(1);
    let u = &x.re - &v.mul_pow2(-1);
    let limit = residual_limit(x);
    // each coordinate error contributes at most √q times itself to |x - embed|
    let tol = (&limit / &BigReal::from_i64(2 * q as i64 + 2, p)).to_rational();
    let fail =
        || Error::RecognitionFailed(format!("no element of K with denominator ≤ {denom_bound} near {:?}", x.to_f64()));
    let vr = convergent_within(&v.to_rational(), &tol, denom_bound).ok_or_else(fail)?;
    let ur = convergent_within(&u.to_rational(), &tol, denom_bound).ok_or_else(fail)?;
    let den = vr.denom().lcm(ur.denom());
    if den > BigInt::from(denom_bound) {
        return Err(fail());
    }
    let value = KElement::from_rationals(q, ur, vr);
    let residual = (&ComplexEmbedding::new(q, p).embed(&value) - x).abs();
    if residual > limit {
        return Err(fail());
    }
    Ok(Recognized { value, residual })
}

/// Solves `Σ_j a_ij x_j = b_i` by Gaussian elimination with partial pivoting.
#[allow(clippy::needless_range_loop)]
pub fn solve_linear(mut a: Vec<Vec<BigComplex>>, mut b: Vec<BigComplex>) -> Result<Vec<BigComplex>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].norm_sqr().partial_cmp(&a[j][col].norm_sqr()).unwrap())
            .ok_or(Error::SingularSolve)?;
        if a[piv][col].is_zero() {
            return Err(Error::SingularSolve);
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = &a[r][col] / &a[col][col];
            for c in col..n {
                let t = &f * &a[col][c];
                a[r][c] = &a[r][c] - &t;
            }
            let t = &f * &b[col];
            b[r] = &b[r] - &t;
        }
    }
    let mut x = vec![BigComplex::zero(b[0].precision()); n];
    for r in (0..n).rev() {
        let mut s = b[r].clone();
        for c in r + 1..n {
            s = s - &a[r][c] * &x[c];
        }
        x[r] = &s / &a[r][r];
    }
    Ok(x)
}

/// The element of `T` whose image under each `ι` is `values[ι]`.
pub fn reconstruct_t_element(
    values: &[BigComplex],
    embs: &[CharacterEmbedding],
    field: &Arc<TField>,
    denom_bound: u64,
) -> Result<Recognized<TElement>> {
    let h = field.h as usize;
    if values.len() != h || embs.len() != h {
        return Err(Error::InvalidInput(format!("need {h} values and embeddings")));
    }
    let vandermonde: Vec<Vec<BigComplex>> =
        embs.iter().map(|e| (0..h as u32).map(|j| e.t_power(j)).collect()).collect();
    let kappas = solve_linear(vandermonde, values.to_vec())?;
    let mut coeffs = Vec::with_capacity(h);
    for k in &kappas {
        coeffs.push(round_to_k(k, field.q, denom_bound)?.value);
    }
    let den = coeffs.iter().fold(BigInt::one(), |acc, k| acc.lcm(&k.denominator()));
    if den > BigInt::from(denom_bound) {
        return Err(Error::RecognitionFailed(format!("shared denominator {den} exceeds {denom_bound}")));
    }
    let value = TElement::from_coeffs(field.clone(), coeffs);
    let mut worst = BigReal::zero(values[0].precision());
    for (v, e) in values.iter().zip(embs) {
        let r = (&e.embed_t(&value) - v).abs();
        if r > residual_limit(v) {
            return Err(Error::RecognitionFailed(format!("re-embedding misses by 2^{:.1}", r.log2_approx())));
        }
        if r > worst {
            worst = r;
        }
    }
    Ok(Recognized { value, residual: worst })
}

/// `reconstruct_t_element` with the denominator bound doubled from the default up to the maximum.
pub fn reconstruct_with_doubling(
    values: &[BigComplex],
    embs: &[CharacterEmbedding],
    field: &Arc<TField>,
) -> Result<Recognized<TElement>> {
    let mut bound = DEFAULT_DENOM_BOUND;
    loop {
        match reconstruct_t_element(values, embs, field, bound) {
            Err(Error::RecognitionFailed(_)) if bound < MAX_DENOM_BOUND => bound *= 2,
            other => return other,
        }
    }
}

fn dot(a: &[BigRational], b: &[BigRational]) -> BigRational {
    a.iter().zip(b).fold(BigRational::zero(), |acc, (x, y)| acc + x * y)
}

fn gram_schmidt(basis: &[Vec<BigInt>]) -> (Vec<Vec<BigRational>>, Vec<Vec<BigRational>>, Vec<BigRational>) {
    let n = basis.len();
    let rows: Vec<Vec<BigRational>> =
        basis.iter().map(|r| r.iter().map(|x| BigRational::from_integer(x.clone())).collect()).collect();
    let mut star: Vec<Vec<BigRational>> = Vec::with_capacity(n);
    let mut mu = vec![vec![BigRational::zero(); n]; n];
    let mut norms = Vec::with_capacity(n);
    for i in 0..n {
        let mut v = rows[i].clone();
        for j in 0..i {
            mu[i][j] = dot(&rows[i], &star[j]) / &norms[j];
            for (vk, sk) in v.iter_mut().zip(&star[j]) {
                *vk -= &mu[i][j] * sk;
            }
        }
        norms.push(dot(&v, &v));
        star.push(v);
    }
    (star, mu, norms)
}

/// LLL reduction (`δ = 3/4`) of linearly independent integer rows, exact arithmetic.
#[allow(clippy::needless_range_loop)]
pub fn lll(mut basis: Vec<Vec<BigInt>>) -> Vec<Vec<BigInt>> {
    let n = basis.len();
    let delta = BigRational::new(3.into(), 4.into());
    let (_, mut mu, mut norms) = gram_schmidt(&basis);
    let mut k = 1;
    while k < n {
        for j in (0..k).rev() {
            let r = mu[k][j].round().to_integer();
            if !r.is_zero() {
                let row_j = basis[j].clone();
                for (x, y) in basis[k].iter_mut().zip(&row_j) {
                    *x -= &r * y;
                }
                let rr = BigRational::from_integer(r);
                for i in 0..j {
                    let t = &rr * &mu[j][i];
                    mu[k][i] -= t;
                }
                mu[k][j] -= &rr;
            }
        }
        let lhs = &norms[k];
        let rhs = (&delta - &mu[k][k - 1] * &mu[k][k - 1]) * &norms[k - 1];
        if *lhs >= rhs {
            k += 1;
        } else {
            basis.swap(k, k - 1);
            let (_, m, nr) = gram_schmidt(&basis);
            mu = m;
            norms = nr;
            k = (k - 1).max(1);
        }
    }
    basis
}

/// Integer polynomial of degree ≤ `degree` (coefficients low to high) with
/// coefficients bounded by `height` that vanishes at `x` to working precision.
pub fn algdep(x: &BigComplex, degree: usize, height: u64) -> Result<Vec<BigInt>> {
    let p = x.precision();
    let scale_bits = p.saturating_sub(16) as i64;
    let is_real = x.im.abs() <= x.abs().mul_pow2(-(p as i64) + 8);
    let mut powers = vec![BigComplex::one(p)];
    for _ in 0..degree {
        let next = powers.last().unwrap() * x;
        powers.push(next);
    }
    let big = |r: &BigReal| r.mul_pow2(scale_bits).round_to_bigint();
    let basis: Vec<Vec<BigInt>> = powers
        .iter()
        .enumerate()
        .map(|(i, xi)| {
            let mut row = vec![BigInt::zero(); degree + 1];
            row[i] = BigInt::one();
            row.push(big(&xi.re));
            if !is_real {
                row.push(big(&xi.im));
            }
            row
        })
        .collect();
    let reduced = lll(basis);
    let fail = || Error::NoRelationFound(format!("degree {degree}, height {height}"));
    let mut coeffs: Vec<BigInt> = reduced[0][..=degree].to_vec();
    let g = coeffs.iter().fold(BigInt::zero(), |acc, c| acc.gcd(c));
    if g.is_zero() {
        return Err(fail());
    }
    for c in coeffs.iter_mut() {
        *c /= &g;
    }
    while coeffs.last().is_some_and(Zero::is_zero) {
        coeffs.pop();
    }
    if coeffs.len() < 2 || coeffs.iter().any(|c| c.abs() > BigInt::from(height)) {
        return Err(fail());
    }
    if coeffs.last().unwrap().is_negative() {
        for c in coeffs.iter_mut() {
            *c = -c.clone();
        }
    }
    // certify: |P(x)| must sit far below the size of its terms
    let mut val = BigComplex::zero(p);
    let mut size = BigReal::zero(p);
    for (c, xi) in coeffs.iter().zip(&powers) {
        let cr = BigReal::from_bigint(c, p);
        val = val + xi.scale(&cr);
        size = size + (cr.abs() * xi.abs());
    }
    if val.abs() > size.mul_pow2(-((p / 2) as i64)) {
        return Err(fail());
    }
    Ok(coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::{cm_j_values, hilbert_class_polynomial};
    use crate::hecke::GrossCharacter;
    use crate::numerics::poly_roots;
    use crate::quadfield::{ClassGroup, ImagQuadField};
    use proptest::prelude::*;

    const P: usize = 192;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn rounding_in_k() {
        let r = round_to_k(&BigComplex::from_f64(1.5, 0.0, P), 7, DEFAULT_DENOM_BOUND).unwrap();
        assert_eq!(r.value, KElement::from_rationals(7, rat(3, 2), rat(0, 1)));
        let omega = ImagQuadField::new(7).unwrap().omega();
        let w = ComplexEmbedding::new(7, P).embed(&omega);
        assert_eq!(round_to_k(&w, 7, DEFAULT_DENOM_BOUND).unwrap().value, omega);
        let x = KElement::from_rationals(23, rat(-17, 96), rat(5, 12));
        let z = ComplexEmbedding::new(23, P).embed(&x);
        assert_eq!(round_to_k(&z, 23, DEFAULT_DENOM_BOUND).unwrap().value, x);
        let pi = BigComplex::new(BigReal::pi(P), BigReal::ln2(P));
        assert!(matches!(round_to_k(&pi, 7, DEFAULT_DENOM_BOUND), Err(Error::RecognitionFailed(_))));
    }

    #[test]
    fn t_element_round_trip() {
        for q in [23u64, 31, 47] {
            let chi = GrossCharacter::new(&ClassGroup::new(ImagQuadField::new(q).unwrap()).unwrap()).unwrap();
            let embs = chi.embeddings(P);
            let field = chi.t_field().clone();
            let h = chi.h() as i64;
            let coeffs: Vec<KElement> =
                (0..h).map(|j| KElement::from_rationals(q, rat(3 * j - 7, 1 << j), rat(j * j + 1, 3 << j))).collect();
            let x = TElement::from_coeffs(field.clone(), coeffs);
            let values: Vec<BigComplex> = embs.iter().map(|e| e.embed_t(&x)).collect();
            let r = reconstruct_t_element(&values, &embs, &field, DEFAULT_DENOM_BOUND).unwrap();
            assert_eq!(r.value, x);
            assert!(r.residual < BigReal::pow2(-64, P));
            let hi = chi.embeddings(P + 64);
            let values_hi: Vec<BigComplex> = hi.iter().map(|e| e.embed_t(&x)).collect();
            assert_eq!(reconstruct_t_element(&values_hi, &hi, &field, DEFAULT_DENOM_BOUND).unwrap().value, x);
        }
    }

    #[test]
    fn h_one_reconstruction() {
        let chi = GrossCharacter::new(&ClassGroup::new(ImagQuadField::new(7).unwrap()).unwrap()).unwrap();
        let embs = chi.embeddings(P);
        let r = reconstruct_t_element(&[BigComplex::from_f64(0.5, 0.0, P)], &embs, chi.t_field(), DEFAULT_DENOM_BOUND)
            .unwrap();
        assert_eq!(r.value.coeffs[0], KElement::from_rationals(7, rat(1, 2), rat(0, 1)));
    }

    #[test]
    fn integer_relations() {
        let s2 = BigComplex::from_real(BigReal::from_i64(2, P).sqrt());
        let big = |v: &[i64]| v.iter().map(|&c| BigInt::from(c)).collect::<Vec<_>>();
        assert_eq!(algdep(&s2, 2, 1000).unwrap(), big(&[-2, 0, 1]));
        let i = BigComplex::i(P);
        assert_eq!(algdep(&i, 2, 10).unwrap(), big(&[1, 0, 1]));
        let fifth = BigComplex::from_real((BigReal::ln2(P) / BigReal::from_i64(5, P)).exp());
        assert!(matches!(algdep(&fifth, 3, 1 << 20), Err(Error::NoRelationFound(_))));
    }

    #[test]
    fn cube_root_of_j_is_cubic() {
        // γ2 = j^{1/3} lies in Q(j) for the discriminant -23
        let j = &cm_j_values(23, P).unwrap()[0];
        let m = BigComplex::from_real(-((-&j.re).ln() / BigReal::from_i64(3, P)).exp());
        let poly = algdep(&m, 3, 1 << 40).unwrap();
        assert_eq!(poly.len(), 4);
        let cs: Vec<BigComplex> = poly.iter().map(|c| BigComplex::from_real(BigReal::from_bigint(c, P))).collect();
        let roots = poly_roots(&cs).unwrap();
        let mut cubed = vec![BigComplex::one(P)];
        for r in &roots {
            let r3 = r.powi(3);
            let mut next = vec![BigComplex::zero(P); cubed.len() + 1];
            for (k, c) in cubed.iter().enumerate() {
                next[k + 1] = &next[k + 1] + c;
                next[k] = &next[k] - &(c * &r3);
            }
            cubed = next;
        }
        assert_eq!(poly[3], BigInt::one());
        let h = hilbert_class_polynomial(23, P).unwrap();
        for (c, e) in cubed.iter().zip(&h) {
            assert_eq!(c.re.round_to_bigint(), *e);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn k_round_trip(a in -5000i64..5000, b in -5000i64..5000, da in 0u32..12, db in 0u32..12, odd in 0i64..3) {
            let den = 2i64.pow(da) * [1, 3, 5][odd as usize];
            let x = KElement::from_rationals(31, rat(a, den), rat(b, 1 << db));
            let z = ComplexEmbedding::new(31, P).embed(&x);
            prop_assert_eq!(round_to_k(&z, 31, DEFAULT_DENOM_BOUND).unwrap().value, x);
        }
    }
}
