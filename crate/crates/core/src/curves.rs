//! Hilbert class polynomials, Weierstrass models of the CM curves and their
//! period lattices.

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::eisenstein::{eisenstein_g4_g6, Lattice};
use crate::error::{Error, Result};
use crate::numerics::{complex_agm, poly_roots, BigComplex, BigReal};
use crate::quadfield::{reduced_forms, ComplexEmbedding, ImagQuadField};

const GUARD: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    /// Short model built from `j(O_K)`; its differential may differ from the
    /// Néron differential by a unit of `H`.
    Mg,
    BuiltinMinimal,
    UserSupplied,
}

/// `y² + a1·xy + a3·y = x³ + a2·x² + a4·x + a6` over one complex embedding of `H`.
#[derive(Debug, Clone)]
pub struct CurveModel {
    pub a1: BigComplex,
    pub a2: BigComplex,
    pub a3: BigComplex,
    pub a4: BigComplex,
    pub a6: BigComplex,
    pub provenance: Provenance,
}

impl CurveModel {
    pub fn new(a: [BigComplex; 5], provenance: Provenance) -> Result<Self> {
        let [a1, a2, a3, a4, a6] = a;
        let m = CurveModel { a1, a2, a3, a4, a6, provenance };
        let p = m.precision();
        if m.discriminant().abs() <= BigReal::pow2(-(p as i64) / 2, p) {
            return Err(Error::InvalidInput("singular Weierstrass model".into()));
        }
        Ok(m)
    }

    pub fn from_integers(a: [i64; 5], provenance: Provenance, prec: usize) -> Result<Self> {
        CurveModel::new(a.map(|x| BigComplex::from_i64(x, prec)), provenance)
    }

    pub fn precision(&self) -> usize {
        [&self.a1, &self.a2, &self.a3, &self.a4, &self.a6].iter().map(|x| x.precision()).min().unwrap()
    }

    fn b_invariants(&self) -> [BigComplex; 4] {
        let p = self.precision();
        let k = |n: i64| BigComplex::from_i64(n, p);
        let (a1, a2, a3, a4, a6) = (&self.a1, &self.a2, &self.a3, &self.a4, &self.a6);
        let b2 = a1 * a1 + &k(4) * a2;
        let b4 = &k(2) * a4 + a1 * a3;
        let b6 = a3 * a3 + &k(4) * a6;
        let b8 = a1 * a1 * a6 + &k(4) * &(a2 * a6) - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4;
        [b2, b4, b6, b8]
    }

    pub fn c4(&self) -> BigComplex {
        let [b2, b4, _, _] = self.b_invariants();
        &b2 * &b2 - &b4 * &BigComplex::from_i64(24, self.precision())
    }

    pub fn c6(&self) -> BigComplex {
        let p = self.precision();
        let [b2, b4, b6, _] = self.b_invariants();
        -(&b2 * &b2 * &b2) + &BigComplex::from_i64(36, p) * &(&b2 * &b4) - &BigComplex::from_i64(216, p) * &b6
    }

    pub fn discriminant(&self) -> BigComplex {
        let p = self.precision();
        let k = |n: i64| BigComplex::from_i64(n, p);
        let [b2, b4, b6, b8] = self.b_invariants();
        -(&b2 * &b2 * &b8) - &k(8) * &(&b4 * &b4 * &b4) - &k(27) * &(&b6 * &b6) + &k(9) * &(&b2 * &b4 * &b6)
    }

    pub fn j_invariant(&self) -> BigComplex {
        let c4 = self.c4();
        &(&c4 * &c4 * &c4) / &self.discriminant()
    }

    /// The model in coordinates `(u²x, u³y)`: `a_i ↦ u^i·a_i`.
    pub fn rescale(&self, u: &BigComplex) -> CurveModel {
        let u2 = u * u;
        let u3 = &u2 * u;
        CurveModel {
            a1: &self.a1 * u,
            a2: &self.a2 * &u2,
            a3: &self.a3 * &u3,
            a4: &self.a4 * &(&u2 * &u2),
            a6: &self.a6 * &(&u3 * &u3),
            provenance: self.provenance,
        }
    }

    /// `(g2, g3)` of `Y² = 4X³ - g2·X - g3` attached to the invariant differential.
    pub fn g2_g3(&self) -> (BigComplex, BigComplex) {
        let p = self.precision();
        (&self.c4() / &BigComplex::from_i64(12, p), &self.c6() / &BigComplex::from_i64(216, p))
    }
}

/// `j = 1728·g2³/(g2³ - 27·g3²)` of a lattice.
pub fn j_of_lattice(lattice: &Lattice, prec: usize) -> Result<BigComplex> {
    let (g4, g6) = eisenstein_g4_g6(lattice, prec + GUARD)?;
    let p = prec + GUARD;
    let g2 = &g4 * &BigComplex::from_i64(60, p);
    let g3 = &g6 * &BigComplex::from_i64(140, p);
    let g2c = &g2 * &g2 * &g2;
    let j = &(&g2c * &BigComplex::from_i64(1728, p)) / &(&g2c - &(&(&g3 * &g3) * &BigComplex::from_i64(27, p)));
    Ok(j.with_precision(prec))
}

/// `j` at the CM point of every reduced form of discriminant `-q`, in form order.
pub fn cm_j_values(q: u64, prec: usize) -> Result<Vec<BigComplex>> {
    ImagQuadField::new(q)?;
    let sq = BigReal::from_i64(q as i64, prec + GUARD).sqrt();
    reduced_forms(q)
        .iter()
        .map(|f| {
            let p = prec + GUARD;
            let two_a = BigReal::from_i64(2 * f.a, p);
            let tau = BigComplex::new(BigReal::from_i64(-f.b, p) / &two_a, &sq / &two_a);
            j_of_lattice(&Lattice::new(BigComplex::one(p), tau)?, prec)
        })
        .collect()
}

/// Monic `∏ (x - j(τ_f))` over the reduced forms, coefficients low to high.
pub fn hilbert_class_polynomial(q: u64, prec: usize) -> Result<Vec<BigInt>> {
    let forms = reduced_forms(q);
    // |j| ≈ e^{π√q/a}; the coefficients are bounded by ∏(1 + |j|)
    let size_bits: f64 = forms
        .iter()
        .map(|f| std::f64::consts::PI * (q as f64).sqrt() / f.a as f64 / std::f64::consts::LN_2 + 2.0)
        .sum();
    let p = prec + size_bits.ceil() as usize;
    let roots = cm_j_values(q, p)?;
    let mut poly = vec![BigComplex::one(p)];
    for r in &roots {
        let mut next = vec![BigComplex::zero(p); poly.len() + 1];
        for (i, c) in poly.iter().enumerate() {
            next[i + 1] = &next[i + 1] + c;
            next[i] = &next[i] - &(c * r);
        }
        poly = next;
    }
    let margin = BigReal::pow2(-((prec / 2) as i64), p);
    let mut out = Vec::with_capacity(poly.len());
    for (i, c) in poly.iter().enumerate() {
        let n = c.re.round_to_bigint();
        let err = (&c.re - &BigReal::from_bigint(&n, p)).abs();
        if err > margin || c.im.abs() > margin {
            return Err(Error::RoundingMarginExceeded(format!("coefficient {i} of the class polynomial for q = {q}")));
        }
        out.push(n);
    }
    for r in &roots {
        let v = eval_int_poly(&out, r);
        let scale = r.abs().to_f64().max(1.0).powi(out.len() as i32 - 1);
        if v.abs().to_f64() > scale * 2f64.powi(-((prec / 2) as i32)) {
            return Err(Error::RoundingMarginExceeded(format!("rounded class polynomial for q = {q} misses a root")));
        }
    }
    Ok(out)
}

pub fn eval_int_poly(coeffs: &[BigInt], z: &BigComplex) -> BigComplex {
    let p = z.precision();
    coeffs
        .iter()
        .rev()
        .fold(BigComplex::zero(p), |acc, c| &(&acc * z) + &BigComplex::from_real(BigReal::from_bigint(c, p)))
}

/// Real root of an odd-degree real polynomial with exactly one real root.
fn real_root(coeffs: &[BigInt], prec: usize) -> Result<BigReal> {
    let cs: Vec<BigComplex> = coeffs.iter().map(|c| BigComplex::from_real(BigReal::from_bigint(c, prec))).collect();
    let roots = poly_roots(&cs)?;
    roots
        .into_iter()
        .min_by(|a, b| a.im.abs().partial_cmp(&b.im.abs()).unwrap())
        .map(|r| r.re)
        .ok_or_else(|| Error::InvalidInput("empty polynomial".into()))
}

fn real_cbrt(x: &BigReal) -> BigReal {
    if x.is_zero() {
        return x.clone();
    }
    let p = x.precision();
    let m = (x.abs().ln() / BigReal::from_i64(3, p)).exp();
    if x.is_negative() {
        -m
    } else {
        m
    }
}

/// `y² = x³ + mq/48·x - rq²/864` with `m³ = j(O_K)` and `r² = (1728 - j(O_K))/q`, `r > 0`,
/// over the real embedding of `H`.
pub fn gross_model_real(q: u64, prec: usize) -> Result<CurveModel> {
    let p = prec + GUARD;
    let poly = hilbert_class_polynomial(q, p)?;
    let size = (std::f64::consts::PI * (q as f64).sqrt() / std::f64::consts::LN_2) as usize;
    let j = real_root(&poly, p + size)?.with_precision(p);
    let m = real_cbrt(&j);
    let qr = BigReal::from_i64(q as i64, p);
    let r = ((BigReal::from_i64(1728, p) - &j) / &qr).sqrt();
    let a4 = &(&m * &qr) / &BigReal::from_i64(48, p);
    let a6 = -(&(&r * &qr.sqr()) / &BigReal::from_i64(864, p));
    let z = BigComplex::zero(p);
    CurveModel::new([z.clone(), z.clone(), z, BigComplex::from_real(a4), BigComplex::from_real(a6)], Provenance::Mg)
}

/// Roots of `α³ - α - 1`, the real one first.
fn alpha_23(prec: usize) -> Result<Vec<BigComplex>> {
    let cs: Vec<BigComplex> = [-1, -1, 0, 1].iter().map(|&c| BigComplex::from_i64(c, prec)).collect();
    let mut roots = poly_roots(&cs)?;
    roots.sort_by(|a, b| a.im.abs().partial_cmp(&b.im.abs()).unwrap());
    Ok(roots)
}

fn model_23(alpha: &BigComplex) -> Result<CurveModel> {
    let p = alpha.precision();
    let k = |n: i64| BigComplex::from_i64(n, p);
    let a2c = alpha * alpha;
    let a1 = &a2c * alpha;
    let a3 = alpha + &k(2);
    let a4 = -(&(&a2c * &k(12)) + &(alpha * &k(27)) + k(16));
    let a6 = -(&(&a2c * &k(73)) + &(alpha * &k(99)) + k(62));
    CurveModel::new([a1, k(2), a3, a4, a6], Provenance::BuiltinMinimal)
}

/// Global minimal models: conductor 49 for `q = 7`, and for `q = 23` the model over
/// `Q(α)`, `α³ = α + 1`, at the real root.
pub fn builtin_minimal_model(q: u64, prec: usize) -> Result<CurveModel> {
    match q {
        7 => CurveModel::from_integers([1, -1, 0, -2, -1], Provenance::BuiltinMinimal, prec),
        23 => model_23(&alpha_23(prec)?[0]),
        _ => Err(Error::UnsupportedQ(q)),
    }
}

/// The builtin model at every embedding of its field of definition, the real one first.
pub fn builtin_minimal_model_conjugates(q: u64, prec: usize) -> Result<Vec<CurveModel>> {
    match q {
        7 => Ok(vec![builtin_minimal_model(7, prec)?]),
        23 => alpha_23(prec)?.iter().map(model_23).collect(),
        _ => Err(Error::UnsupportedQ(q)),
    }
}

#[derive(Debug, Clone)]
pub struct PeriodLatticeResult {
    pub lattice: Lattice,
    /// Generator of the lattice as an `O_K`-module, `Re > 0` (or `Im > 0` when `Re = 0`).
    pub omega: BigComplex,
    pub homothety_residual: BigReal,
}

/// Period lattice of the invariant differential by the AGM on the 2-torsion
/// abscissae; the root ordering is accepted only when the lattice reproduces `(g2, g3)`.
pub fn period_lattice_raw(model: &CurveModel, prec: usize) -> Result<Lattice> {
    let p = prec + GUARD;
    let m = CurveModel {
        a1: model.a1.with_precision(p),
        a2: model.a2.with_precision(p),
        a3: model.a3.with_precision(p),
        a4: model.a4.with_precision(p),
        a6: model.a6.with_precision(p),
        provenance: model.provenance,
    };
    let (g2, g3) = m.g2_g3();
    let k = |n: i64| BigComplex::from_i64(n, p);
    let roots = poly_roots(&[-g3.clone(), -g2.clone(), k(0), k(4)])?;
    let pi = BigComplex::from_real(BigReal::pi(p));
    let check_bits = prec as i64 - 16;
    for perm in [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]] {
        let (e1, e2, e3) = (&roots[perm[0]], &roots[perm[1]], &roots[perm[2]]);
        let a = (e1 - e3).sqrt();
        let mut b = (e1 - e2).sqrt();
        let mut c = (e2 - e3).sqrt();
        if (&a - &b).norm_sqr() > (&a + &b).norm_sqr() {
            b = -b;
        }
        if (&a - &c).norm_sqr() > (&a + &c).norm_sqr() {
            c = -c;
        }
        let (Ok(mab), Ok(mac)) = (complex_agm(&a, &b), complex_agm(&a, &c)) else { continue };
        let w1 = &pi / &mab;
        let w2 = (&pi / &mac).mul_i();
        let Ok(lat) = Lattice::new(w1, w2) else { continue };
        let lat = lat.reduced();
        let (g4, g6) = eisenstein_g4_g6(&lat, p)?;
        let lg2 = &g4 * &k(60);
        let lg3 = &g6 * &k(140);
        let scale = g2.abs().to_f64().max(g3.abs().to_f64()).max(1.0);
        let tol = BigReal::from_f64(scale, p).mul_pow2(-check_bits);
        if (&lg2 - &g2).abs() <= tol && (&lg3 - &g3).abs() <= tol {
            return Lattice::new(lat.w1.with_precision(prec), lat.w2.with_precision(prec));
        }
    }
    Err(Error::PrecisionExhausted("no AGM root ordering reproduces the model invariants".into()))
}

/// Period lattice written as `Ω·O_K` for the field `Q(√-q)`.
pub fn period_lattice(model: &CurveModel, q: u64, prec: usize) -> Result<PeriodLatticeResult> {
    let lattice = period_lattice_raw(model, prec)?.reduced();
    let emb = ComplexEmbedding::new(q, prec);
    let omega_k = emb.embed(&ImagQuadField::new(q)?.omega());
    let tau = lattice.tau();
    // a reduced basis of Ω·O_K is (±Ω, ±Ω(ω - k)) since |ω|² = (1+q)/4 > 1
    let shift = (&tau - &omega_k).re.round_to_bigint();
    let target = &omega_k + &BigComplex::from_real(BigReal::from_bigint(&shift, prec));
    let residual = (&tau - &target).abs();
    if residual > BigReal::pow2(-((prec - GUARD) as i64), prec) {
        return Err(Error::NotHomotheticToOK(residual.log2_approx()));
    }
    let mut omega = lattice.w1.clone();
    let tiny = BigReal::pow2(-((prec / 2) as i64), prec);
    if omega.re.is_negative() || (omega.re.abs() <= tiny && omega.im.is_negative()) {
        omega = -omega;
    }
    if omega.re.abs() <= tiny {
        omega.re = BigReal::zero(prec);
    } else if omega.im.abs() <= tiny * omega.abs() {
        omega.im = BigReal::zero(prec);
    }
    Ok(PeriodLatticeResult { lattice, omega, homothety_residual: residual })
}

/// Integer nearest to a real number known to be integral, with a rounding margin check.
pub fn nearest_integer(x: &BigComplex, margin_bits: i64) -> Result<BigInt> {
    let p = x.precision();
    let n = x.re.round_to_bigint();
    let err = (&x.re - &BigReal::from_bigint(&n, p)).abs();
    let tol = BigReal::pow2(-margin_bits, p);
    if err > tol || x.im.abs() > tol {
        return Err(Error::RoundingMarginExceeded(format!("{:?} is not near an integer", x.to_f64())));
    }
    Ok(n)
}

/// `N_{H/Q}` of the minimal discriminant of the builtin model, from all embeddings.
pub fn builtin_discriminant_norm(q: u64, prec: usize) -> Result<BigInt> {
    let models = builtin_minimal_model_conjugates(q, prec)?;
    let p = models[0].precision();
    let prod = models.iter().fold(BigComplex::one(p), |acc, m| &acc * &m.discriminant());
    nearest_integer(&prod, (prec / 2) as i64)
}

/// Exact `q`-adic valuation of a nonzero integer.
pub fn int_valuation(n: &BigInt, ell: u64) -> u32 {
    let mut n = n.abs();
    let l = BigInt::from(ell);
    let mut v = 0;
    while !n.is_zero() && (&n % &l).is_zero() {
        n /= &l;
        v += 1;
    }
    v
}
