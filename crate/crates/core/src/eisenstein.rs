//! Weierstrass `ζ` and the weight-one Eisenstein function
//! `E1*(z, L) = ζ(z) - s2·z - (π/Area)·conj(z)`, the value at `s = 1` of
//! `Σ_w conj(z+w)/|z+w|^{2s}`.
//!
//! Everything is evaluated on `L = w1·(Z + Zτ)` with `τ` in the standard
//! fundamental domain, where the nome `e^{2πiτ}` has modulus below `0.005`.

use num_traits::ToPrimitive;

use crate::error::{Error, Result};
use crate::numerics::{complex_exp, BigComplex, BigReal};
use crate::quadfield::KElement;

const GUARD: usize = 32;

/// Lattice `Z·w1 + Z·w2` with `Im(w2/w1) > 0`.
#[derive(Debug, Clone)]
pub struct Lattice {
    pub w1: BigComplex,
    pub w2: BigComplex,
}

impl Lattice {
    /// Orients the basis; rejects R-dependent pairs.
    pub fn new(w1: BigComplex, w2: BigComplex) -> Result<Self> {
        let tau = &w2 / &w1;
        let p = tau.precision();
        if tau.im.abs() <= BigReal::pow2(-(p as i64) / 2, p) {
            return Err(Error::SingularSolve);
        }
        if tau.im.is_negative() {
            Ok(Lattice { w1, w2: -w2 })
        } else {
            Ok(Lattice { w1, w2 })
        }
    }

    /// Lattice spanned by two elements of `K` under `sqrt(-q) ↦ i·sqrt(q)`.
    pub fn from_k_basis(b1: &KElement, b2: &KElement, prec: usize) -> Result<Self> {
        Lattice::new(b1.to_complex(prec), b2.to_complex(prec))
    }

    pub fn precision(&self) -> usize {
        self.w1.precision().min(self.w2.precision())
    }

    pub fn scale(&self, lambda: &BigComplex) -> Lattice {
        Lattice::new(&self.w1 * lambda, &self.w2 * lambda).expect("nonzero scale keeps rank")
    }

    pub fn tau(&self) -> BigComplex {
        &self.w2 / &self.w1
    }

    /// Covolume `Im(conj(w1)·w2)`.
    pub fn area(&self) -> BigReal {
        let c = self.w1.conj() * &self.w2;
        c.im
    }

    /// Gauss-reduced basis, `|w1| ≤ |w2|` and `|Re(w2/w1)| ≤ 1/2`.
    pub fn reduced(&self) -> Lattice {
        let (mut w1, mut w2) = (self.w1.clone(), self.w2.clone());
        for _ in 0..10_000 {
            if w2.norm_sqr() < w1.norm_sqr() {
                let t = -w1;
                w1 = w2;
                w2 = t;
            }
            let k = (&w2 / &w1).re.round_to_bigint();
            if k == 0.into() {
                break;
            }
            let kc = BigComplex::from_i64(k.to_i64().expect("bounded reduction step"), w1.precision());
            w2 = &w2 - &(&w1 * &kc);
        }
        Lattice { w1, w2 }
    }

    /// Real coordinates `(x, y)` with `z = x·w1 + y·w2`.
    pub fn coordinates(&self, z: &BigComplex) -> (BigReal, BigReal) {
        let zz = z / &self.w1;
        let tau = self.tau();
        let y = &zz.im / &tau.im;
        let x = &zz.re - &(&y * &tau.re);
        (x, y)
    }

    /// Membership test to `2^{-bits}` in lattice coordinates.
    pub fn contains(&self, z: &BigComplex, bits: i64) -> bool {
        let (x, y) = self.coordinates(z);
        let p = x.precision();
        let tol = BigReal::pow2(-bits, p);
        let dx = &x - &BigReal::from_bigint(&x.round_to_bigint(), p);
        let dy = &y - &BigReal::from_bigint(&y.round_to_bigint(), p);
        dx.abs() <= tol && dy.abs() <= tol
    }
}

/// Quasi-period data of a lattice, attached to its reduced basis.
#[derive(Debug, Clone)]
pub struct EisensteinCtx {
    pub lattice: Lattice,
    pub tau: BigComplex,
    pub nome: BigComplex,
    /// Quasi-periods of `ζ` for the reduced basis `(w1, w2)`.
    pub eta1: BigComplex,
    pub eta2: BigComplex,
    pub s2: BigComplex,
    pub area_inv: BigComplex,
    /// `|η1·w2 - η2·w1 - 2πi|`.
    pub legendre_residual: BigReal,
    prec: usize,
    terms: usize,
}

fn two_pi_i(p: usize) -> BigComplex {
    BigComplex::new(BigReal::zero(p), BigReal::pi(p).mul_pow2(1))
}

/// Series terms needed so that `|nome|^{n-1/2} < 2^{-p}`.
fn series_terms(tau: &BigComplex, p: usize) -> usize {
    let decay = 2.0 * std::f64::consts::PI * tau.im.to_f64() / std::f64::consts::LN_2;
    ((p as f64 + 8.0) / decay + 1.5).ceil() as usize
}

/// `ζ(z; Z + Zτ)` from the `u = e^{2πiz}` expansion, without reduction.
fn zeta_normalized(
    z: &BigComplex,
    tau_data: (&BigComplex, &BigComplex),
    eta1: &BigComplex,
    terms: usize,
) -> Result<BigComplex> {
    let (_, nome) = tau_data;
    let p = z.precision();
    let tpi = two_pi_i(p);
    let u = complex_exp(&(&tpi * z))?;
    let one = BigComplex::one(p);
    let u_inv = &one / &u;
    let pi_i = tpi.mul_pow2(-1);
    let mut s = &pi_i * &(&(&u + &one) / &(&u - &one));
    let mut acc = BigComplex::zero(p);
    let mut qn = nome.clone();
    for _ in 0..terms {
        let a = &qn * &u;
        let b = &qn * &u_inv;
        acc = acc + (&b / &(&one - &b)) - (&a / &(&one - &a));
        qn = &qn * nome;
    }
    s = s + &tpi * &acc + eta1 * z;
    Ok(s)
}

impl EisensteinCtx {
    /// Computes `η1` from `E2`, `η2 = 2ζ(w2/2)` from the series, and solves
    /// `η_i = s2·w_i + A·conj(w_i)`.
    pub fn new(lattice: &Lattice, prec: usize) -> Result<Self> {
        let p = prec + GUARD;
        let src = Lattice::new(lattice.w1.with_precision(p), lattice.w2.with_precision(p))?;
        let red = src.reduced();
        let tau = red.tau();
        let tpi = two_pi_i(p);
        let nome = complex_exp(&(&tpi * &tau))?;
        let terms = series_terms(&tau, p);
        let one = BigComplex::one(p);
        // E2 = 1 - 24 Σ n qⁿ/(1-qⁿ)
        let mut sum = BigComplex::zero(p);
        let mut qn = nome.clone();
        for n in 1..=terms {
            let t = &qn / &(&one - &qn);
            sum = sum + t * BigComplex::from_i64(n as i64, p);
            qn = &qn * &nome;
        }
        let e2 = &one - &(sum * BigComplex::from_i64(24, p));
        let pi = BigReal::pi(p);
        let eta1_n = e2.scale(&(pi.sqr() / BigReal::from_i64(3, p)));
        let half_tau = tau.mul_pow2(-1);
        let eta2_n = zeta_normalized(&half_tau, (&tau, &nome), &eta1_n, terms + 1)?.mul_pow2(1);
        let eta1 = &eta1_n / &red.w1;
        let eta2 = &eta2_n / &red.w1;
        let legendre = &(&(&eta1 * &red.w2) - &(&eta2 * &red.w1)) - &tpi;
        let legendre_residual = legendre.abs();
        // [w1 conj(w1); w2 conj(w2)] (s2, A)ᵀ = (η1, η2)ᵀ
        let c1 = red.w1.conj();
        let c2 = red.w2.conj();
        let det = &(&red.w1 * &c2) - &(&red.w2 * &c1);
        if det.abs() <= BigReal::pow2(-(p as i64) / 2, p) {
            return Err(Error::SingularSolve);
        }
        let s2 = &(&(&eta1 * &c2) - &(&eta2 * &c1)) / &det;
        let area_inv = &(&(&red.w1 * &eta2) - &(&red.w2 * &eta1)) / &det;
        Ok(EisensteinCtx { lattice: red, tau, nome, eta1, eta2, s2, area_inv, legendre_residual, prec, terms })
    }

    pub fn precision(&self) -> usize {
        self.prec
    }

    /// Quasi-period `ζ(z + w) - ζ(z)` for a lattice vector `w`.
    pub fn eta(&self, w: &BigComplex) -> BigComplex {
        &(&self.s2 * w) + &(&self.area_inv * &w.conj())
    }

    /// Splits `z = z_red + m·w1 + n·w2` with reduced coordinates in `[-1/2, 1/2]`.
    fn reduce(&self, z: &BigComplex) -> (BigComplex, i64, i64) {
        let z = z.with_precision(self.prec + GUARD);
        let (x, y) = self.lattice.coordinates(&z);
        let m = x.round_to_bigint().to_i64().expect("coordinate fits i64");
        let n = y.round_to_bigint().to_i64().expect("coordinate fits i64");
        let p = z.precision();
        let shift =
            &(&self.lattice.w1 * &BigComplex::from_i64(m, p)) + &(&self.lattice.w2 * &BigComplex::from_i64(n, p));
        (&z - &shift, m, n)
    }

    fn zeta_reduced(&self, zr: &BigComplex) -> Result<BigComplex> {
        let p = zr.precision();
        let scale = self.lattice.w1.abs();
        if zr.abs() <= &scale * &BigReal::pow2(-(self.prec as i64) + 8, p) {
            return Err(Error::PoleAtLatticePoint);
        }
        let zz = zr / &self.lattice.w1;
        let eta1_n = &self.eta1 * &self.lattice.w1;
        let v = zeta_normalized(&zz, (&self.tau, &self.nome), &eta1_n, self.terms)?;
        Ok(&v / &self.lattice.w1)
    }
}

pub fn quasi_periods(lattice: &Lattice, prec: usize) -> Result<EisensteinCtx> {
    EisensteinCtx::new(lattice, prec)
}

/// Weierstrass `ζ(z; L)`.
pub fn weierstrass_zeta(z: &BigComplex, ctx: &EisensteinCtx) -> Result<BigComplex> {
    let (zr, m, n) = ctx.reduce(z);
    let p = zr.precision();
    let base = ctx.zeta_reduced(&zr)?;
    let shift = &(&ctx.eta1 * &BigComplex::from_i64(m, p)) + &(&ctx.eta2 * &BigComplex::from_i64(n, p));
    Ok((base + shift).with_precision(ctx.prec))
}

/// `E1*(z, L) = ζ(z) - s2·z - A·conj(z)`, evaluated at the reduced point.
pub fn e1star(z: &BigComplex, ctx: &EisensteinCtx) -> Result<BigComplex> {
    let (zr, _, _) = ctx.reduce(z);
    let v = ctx.zeta_reduced(&zr)?;
    let lin = &(&ctx.s2 * &zr) + &(&ctx.area_inv * &zr.conj());
    Ok((v - lin).with_precision(ctx.prec))
}

/// Lattice constants `G4 = Σ' w^{-4}` and `G6 = Σ' w^{-6}` from `E4`, `E6`.
pub fn eisenstein_g4_g6(lattice: &Lattice, prec: usize) -> Result<(BigComplex, BigComplex)> {
    let p = prec + GUARD;
    let red = Lattice::new(lattice.w1.with_precision(p), lattice.w2.with_precision(p))?.reduced();
    let tau = red.tau();
    let nome = complex_exp(&(&two_pi_i(p) * &tau))?;
    let terms = series_terms(&tau, p);
    let one = BigComplex::one(p);
    let (mut s3, mut s5) = (BigComplex::zero(p), BigComplex::zero(p));
    let mut qn = nome.clone();
    for n in 1..=terms as i64 {
        let t = &qn / &(&one - &qn);
        s3 = s3 + &t * &BigComplex::from_i64(n * n * n, p);
        s5 = s5 + &t * &BigComplex::from_i64(n * n * n * n * n, p);
        qn = &qn * &nome;
    }
    let e4 = &one + &(s3 * BigComplex::from_i64(240, p));
    let e6 = &one - &(s5 * BigComplex::from_i64(504, p));
    let pi = BigReal::pi(p);
    let pi2 = pi.sqr();
    let pi4 = pi2.sqr();
    let g4 = e4.scale(&(&pi4 / &BigReal::from_i64(45, p))) / red.w1.powi(4);
    let g6 = e6.scale(&(pi4 * pi2 * BigReal::from_ratio(2, 945, p))) / red.w1.powi(6);
    Ok((g4.with_precision(prec), g6.with_precision(prec)))
}

/// Result of the direct lattice sum.
#[derive(Debug, Clone)]
pub struct BruteForceZeta {
    pub value: BigComplex,
    /// Rigorous bound on the neglected tail.
    pub tail_bound: f64,
    pub points: usize,
}

/// `ζ(z) = 1/z + Σ'_{|w| ≤ X} (1/(z-w) + 1/w + z/w²)`, summed over the disc.
///
/// The disc is symmetric under `w ↦ -w`, so the tail is
/// `-Σ_{k odd ≥ 3} z^k·Σ_{|w|>X} w^{-k-1}`. With `g4_g6` supplied the `k = 3, 5`
/// tail terms are restored exactly and the bound starts at `k = 7`.
pub fn zeta_bruteforce(
    z: &BigComplex,
    lattice: &Lattice,
    cutoff: f64,
    g4_g6: Option<(&BigComplex, &BigComplex)>,
) -> BruteForceZeta {
    let p = z.precision();
    let red = lattice.reduced();
    let (w1, w2) = (red.w1.to_f64(), red.w2.to_f64());
    let area = red.area().to_f64();
    let height = area / (w1.0 * w1.0 + w1.1 * w1.1).sqrt();
    let n_max = (cutoff / height).ceil() as i64 + 1;
    let w1n = w1.0 * w1.0 + w1.1 * w1.1;
    let x2 = cutoff * cutoff;
    let mut sum = BigComplex::zero(p);
    let (mut s4, mut s6) = (BigComplex::zero(p), BigComplex::zero(p));
    let z2 = z.sqr();
    let mut points = 0;
    for n in -n_max..=n_max {
        let center = -(n as f64) * (w2.0 * w1.0 + w2.1 * w1.1) / w1n;
        let half = cutoff / w1n.sqrt() + 1.0;
        for m in (center - half).floor() as i64..=(center + half).ceil() as i64 {
            if m == 0 && n == 0 {
                continue;
            }
            let wr = m as f64 * w1.0 + n as f64 * w2.0;
            let wi = m as f64 * w1.1 + n as f64 * w2.1;
            if wr * wr + wi * wi > x2 {
                continue;
            }
            let w = &(&red.w1 * &BigComplex::from_i64(m, p)) + &(&red.w2 * &BigComplex::from_i64(n, p));
            let w2c = w.sqr();
            // 1/(z-w) + 1/w + z/w² = z²/(w²(z-w))
            sum = sum + &z2 / &(&w2c * &(z - &w));
            if g4_g6.is_some() {
                let inv2 = w2c.inv();
                let inv4 = inv2.sqr();
                s6 = s6 + &inv4 * &inv2;
                s4 = s4 + inv4;
            }
            points += 1;
        }
    }
    let mut value = &z.inv() + &sum;
    let first_k = if let Some((g4, g6)) = g4_g6 {
        // tail of Σ w^{-4}, Σ w^{-6}
        let t4 = g4 - &s4;
        let t6 = g6 - &s6;
        let z3 = &z2 * z;
        let z5 = &z3 * &z2;
        value = value - &z3 * &t4 - &z5 * &t6;
        7
    } else {
        3
    };
    let d = {
        let a = ((w1.0 + w2.0).powi(2) + (w1.1 + w2.1).powi(2)).sqrt();
        let b = ((w1.0 - w2.0).powi(2) + (w1.1 - w2.1).powi(2)).sqrt();
        a.max(b)
    };
    let r = z.abs().to_f64();
    let x0 = cutoff - 2.0 * d;
    let tail_bound = if x0 <= r {
        f64::INFINITY
    } else {
        let mut total = 0.0;
        let mut k = first_k;
        loop {
            let m = (k + 1) as f64;
            let b =
                2.0 * std::f64::consts::PI / area * (x0.powf(2.0 - m) / (m - 2.0) + d * x0.powf(1.0 - m) / (m - 1.0));
            let term = r.powi(k) * b;
            total += term;
            if term < total * 1e-18 || k > 400 {
                break;
            }
            k += 2;
        }
        total * 1.0001
    };
    BruteForceZeta { value, tail_bound, points }
}
