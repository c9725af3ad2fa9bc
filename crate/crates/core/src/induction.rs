//! Twist family bookkeeping and the end-to-end verification of the
//! valuation ladder `ord_𝔓(Φ(d)) = k_d`.

use std::time::Instant;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cmpoints::{psi_sum, EisensteinTable};
use crate::curves::{builtin_minimal_model, period_lattice};
use crate::dyadic::{PadicEmbedding, DEFAULT_PRECISION};
use crate::error::{Error, Result};
use crate::hecke::{GrossCharacter, TElement};
use crate::lfunc::{imprimitivity_factor, l_values_all_embeddings, partial_from_embeddings, LValueResult};
use crate::numerics::{BigComplex, BigReal};
use crate::quadfield::{factorize, kronecker_minus_q, ClassGroup, ImagQuadField, KElement};
use crate::recognition::{algdep, reconstruct_t_element, round_to_k, DEFAULT_DENOM_BOUND, MAX_DENOM_BOUND};

/// `R = r_1 ⋯ r_k`, squarefree, every `r_i ≡ 1 mod 4` and inert in `K`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TwistFamilyElement {
    pub r: u64,
    pub factors: Vec<u64>,
}

impl TwistFamilyElement {
    pub fn k(&self) -> usize {
        self.factors.len()
    }

    /// All positive divisors, ascending.
    pub fn divisors(&self) -> Vec<u64> {
        let mut out = vec![1u64];
        for &p in &self.factors {
            let extra: Vec<u64> = out.iter().map(|d| d * p).collect();
            out.extend(extra);
        }
        out.sort_unstable();
        out
    }

    /// Number of prime factors of a divisor `d`.
    pub fn k_of(&self, d: u64) -> usize {
        self.factors.iter().filter(|&&p| d.is_multiple_of(p)).count()
    }
}

pub fn validate_twist(field: &ImagQuadField, r: u64) -> Result<TwistFamilyElement> {
    let fail = |reason: String| Err(Error::NotInFamily { r, reason });
    if r == 0 {
        return fail("R must be positive".into());
    }
    let mut factors = Vec::new();
    for (p, e) in factorize(r) {
        if e > 1 {
            return fail(format!("{p}^{e} divides R, so R is not squarefree"));
        }
        if p % 4 != 1 {
            return fail(format!("prime factor {p} is not 1 mod 4"));
        }
        if kronecker_minus_q(field.q(), p) != -1 {
            return fail(format!("prime factor {p} is not inert in K"));
        }
        factors.push(p);
    }
    Ok(TwistFamilyElement { r, factors })
}

/// Members of the family up to `max_r` with at most `max_k` prime factors.
pub fn enumerate_family(field: &ImagQuadField, max_r: u64, max_k: usize) -> Vec<TwistFamilyElement> {
    (2..=max_r).filter_map(|r| validate_twist(field, r).ok()).filter(|t| t.k() <= max_k).collect()
}

/// `Σ_{S ⊆ {1..k}} ∏_{i∈S} signs_i`, enumerated subset by subset.
pub fn galois_sqrt_sum(signs: &[i8]) -> i64 {
    let k = signs.len();
    (0u64..1 << k).map(|mask| (0..k).filter(|i| mask >> i & 1 == 1).map(|i| signs[i] as i64).product::<i64>()).sum()
}

/// `Σ_{d | R, d ≠ 1, R} d`, which the induction needs to be even.
pub fn d_r_parity(fam: &TwistFamilyElement) -> (u64, bool) {
    let s: u64 = fam.divisors().into_iter().filter(|&d| d != 1 && d != fam.r).sum();
    (s, s.is_multiple_of(2))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodChoice {
    Afe,
    Eisenstein,
    Both,
}

impl MethodChoice {
    fn afe(self) -> bool {
        matches!(self, MethodChoice::Afe | MethodChoice::Both)
    }

    fn eisenstein(self) -> bool {
        matches!(self, MethodChoice::Eisenstein | MethodChoice::Both)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Tsv,
}

/// Run parameters, recorded verbatim in every report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunConfig {
    pub prec: usize,
    pub dyadic_prec: u32,
    pub denom_bound: u64,
    pub method: MethodChoice,
    pub cache_dir: Option<String>,
    pub format: OutputFormat,
    pub jobs: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            prec: 192,
            dyadic_prec: DEFAULT_PRECISION,
            denom_bound: DEFAULT_DENOM_BOUND,
            method: MethodChoice::Both,
            cache_dir: None,
            format: OutputFormat::Json,
            jobs: 1,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(64..=4096).contains(&self.prec) {
            return Err(Error::InvalidInput(format!("precision {} outside 64..=4096", self.prec)));
        }
        if !(16..=4096).contains(&self.dyadic_prec) {
            return Err(Error::InvalidInput(format!("dyadic precision {} outside 16..=4096", self.dyadic_prec)));
        }
        if self.denom_bound < 1 || self.denom_bound > MAX_DENOM_BOUND {
            return Err(Error::InvalidInput(format!("denominator bound {} outside 1..=2^48", self.denom_bound)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
    /// Stretch checks: reported, never blocking.
    Info,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    pub evidence: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivisorRow {
    pub d: u64,
    pub k_d: usize,
    /// `√d·L(φ̄_d^ι, 1)/Ω` per embedding, decimal.
    pub msl_re: Vec<String>,
    pub msl_im: Vec<String>,
    /// log2 of the error bound on the values above.
    pub err: Option<f64>,
    /// Coefficients of `Φ(d)` in the basis `1, t, …`, each `a + b·ω`.
    pub phi_coeffs: Vec<String>,
    /// `Λ(d, R)/msl = Φ(d)·∏_{r | R/d}(1 + 1/r)`.
    pub lambda_coeffs: Vec<String>,
    pub ord_p: i64,
    /// `ord_𝔭(msl(d))` when the absolute normalization is available.
    pub msl_ord: Option<i64>,
    /// `None` when the re-embedding is exact.
    pub recognition_residual_log2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootNumber {
    pub d: u64,
    pub iota: u32,
    pub re: String,
    pub im: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub q: u64,
    #[serde(rename = "R")]
    pub r: u64,
    pub k: usize,
    pub h: u32,
    pub config: RunConfig,
    /// `absolute` when `Ω` comes from a minimal model, otherwise `ratio-only`.
    pub normalization: String,
    pub divisors: Vec<DivisorRow>,
    /// log2 of the largest AFE/Eisenstein discrepancy, full and partial values.
    pub cross_path_dev: Option<f64>,
    pub root_numbers: Vec<RootNumber>,
    pub checks: Vec<Check>,
    /// Wall time; kept out of the serialized report so that reports are reproducible.
    #[serde(skip)]
    pub runtime_ms: u128,
}

impl VerificationReport {
    fn record(&mut self, name: &str, ok: bool, evidence: String) {
        let status = if ok { Status::Pass } else { Status::Fail };
        self.checks.push(Check { name: name.into(), status, evidence });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != Status::Fail)
    }

    pub fn first_failure(&self) -> Option<&Check> {
        self.checks.iter().find(|c| c.status == Status::Fail)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One line per divisor and one per check, tab separated.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("kind\tq\tR\td\tk_d\tord_P\tmsl_ord\terr_log2\tphi\tstatus\tname\tevidence\n");
        for row in &self.divisors {
            out.push_str(&format!(
                "divisor\t{}\t{}\t{}\t{}\t{}\t{}\t{:.1}\t{}\t\t\t\n",
                self.q,
                self.r,
                row.d,
                row.k_d,
                row.ord_p,
                row.msl_ord.map(|v| v.to_string()).unwrap_or_default(),
                row.err.unwrap_or(f64::NEG_INFINITY),
                row.phi_coeffs.join(";"),
            ));
        }
        for c in &self.checks {
            let status = serde_json::to_value(c.status).unwrap();
            out.push_str(&format!(
                "check\t{}\t{}\t\t\t\t\t\t\t{}\t{}\t{}\n",
                self.q,
                self.r,
                status.as_str().unwrap(),
                c.name,
                c.evidence.replace('\t', " ")
            ));
        }
        out
    }
}

pub fn character(q: u64) -> Result<GrossCharacter> {
    GrossCharacter::new(&ClassGroup::new(ImagQuadField::new(q)?)?)
}

/// Real period of the builtin minimal model, when one exists and `h = 1`.
pub fn absolute_omega(chi: &GrossCharacter, prec: usize) -> Option<BigComplex> {
    if chi.h() != 1 {
        return None;
    }
    let q = chi.field().q();
    let model = builtin_minimal_model(q, prec + 32).ok()?;
    period_lattice(&model, q, prec + 32).ok().map(|r| r.omega.with_precision(prec))
}

/// `L(φ̄_d^ι, 1)` for all embeddings by one method, with error bounds.
#[derive(Debug, Clone)]
pub struct EmbeddingValues {
    pub values: Vec<BigComplex>,
    pub error_bounds: Vec<f64>,
    pub afe: Option<Vec<LValueResult>>,
}

fn afe_values(chi: &GrossCharacter, d: u64, prec: usize) -> Result<EmbeddingValues> {
    let res = l_values_all_embeddings(chi, d, prec)?;
    Ok(EmbeddingValues {
        values: res.iter().map(|r| r.value.clone()).collect(),
        error_bounds: res.iter().map(|r| r.error_bound.to_f64()).collect(),
        afe: Some(res),
    })
}

fn eisenstein_values(chi: &GrossCharacter, table: &EisensteinTable, d: u64, prec: usize) -> Result<EmbeddingValues> {
    let factor = BigReal::from_rational(&imprimitivity_factor(d, table.reps.r)?, prec + 32);
    let values = chi
        .embeddings(prec)
        .iter()
        .map(|emb| Ok(table.full(chi, emb, d)?.scale(&(BigReal::one(prec + 32) / &factor)).with_precision(prec)))
        .collect::<Result<Vec<_>>>()?;
    let bound = 2f64.powi(-(prec as i32) + 48);
    let error_bounds = values.iter().map(|v| bound * v.abs().to_f64().max(1.0)).collect();
    Ok(EmbeddingValues { values, error_bounds, afe: None })
}

/// `√d·L(φ̄_d^ι, 1)/Ω` for every embedding; `Ω = 1` gives ratio-only values.
pub fn compute_msl(
    chi: &GrossCharacter,
    d: u64,
    method: crate::lfunc::Method,
    omega: &BigComplex,
    prec: usize,
) -> Result<Vec<BigComplex>> {
    let vals = match method {
        crate::lfunc::Method::Afe => afe_values(chi, d, prec)?,
        crate::lfunc::Method::Eisenstein => {
            let table = EisensteinTable::new(chi, d, prec)?;
            eisenstein_values(chi, &table, d, prec)?
        }
    };
    Ok(scale_msl(&vals.values, d, omega))
}

fn scale_msl(values: &[BigComplex], d: u64, omega: &BigComplex) -> Vec<BigComplex> {
    let p = values[0].precision();
    let sd = BigComplex::from_real(BigReal::from_i64(d as i64, p).sqrt());
    let f = &sd / &omega.with_precision(p);
    values.iter().map(|v| v * &f).collect()
}

fn k_string(x: &KElement) -> String {
    format!("{} + {}*w", x.a, x.b)
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

fn log2_f(x: f64) -> f64 {
    if x > 0.0 {
        x.log2()
    } else {
        f64::NEG_INFINITY
    }
}

/// Runs every check for one `(q, R)`; failed checks are recorded, not raised.
pub fn run_verification(q: u64, r: u64, config: &RunConfig) -> Result<VerificationReport> {
    config.validate()?;
    let start = Instant::now();
    let chi = character(q)?;
    let field = chi.field();
    let fam = validate_twist(&field, r)?;
    if r <= 1 {
        return Err(Error::NotInFamily { r, reason: "verification needs R > 1".into() });
    }
    let prec = config.prec;
    let h = chi.h();
    let divisors = fam.divisors();
    let embs = chi.embeddings(prec);
    let omega_abs = absolute_omega(&chi, prec);
    let omega = omega_abs.clone().unwrap_or_else(|| BigComplex::one(prec));
    let mut report = VerificationReport {
        q,
        r,
        k: fam.k(),
        h,
        config: config.clone(),
        normalization: if omega_abs.is_some() { "absolute".into() } else { "ratio-only".into() },
        divisors: Vec::new(),
        cross_path_dev: None,
        root_numbers: Vec::new(),
        checks: Vec::new(),
        runtime_ms: 0,
    };

    let afe: Option<Vec<EmbeddingValues>> = if config.method.afe() {
        Some(divisors.par_iter().map(|&d| afe_values(&chi, d, prec)).collect::<Result<_>>()?)
    } else {
        None
    };
    let table = if config.method.eisenstein() { Some(EisensteinTable::new(&chi, r, prec)?) } else { None };
    let eis: Option<Vec<EmbeddingValues>> = match &table {
        Some(t) => Some(divisors.iter().map(|&d| eisenstein_values(&chi, t, d, prec)).collect::<Result<_>>()?),
        None => None,
    };

    // two-path agreement on full and partial values
    if let (Some(a), Some(e), Some(t)) = (&afe, &eis, &table) {
        let mut worst = BigReal::zero(prec);
        for ((&d, av), ev) in divisors.iter().zip(a).zip(e) {
            for (x, y) in av.values.iter().zip(&ev.values) {
                let dev = (x - y).abs();
                if dev > worst {
                    worst = dev;
                }
            }
            let factor = BigReal::from_rational(&imprimitivity_factor(d, r)?, prec);
            for (iota, emb) in embs.iter().enumerate() {
                for j in 0..h {
                    let pa = partial_from_embeddings(&av.values, j, iota as u32).scale(&factor);
                    let pe = t.partial(&chi, emb, d, j)?;
                    let dev = (&pa - &pe).abs();
                    if dev > worst {
                        worst = dev;
                    }
                }
            }
        }
        let dev = worst.log2_approx();
        report.cross_path_dev = finite(dev);
        let limit = -((prec / 3) as f64);
        report.record(
            "two_path_agreement",
            dev < limit,
            format!("max |AFE - Eisenstein| = 2^{dev:.1}, limit 2^{limit}"),
        );
    } else {
        report.checks.push(Check {
            name: "two_path_agreement".into(),
            status: Status::Skipped,
            evidence: "single method".into(),
        });
    }

    let primary: &Vec<EmbeddingValues> = afe.as_ref().or(eis.as_ref()).expect("at least one method");

    if let Some(a) = &afe {
        let mut worst_unit = 0f64;
        let mut worst_sign = 0f64;
        for (&d, av) in divisors.iter().zip(a) {
            for res in av.afe.as_ref().unwrap() {
                let w = &res.root_number;
                worst_unit = worst_unit.max((w.abs().to_f64() - 1.0).abs());
                worst_sign = worst_sign.max((w - &BigComplex::one(w.precision())).abs().to_f64());
                report.root_numbers.push(RootNumber { d, iota: 0, re: w.re.to_decimal(30), im: w.im.to_decimal(30) });
            }
            for (iota, rn) in report.root_numbers.iter_mut().rev().take(h as usize).rev().enumerate() {
                rn.iota = iota as u32;
            }
        }
        let lim = 2f64.powi(-48);
        report.record("root_number_unitary", worst_unit < lim, format!("max ||w| - 1| = 2^{:.1}", log2_f(worst_unit)));
        report.record("root_number_plus_one", worst_sign < lim, format!("max |w - 1| = 2^{:.1}", log2_f(worst_sign)));
    }

    let padic = PadicEmbedding::new(&chi, config.dyadic_prec)?;
    let base = scale_msl(&primary[0].values, 1, &omega);
    let mut ladder_ok = true;
    let mut ladder_evidence = Vec::new();
    let mut abs_ok = true;
    let mut abs_evidence = Vec::new();
    let mut worst_residual = f64::NEG_INFINITY;
    for (&d, vals) in divisors.iter().zip(primary) {
        let msl = scale_msl(&vals.values, d, &omega);
        let phi_vals: Vec<BigComplex> = msl.iter().zip(&base).map(|(m, b)| m / b).collect();
        let rec = reconstruct_with_bound(&phi_vals, &embs, &chi, config.denom_bound)?;
        let resid = rec.residual.log2_approx();
        worst_residual = worst_residual.max(resid);
        let ord = padic.ord_t(&rec.value)?;
        let k_d = fam.k_of(d);
        if ord != k_d as i64 {
            ladder_ok = false;
        }
        ladder_evidence.push(format!("d={d}: ord={ord}, k_d={k_d}"));
        let msl_ord = if omega_abs.is_some() {
            let m = round_to_k(&msl[0], q, config.denom_bound)?;
            let v = padic.ord_t(&TElement::from_k(chi.t_field().clone(), m.value.clone()))?;
            if v != k_d as i64 - 1 {
                abs_ok = false;
            }
            abs_evidence.push(format!("d={d}: msl={}, ord={v}", k_string(&m.value)));
            Some(v)
        } else {
            None
        };
        let factor = imprimitivity_factor(d, r)?;
        let lambda: Vec<String> = rec.value.coeffs.iter().map(|c| k_string(&c.scale(&factor))).collect();
        let sd = BigReal::from_i64(d as i64, prec).sqrt().to_f64();
        let err = vals.error_bounds.iter().cloned().fold(0.0, f64::max) * sd / omega.abs().to_f64();
        report.divisors.push(DivisorRow {
            d,
            k_d,
            msl_re: msl.iter().map(|m| m.re.to_decimal(40)).collect(),
            msl_im: msl.iter().map(|m| m.im.to_decimal(40)).collect(),
            err: finite(log2_f(err)),
            phi_coeffs: rec.value.coeffs.iter().map(k_string).collect(),
            lambda_coeffs: lambda,
            ord_p: ord,
            msl_ord,
            recognition_residual_log2: finite(resid),
        });
    }
    report.record("valuation_ladder", ladder_ok, ladder_evidence.join("; "));
    let res_limit = -((prec / 3) as f64);
    report.record(
        "recognition_residual",
        worst_residual < res_limit,
        format!("max residual 2^{worst_residual:.1}, limit 2^{res_limit}"),
    );
    if omega_abs.is_some() {
        report.record("absolute_normalization", abs_ok, abs_evidence.join("; "));
    } else {
        report.checks.push(Check {
            name: "absolute_normalization".into(),
            status: Status::Skipped,
            evidence: "no pinned minimal model".into(),
        });
    }

    let top = primary.last().unwrap();
    let (margin_ok, evidence) = nonvanishing_margin(&top.values, &top.error_bounds);
    report.record("nonvanishing_margin", margin_ok, evidence);

    let (s, even) = d_r_parity(&fam);
    report.record("d_r_parity", even, format!("sum of proper divisors = {s}"));

    if h == 1 {
        let res = finite_level_identity(&chi, r, prec)?;
        let lim = -((prec / 3) as f64);
        report.record("finite_level_identity", res < lim, format!("residual 2^{res:.1}"));
    }

    report.runtime_ms = start.elapsed().as_millis();
    Ok(report)
}

fn reconstruct_with_bound(
    values: &[BigComplex],
    embs: &[crate::hecke::CharacterEmbedding],
    chi: &GrossCharacter,
    start: u64,
) -> Result<crate::recognition::Recognized<TElement>> {
    let mut bound = start;
    loop {
        match reconstruct_t_element(values, embs, chi.t_field(), bound) {
            Err(Error::RecognitionFailed(_)) if bound < MAX_DENOM_BOUND => bound = (bound * 2).min(MAX_DENOM_BOUND),
            other => return other,
        }
    }
}

/// `|∏_ι L^ι| > 10·(accumulated error)`, with the error of the product bounded by
/// `∏(|L^ι| + e_ι) - ∏|L^ι|`.
pub fn nonvanishing_margin(values: &[BigComplex], errors: &[f64]) -> (bool, String) {
    // log-domain to keep tiny bounds meaningful
    let logs: Vec<f64> = values.iter().map(|v| v.abs().log2_approx()).collect();
    let log_prod: f64 = logs.iter().sum();
    let rel: f64 = values.iter().zip(errors).map(|(v, e)| e / v.abs().to_f64()).sum();
    let log_err = log_prod + log2_f(rel * 1.01);
    let ok = log_prod > log_err + 10f64.log2();
    (ok, format!("log2 |∏ L| = {log_prod:.2}, log2 error = {log_err:.1}"))
}

/// Residual (log2) of `Σ_{d|R} L_R(φ̄_d, 1) = 2^k·Ψ_{O_K, R}` for `h = 1`, the left side from the
/// functional equation and the right side from the division-value trace.
pub fn finite_level_identity(chi: &GrossCharacter, r: u64, prec: usize) -> Result<f64> {
    if chi.h() != 1 {
        return Err(Error::InvalidInput("the finite-level identity is exact only for h = 1".into()));
    }
    let fam = validate_twist(&chi.field(), r)?;
    if r <= 1 {
        return Err(Error::InvalidInput("R must be a nontrivial family member".into()));
    }
    let mut lhs = BigComplex::zero(prec);
    for d in fam.divisors() {
        let v = &l_values_all_embeddings(chi, d, prec)?[0].value;
        lhs = lhs + v.scale(&BigReal::from_rational(&imprimitivity_factor(d, r)?, prec));
    }
    let psi = psi_sum(chi, r, &chi.field().unit_ideal(), prec)?;
    let rhs = psi.scale(&BigReal::from_i64(1 << fam.k(), prec));
    Ok((&lhs - &rhs).abs().log2_approx())
}

/// Stretch check: `Ψ_{O_K, R}/Ω` as an algebraic number and its 2-adic valuations.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PsiIntegrality {
    pub polynomial: Vec<String>,
    /// Valuations of the roots in `Q̄_2`, from the Newton polygon, as reduced fractions.
    pub root_ords: Vec<String>,
    pub integral: bool,
}

/// Newton polygon slopes at 2 of an integer polynomial (low to high): root valuations with multiplicity.
pub fn newton_slopes_2(poly: &[BigInt]) -> Vec<BigRational> {
    let pts: Vec<(i64, i64)> = poly
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.is_zero())
        .map(|(i, c)| (i as i64, c.trailing_zeros().unwrap_or(0) as i64))
        .collect();
    let mut hull: Vec<(i64, i64)> = Vec::new();
    for p in pts {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            // keep the lower convex hull
            if (b.1 - a.1) * (p.0 - a.0) >= (p.1 - a.1) * (b.0 - a.0) {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    let mut out = Vec::new();
    if poly.first().is_some_and(Zero::is_zero) {
        // x = 0 roots have infinite valuation; not expected for nonzero values
        return out;
    }
    for w in hull.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        let slope = BigRational::new(BigInt::from(y0 - y1), BigInt::from(x1 - x0));
        for _ in 0..(x1 - x0) {
            out.push(slope.clone());
        }
    }
    out
}

pub fn algebraic_2adic_ords(x: &BigComplex, degree: usize, height: u64) -> Result<PsiIntegrality> {
    let poly = algdep(x, degree, height)?;
    let ords = newton_slopes_2(&poly);
    let integral = ords.iter().all(|o| !o.is_negative());
    Ok(PsiIntegrality {
        polynomial: poly.iter().map(|c| c.to_string()).collect(),
        root_ords: ords.iter().map(|o| o.to_string()).collect(),
        integral,
    })
}

/// `Ψ_{O_K,R}` with the builtin model's period, for `h = 1`.
pub fn psi_value(q: u64, r: u64, prec: usize) -> Result<BigComplex> {
    let chi = character(q)?;
    let omega = absolute_omega(&chi, prec).ok_or(Error::UnsupportedQ(q))?;
    Ok(&psi_sum(&chi, r, &chi.field().unit_ideal(), prec)? / &omega)
}

/// `Ψ_{O_K,R}` recognized with degree ≤ 4 and its 2-adic valuations.
pub fn psi_integrality_spotcheck(q: u64, r: u64, prec: usize) -> Result<PsiIntegrality> {
    algebraic_2adic_ords(&psi_value(q, r, prec)?, 4, 1 << 40)
}

/// Like `run_verification`, but the first failed check becomes `CheckFailed`.
pub fn verify_theorem(q: u64, r: u64, config: &RunConfig) -> Result<VerificationReport> {
    let report = run_verification(q, r, config)?;
    match report.first_failure() {
        Some(c) => Err(Error::CheckFailed(format!("{}: {}", c.name, c.evidence))),
        None => Ok(report),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_membership() {
        let k = ImagQuadField::new(7).unwrap();
        let t = validate_twist(&k, 5).unwrap();
        assert_eq!(t.k(), 1);
        assert!(matches!(validate_twist(&k, 29), Err(Error::NotInFamily { r: 29, .. })));
        assert_eq!(validate_twist(&k, 1).unwrap().k(), 0);
        assert!(validate_twist(&k, 25).is_err());
        assert!(validate_twist(&k, 3).is_err());
        let t = validate_twist(&k, 65).unwrap();
        assert_eq!(t.divisors(), vec![1, 5, 13, 65]);
        assert_eq!(t.k_of(65), 2);
        assert_eq!(t.k_of(13), 1);
    }

    #[test]
    fn subset_sign_sums_exhaustive() {
        for k in 0..=6usize {
            for mask in 0u32..1 << k {
                let signs: Vec<i8> = (0..k).map(|i| if mask >> i & 1 == 1 { -1 } else { 1 }).collect();
                let expect = if mask == 0 { 1i64 << k } else { 0 };
                assert_eq!(galois_sqrt_sum(&signs), expect);
            }
        }
        assert_eq!(galois_sqrt_sum(&[]), 1);
        assert_eq!(galois_sqrt_sum(&[1, 1]), 4);
        assert_eq!(galois_sqrt_sum(&[1, -1]), 0);
    }

    #[test]
    fn family_up_to_100() {
        let k = ImagQuadField::new(7).unwrap();
        let rs: Vec<u64> = enumerate_family(&k, 100, 3).iter().map(|t| t.r).collect();
        assert_eq!(rs, vec![5, 13, 17, 41, 61, 65, 73, 85, 89, 97]);
        let rs: Vec<u64> = enumerate_family(&k, 100, 1).iter().map(|t| t.r).collect();
        assert_eq!(rs, vec![5, 13, 17, 41, 61, 73, 89, 97]);
    }

    #[test]
    fn parity_of_proper_divisors() {
        let k = ImagQuadField::new(7).unwrap();
        for r in [5u64, 13, 65, 85, 5 * 13 * 17] {
            assert!(d_r_parity(&validate_twist(&k, r).unwrap()).1);
        }
    }

    #[test]
    fn msl_methods_agree() {
        let chi = character(7).unwrap();
        let omega = absolute_omega(&chi, 192).unwrap();
        let a = compute_msl(&chi, 1, crate::lfunc::Method::Afe, &omega, 192).unwrap();
        let e = compute_msl(&chi, 1, crate::lfunc::Method::Eisenstein, &omega, 192).unwrap();
        assert!((&a[0] - &e[0]).abs() < BigReal::pow2(-64, 192));
        let half = round_to_k(&a[0], 7, DEFAULT_DENOM_BOUND).unwrap().value;
        assert_eq!(half, KElement::from_rationals(7, BigRational::new(1.into(), 2.into()), BigRational::zero()));
    }

    #[test]
    fn phi_is_independent_of_omega() {
        use crate::cmpoints::partial_l_eisenstein_scaled;
        let p = 160;
        let chi = character(23).unwrap();
        let embs = chi.embeddings(p);
        let padic = PadicEmbedding::new(&chi, DEFAULT_PRECISION).unwrap();
        let phi_at = |omega: &BigComplex| {
            let full = |d: u64| -> Vec<BigComplex> {
                embs.iter()
                    .map(|emb| {
                        let mut acc = BigComplex::zero(p);
                        for j in 0..3 {
                            acc = acc + partial_l_eisenstein_scaled(&chi, emb, d, 5, j, omega, p).unwrap();
                        }
                        let f = BigReal::from_rational(&imprimitivity_factor(d, 5).unwrap(), p);
                        acc.scale(&(BigReal::one(p) / f))
                    })
                    .collect()
            };
            let (l1, l5) = (full(1), full(5));
            let sd = BigReal::from_i64(5, p).sqrt();
            let ratios: Vec<BigComplex> = l5.iter().zip(&l1).map(|(a, b)| (a / b).scale(&sd)).collect();
            reconstruct_t_element(&ratios, &embs, chi.t_field(), DEFAULT_DENOM_BOUND).unwrap().value
        };
        let unit = phi_at(&BigComplex::one(p));
        let scaled = phi_at(&BigComplex::from_f64(0.8137, -1.4412, p));
        assert_eq!(unit, scaled);
        assert_eq!(padic.ord_t(&unit).unwrap(), 1);
    }

    #[test]
    fn finite_level_identity_preconditions() {
        let chi = character(7).unwrap();
        assert!(finite_level_identity(&chi, 1, 128).is_err());
        assert!(finite_level_identity(&character(23).unwrap(), 5, 128).is_err());
        assert!(finite_level_identity(&chi, 5, 192).unwrap() < -64.0);
    }

    #[test]
    fn psi_spotcheck_controls() {
        let psi = psi_value(7, 5, 256).unwrap();
        let base = algebraic_2adic_ords(&psi, 4, 1 << 40).unwrap();
        assert!(base.integral);
        let doubled = algebraic_2adic_ords(&psi.scale(&BigReal::from_i64(2, 256)), 4, 1 << 40).unwrap();
        let shift = |v: &[String]| v.iter().map(|s| s.parse::<BigRational>().unwrap()).collect::<Vec<_>>();
        let mut a: Vec<BigRational> =
            shift(&base.root_ords).into_iter().map(|x| x + BigRational::from_integer(1.into())).collect();
        let mut b = shift(&doubled.root_ords);
        a.sort();
        b.sort();
        assert_eq!(a, b);
        let control = BigComplex::from_real(BigReal::pi(256).ln());
        assert!(matches!(algebraic_2adic_ords(&control, 4, 1 << 40), Err(Error::NoRelationFound(_))));
    }

    #[test]
    fn newton_polygon() {
        let big = |v: &[i64]| v.iter().map(|&c| BigInt::from(c)).collect::<Vec<_>>();
        // x² - 2: both roots have valuation 1/2
        let s = newton_slopes_2(&big(&[-2, 0, 1]));
        assert_eq!(s, vec![BigRational::new(1.into(), 2.into()); 2]);
        // 2x - 1: root 1/2
        assert_eq!(newton_slopes_2(&big(&[-1, 2])), vec![BigRational::from_integer((-1).into())]);
        // (x - 4)(x - 3)
        let mut s = newton_slopes_2(&big(&[12, -7, 1]));
        s.sort();
        assert_eq!(s, vec![BigRational::from_integer(0.into()), BigRational::from_integer(2.into())]);
    }
}
