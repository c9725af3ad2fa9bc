mod cache;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use cache::{Cache, SeriesKey};
use cmtwist::cmpoints::EisensteinTable;
use cmtwist::curves::{builtin_minimal_model, hilbert_class_polynomial, period_lattice};
use cmtwist::dyadic::PadicEmbedding;
use cmtwist::hecke::{twisted_coefficients, CoefficientSeries, TElement};
use cmtwist::induction::{
    absolute_omega, character, enumerate_family, run_verification, validate_twist, MethodChoice, OutputFormat,
    RunConfig, VerificationReport,
};
use cmtwist::lfunc::{l_value_afe, required_terms, Method};
use cmtwist::numerics::{BigComplex, BigReal};
use cmtwist::quadfield::{ClassGroup, ImagQuadField};
use cmtwist::recognition::{round_to_k, DEFAULT_DENOM_BOUND};
use cmtwist::{Error, Result};

/// Guard bits carried by the coefficient series on top of the working precision.
const SERIES_GUARD: usize = 32;

#[derive(Parser)]
#[command(name = "cmtwist", version, about = "Central L-values of quadratic twists of CM elliptic curves")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every check for one twist parameter R.
    Verify {
        #[arg(long)]
        q: u64,
        #[arg(long = "R")]
        r: u64,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        opts: Opts,
    },
    /// Print L(φ̄_d, 1) for every embedding.
    Lvalue {
        #[arg(long)]
        q: u64,
        #[arg(long)]
        d: u64,
        /// Twist parameter that d must divide; defaults to d.
        #[arg(long = "R")]
        r: Option<u64>,
        #[command(flatten)]
        opts: Opts,
    },
    /// Verify every R in the family up to the given bounds.
    Scan {
        #[arg(long)]
        q: u64,
        #[arg(long = "max-R")]
        max_r: u64,
        #[arg(long = "max-k", default_value_t = 3)]
        max_k: usize,
        #[command(flatten)]
        opts: Opts,
    },
    /// Quick end-to-end checks on small fields.
    Selftest {
        #[command(flatten)]
        opts: Opts,
    },
}

#[derive(Args, Clone)]
struct Opts {
    #[arg(long, value_enum, default_value_t = MethodArg::Both)]
    method: MethodArg,
    #[arg(long, default_value_t = 192)]
    prec: usize,
    #[arg(long = "dyadic-prec", default_value_t = cmtwist::dyadic::DEFAULT_PRECISION)]
    dyadic_prec: u32,
    #[arg(long = "denom-bound", default_value_t = DEFAULT_DENOM_BOUND)]
    denom_bound: u64,
    #[arg(long = "cache-dir", env = "CMTWIST_CACHE_DIR")]
    cache_dir: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Afe,
    Eisenstein,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Tsv,
}

impl Opts {
    fn config(&self) -> Result<RunConfig> {
        let config = RunConfig {
            prec: self.prec,
            dyadic_prec: self.dyadic_prec,
            denom_bound: self.denom_bound,
            method: match self.method {
                MethodArg::Afe => MethodChoice::Afe,
                MethodArg::Eisenstein => MethodChoice::Eisenstein,
                MethodArg::Both => MethodChoice::Both,
            },
            cache_dir: self.cache_dir.as_ref().map(|p| p.display().to_string()),
            format: match self.format {
                FormatArg::Json => OutputFormat::Json,
                FormatArg::Tsv => OutputFormat::Tsv,
            },
            jobs: self.jobs,
        };
        config.validate()?;
        if config.jobs == 0 {
            return Err(Error::InvalidInput("--jobs must be at least 1".into()));
        }
        Ok(config)
    }

    fn cache(&self) -> Result<Option<Cache>> {
        self.cache_dir
            .as_ref()
            .map(|d| Cache::open(d).map_err(|e| Error::InvalidInput(format!("cache directory {}: {e}", d.display()))))
            .transpose()
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::CheckFailed(_) => 2,
        Error::PrecisionLoss { .. }
        | Error::Overflow(_)
        | Error::AgmNonConvergence(_)
        | Error::SingularSolve
        | Error::InconsistentFunctionalEquation(_)
        | Error::RoundingMarginExceeded(_)
        | Error::NotHomotheticToOK(_)
        | Error::PrecisionExhausted(_)
        | Error::RecognitionFailed(_)
        | Error::NoRelationFound(_) => 3,
        _ => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    let opts = match &cli.command {
        Command::Verify { opts, .. }
        | Command::Lvalue { opts, .. }
        | Command::Scan { opts, .. }
        | Command::Selftest { opts } => opts,
    };
    let config = opts.config()?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build_global()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    let cache = opts.cache()?;
    match cli.command {
        Command::Verify { q, r, out, .. } => cmd_verify(q, r, out, &config, cache.as_ref()),
        Command::Lvalue { q, d, r, .. } => cmd_lvalue(q, d, r.unwrap_or(d), &config, cache.as_ref()),
        Command::Scan { q, max_r, max_k, .. } => cmd_scan(q, max_r, max_k, &config, cache.as_ref()),
        Command::Selftest { .. } => cmd_selftest(&config, cache.as_ref()),
    }
}

/// Numerical settings a cached report must match to be reused.
fn settings_key(config: &RunConfig) -> String {
    let method = serde_json::to_value(config.method).expect("method serializes");
    format!("P{}-M{}-B{}-{}", config.prec, config.dyadic_prec, config.denom_bound, method.as_str().unwrap_or("both"))
}

fn render(report: &VerificationReport, format: OutputFormat) -> String {
    match format {
        OutputFormat::Json => report.to_json() + "\n",
        OutputFormat::Tsv => report.to_tsv(),
    }
}

fn cmd_verify(q: u64, r: u64, out: Option<PathBuf>, config: &RunConfig, cache: Option<&Cache>) -> Result<u8> {
    let report = run_verification(q, r, config)?;
    if let Some(c) = cache {
        c.store_report(q, r, &settings_key(config), &report.to_json())?;
    }
    let text = render(&report, config.format);
    match out {
        Some(path) => {
            std::fs::write(&path, text).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?
        }
        None => print!("{text}"),
    }
    match report.first_failure() {
        Some(c) => {
            eprintln!("check failed: {}: {}", c.name, c.evidence);
            Ok(2)
        }
        None => Ok(0),
    }
}

#[derive(Serialize)]
struct LValueRow {
    q: u64,
    d: u64,
    #[serde(rename = "R")]
    r: u64,
    iota: u32,
    method: Method,
    re: String,
    im: String,
    err_log2: Option<f64>,
    root_number: Option<[String; 2]>,
    /// `√d·L/Ω` recognized in K, when an absolute period is available.
    msl: Option<String>,
    msl_ord: Option<i64>,
}

fn cmd_lvalue(q: u64, d: u64, r: u64, config: &RunConfig, cache: Option<&Cache>) -> Result<u8> {
    let chi = character(q)?;
    validate_twist(&chi.field(), r)?;
    if d == 0 || !r.is_multiple_of(d) {
        return Err(Error::InvalidInput(format!("d = {d} does not divide R = {r}")));
    }
    let prec = config.prec;
    let digits = (prec as f64 * std::f64::consts::LOG10_2) as usize;
    let mut rows = Vec::new();
    let mut values = Vec::new();
    let mut push = |iota: u32, method: Method, value: &BigComplex, err: f64, w: Option<&BigComplex>| {
        values.push(value.clone());
        rows.push(LValueRow {
            q,
            d,
            r,
            iota,
            method,
            re: value.re.to_decimal(digits),
            im: value.im.to_decimal(digits),
            err_log2: (err > 0.0).then(|| err.log2()),
            root_number: w.map(|w| [w.re.to_decimal(20), w.im.to_decimal(20)]),
            msl: None,
            msl_ord: None,
        });
    };
    if matches!(config.method, MethodChoice::Afe | MethodChoice::Both) {
        let n = required_terms(d, q, prec);
        for emb in chi.embeddings(prec + SERIES_GUARD) {
            let key = SeriesKey { q, iota: emb.iota, d, r: 1, prec: prec + SERIES_GUARD };
            let compute = || Ok(twisted_coefficients(&chi, &emb, d, d, n, false)?.coeffs.split_off(1));
            let tail = match cache {
                Some(c) => c.series(key, n, compute)?,
                None => compute()?,
            };
            let mut coeffs = vec![BigComplex::zero(prec + SERIES_GUARD)];
            coeffs.extend(tail);
            let series =
                CoefficientSeries { q, iota: emb.iota, d, imprimitive_at: 1, conductor_norm: d * d * q, coeffs };
            let res = l_value_afe(&series)?;
            push(emb.iota, Method::Afe, &res.value, res.error_bound.to_f64(), Some(&res.root_number));
        }
    }
    if matches!(config.method, MethodChoice::Eisenstein | MethodChoice::Both) {
        let table = EisensteinTable::new(&chi, d, prec)?;
        for emb in chi.embeddings(prec) {
            let v = table.full(&chi, &emb, d)?.with_precision(prec);
            let err = 2f64.powi(48 - prec as i32) * v.abs().to_f64().max(1.0);
            push(emb.iota, Method::Eisenstein, &v, err, None);
        }
    }
    if let Some(omega) = absolute_omega(&chi, prec) {
        let padic = PadicEmbedding::new(&chi, config.dyadic_prec)?;
        let sd = BigReal::from_i64(d as i64, prec).sqrt();
        for (row, v) in rows.iter_mut().zip(&values) {
            let msl = (v / &omega).scale(&sd);
            let k = round_to_k(&msl, q, config.denom_bound)?.value;
            row.msl_ord = Some(padic.ord_t(&TElement::from_k(chi.t_field().clone(), k.clone()))?);
            row.msl = Some(format!("{} + {}*w", k.a, k.b));
        }
    }
    match config.format {
        OutputFormat::Json => println!("{}", serde_json::to_string_pretty(&rows).expect("rows serialize")),
        OutputFormat::Tsv => {
            println!("q\td\tR\tiota\tmethod\tre\tim\terr_log2\tw_re\tw_im\tmsl\tmsl_ord");
            for row in &rows {
                let method = serde_json::to_value(row.method).expect("method serializes");
                let [w_re, w_im] = row.root_number.clone().unwrap_or_default();
                println!(
                    "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                    row.q,
                    row.d,
                    row.r,
                    row.iota,
                    method.as_str().unwrap_or_default(),
                    row.re,
                    row.im,
                    row.err_log2.map(|e| format!("{e:.1}")).unwrap_or_default(),
                    w_re,
                    w_im,
                    row.msl.clone().unwrap_or_default(),
                    row.msl_ord.map(|o| o.to_string()).unwrap_or_default(),
                );
            }
        }
    }
    Ok(0)
}

#[derive(Serialize)]
struct ScanRow {
    #[serde(rename = "R")]
    r: u64,
    k: usize,
    status: &'static str,
    cached: bool,
    detail: String,
}

fn cmd_scan(q: u64, max_r: u64, max_k: usize, config: &RunConfig, cache: Option<&Cache>) -> Result<u8> {
    let field = ImagQuadField::new(q)?;
    let settings = settings_key(config);
    let mut rows = Vec::new();
    let mut code = 0u8;
    for member in enumerate_family(&field, max_r, max_k) {
        let r = member.r;
        let cached = cache
            .and_then(|c| c.report(q, r, &settings))
            .and_then(|text| serde_json::from_str::<VerificationReport>(&text).ok());
        let (outcome, hit) = match cached {
            Some(report) => (Ok(report), true),
            None => (run_verification(q, r, config), false),
        };
        let row = match outcome {
            Ok(report) => {
                if let (Some(c), false) = (cache, hit) {
                    c.store_report(q, r, &settings, &report.to_json())?;
                }
                match report.first_failure() {
                    None => ScanRow { r, k: member.k(), status: "pass", cached: hit, detail: String::new() },
                    Some(c) => {
                        code = code.max(2);
                        ScanRow {
                            r,
                            k: member.k(),
                            status: "fail",
                            cached: hit,
                            detail: format!("{}: {}", c.name, c.evidence),
                        }
                    }
                }
            }
            Err(e) => {
                code = code.max(exit_code(&e));
                ScanRow { r, k: member.k(), status: "error", cached: false, detail: e.to_string() }
            }
        };
        rows.push(row);
    }
    let hits = rows.iter().filter(|r| r.cached).count();
    eprintln!("scan: {} rows, {} cached, {} computed", rows.len(), hits, rows.len() - hits);
    if let Some(c) = cache {
        eprintln!("cache: {} hits, {} misses", c.hits(), c.misses());
    }
    match config.format {
        OutputFormat::Json => println!("{}", serde_json::to_string_pretty(&rows).expect("rows serialize")),
        OutputFormat::Tsv => {
            println!("R\tk\tstatus\tcached\tdetail");
            for row in &rows {
                println!("{}\t{}\t{}\t{}\t{}", row.r, row.k, row.status, row.cached, row.detail.replace('\t', " "));
            }
        }
    }
    Ok(code)
}

fn cmd_selftest(config: &RunConfig, cache: Option<&Cache>) -> Result<u8> {
    let prec = config.prec;
    let mut failed = false;
    let mut report = |name: &str, outcome: Result<(bool, String)>| {
        let (ok, evidence) = outcome.unwrap_or_else(|e| (false, e.to_string()));
        failed |= !ok;
        println!("{}\t{name}\t{evidence}", if ok { "PASS" } else { "FAIL" });
    };

    report(
        "class_numbers",
        (|| {
            let hs = [7u64, 23, 31, 47, 71]
                .iter()
                .map(|&q| Ok(ClassGroup::new(ImagQuadField::new(q)?)?.order()))
                .collect::<Result<Vec<_>>>()?;
            Ok((hs == [1, 3, 3, 5, 7], format!("h = {hs:?} for q = 7, 23, 31, 47, 71")))
        })(),
    );

    report(
        "class_polynomials",
        (|| {
            let mut degrees = Vec::new();
            for q in [7u64, 23, 31] {
                let compute = || hilbert_class_polynomial(q, prec);
                let poly = match cache {
                    Some(c) => c.class_polynomial(q, compute)?,
                    None => compute()?,
                };
                degrees.push(poly.len() - 1);
                if q == 7 && poly != [3375.into(), 1.into()] {
                    return Ok((false, format!("H_-7 = {poly:?}")));
                }
            }
            Ok((degrees == [1, 3, 3], format!("degrees {degrees:?}")))
        })(),
    );

    report(
        "homothety_q23",
        (|| {
            let model = builtin_minimal_model(23, prec)?;
            let res = period_lattice(&model, 23, prec)?;
            Ok((true, format!("residual 2^{:.1}", res.homothety_residual.log2_approx())))
        })(),
    );

    report(
        "verify_q7_R5",
        (|| {
            let r = run_verification(7, 5, config)?;
            Ok(match r.first_failure() {
                None => (true, format!("{} checks", r.checks.len())),
                Some(c) => (false, format!("{}: {}", c.name, c.evidence)),
            })
        })(),
    );

    Ok(if failed { 2 } else { 0 })
}
