//! Versioned plain-text cache.
//!
//! Every file starts with one header line naming the format version, the code
//! version and the parameters it was computed under. A file whose header does
//! not match the request exactly is treated as absent and overwritten.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use cmtwist::numerics::{BigComplex, BigReal};
use num_bigint::BigInt;

const FORMAT: u32 = 1;

pub struct Cache {
    dir: PathBuf,
    writer: Mutex<()>,
    hits: AtomicUsize,
    misses: AtomicUsize,
}

fn header(kind: &str, fields: &[(&str, String)]) -> String {
    let mut h = format!("# cmtwist-cache format={FORMAT} version={} kind={kind}", env!("CARGO_PKG_VERSION"));
    for (k, v) in fields {
        h.push_str(&format!(" {k}={v}"));
    }
    h
}

impl Cache {
    pub fn open(dir: &Path) -> std::io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Cache {
            dir: dir.to_path_buf(),
            writer: Mutex::new(()),
            hits: AtomicUsize::new(0),
            misses: AtomicUsize::new(0),
        })
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn misses(&self) -> usize {
        self.misses.load(Ordering::Relaxed)
    }

    fn read(&self, name: &str, header: &str) -> Option<String> {
        let found = fs::read_to_string(self.dir.join(name))
            .ok()
            .and_then(|text| text.split_once('\n').filter(|(h, _)| *h == header).map(|(_, body)| body.to_string()));
        let counter = if found.is_some() { &self.hits } else { &self.misses };
        counter.fetch_add(1, Ordering::Relaxed);
        found
    }

    /// Writes through a temporary file so that readers never see a partial entry.
    fn write(&self, name: &str, header: &str, body: &str) -> std::io::Result<()> {
        let _guard = self.writer.lock().unwrap_or_else(|e| e.into_inner());
        let tmp = self.dir.join(format!("{name}.tmp"));
        let mut f = fs::File::create(&tmp)?;
        writeln!(f, "{header}")?;
        f.write_all(body.as_bytes())?;
        f.sync_all()?;
        fs::rename(tmp, self.dir.join(name))
    }

    pub fn class_polynomial(
        &self,
        q: u64,
        compute: impl FnOnce() -> cmtwist::Result<Vec<BigInt>>,
    ) -> cmtwist::Result<Vec<BigInt>> {
        let name = format!("classpoly-q{q}.txt");
        let h = header("class-polynomial", &[("q", q.to_string())]);
        if let Some(body) = self.read(&name, &h) {
            let parsed: Option<Vec<BigInt>> = body.split_whitespace().map(|t| t.parse().ok()).collect();
            if let Some(p) = parsed.filter(|p| !p.is_empty()) {
                return Ok(p);
            }
        }
        let poly = compute()?;
        let body = poly.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" ") + "\n";
        self.write(&name, &h, &body).map_err(io_err)?;
        Ok(poly)
    }

    /// Coefficients `a_1..a_len`, one `n re im` line each.
    pub fn series(
        &self,
        key: SeriesKey,
        len: usize,
        compute: impl FnOnce() -> cmtwist::Result<Vec<BigComplex>>,
    ) -> cmtwist::Result<Vec<BigComplex>> {
        let name = format!("series-q{}-d{}-R{}-i{}-p{}.txt", key.q, key.d, key.r, key.iota, key.prec);
        let h = header(
            "series",
            &[
                ("q", key.q.to_string()),
                ("iota", key.iota.to_string()),
                ("d", key.d.to_string()),
                ("R", key.r.to_string()),
                ("P", key.prec.to_string()),
            ],
        );
        if let Some(body) = self.read(&name, &h) {
            if let Some(coeffs) = parse_series(&body, key.prec).filter(|c| c.len() >= len) {
                return Ok(coeffs.into_iter().take(len).collect());
            }
        }
        let coeffs = compute()?;
        let digits = (key.prec as f64 * std::f64::consts::LOG10_2).ceil() as usize + 2;
        let mut body = String::new();
        for (n, c) in coeffs.iter().enumerate() {
            body.push_str(&format!("{} {} {}\n", n + 1, c.re.to_decimal(digits), c.im.to_decimal(digits)));
        }
        self.write(&name, &h, &body).map_err(io_err)?;
        Ok(coeffs)
    }

    /// A serialized report for `(q, R)` under the given numerical settings.
    pub fn report(&self, q: u64, r: u64, settings: &str) -> Option<String> {
        self.read(&format!("report-q{q}-R{r}.json"), &header("report", &report_fields(q, r, settings)))
    }

    pub fn store_report(&self, q: u64, r: u64, settings: &str, json: &str) -> cmtwist::Result<()> {
        let h = header("report", &report_fields(q, r, settings));
        self.write(&format!("report-q{q}-R{r}.json"), &h, json).map_err(io_err)
    }
}

fn report_fields(q: u64, r: u64, settings: &str) -> Vec<(&'static str, String)> {
    vec![("q", q.to_string()), ("R", r.to_string()), ("settings", settings.to_string())]
}

#[derive(Debug, Clone, Copy)]
pub struct SeriesKey {
    pub q: u64,
    pub iota: u32,
    pub d: u64,
    /// Level whose Euler factors were removed; `1` for the primitive series.
    pub r: u64,
    pub prec: usize,
}

fn parse_series(body: &str, prec: usize) -> Option<Vec<BigComplex>> {
    let mut out = Vec::new();
    for (i, line) in body.lines().enumerate() {
        let mut it = line.split_whitespace();
        let n: usize = it.next()?.parse().ok()?;
        if n != i + 1 {
            return None;
        }
        let re = BigReal::from_decimal(it.next()?, prec).ok()?;
        let im = BigReal::from_decimal(it.next()?, prec).ok()?;
        out.push(BigComplex::new(re, im));
    }
    Some(out)
}

fn io_err(e: std::io::Error) -> cmtwist::Error {
    cmtwist::Error::InvalidInput(format!("cache: {e}"))
}
