//! CSV schemas. Numbers are written in the shortest form that parses back
//! to the same `f64`, so resumed keys compare bit-exactly.

use std::fmt::Debug;
use std::path::Path;

use crate::error::{CliError, CliResult};

pub const FTLE_COLUMNS: [&str; 11] = [
    "alpha", "seed", "T", "N", "dt", "burn_in", "lambda_T", "iters", "residual", "converged", "wall_ms",
];
pub const FAILURE_COLUMNS: [&str; 3] = ["alpha", "seed", "error"];
pub const FTLE_VERB_COLUMNS: [&str; 7] = ["alpha", "T", "seed", "lambda_T", "iters", "residual", "converged"];
pub const STEER_COLUMNS: [&str; 7] = ["lambda_target", "kappa", "phi0", "f", "c", "lambda_measured", "abs_err"];
pub const WICK_COLUMNS: [&str; 6] = ["N", "m", "C_N", "emp_var", "se", "zscore"];

pub fn num(x: f64) -> String {
    format!("{x:?}")
}

/// One RFC-4180 line including the terminator.
pub fn csv_line<I, S>(fields: I) -> Vec<u8>
where
    I: IntoIterator<Item = S>,
    S: AsRef<[u8]>,
{
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
    w.write_record(fields).expect("writing to memory");
    w.into_inner().expect("writing to memory")
}

/// Writes a whole table to `path`.
pub fn write_table<R: AsRef<[String]>>(path: &Path, header: &[&str], rows: &[R]) -> CliResult<()> {
    let mut buf = csv_line(header);
    for r in rows {
        buf.extend(csv_line(r.as_ref()));
    }
    std::fs::write(path, buf).map_err(CliError::io(path))
}

/// Key of a sweep job: α by bit pattern, and the seed.
pub type JobKey = (u64, u64);

#[derive(Clone, Debug, PartialEq)]
pub struct FtleRecord {
    pub alpha: f64,
    pub seed: u64,
    pub horizon: f64,
    pub cutoff: usize,
    pub dt: f64,
    pub burn_in: f64,
    pub lambda: f64,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    pub wall_ms: Option<u64>,
}

impl FtleRecord {
    pub fn key(&self) -> JobKey {
        (self.alpha.to_bits(), self.seed)
    }

    pub fn fields(&self) -> Vec<String> {
        vec![
            num(self.alpha),
            self.seed.to_string(),
            num(self.horizon),
            self.cutoff.to_string(),
            num(self.dt),
            num(self.burn_in),
            num(self.lambda),
            self.iterations.to_string(),
            num(self.residual),
            self.converged.to_string(),
            self.wall_ms.map(|w| w.to_string()).unwrap_or_default(),
        ]
    }

    fn from_record(r: &csv::StringRecord) -> Result<Self, String> {
        if r.len() != FTLE_COLUMNS.len() {
            return Err(format!("expected {} fields, found {}", FTLE_COLUMNS.len(), r.len()));
        }
        Ok(Self {
            alpha: finite(&r[0])?,
            seed: int(&r[1])?,
            horizon: finite(&r[2])?,
            cutoff: int(&r[3])?,
            dt: finite(&r[4])?,
            burn_in: finite(&r[5])?,
            lambda: finite(&r[6])?,
            iterations: int(&r[7])?,
            residual: finite(&r[8])?,
            converged: r[9].parse().map_err(|_| format!("bad flag {:?}", &r[9]))?,
            wall_ms: if r[10].is_empty() { None } else { Some(int(&r[10])?) },
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FailureRecord {
    pub alpha: f64,
    pub seed: u64,
    pub error: String,
}

impl FailureRecord {
    pub fn key(&self) -> JobKey {
        (self.alpha.to_bits(), self.seed)
    }

    pub fn fields(&self) -> Vec<String> {
        // one physical line per record keeps the partial-line repair simple
        let msg = self.error.replace(['\r', '\n'], " ");
        vec![num(self.alpha), self.seed.to_string(), msg]
    }

    fn from_record(r: &csv::StringRecord) -> Result<Self, String> {
        if r.len() != FAILURE_COLUMNS.len() {
            return Err(format!("expected {} fields, found {}", FAILURE_COLUMNS.len(), r.len()));
        }
        Ok(Self {
            alpha: finite(&r[0])?,
            seed: int(&r[1])?,
            error: r[2].to_string(),
        })
    }
}

fn finite(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(format!("bad number {s:?}")),
    }
}

fn int<T: std::str::FromStr>(s: &str) -> Result<T, String> {
    s.parse().map_err(|_| format!("bad integer {s:?}"))
}

/// Rows of an existing table. A trailing line without terminator (an
/// interrupted write) is not part of the table; `complete_len` is the byte
/// length to keep.
#[derive(Clone, Debug, PartialEq)]
pub struct Table<R> {
    pub rows: Vec<R>,
    pub complete_len: usize,
}

fn parse_table<R: Debug>(
    text: &str,
    header: &[&str],
    row: impl Fn(&csv::StringRecord) -> Result<R, String>,
) -> Result<Table<R>, String> {
    let complete_len = text.rfind('\n').map_or(0, |i| i + 1);
    let body = &text[..complete_len];
    if body.is_empty() {
        return Ok(Table {
            rows: Vec::new(),
            complete_len: 0,
        });
    }
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(body.as_bytes());
    let got = rdr.headers().map_err(|e| e.to_string())?;
    if got.iter().ne(header.iter().copied()) {
        return Err(format!("header {:?} does not match {:?}", got, header));
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| e.to_string())?;
        rows.push(row(&rec).map_err(|e| format!("row {}: {e}", i + 1))?);
    }
    Ok(Table { rows, complete_len })
}

pub fn parse_ftle_csv(text: &str) -> Result<Table<FtleRecord>, String> {
    parse_table(text, &FTLE_COLUMNS, FtleRecord::from_record)
}

pub fn parse_failures_csv(text: &str) -> Result<Table<FailureRecord>, String> {
    parse_table(text, &FAILURE_COLUMNS, FailureRecord::from_record)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(alpha: f64, seed: u64) -> FtleRecord {
        FtleRecord {
            alpha,
            seed,
            horizon: 1.0,
            cutoff: 16,
            dt: 1e-3,
            burn_in: 0.5,
            lambda: -3.25e-7,
            iterations: 4,
            residual: 1e-12,
            converged: true,
            wall_ms: None,
        }
    }

    #[test]
    fn round_trip_and_partial_line() {
        let mut text = csv_line(FTLE_COLUMNS);
        text.extend(csv_line(rec(0.1, 3).fields()));
        text.extend(csv_line(rec(-2.0, 4).fields()));
        let full = String::from_utf8(text).unwrap();
        let t = parse_ftle_csv(&full).unwrap();
        assert_eq!(t.rows, vec![rec(0.1, 3), rec(-2.0, 4)]);
        assert_eq!(t.complete_len, full.len());

        let cut = &full[..full.len() - 5];
        let t = parse_ftle_csv(cut).unwrap();
        assert_eq!(t.rows, vec![rec(0.1, 3)]);
        assert!(full.starts_with(&cut[..t.complete_len]));
        assert_eq!(parse_ftle_csv("alpha,se").unwrap().complete_len, 0);
        assert!(parse_ftle_csv("a,b\r\n").is_err());
    }

    #[test]
    fn failure_messages_stay_on_one_line() {
        let f = FailureRecord {
            alpha: 1.0,
            seed: 2,
            error: "non-finite value, step 3\nat \"x\"".into(),
        };
        let mut text = csv_line(FAILURE_COLUMNS);
        text.extend(csv_line(f.fields()));
        let s = String::from_utf8(text).unwrap();
        assert_eq!(s.matches('\n').count(), 2);
        let back = parse_failures_csv(&s).unwrap();
        assert_eq!(back.rows[0].error, "non-finite value, step 3 at \"x\"");
    }
}
