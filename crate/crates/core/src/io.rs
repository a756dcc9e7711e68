//! Text format for fields and snapshot paths.
//!
//! Line 1 is a JSON header. Every further line is one snapshot:
//!
//! ```text
//! step,t,re(c_0),im(c_0),re(c_1),im(c_1),...
//! ```
//!
//! Coefficients are in storage order: `k` runs over `[-N, N]^d`
//! lexicographically with the first component slowest (`k = (-N, -N),
//! (-N, -N+1), …`). Numbers use the shortest representation that reads
//! back to the same `f64`.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ftle::PotentialPath;
use crate::torus::{SpectralField, TorusGrid};

pub const FORMAT: &str = "phi4-path";
pub const ORDERING: &str = "lexicographic k in [-N,N]^d, first component slowest";
const MAX_CUTOFF: usize = 512;

/// First line of a path file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathHeader {
    pub format: String,
    /// What the snapshots hold, e.g. `phi`, `z`, `q`, `field`.
    pub kind: String,
    pub dim: usize,
    pub cutoff: usize,
    pub points: usize,
    pub ordering: String,
    pub dt: f64,
    pub snapshots: usize,
    /// Free-form echo of the producing configuration.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<serde_json::Value>,
}

/// Snapshots of one field with their step indices and times.
#[derive(Clone, Debug)]
pub struct FieldPath {
    pub kind: String,
    pub dt: f64,
    pub config: Option<serde_json::Value>,
    pub steps: Vec<usize>,
    pub times: Vec<f64>,
    pub fields: Vec<SpectralField>,
}

impl FieldPath {
    pub fn new(kind: &str, dt: f64, steps: Vec<usize>, fields: Vec<SpectralField>) -> Result<Self> {
        if steps.len() != fields.len() || fields.is_empty() {
            return Err(Error::Misaligned {
                expected: steps.len(),
                found: fields.len(),
            });
        }
        let grid = fields[0].grid().clone();
        if fields.iter().any(|f| !TorusGrid::same(&grid, f.grid())) {
            return Err(Error::GridMismatch);
        }
        Ok(Self {
            kind: kind.to_string(),
            times: steps.iter().map(|&s| s as f64 * dt).collect(),
            dt,
            config: None,
            steps,
            fields,
        })
    }

    /// A single field at step 0.
    pub fn single(field: SpectralField) -> Self {
        Self {
            kind: "field".into(),
            dt: 1.0,
            config: None,
            steps: vec![0],
            times: vec![0.0],
            fields: vec![field],
        }
    }

    pub fn with_config(mut self, config: serde_json::Value) -> Self {
        self.config = Some(config);
        self
    }

    pub fn grid(&self) -> &Arc<TorusGrid> {
        self.fields[0].grid()
    }

    pub fn header(&self) -> PathHeader {
        let g = self.grid();
        PathHeader {
            format: FORMAT.into(),
            kind: self.kind.clone(),
            dim: g.dim(),
            cutoff: g.cutoff(),
            points: g.points(),
            ordering: ORDERING.into(),
            dt: self.dt,
            snapshots: self.fields.len(),
            config: self.config.clone(),
        }
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let header = serde_json::to_string(&self.header()).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        writeln!(w, "{header}")?;
        let mut line = String::new();
        for ((s, t), f) in self.steps.iter().zip(&self.times).zip(&self.fields) {
            line.clear();
            line.push_str(&format!("{s},{t:?}"));
            for c in f.coeffs() {
                line.push_str(&format!(",{:?},{:?}", c.re, c.im));
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(r: R) -> Result<Self> {
        let mut text = String::new();
        BufReader::new(r).read_to_string(&mut text)?;
        Self::parse(&text)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_from(std::fs::File::open(path)?)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, first) = lines.next().ok_or_else(|| parse_err(1, "empty input"))?;
        let header: PathHeader = serde_json::from_str(first).map_err(|e| parse_err(1, &e.to_string()))?;
        if header.format != FORMAT {
            return Err(parse_err(1, &format!("unknown format {:?}", header.format)));
        }
        if header.cutoff == 0 || header.cutoff > MAX_CUTOFF || header.points > 8 * header.cutoff + 16 {
            return Err(parse_err(1, "grid size out of range"));
        }
        if !(header.dt > 0.0 && header.dt.is_finite()) {
            return Err(parse_err(1, "dt must be positive"));
        }
        let grid = TorusGrid::with_points(header.dim, header.cutoff, header.points)
            .map_err(|e| parse_err(1, &e.to_string()))?;
        let width = 2 + 2 * grid.len();

        let mut steps = Vec::new();
        let mut times = Vec::new();
        let mut fields = Vec::new();
        for (i, line) in lines {
            let lineno = i + 1;
            let cols: Vec<&str> = line.trim_end_matches('\r').split(',').collect();
            if cols.len() != width {
                return Err(parse_err(lineno, &format!("expected {width} columns, found {}", cols.len())));
            }
            let step: usize = cols[0].trim().parse().map_err(|_| parse_err(lineno, "bad step"))?;
            if steps.last().is_some_and(|&l| step <= l) {
                return Err(parse_err(lineno, "steps must increase"));
            }
            let nums = cols[1..]
                .iter()
                .map(|c| match c.trim().parse::<f64>() {
                    Ok(x) if x.is_finite() => Ok(x),
                    _ => Err(parse_err(lineno, &format!("bad number {c:?}"))),
                })
                .collect::<Result<Vec<f64>>>()?;
            let coeffs = nums[1..]
                .chunks_exact(2)
                .map(|p| num_complex::Complex64::new(p[0], p[1]))
                .collect();
            steps.push(step);
            times.push(nums[0]);
            fields.push(SpectralField::from_coeffs(&grid, coeffs)?);
        }
        if fields.len() != header.snapshots || fields.is_empty() {
            return Err(parse_err(
                0,
                &format!("header announces {} snapshots, found {}", header.snapshots, fields.len()),
            ));
        }
        Ok(Self {
            kind: header.kind,
            dt: header.dt,
            config: header.config,
            steps,
            times,
            fields,
        })
    }

    /// Potential path through the snapshots (linear interpolation between
    /// them), covering `[0, last step · dt]`.
    pub fn to_potential(&self) -> Result<PotentialPath> {
        let n = *self.steps.last().unwrap_or(&0);
        PotentialPath::from_snapshots(&self.fields, &self.steps, self.dt, n)
    }
}

fn parse_err(line: usize, msg: &str) -> Error {
    Error::Parse {
        line,
        msg: msg.to_string(),
    }
}

/// Reads just the header line.
pub fn read_header<R: BufRead>(mut r: R) -> Result<PathHeader> {
    let mut first = String::new();
    r.read_line(&mut first)?;
    serde_json::from_str(first.trim()).map_err(|e| parse_err(1, &e.to_string()))
}
