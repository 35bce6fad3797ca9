//! Curve records and their CSV / JSON encodings.
//!
//! Every cell holds a number or one of three sentinels:
//!
//! * `na`: not requested or not applicable to this channel
//! * `invalid`: the exponential bound does not hold (`R > C̄`)
//! * `domain`: the quantity is undefined at this SNR

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Value(f64),
    Na,
    Invalid,
    Domain,
}

impl Cell {
    pub fn value(self) -> Option<f64> {
        match self {
            Cell::Value(v) => Some(v),
            _ => None,
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Value(v)
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Value(v) => f.write_str(&format_f64(*v)),
            Cell::Na => f.write_str("na"),
            Cell::Invalid => f.write_str("invalid"),
            Cell::Domain => f.write_str("domain"),
        }
    }
}

/// Shortest text that parses back to the same `f64`; scientific notation
/// outside `[1e-4, 1e9)` so tail probabilities stay readable.
pub fn format_f64(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e9).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

impl FromStr for Cell {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "na" => Ok(Cell::Na),
            "invalid" => Ok(Cell::Invalid),
            "domain" => Ok(Cell::Domain),
            "" => Err("empty cell".into()),
            other => other
                .parse::<f64>()
                .map(Cell::Value)
                .map_err(|e| format!("bad cell `{other}`: {e}")),
        }
    }
}

impl Serialize for Cell {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Cell::Value(v) if v.is_finite() => s.serialize_f64(*v),
            other => s.serialize_str(&other.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for Cell {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct CellVisitor;

        impl Visitor<'_> for CellVisitor {
            type Value = Cell;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number or one of na, invalid, domain")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Cell, E> {
                Ok(Cell::Value(v))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Cell, E> {
                Ok(Cell::Value(v as f64))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Cell, E> {
                Ok(Cell::Value(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Cell, E> {
                v.parse().map_err(E::custom)
            }
        }

        d.deserialize_any(CellVisitor)
    }
}

/// One row of a curve file: a single `(definition, γ)` grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRecord {
    pub definition: String,
    pub r: f64,
    pub gamma_db: f64,
    pub gamma_linear: f64,
    pub rate_nats: Cell,
    pub p_analytic: Cell,
    pub p_bound: Cell,
    pub mc_p_hat: Cell,
    pub mc_ci_lo: Cell,
    pub mc_ci_hi: Cell,
    pub mc_trials: Cell,
    pub d_ratio: Cell,
    pub dprime_numeric: Cell,
    pub dprime_closed: Cell,
    pub ref_inv_gamma: f64,
    /// `;`-separated method tags, or `none`.
    pub methods: String,
}

pub const COLUMNS: [&str; 16] = [
    "definition",
    "r",
    "gamma_db",
    "gamma_linear",
    "rate_nats",
    "p_analytic",
    "p_bound",
    "mc_p_hat",
    "mc_ci_lo",
    "mc_ci_hi",
    "mc_trials",
    "d_ratio",
    "dprime_numeric",
    "dprime_closed",
    "ref_inv_gamma",
    "methods",
];

impl CurveRecord {
    fn fields(&self) -> [String; 16] {
        [
            self.definition.clone(),
            format_f64(self.r),
            format_f64(self.gamma_db),
            format_f64(self.gamma_linear),
            self.rate_nats.to_string(),
            self.p_analytic.to_string(),
            self.p_bound.to_string(),
            self.mc_p_hat.to_string(),
            self.mc_ci_lo.to_string(),
            self.mc_ci_hi.to_string(),
            self.mc_trials.to_string(),
            self.d_ratio.to_string(),
            self.dprime_numeric.to_string(),
            self.dprime_closed.to_string(),
            format_f64(self.ref_inv_gamma),
            self.methods.clone(),
        ]
    }

    fn from_fields(row: &csv::StringRecord, line: u64) -> CliResult<Self> {
        if row.len() != COLUMNS.len() {
            return Err(parse_error(
                line,
                format!("expected {} columns, found {}", COLUMNS.len(), row.len()),
            ));
        }
        let cell = |i: usize| -> CliResult<Cell> {
            row[i]
                .parse()
                .map_err(|e| parse_error(line, format!("{}: {e}", COLUMNS[i])))
        };
        let num = |i: usize| -> CliResult<f64> {
            row[i]
                .parse()
                .map_err(|e| parse_error(line, format!("{}: {e}", COLUMNS[i])))
        };
        Ok(Self {
            definition: row[0].to_string(),
            r: num(1)?,
            gamma_db: num(2)?,
            gamma_linear: num(3)?,
            rate_nats: cell(4)?,
            p_analytic: cell(5)?,
            p_bound: cell(6)?,
            mc_p_hat: cell(7)?,
            mc_ci_lo: cell(8)?,
            mc_ci_hi: cell(9)?,
            mc_trials: cell(10)?,
            d_ratio: cell(11)?,
            dprime_numeric: cell(12)?,
            dprime_closed: cell(13)?,
            ref_inv_gamma: num(14)?,
            methods: row[15].to_string(),
        })
    }
}

fn parse_error(line: u64, detail: String) -> CliError {
    CliError::Usage(format!("curve file line {line}: {detail}"))
}

/// Write `# schema=1`, any extra `# key=value` comments, the header row and
/// one line per record.
pub fn write_csv<W: Write>(
    mut w: W,
    records: &[CurveRecord],
    comments: &[String],
) -> std::io::Result<()> {
    writeln!(w, "# schema={SCHEMA_VERSION}")?;
    for c in comments {
        for line in c.lines() {
            writeln!(w, "# {line}")?;
        }
    }
    let mut out = csv::Writer::from_writer(w);
    out.write_record(COLUMNS)?;
    for r in records {
        out.write_record(r.fields())?;
    }
    out.flush()
}

pub fn read_csv<R: Read>(r: R) -> CliResult<Vec<CurveRecord>> {
    let mut text = String::new();
    let mut r = r;
    r.read_to_string(&mut text)
        .map_err(|e| CliError::Usage(format!("cannot read curve file: {e}")))?;
    let first = text.lines().next().unwrap_or_default();
    let want = format!("# schema={SCHEMA_VERSION}");
    if first.trim() != want {
        return Err(CliError::Usage(format!(
            "curve file must start with `{want}`, found `{first}`"
        )));
    }
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| CliError::Usage(format!("bad header: {e}")))?
        .clone();
    if header.iter().ne(COLUMNS.iter().copied()) {
        return Err(CliError::Usage(format!("unexpected columns: {header:?}")));
    }
    reader
        .records()
        .map(|row| {
            let row = row.map_err(|e| CliError::Usage(format!("bad row: {e}")))?;
            let line = row.position().map(|p| p.line()).unwrap_or(0);
            CurveRecord::from_fields(&row, line)
        })
        .collect()
}

/// JSON document: run metadata plus the same records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveDocument {
    pub schema: u32,
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub trials: u64,
    /// Config that reruns this job bit-identically.
    pub config: serde_json::Value,
    pub config_toml: String,
    pub notes: Vec<String>,
    pub records: Vec<CurveRecord>,
}
