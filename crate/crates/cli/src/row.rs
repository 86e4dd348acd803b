//! Fixed-column CSV rows.

use std::io::{BufRead, Write};

use crate::RunError;

pub const SCHEMA_LINE: &str = "#schema=1";

pub const COLUMNS: [&str; 17] = [
    "t",
    "r",
    "mean_exact",
    "var_exact",
    "var_err",
    "upper",
    "lower_general",
    "lower_monotone",
    "asymptotic",
    "J1",
    "J2",
    "mc_mean",
    "mc_var",
    "mc_mean_stderr",
    "mc_var_stderr",
    "mc_failed",
    "flags",
];

/// One grid point. `None` is written as `null`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ResultRow {
    pub t: f64,
    pub r: f64,
    pub mean_exact: Option<f64>,
    pub var_exact: Option<f64>,
    pub var_err: Option<f64>,
    pub upper: Option<f64>,
    pub lower_general: Option<f64>,
    pub lower_monotone: Option<f64>,
    pub asymptotic: Option<f64>,
    pub j1: Option<f64>,
    pub j2: Option<f64>,
    pub mc_mean: Option<f64>,
    pub mc_var: Option<f64>,
    pub mc_mean_stderr: Option<f64>,
    pub mc_var_stderr: Option<f64>,
    pub mc_failed: Option<u64>,
    /// `;`-separated tokens.
    pub flags: Vec<String>,
}

/// 17 significant digits, enough to round-trip any `f64`.
fn fmt(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        // inf, -inf, NaN
        format!("{x}")
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "null".to_string(), fmt)
}

fn parse_f64(s: &str) -> Result<f64, RunError> {
    s.parse().map_err(|_| RunError::Validation(format!("bad number `{s}` in CSV")))
}

fn parse_opt(s: &str) -> Result<Option<f64>, RunError> {
    if s == "null" {
        Ok(None)
    } else {
        parse_f64(s).map(Some)
    }
}

impl ResultRow {
    pub fn new(t: f64, r: f64) -> Self {
        Self {
            t,
            r,
            ..Self::default()
        }
    }

    pub fn flag(&mut self, token: impl Into<String>) {
        self.flags.push(token.into());
    }

    fn fields(&self) -> Vec<String> {
        let mut f = vec![fmt(self.t), fmt(self.r)];
        for x in [
            self.mean_exact,
            self.var_exact,
            self.var_err,
            self.upper,
            self.lower_general,
            self.lower_monotone,
            self.asymptotic,
            self.j1,
            self.j2,
            self.mc_mean,
            self.mc_var,
            self.mc_mean_stderr,
            self.mc_var_stderr,
        ] {
            f.push(fmt_opt(x));
        }
        f.push(self.mc_failed.map_or_else(|| "null".to_string(), |n| n.to_string()));
        f.push(self.flags.join(";"));
        f
    }

    fn from_record(rec: &csv::StringRecord) -> Result<Self, RunError> {
        if rec.len() != COLUMNS.len() {
            return Err(RunError::Validation(format!(
                "CSV row has {} fields, expected {}",
                rec.len(),
                COLUMNS.len()
            )));
        }
        let o = |i: usize| parse_opt(&rec[i]);
        let mc_failed = match &rec[15] {
            "null" => None,
            s => Some(
                s.parse()
                    .map_err(|_| RunError::Validation(format!("bad count `{s}` in CSV")))?,
            ),
        };
        Ok(Self {
            t: parse_f64(&rec[0])?,
            r: parse_f64(&rec[1])?,
            mean_exact: o(2)?,
            var_exact: o(3)?,
            var_err: o(4)?,
            upper: o(5)?,
            lower_general: o(6)?,
            lower_monotone: o(7)?,
            asymptotic: o(8)?,
            j1: o(9)?,
            j2: o(10)?,
            mc_mean: o(11)?,
            mc_var: o(12)?,
            mc_mean_stderr: o(13)?,
            mc_var_stderr: o(14)?,
            mc_failed,
            flags: rec[16]
                .split(';')
                .filter(|s| !s.is_empty())
                .map(str::to_string)
                .collect(),
        })
    }
}

pub fn write_csv<W: Write>(mut out: W, rows: &[ResultRow]) -> Result<(), RunError> {
    let io = |e: std::io::Error| RunError::Io(e.to_string());
    writeln!(out, "{SCHEMA_LINE}").map_err(io)?;
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| RunError::Io(e.to_string());
    w.write_record(COLUMNS).map_err(csv_err)?;
    for row in rows {
        w.write_record(row.fields()).map_err(csv_err)?;
    }
    w.flush().map_err(io)
}

pub fn read_csv<R: BufRead>(mut input: R) -> Result<Vec<ResultRow>, RunError> {
    let mut first = String::new();
    input
        .read_line(&mut first)
        .map_err(|e| RunError::Io(e.to_string()))?;
    if first.trim_end() != SCHEMA_LINE {
        return Err(RunError::Validation(format!(
            "expected `{SCHEMA_LINE}`, found `{}`",
            first.trim_end()
        )));
    }
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(|e| RunError::Validation(e.to_string()))?;
    if header.iter().ne(COLUMNS.iter().copied()) {
        return Err(RunError::Validation("unexpected CSV header".into()));
    }
    r.records()
        .map(|rec| ResultRow::from_record(&rec.map_err(|e| RunError::Validation(e.to_string()))?))
        .collect()
}

/// Whitespace-delimited columns with a `#` header line.
pub fn write_dat<W: Write>(mut out: W, header: &[&str], lines: &[Vec<f64>]) -> std::io::Result<()> {
    writeln!(out, "# {}", header.join(" "))?;
    for line in lines {
        let cells: Vec<String> = line.iter().map(|&x| fmt(x)).collect();
        writeln!(out, "{}", cells.join(" "))?;
    }
    Ok(())
}
