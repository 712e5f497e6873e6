//! CSV output: `#` header comments echoing the resolved configuration,
//! then a header row and records with numbers at 12 significant digits.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use crate::config::ExperimentConfig;
use crate::error::CliResult;

pub const SIGNIFICANT_DIGITS: usize = 12;

/// `x` rounded to 12 significant digits, without trailing zeros. Plain
/// notation is used for decimal exponents in `-5..15`.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific notation");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..15).contains(&exp) {
        let rounded: f64 = sci.parse().expect("round trip");
        let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_zeros(format!("{rounded:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// A CSV field: numbers formatted by [`fmt_f64`], missing values empty.
pub fn field(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Writes the comment block for `command` and `cfg`, then the table.
    pub fn write_to<W: Write>(
        &self,
        out: W,
        command: &str,
        cfg: &ExperimentConfig,
    ) -> CliResult<()> {
        let mut out = out;
        writeln!(out, "# fdaloha {} {command}", env!("CARGO_PKG_VERSION"))?;
        for (key, value) in cfg.entries() {
            writeln!(out, "# {key}={value}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes to `path`, or to standard output when it is `None`.
    pub fn save(
        &self,
        path: Option<&Path>,
        command: &str,
        cfg: &ExperimentConfig,
    ) -> CliResult<()> {
        match path {
            Some(p) => {
                let file = File::create(p).map_err(|e| {
                    crate::error::CliError::Runtime(format!("cannot create {}: {e}", p.display()))
                })?;
                self.write_to(BufWriter::new(file), command, cfg)
            }
            None => self.write_to(io::stdout().lock(), command, cfg),
        }
    }
}
