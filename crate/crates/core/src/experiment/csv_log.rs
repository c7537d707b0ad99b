//! Per-round CSV log shared with the plotting scripts.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

use super::RoundRecord;

pub const CSV_HEADER: &str =
    "policy,seed,t,reward,expected_reward,optimal_reward,regret,cumulative_regret,dropped_count,runtime_ms";

/// Shortest decimal rendering of `v` rounded to 9 significant digits.
pub fn format_sig9(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{v:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("exponent is an integer");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(format!("{v:.decimals$}"))
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

/// Writes the header and one row per record, in the given order.
pub fn write_csv(records: &[RoundRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let write = || -> std::io::Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "{CSV_HEADER}")?;
        for r in records {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                quote(&r.policy),
                r.seed,
                r.t,
                format_sig9(r.reward),
                format_sig9(r.expected_reward),
                format_sig9(r.optimal_reward),
                format_sig9(r.regret),
                format_sig9(r.cumulative_regret),
                r.dropped_count,
                format_sig9(r.runtime_ms),
            )?;
        }
        out.flush()
    };
    write().map_err(|e| Error::io(path, e))
}

fn quote(name: &str) -> String {
    if name.contains([',', '"', '\n']) {
        format!("\"{}\"", name.replace('"', "\"\""))
    } else {
        name.to_string()
    }
}

/// Reads a log written by [`write_csv`].
pub fn read_csv(path: impl AsRef<Path>) -> Result<Vec<RoundRecord>> {
    let path = path.as_ref();
    let to_err = |e: csv::Error| Error::Parse {
        path: path.to_path_buf(),
        line: e.position().map_or(0, |p| p.line() as usize),
        message: e.to_string(),
    };
    let mut reader = csv::Reader::from_path(path).map_err(to_err)?;
    let header = reader.headers().map_err(to_err)?;
    if header.iter().collect::<Vec<_>>().join(",") != CSV_HEADER {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: "unexpected header".into(),
        });
    }
    reader
        .deserialize()
        .collect::<std::result::Result<Vec<RoundRecord>, _>>()
        .map_err(to_err)
}
