//! CSV tables and their JSON mirrors.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::Result;
use crate::harness::ExperimentRecord;

pub const TOOL: &str = "wienerjam";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Writes `rows` as CSV with a header row taken from the field names.
pub fn write_csv<T: Serialize, W: Write>(rows: &[T], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct Fig5Csv<'a> {
    jammer: &'a str,
    #[serde(rename = "L")]
    taps: usize,
    mode: &'a str,
    empirical_bmse: f64,
    analytic_bmse: String,
    normalized: f64,
    stderr: f64,
    trials: usize,
    cond_failures: usize,
}

/// Figure-5 cells; an undefined analytic BMSE is written as `N/A`.
pub fn write_records_csv<W: Write>(rows: &[ExperimentRecord], out: W) -> Result<()> {
    let mapped: Vec<Fig5Csv<'_>> = rows
        .iter()
        .map(|r| Fig5Csv {
            jammer: &r.jammer,
            taps: r.taps,
            mode: r.mode.as_str(),
            empirical_bmse: r.empirical_bmse,
            analytic_bmse: r.analytic_bmse.map_or_else(|| "N/A".to_string(), |v| v.to_string()),
            normalized: r.normalized,
            stderr: r.stderr,
            trials: r.trials,
            cond_failures: r.cond_failures,
        })
        .collect();
    write_csv(&mapped, out)
}

#[derive(Serialize)]
pub struct JsonReport<'a, C: Serialize, R: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub config: &'a C,
    pub rows: &'a R,
}

pub fn write_json<C: Serialize, R: Serialize, W: Write>(command: &str, config: &C, rows: &R, mut out: W) -> Result<()> {
    let report = JsonReport { tool: TOOL, version: VERSION, command, config, rows };
    serde_json::to_writer_pretty(&mut out, &report)?;
    writeln!(out)?;
    Ok(())
}

/// `out.csv` → `out.json`; `out` → `out.json`.
pub fn json_sibling(path: &Path) -> PathBuf {
    path.with_extension("json")
}

/// `out.csv` → `out.<tag>.csv`.
pub fn tagged_sibling(path: &Path, tag: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let ext = path.extension().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "csv".into());
    path.with_file_name(format!("{stem}.{tag}.{ext}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::Mode;

    #[test]
    fn figure5_columns() {
        let rows = vec![ExperimentRecord {
            jammer: "ar1(0.8)".into(),
            taps: 8,
            mode: Mode::Perfect,
            empirical_bmse: 82.5,
            analytic_bmse: None,
            normalized: 0.26,
            stderr: 0.5,
            trials: 10,
            cond_failures: 0,
        }];
        let mut buf = Vec::new();
        write_records_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "jammer,L,mode,empirical_bmse,analytic_bmse,normalized,stderr,trials,cond_failures\nar1(0.8),8,perfect,82.5,N/A,0.26,0.5,10,0\n"
        );
    }

    #[test]
    fn sibling_paths() {
        assert_eq!(json_sibling(Path::new("a/b.csv")), PathBuf::from("a/b.json"));
        assert_eq!(tagged_sibling(Path::new("a/b.csv"), "summary"), PathBuf::from("a/b.summary.csv"));
    }
}
