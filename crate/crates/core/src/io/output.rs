//! Text and JSON artifacts. Every file is written once, through a temporary
//! sibling that is renamed into place.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::integrator::NormSeries;
use crate::noise::OuTrajectory;

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::io(path, std::io::Error::other("not a file path")))?;
    let tmp = path.with_file_name(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let write = || -> std::io::Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    };
    write().map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)
        .map_err(|e| Error::io(path, std::io::Error::other(e)))?;
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

/// Column name for `‖A^{s/2}·‖`.
pub fn norm_column(s: f64) -> String {
    format!("norm_s{s}")
}

/// Tab-separated `t, ‖A^{s/2}v‖ for each index, z`, 17 significant digits.
pub fn norm_series_tsv(series: &NormSeries) -> String {
    let mut out = String::from("t");
    for &s in &series.indices {
        out.push('\t');
        out.push_str(&norm_column(s));
    }
    out.push_str("\tz\n");
    for n in 0..series.len() {
        write!(out, "{:.16e}", series.times[n]).unwrap();
        for col in &series.norms {
            write!(out, "\t{:.16e}", col[n]).unwrap();
        }
        writeln!(out, "\t{:.16e}", series.z[n]).unwrap();
    }
    out
}

/// `# seed`, `# dt` comment lines, then `t, omega, z` columns.
pub fn path_tsv(traj: &OuTrajectory) -> String {
    let path = traj.path();
    let mut out = String::new();
    writeln!(out, "# seed = {}", path.seed()).unwrap();
    writeln!(out, "# dt = {:?}", path.dt()).unwrap();
    out.push_str("t\tomega\tz\n");
    for k in 0..path.len() {
        writeln!(
            out,
            "{:.16e}\t{:.16e}\t{:.16e}",
            path.time(k),
            path.values()[k],
            traj.at_index(k)
        )
        .unwrap();
    }
    out
}

/// Machine-readable record of a failed run.
#[derive(Debug, Serialize)]
pub struct ErrorRecord {
    pub kind: &'static str,
    pub exit_code: i32,
    pub message: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub violations: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub time: Option<f64>,
}

impl From<&Error> for ErrorRecord {
    fn from(e: &Error) -> Self {
        let (step, time) = match e {
            Error::BlowUp { step, time, .. } => (Some(*step), Some(*time)),
            _ => (None, None),
        };
        ErrorRecord {
            kind: e.kind(),
            exit_code: e.exit_code(),
            message: e.to_string(),
            violations: match e {
                Error::Config(v) => v.clone(),
                _ => Vec::new(),
            },
            step,
            time,
        }
    }
}
