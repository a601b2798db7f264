//! Report files: CSV for tables, whitespace-separated `.dat` for gnuplot.

use std::io::Write;
use std::path::{Path, PathBuf};

use uepsim_core::qoe::{write_reports_csv, QoeReport, REPORT_HEADER};

use crate::HarnessError;

pub fn reports_csv(reports: &[QoeReport]) -> String {
    let mut buf = Vec::new();
    write_reports_csv(&mut buf, reports).expect("writing to memory");
    String::from_utf8(buf).expect("ascii")
}

/// Same columns as the CSV, space separated, header commented out. Rows
/// are numbered so gnuplot can use the index as x.
pub fn reports_dat(reports: &[QoeReport]) -> String {
    let mut out = format!("# row {}\n", REPORT_HEADER.replace(',', " "));
    for (i, r) in reports.iter().enumerate() {
        out.push_str(&format!("{i} {}\n", r.csv_row().replace(',', " ")));
    }
    out
}

/// Writes `<stem>.csv` and `<stem>.dat` into `dir`, creating it.
pub fn write_outputs(dir: &Path, stem: &str, reports: &[QoeReport]) -> Result<(PathBuf, PathBuf), HarnessError> {
    let io = |p: &Path, e: std::io::Error| HarnessError::Io(format!("{}: {e}", p.display()));
    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let csv = dir.join(format!("{stem}.csv"));
    let dat = dir.join(format!("{stem}.dat"));
    for (path, body) in [(&csv, reports_csv(reports)), (&dat, reports_dat(reports))] {
        let mut f = std::fs::File::create(path).map_err(|e| io(path, e))?;
        f.write_all(body.as_bytes()).map_err(|e| io(path, e))?;
    }
    Ok((csv, dat))
}
