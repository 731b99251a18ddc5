use std::path::Path;

use super::FormatError;
use crate::insitu::{RunReport, TimingRecord};

pub const TIMINGS_HEADER: [&str; 5] = ["step", "receive_s", "setup_s", "render_s", "particles"];

pub fn write_report(path: &Path, report: &RunReport) -> Result<(), FormatError> {
    let mut s = serde_json::to_string_pretty(report)?;
    s.push('\n');
    std::fs::write(path, s)?;
    Ok(())
}

pub fn read_report(path: &Path) -> Result<RunReport, FormatError> {
    Ok(serde_json::from_slice(&std::fs::read(path)?)?)
}

fn csv_error(e: csv::Error) -> FormatError {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => FormatError::Io(io),
            _ => unreachable!("checked io error"),
        }
    } else {
        FormatError::Malformed(e.to_string())
    }
}

/// One row per viz step.
pub fn write_timings_csv(path: &Path, records: &[TimingRecord]) -> Result<(), FormatError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    w.write_record(TIMINGS_HEADER).map_err(csv_error)?;
    for r in records {
        w.write_record([
            r.step.to_string(),
            r.receive_s.to_string(),
            r.setup_s.to_string(),
            r.render_s.to_string(),
            r.particles.to_string(),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads the raw timing log. Per-view breakdowns are not part of the CSV.
pub fn read_timings_csv(path: &Path) -> Result<Vec<TimingRecord>, FormatError> {
    let mut r = csv::Reader::from_path(path).map_err(csv_error)?;
    let header = r.headers().map_err(csv_error)?.clone();
    if header.iter().ne(TIMINGS_HEADER) {
        return Err(FormatError::Malformed(format!("unexpected timings header {header:?}")));
    }
    let mut out = Vec::new();
    for row in r.records() {
        let row = row.map_err(csv_error)?;
        let f = |i: usize| -> Result<f64, FormatError> {
            row[i].parse().map_err(|_| FormatError::Malformed(format!("bad number {:?}", &row[i])))
        };
        out.push(TimingRecord {
            step: row[0].parse().map_err(|_| FormatError::Malformed(format!("bad step {:?}", &row[0])))?,
            receive_s: f(1)?,
            setup_s: f(2)?,
            render_s: f(3)?,
            views: Vec::new(),
            particles: row[4].parse().map_err(|_| FormatError::Malformed(format!("bad count {:?}", &row[4])))?,
        });
    }
    Ok(out)
}
