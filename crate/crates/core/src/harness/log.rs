//! CSV step logs and plot series.
//!
//! Floats are written with Rust's shortest round-trip formatting, so reading
//! a log back yields the logged values bit for bit.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use super::sim::StepRecord;
use super::HarnessError;

pub const LOG_HEADER: [&str; 27] = [
    "t", "px", "py", "pz", "vx", "vy", "vz", "c", "px_hat", "py_hat", "pz_hat", "c_hat", "pr_x", "pr_y", "pr_z",
    "c_r", "u_phi", "u_theta", "u_zdot", "u_psidot", "y1_1", "y1_2", "y1_3", "y1_4", "y1_5", "y1_6", "y2",
];

pub const PLOT_HEADER: [&str; 9] = ["t", "pr_x", "px", "pr_y", "py", "pr_z", "pz", "c_r", "c"];

/// One CSV row of a step record, in [`LOG_HEADER`] order.
pub fn log_row(r: &StepRecord) -> [f64; 27] {
    let mut row = [0.0; 27];
    let fields = std::iter::once(&r.t)
        .chain(&r.position)
        .chain(&r.velocity)
        .chain([&r.course])
        .chain(&r.position_est)
        .chain([&r.course_est])
        .chain(&r.reference_position)
        .chain([&r.reference_course])
        .chain(&r.command)
        .chain(&r.y1)
        .chain([&r.y2]);
    for (dst, src) in row.iter_mut().zip(fields) {
        *dst = *src;
    }
    row
}

fn plot_row(r: &StepRecord) -> [f64; 9] {
    [
        r.t,
        r.reference_position[0],
        r.position[0],
        r.reference_position[1],
        r.position[1],
        r.reference_position[2],
        r.position[2],
        r.reference_course,
        r.course,
    ]
}

fn write_rows<W: Write, const N: usize>(
    out: W,
    header: &[&str; N],
    rows: impl Iterator<Item = [f64; N]>,
) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush().map_err(|e| HarnessError::Csv(e.into()))?;
    Ok(())
}

fn create(path: &Path) -> Result<File, HarnessError> {
    File::create(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes the step log as CSV.
pub fn write_log<W: Write>(log: &[StepRecord], out: W) -> Result<(), HarnessError> {
    write_rows(out, &LOG_HEADER, log.iter().map(log_row))
}

pub fn emit_log(log: &[StepRecord], path: impl AsRef<Path>) -> Result<(), HarnessError> {
    write_log(log, create(path.as_ref())?)
}

/// Writes reference-vs-truth series per axis and for the heading.
pub fn write_plot_data<W: Write>(log: &[StepRecord], out: W) -> Result<(), HarnessError> {
    write_rows(out, &PLOT_HEADER, log.iter().map(plot_row))
}

pub fn emit_plot_data(log: &[StepRecord], path: impl AsRef<Path>) -> Result<(), HarnessError> {
    write_plot_data(log, create(path.as_ref())?)
}

/// Reads a log written by [`emit_log`]; checks the header.
pub fn read_log(path: impl AsRef<Path>) -> Result<Vec<[f64; 27]>, HarnessError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut r = csv::Reader::from_reader(file);
    let header = r.headers()?.clone();
    if !header.iter().eq(LOG_HEADER) {
        return Err(HarnessError::Invalid {
            key: "header".into(),
            msg: format!("unexpected log header in {}", path.display()),
        });
    }
    let mut rows = Vec::new();
    for (i, record) in r.records().enumerate() {
        let record = record?;
        if record.len() != LOG_HEADER.len() {
            return Err(HarnessError::Invalid {
                key: "row".into(),
                msg: format!("row {}: expected {} fields, found {}", i + 1, LOG_HEADER.len(), record.len()),
            });
        }
        let mut row = [0.0; 27];
        for (j, (dst, field)) in row.iter_mut().zip(record.iter()).enumerate() {
            *dst = field.parse().map_err(|_| HarnessError::Invalid {
                key: LOG_HEADER[j].into(),
                msg: format!("row {}: not a number: {field:?}", i + 1),
            })?;
        }
        rows.push(row);
    }
    Ok(rows)
}
