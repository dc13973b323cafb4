//! CSV artifacts. Floats use 17 significant digits (`{:.16e}`), `.` as the
//! decimal separator, and `\n` line endings, so files are bit-reproducible.

use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::disorder::PotentialField;
use crate::error::{Error, Result};
use crate::observables::{IntensitySample, ObservableRecord};

pub const OBSERVABLES_HEADER: [&str; 8] = [
    "step",
    "z",
    "norm",
    "centroid",
    "sqrt_variance",
    "participation_ratio",
    "peak_intensity",
    "boundary_leak",
];
pub const PROFILE_HEADER: [&str; 3] = ["x", "intensity", "log10_intensity"];
pub const POTENTIAL_HEADER: [&str; 2] = ["x", "V"];
pub const LOGMEAN_HEADER: [&str; 2] = ["x", "mean_log10_intensity"];

pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn to_csv(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Vec<u8> {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    // Writing into a Vec cannot fail.
    writer.write_record(header).expect("in-memory csv");
    for row in rows {
        writer.write_record(&row).expect("in-memory csv");
    }
    writer.into_inner().expect("in-memory csv")
}

pub fn observables_csv(records: &[ObservableRecord]) -> Vec<u8> {
    to_csv(
        &OBSERVABLES_HEADER,
        records.iter().map(|r| {
            vec![
                r.step.to_string(),
                fmt_float(r.z),
                fmt_float(r.norm),
                fmt_float(r.centroid),
                fmt_float(r.sqrt_variance),
                fmt_float(r.participation_ratio),
                fmt_float(r.peak_intensity),
                fmt_float(r.boundary_leak),
            ]
        }),
    )
}

pub fn profile_csv(profile: &[IntensitySample]) -> Vec<u8> {
    to_csv(
        &PROFILE_HEADER,
        profile.iter().map(|s| {
            vec![
                fmt_float(s.x),
                fmt_float(s.intensity),
                fmt_float(s.log10_intensity),
            ]
        }),
    )
}

pub fn potential_csv(pot: &PotentialField) -> Vec<u8> {
    to_csv(
        &POTENTIAL_HEADER,
        pot.grid()
            .positions()
            .iter()
            .zip(pot.values())
            .map(|(x, v)| vec![fmt_float(*x), fmt_float(*v)]),
    )
}

pub fn logmean_csv(x: &[f64], mean_log10: &[f64]) -> Vec<u8> {
    to_csv(
        &LOGMEAN_HEADER,
        x.iter()
            .zip(mean_log10)
            .map(|(x, v)| vec![fmt_float(*x), fmt_float(*v)]),
    )
}

/// Generic numeric table with a caller-supplied header.
pub fn table_csv(header: &[&str], rows: &[Vec<f64>]) -> Vec<u8> {
    to_csv(header, rows.iter().map(|r| r.iter().map(|v| fmt_float(*v)).collect()))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes `bytes` to `path` and returns their SHA-256 digest.
pub fn write_artifact(path: &Path, bytes: &[u8]) -> Result<String> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(bytes))
}

fn csv_error(path: &Path, source: csv::Error) -> Error {
    Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn data_error(path: &Path, message: impl Into<String>) -> Error {
    Error::Data {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// Reads a profile CSV (`x,intensity[,log10_intensity]`).
pub fn read_profile(path: &Path) -> Result<Vec<IntensitySample>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| data_error(path, format!("missing column `{name}`")))
    };
    let (xi, ii) = (column("x")?, column("intensity")?);
    let mut out = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let parse = |idx: usize| -> Result<f64> {
            let field = record.get(idx).unwrap_or("");
            field
                .trim()
                .parse()
                .map_err(|_| data_error(path, format!("row {}: `{field}` is not a number", line + 2)))
        };
        out.push(IntensitySample::new(parse(xi)?, parse(ii)?));
    }
    if out.is_empty() {
        return Err(data_error(path, "profile has no rows"));
    }
    Ok(out)
}

/// Reads an observables CSV back into records.
pub fn read_observables(path: &Path) -> Result<Vec<ObservableRecord>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut out = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let bad = || data_error(path, format!("row {} is malformed", line + 2));
        let f = |i: usize| -> Result<f64> { record.get(i).and_then(|s| s.parse().ok()).ok_or_else(bad) };
        out.push(ObservableRecord {
            step: record.get(0).and_then(|s| s.parse().ok()).ok_or_else(bad)?,
            z: f(1)?,
            norm: f(2)?,
            centroid: f(3)?,
            sqrt_variance: f(4)?,
            participation_ratio: f(5)?,
            peak_intensity: f(6)?,
            boundary_leak: f(7)?,
        });
    }
    Ok(out)
}
