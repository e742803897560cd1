//! `t,sigma3,source` CSV for trajectories.
//!
//! Floats are written with `Display`, which yields the shortest decimal
//! string that parses back to the same `f64` and never uses exponent form.

use std::io::{Read, Write};

use thiserror::Error;

use crate::nldyn::{Sample, Source, Trajectory};

pub const CSV_HEADER: [&str; 3] = ["t", "sigma3", "source"];

#[derive(Debug, Error)]
pub enum CsvError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("expected header `t,sigma3,source`, found `{0}`")]
    BadHeader(String),
    #[error("line {line}: {message}")]
    BadRow { line: u64, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsvRow {
    pub t: f64,
    pub sigma3: f64,
    pub source: Source,
}

pub fn write_trajectory_csv<W: Write>(
    out: W,
    trajectories: &[&Trajectory],
) -> Result<(), CsvError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(CSV_HEADER)?;
    for traj in trajectories {
        for s in traj.samples() {
            w.write_record([
                s.t.to_string(),
                s.sigma3.to_string(),
                traj.source.to_string(),
            ])?;
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_trajectory_csv<R: Read>(input: R) -> Result<Vec<CsvRow>, CsvError> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(CsvError::BadHeader(
            header.iter().collect::<Vec<_>>().join(","),
        ));
    }
    let mut rows = Vec::new();
    for record in r.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let bad = |message: String| CsvError::BadRow { line, message };
        let num = |i: usize| {
            record[i]
                .parse::<f64>()
                .map_err(|e| bad(format!("column {}: {e}", CSV_HEADER[i])))
        };
        rows.push(CsvRow {
            t: num(0)?,
            sigma3: num(1)?,
            source: record[2].parse().map_err(bad)?,
        });
    }
    Ok(rows)
}

/// Samples of the given source, in file order.
pub fn samples_for(rows: &[CsvRow], source: Source) -> Vec<Sample> {
    rows.iter()
        .filter(|r| r.source == source)
        .map(|r| Sample {
            t: r.t,
            sigma3: r.sigma3,
        })
        .collect()
}
