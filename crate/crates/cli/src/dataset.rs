//! Delimited-text datasets: a header `y,x1,...,xp` and one row per design
//! point `t_i = i/n`.

use std::path::Path;

use gplm::Dataset;
use nalgebra::DMatrix;

use crate::error::{CliError, CliResult};

fn check_header(path: &Path, header: &csv::StringRecord) -> CliResult<usize> {
    let names: Vec<&str> = header.iter().collect();
    let p = names.len().saturating_sub(1);
    let expected: Vec<String> = std::iter::once("y".to_string())
        .chain((1..=p).map(|j| format!("x{j}")))
        .collect();
    if p == 0 || names != expected {
        return Err(CliError::Input(format!(
            "{}:1: header must be y,x1,...,xp; found '{}'",
            path.display(),
            names.join(",")
        )));
    }
    Ok(p)
}

pub fn read_dataset(path: &Path) -> CliResult<Dataset> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(file);
    let header = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let p = check_header(path, &header)?;
    let mut y = Vec::new();
    let mut x = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |pos| pos.line());
        for (col, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                CliError::Input(format!(
                    "{}:{line}:{}: cannot parse '{field}' as a number",
                    path.display(),
                    col + 1
                ))
            })?;
            if col == 0 {
                y.push(v);
            } else {
                x.push(v);
            }
        }
    }
    let n = y.len();
    debug_assert_eq!(x.len(), n * p);
    Ok(Dataset::new(y, DMatrix::from_row_slice(n, p, &x))?)
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    let line = e.position().map(|p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        csv::ErrorKind::UnequalLengths {
            expected_len, len, ..
        } => CliError::Input(format!(
            "{}:{}: expected {expected_len} fields, found {len}",
            path.display(),
            line.unwrap_or(0)
        )),
        other => CliError::Input(format!("{}: {other:?}", path.display())),
    }
}
