//! Convergence rows and their CSV rendering.

use std::io::{Read, Write};

use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 12] = [
    "inv_h",
    "k",
    "steps",
    "linf",
    "l2_quadrature",
    "l2_nodal_weighted",
    "l2_nodal_unweighted",
    "rate_linf",
    "rate_l2",
    "energy_initial",
    "energy_final",
    "wall_seconds",
];

/// Errors, rates and energies of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub inv_h: f64,
    pub k: f64,
    pub steps: usize,
    pub linf: f64,
    pub l2_quadrature: f64,
    pub l2_nodal_weighted: f64,
    pub l2_nodal_unweighted: f64,
    /// Rate towards the next finer level, when there is one.
    pub rate_linf: Option<f64>,
    pub rate_l2: Option<f64>,
    pub energy_initial: f64,
    pub energy_final: f64,
    pub wall_seconds: Option<f64>,
}

/// Scientific notation with six significant digits.
pub fn format_float(x: f64) -> String {
    format!("{x:.5e}")
}

fn format_opt(x: Option<f64>) -> String {
    x.map(format_float).unwrap_or_default()
}

impl ConvergenceRow {
    pub fn to_record(&self) -> Vec<String> {
        vec![
            format_float(self.inv_h),
            format_float(self.k),
            self.steps.to_string(),
            format_float(self.linf),
            format_float(self.l2_quadrature),
            format_float(self.l2_nodal_weighted),
            format_float(self.l2_nodal_unweighted),
            format_opt(self.rate_linf),
            format_opt(self.rate_l2),
            format_float(self.energy_initial),
            format_float(self.energy_final),
            format_opt(self.wall_seconds),
        ]
    }

    fn from_record(record: &csv::StringRecord, line: usize) -> Result<Self> {
        let bad = |field: &str, value: &str| Error::Config {
            line,
            message: format!("invalid {field} '{value}'"),
        };
        if record.len() != CSV_HEADER.len() {
            return Err(Error::Config {
                line,
                message: format!("expected {} fields, got {}", CSV_HEADER.len(), record.len()),
            });
        }
        let float = |i: usize| -> Result<f64> {
            record[i]
                .parse()
                .map_err(|_| bad(CSV_HEADER[i], &record[i]))
        };
        let opt = |i: usize| -> Result<Option<f64>> {
            if record[i].is_empty() {
                Ok(None)
            } else {
                float(i).map(Some)
            }
        };
        Ok(ConvergenceRow {
            inv_h: float(0)?,
            k: float(1)?,
            steps: record[2].parse().map_err(|_| bad("steps", &record[2]))?,
            linf: float(3)?,
            l2_quadrature: float(4)?,
            l2_nodal_weighted: float(5)?,
            l2_nodal_unweighted: float(6)?,
            rate_linf: opt(7)?,
            rate_l2: opt(8)?,
            energy_initial: float(9)?,
            energy_final: float(10)?,
            wall_seconds: opt(11)?,
        })
    }
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    Error::Config {
        line,
        message: e.to_string(),
    }
}

pub fn write_csv<W: Write>(rows: &[ConvergenceRow], out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(CSV_HEADER).map_err(csv_error)?;
    for row in rows {
        writer.write_record(row.to_record()).map_err(csv_error)?;
    }
    writer.flush().map_err(|e| Error::io("<csv>", e))
}

pub fn to_csv_string(rows: &[ConvergenceRow]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is ASCII"))
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<ConvergenceRow>> {
    let mut reader = csv::Reader::from_reader(input);
    let header = reader.headers().map_err(csv_error)?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Config {
            line: 1,
            message: format!(
                "unexpected CSV header '{}'",
                header.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    reader
        .records()
        .enumerate()
        .map(|(i, rec)| ConvergenceRow::from_record(&rec.map_err(csv_error)?, i + 2))
        .collect()
}
