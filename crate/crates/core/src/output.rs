//! Plot-ready CSV tables.
//!
//! Floats are written with 17 significant digits, which round-trips every
//! `f64` exactly.

use std::path::Path;

use crate::error::{Error, Result};

pub const MOMENT_HEADER: [&str; 7] = ["t", "x_center", "dx", "rho", "V1", "T", "H"];
pub const MARGINAL_HEADER: [&str; 4] = ["t", "cell_index", "v1", "g"];
pub const LEDGER_HEADER: [&str; 9] = [
    "t",
    "mass",
    "momentum1",
    "energy",
    "inflow_mass",
    "inflow_momentum1",
    "inflow_energy",
    "mass_residual",
    "step_seconds",
];

/// Cell-averaged macroscopic state at one output time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentRow {
    pub t: f64,
    pub x_center: f64,
    pub dx: f64,
    pub rho: f64,
    pub v1: f64,
    pub temperature: f64,
    pub h: f64,
}

impl MomentRow {
    pub const WIDTH: usize = 7;

    pub fn to_array(&self) -> [f64; 7] {
        [self.t, self.x_center, self.dx, self.rho, self.v1, self.temperature, self.h]
    }

    pub fn from_slice(s: &[f64]) -> Self {
        Self {
            t: s[0],
            x_center: s[1],
            dx: s[2],
            rho: s[3],
            v1: s[4],
            temperature: s[5],
            h: s[6],
        }
    }
}

/// One node of the `v1` marginal of one cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginalRow {
    pub t: f64,
    pub cell_index: usize,
    pub v1: f64,
    pub g: f64,
}

impl MarginalRow {
    pub const WIDTH: usize = 4;

    pub fn to_array(&self) -> [f64; 4] {
        [self.t, self.cell_index as f64, self.v1, self.g]
    }

    pub fn from_slice(s: &[f64]) -> Self {
        Self {
            t: s[0],
            cell_index: s[1] as usize,
            v1: s[2],
            g: s[3],
        }
    }
}

/// Global conservation balance at one output time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LedgerRow {
    pub t: f64,
    pub mass: f64,
    pub momentum1: f64,
    pub energy: f64,
    /// Time-integrated amounts carried in through the domain ends.
    pub inflow_mass: f64,
    pub inflow_momentum1: f64,
    pub inflow_energy: f64,
    /// `(mass - initial mass - inflow) / initial mass`.
    pub mass_residual: f64,
    /// Wall time of the last step before this output.
    pub step_seconds: f64,
}

impl LedgerRow {
    fn to_array(self) -> [f64; 9] {
        [
            self.t,
            self.mass,
            self.momentum1,
            self.energy,
            self.inflow_mass,
            self.inflow_momentum1,
            self.inflow_energy,
            self.mass_residual,
            self.step_seconds,
        ]
    }

    fn from_slice(s: &[f64]) -> Self {
        Self {
            t: s[0],
            mass: s[1],
            momentum1: s[2],
            energy: s[3],
            inflow_mass: s[4],
            inflow_momentum1: s[5],
            inflow_energy: s[6],
            mass_residual: s[7],
            step_seconds: s[8],
        }
    }
}

pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::io(path, std::io::Error::new(std::io::ErrorKind::InvalidData, format!("{other:?}"))),
    }
}

fn write_table<const W: usize>(path: &Path, header: &[&str; W], rows: impl Iterator<Item = [String; W]>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn read_table(path: &Path, header: &[&str]) -> Result<Vec<Vec<f64>>> {
    let invalid = |msg: String| Error::io(path, std::io::Error::new(std::io::ErrorKind::InvalidData, msg));
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let found: Vec<String> = r.headers().map_err(|e| csv_error(path, e))?.iter().map(String::from).collect();
    if found != header {
        return Err(invalid(format!("header {found:?}, expected {header:?}")));
    }
    let mut rows = Vec::new();
    for (i, record) in r.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let row = record
            .iter()
            .map(|s| s.parse::<f64>().map_err(|e| invalid(format!("row {}: '{s}': {e}", i + 1))))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn write_moment_csv(rows: &[MomentRow], path: impl AsRef<Path>) -> Result<()> {
    write_table(
        path.as_ref(),
        &MOMENT_HEADER,
        rows.iter().map(|r| r.to_array().map(format_float)),
    )
}

pub fn read_moment_csv(path: impl AsRef<Path>) -> Result<Vec<MomentRow>> {
    Ok(read_table(path.as_ref(), &MOMENT_HEADER)?
        .iter()
        .map(|r| MomentRow::from_slice(r))
        .collect())
}

pub fn write_marginal_csv(rows: &[MarginalRow], path: impl AsRef<Path>) -> Result<()> {
    write_table(
        path.as_ref(),
        &MARGINAL_HEADER,
        rows.iter().map(|r| {
            [
                format_float(r.t),
                r.cell_index.to_string(),
                format_float(r.v1),
                format_float(r.g),
            ]
        }),
    )
}

pub fn read_marginal_csv(path: impl AsRef<Path>) -> Result<Vec<MarginalRow>> {
    Ok(read_table(path.as_ref(), &MARGINAL_HEADER)?
        .iter()
        .map(|r| MarginalRow::from_slice(r))
        .collect())
}

pub fn write_ledger_csv(rows: &[LedgerRow], path: impl AsRef<Path>) -> Result<()> {
    write_table(
        path.as_ref(),
        &LEDGER_HEADER,
        rows.iter().map(|r| r.to_array().map(format_float)),
    )
}

pub fn read_ledger_csv(path: impl AsRef<Path>) -> Result<Vec<LedgerRow>> {
    Ok(read_table(path.as_ref(), &LEDGER_HEADER)?
        .iter()
        .map(|r| LedgerRow::from_slice(r))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn moment_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        let rows = vec![
            MomentRow { t: 0.0, x_center: 0.5, dx: 1.0, rho: 1.0 / 3.0, v1: -1e-300, temperature: 0.1 + 0.2, h: -4.25 },
            MomentRow { t: 0.1, x_center: 0.5, dx: 1.0, rho: f64::MAX, v1: 5e-324, temperature: 1.0, h: 0.0 },
        ];
        write_moment_csv(&rows, &path).unwrap();
        assert_eq!(read_moment_csv(&path).unwrap(), rows);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("t,x_center,dx,rho,V1,T,H\n"));
        assert_eq!(text.lines().count(), 3);
    }

    #[test]
    fn marginal_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.csv");
        let rows = vec![MarginalRow { t: 0.25, cell_index: 7, v1: -2.5, g: 0.123_456_789_012_345_68 }];
        write_marginal_csv(&rows, &path).unwrap();
        assert_eq!(read_marginal_csv(&path).unwrap(), rows);
    }

    #[test]
    fn missing_directory_names_path() {
        let err = write_moment_csv(&[], "/nonexistent-dir/m.csv").unwrap_err();
        assert!(err.to_string().contains("/nonexistent-dir/m.csv"), "{err}");
    }

    #[test]
    fn wrong_header_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.csv");
        write_marginal_csv(&[], &path).unwrap();
        assert!(read_moment_csv(&path).is_err());
    }

    proptest! {
        #[test]
        fn float_format_is_lossless(bits in any::<u64>()) {
            let x = f64::from_bits(bits);
            prop_assume!(x.is_finite());
            let back: f64 = format_float(x).parse().unwrap();
            prop_assert_eq!(back.to_bits(), x.to_bits());
        }
    }
}
