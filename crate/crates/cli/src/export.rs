//! CSV and metadata files.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use rmm_core::measures::{CellSpec, TableCell};
use rmm_core::SampleBatch;

use crate::error::CliError;

/// `x` with 10 significant digits, trailing zeros removed.
pub fn sig10(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return x.to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    let decimals = (9 - exp).max(0) as usize;
    let s = format!("{x:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_owned()
    } else {
        s
    }
}

pub fn write_sample_csv<W: Write>(batch: &SampleBatch, out: W) -> io::Result<()> {
    let mut out = BufWriter::new(out);
    let header: Vec<String> = (1..=batch.dim()).map(|i| format!("u{i}")).collect();
    writeln!(out, "{}", header.join(","))?;
    for p in batch.points() {
        let row: Vec<String> = p.iter().map(|&x| sig10(x)).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    out.flush()
}

/// Writes a batch to `path` with header `u1,u2[,u3]`.
pub fn export_csv(batch: &SampleBatch, path: &Path) -> Result<(), CliError> {
    let file = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    write_sample_csv(batch, file).map_err(|e| CliError::io(path, e))
}

/// Reads a batch written by [`export_csv`].
pub fn import_csv(path: &Path, seed: u64) -> Result<SampleBatch, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| CliError::Usage(format!("{}: empty file", path.display())))?;
    let dim = header.split(',').count();
    let mut coords = Vec::new();
    for (i, line) in lines.enumerate() {
        for field in line.split(',') {
            let x = field.trim().parse::<f64>().map_err(|_| {
                CliError::Usage(format!(
                    "{}:{}: bad number '{field}'",
                    path.display(),
                    i + 2
                ))
            })?;
            coords.push(x);
        }
    }
    Ok(SampleBatch::from_coords(dim, seed, coords)?)
}

/// Companion metadata path: same basename with extension `.meta`.
pub fn meta_path(csv: &Path) -> PathBuf {
    csv.with_extension("meta")
}

pub fn write_meta(csv: &Path, spec_text: &str, seed: u64, n: usize) -> Result<(), CliError> {
    let path = meta_path(csv);
    let body = format!("seed: {seed}\nn: {n}\nspec: |\n{}", indent(spec_text));
    fs::write(&path, body).map_err(|e| CliError::io(&path, e))
}

fn indent(text: &str) -> String {
    text.lines().map(|l| format!("  {l}\n")).collect()
}

pub const TABLE_HEADER: &str = "base,a,b,n,kind,value,error";

/// One CSV row per cell, values with 4 decimals; failed cells carry `NaN`.
pub fn write_table_csv<W: Write>(
    rows: &[(CellSpec, rmm_core::Result<TableCell>)],
    out: W,
) -> io::Result<()> {
    let mut out = BufWriter::new(out);
    writeln!(out, "{TABLE_HEADER}")?;
    for (spec, cell) in rows {
        let (value, error) = match cell {
            Ok(c) => (c.value, c.error),
            Err(_) => (f64::NAN, f64::NAN),
        };
        writeln!(
            out,
            "{},{},{},{},{},{value:.4},{error:.4}",
            spec.base.label(),
            spec.a,
            spec.b,
            spec.n,
            spec.kind
        )?;
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(sig10(0.25), "0.25");
        assert_eq!(sig10(1.0 / 3.0), "0.3333333333");
        assert_eq!(sig10(0.000123456789012), "0.000123456789");
        assert_eq!(sig10(1.0), "1");
        assert_eq!(sig10(0.0), "0");
    }

    #[test]
    fn sample_files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        let batch =
            SampleBatch::from_coords(2, 3, vec![0.125, 1.0 / 3.0, 0.9999999999, 1e-12]).unwrap();
        export_csv(&batch, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 3);
        let back = import_csv(&path, 3).unwrap();
        for (a, b) in back.points().flatten().zip(batch.points().flatten()) {
            assert!((a - b).abs() <= 5e-10 * b.abs(), "{a} vs {b}");
        }
    }

    #[test]
    fn empty_batch_is_header_only() {
        let batch = SampleBatch::from_coords(3, 0, Vec::new()).unwrap();
        let mut buf = Vec::new();
        write_sample_csv(&batch, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "u1,u2,u3\n");
    }
}
