//! Pattern sample export and array-factor scans.

use std::f64::consts::PI;
use std::io::{Read, Write};

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::experiment::{csv_writer, format_float};
use crate::channel::{ChannelRealization, PatternMatrix};
use crate::error::{Error, Result};

pub const PATTERN_CSV_HEADER: [&str; 4] = ["antenna_index", "path_index", "aod_rad", "sample_value"];

fn check_shape(r: &ChannelRealization, m: &PatternMatrix) -> Result<()> {
    let (n_tx, l) = (r.config().n_tx, r.n_paths());
    if m.n_tx() != n_tx || m.n_paths() != l {
        return Err(Error::ShapeMismatch {
            expected: format!("{n_tx}x{l}"),
            got: format!("{}x{}", m.n_tx(), m.n_paths()),
        });
    }
    Ok(())
}

/// One row per (antenna, path) with the pattern sample at that path's AoD.
pub fn export_pattern_samples<W: Write>(r: &ChannelRealization, m: &PatternMatrix, out: W) -> Result<()> {
    check_shape(r, m)?;
    let mut w = csv_writer(out);
    w.write_record(PATTERN_CSV_HEADER)?;
    for (l, path) in r.paths().iter().enumerate() {
        for k in 0..m.n_tx() {
            w.write_record([k.to_string(), l.to_string(), format_float(path.aod), format_float(m.entries()[(k, l)])])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Rebuild the pattern matrix from an exported sample CSV.
pub fn read_pattern_samples<R: Read>(input: R) -> Result<PatternMatrix> {
    let mut reader = csv::Reader::from_reader(input);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header != PATTERN_CSV_HEADER {
        return Err(Error::InvalidConfig(format!("unexpected pattern CSV header {header:?}")));
    }
    let bad = || Error::InvalidConfig("malformed pattern CSV row".into());
    let mut cells = Vec::new();
    for record in reader.records() {
        let record = record?;
        let k: usize = record[0].parse().map_err(|_| bad())?;
        let l: usize = record[1].parse().map_err(|_| bad())?;
        let v: f64 = record[3].parse().map_err(|_| bad())?;
        cells.push((k, l, v));
    }
    let n_tx = cells.iter().map(|c| c.0 + 1).max().ok_or(Error::Empty("pattern CSV"))?;
    let l = cells.iter().map(|c| c.1 + 1).max().unwrap_or(0);
    if cells.len() != n_tx * l {
        return Err(Error::ShapeMismatch {
            expected: format!("{} rows", n_tx * l),
            got: format!("{} rows", cells.len()),
        });
    }
    let mut entries = DMatrix::from_element(n_tx, l, f64::NAN);
    for (k, l, v) in cells {
        entries[(k, l)] = v;
    }
    PatternMatrix::new(entries)
}

/// Periodic (2π) piecewise-linear interpolation through `(angle, value)` samples.
#[derive(Debug, Clone)]
pub struct PeriodicInterpolant {
    knots: Vec<(f64, f64)>,
}

impl PeriodicInterpolant {
    /// Samples sharing an angle are averaged.
    pub fn new(samples: &[(f64, f64)]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Empty("interpolation samples"));
        }
        let mut sorted: Vec<(f64, f64)> = samples.iter().map(|&(a, v)| (a.rem_euclid(2.0 * PI), v)).collect();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut knots: Vec<(f64, f64, usize)> = Vec::new();
        for (a, v) in sorted {
            match knots.last_mut() {
                Some(last) if last.0 == a => {
                    last.1 += v;
                    last.2 += 1;
                }
                _ => knots.push((a, v, 1)),
            }
        }
        Ok(Self { knots: knots.into_iter().map(|(a, s, n)| (a, s / n as f64)).collect() })
    }

    pub fn eval(&self, angle: f64) -> f64 {
        let knots = &self.knots;
        if knots.len() < 2 {
            return knots[0].1;
        }
        let x = angle.rem_euclid(2.0 * PI);
        let upper = knots.partition_point(|k| k.0 <= x);
        let (lo, hi) = match upper {
            0 => ((knots[knots.len() - 1].0 - 2.0 * PI, knots[knots.len() - 1].1), knots[0]),
            u if u == knots.len() => (knots[u - 1], (knots[0].0 + 2.0 * PI, knots[0].1)),
            u => (knots[u - 1], knots[u]),
        };
        let t = (x - lo.0) / (hi.0 - lo.0);
        lo.1 + t * (hi.1 - lo.1)
    }
}

/// `|Σ_k f_k(ψ) exp(j 2π d k sin ψ)|` over `scan`, where `f_k` interpolates
/// antenna `k`'s pattern samples over the path AoDs.
pub fn array_factor_scan(r: &ChannelRealization, m: &PatternMatrix, scan: &[f64]) -> Result<Vec<(f64, f64)>> {
    check_shape(r, m)?;
    if scan.is_empty() {
        return Err(Error::Empty("scan grid"));
    }
    let spacing = r.config().tx_spacing_ratio;
    let elements = (0..m.n_tx())
        .map(|k| {
            let samples: Vec<(f64, f64)> =
                r.paths().iter().enumerate().map(|(l, p)| (p.aod, m.entries()[(k, l)])).collect();
            PeriodicInterpolant::new(&samples)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(scan
        .iter()
        .map(|&psi| {
            let phase = 2.0 * PI * spacing * psi.sin();
            let sum: Complex64 =
                elements.iter().enumerate().map(|(k, f)| Complex64::from_polar(f.eval(psi), phase * k as f64)).sum();
            (psi, sum.norm())
        })
        .collect())
}

/// `n` evenly spaced angles covering `[−π/2, π/2]`.
pub fn scan_grid(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n).map(|i| -PI / 2.0 + PI * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Columns `angle_rad` plus one magnitude column per named curve.
pub fn write_array_factor_csv<W: Write>(scan: &[f64], curves: &[(&str, Vec<(f64, f64)>)], out: W) -> Result<()> {
    if curves.iter().any(|(_, c)| c.len() != scan.len()) {
        return Err(Error::ShapeMismatch {
            expected: format!("{} points", scan.len()),
            got: "curve of other length".into(),
        });
    }
    let mut w = csv_writer(out);
    let mut header = vec!["angle_rad".to_string()];
    header.extend(curves.iter().map(|(name, _)| name.to_string()));
    w.write_record(&header)?;
    for (i, &angle) in scan.iter().enumerate() {
        let mut record = vec![format_float(angle)];
        record.extend(curves.iter().map(|(_, c)| format_float(c[i].1)));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}
