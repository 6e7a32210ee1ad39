//! Snapshot-by-snapshot comparison of two bundles.

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use fkpp_core::analysis::{rel_l2, rel_linf};
use fkpp_core::csv::{read_table, write_rows};
use fkpp_core::quadrature::{periodic_interpolate, periodic_nodes};

use crate::error::{CliError, Result};

pub const SNAPSHOT_PREFIX: &str = "snapshot_t";

pub fn snapshot_name(t: f64) -> String {
    format!("{SNAPSHOT_PREFIX}{t}.csv")
}

/// Snapshot files of a bundle, sorted by time.
pub fn snapshots(dir: &Path) -> Result<Vec<(f64, PathBuf)>> {
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    let mut out = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| CliError::io(dir, e))?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
        if let Some(t) = name
            .strip_prefix(SNAPSHOT_PREFIX)
            .and_then(|r| r.strip_suffix(".csv"))
            .and_then(|t| t.parse::<f64>().ok())
        {
            out.push((t, path));
        }
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(out)
}

/// `s` and `rho` columns of a snapshot file.
pub fn read_profile(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let table = read_table(BufReader::new(file))
        .map_err(|e| CliError::Incompatible(format!("{}: {e}", path.display())))?;
    let col = |name| {
        table
            .column(name)
            .map_err(|e| CliError::Incompatible(format!("{}: {e}", path.display())))
    };
    Ok((col("s")?, col("rho")?))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompareRow {
    pub t: f64,
    pub abs_linf: f64,
    pub rel_linf: f64,
    pub rel_l2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    pub rows: Vec<CompareRow>,
    pub tol_linf: f64,
    pub tol_l2: f64,
}

impl CompareReport {
    pub fn row_passes(&self, r: &CompareRow) -> bool {
        r.rel_linf <= self.tol_linf && r.rel_l2 <= self.tol_l2
    }

    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| self.row_passes(r))
    }

    pub fn at(&self, t: f64) -> Option<&CompareRow> {
        self.rows.iter().find(|r| r.t == t)
    }

    /// Columns `t,abs_linf,rel_linf,rel_l2,pass`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let rows = self.rows.iter().map(|r| {
            [
                r.t,
                r.abs_linf,
                r.rel_linf,
                r.rel_l2,
                if self.row_passes(r) { 1.0 } else { 0.0 },
            ]
        });
        write_rows(&mut out, &["t", "abs_linf", "rel_linf", "rel_l2", "pass"], rows)?;
        Ok(())
    }
}

/// Compare bundle `a` against the reference bundle `b`. Both need the same
/// snapshot times; if the angle grids differ, `b` is resampled onto the grid
/// of `a` by periodic interpolation.
pub fn compare(a: &Path, b: &Path, tol_linf: f64, tol_l2: f64) -> Result<CompareReport> {
    let sa = snapshots(a)?;
    let sb = snapshots(b)?;
    if sa.is_empty() {
        return Err(CliError::Incompatible(format!("{} has no snapshots", a.display())));
    }
    let ta: Vec<f64> = sa.iter().map(|x| x.0).collect();
    let tb: Vec<f64> = sb.iter().map(|x| x.0).collect();
    if ta != tb {
        return Err(CliError::Incompatible(format!(
            "snapshot times differ: {ta:?} vs {tb:?}"
        )));
    }
    let mut rows = Vec::with_capacity(sa.len());
    for ((t, pa), (_, pb)) in sa.iter().zip(&sb) {
        let (s_a, rho_a) = read_profile(pa)?;
        let (s_b, rho_b) = read_profile(pb)?;
        let reference = if s_a == s_b {
            rho_b
        } else {
            if !on_periodic_grid(&s_b) {
                return Err(CliError::Incompatible(format!(
                    "{} is not on a uniform periodic grid",
                    pb.display()
                )));
            }
            s_a.iter().map(|&s| periodic_interpolate(&rho_b, s)).collect()
        };
        let abs_linf = rho_a
            .iter()
            .zip(&reference)
            .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        rows.push(CompareRow {
            t: *t,
            abs_linf,
            rel_linf: rel_linf(&rho_a, &reference)?,
            rel_l2: rel_l2(&rho_a, &reference)?,
        });
    }
    Ok(CompareReport {
        rows,
        tol_linf,
        tol_l2,
    })
}

fn on_periodic_grid(s: &[f64]) -> bool {
    let nodes = periodic_nodes(s.len());
    s.iter().zip(&nodes).all(|(x, y)| (x - y).abs() < 1e-12)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_snapshot(dir: &Path, t: f64, s: &[f64], rho: &[f64]) {
        let rows: Vec<[f64; 2]> = s.iter().zip(rho).map(|(a, b)| [*a, *b]).collect();
        let f = File::create(dir.join(snapshot_name(t))).unwrap();
        write_rows(&mut std::io::BufWriter::new(f), &["s", "rho"], &rows).unwrap();
    }

    #[test]
    fn snapshot_names_round_trip_and_sort() {
        let dir = tempfile::tempdir().unwrap();
        let s = periodic_nodes(8);
        for t in [200.0, 0.0, 50.0, 2.5] {
            write_snapshot(dir.path(), t, &s, &vec![1.0; 8]);
        }
        let times: Vec<f64> = snapshots(dir.path()).unwrap().iter().map(|x| x.0).collect();
        assert_eq!(times, vec![0.0, 2.5, 50.0, 200.0]);
        assert_eq!(snapshot_name(50.0), "snapshot_t50.csv");
    }

    #[test]
    fn resamples_a_finer_reference() {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let coarse = periodic_nodes(32);
        let fine = periodic_nodes(64);
        let f = |s: f64| 1.0 + 0.1 * s.cos();
        write_snapshot(a.path(), 1.0, &coarse, &coarse.iter().map(|&s| f(s)).collect::<Vec<_>>());
        write_snapshot(b.path(), 1.0, &fine, &fine.iter().map(|&s| f(s)).collect::<Vec<_>>());
        let rep = compare(a.path(), b.path(), 1e-3, 1e-3).unwrap();
        assert!(rep.passed());
        assert!(rep.at(1.0).unwrap().abs_linf < 1e-3);
    }

    #[test]
    fn mismatched_times_are_incompatible() {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let s = periodic_nodes(8);
        write_snapshot(a.path(), 1.0, &s, &[1.0; 8]);
        write_snapshot(b.path(), 2.0, &s, &[1.0; 8]);
        let err = compare(a.path(), b.path(), 0.1, 0.1).unwrap_err();
        assert!(matches!(err, CliError::Incompatible(_)));
        assert_eq!(err.exit_code(), 2);
    }
}
