//! One bundle per value of a scalar key, plus a summary table.

use std::path::PathBuf;
use std::time::Instant;

use fkpp_core::analysis::richardson_order;
use fkpp_core::csv::write_rows;

use crate::config::ScenarioConfig;
use crate::error::{CliError, Result};
use crate::run::{manifest, run_single, BundleWriter, RunOutcome, RunSummary};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepEntry {
    pub value: f64,
    pub outcome: RunOutcome,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub axis: String,
    pub entries: Vec<SweepEntry>,
    /// Empirical orders between consecutive values, when a reference was
    /// configured.
    pub orders: Vec<f64>,
    /// The sweep directory itself, with `summary.csv`.
    pub outcome: RunOutcome,
}

impl SweepTable {
    pub fn summary(&self, value: f64) -> Option<&RunSummary> {
        self.entries
            .iter()
            .find(|e| e.value == value)
            .map(|e| &e.outcome.summary)
    }
}

/// Directory name of one sweep entry.
pub fn entry_dir_name(axis: &str, value: &str) -> String {
    format!("{axis}_{value}")
}

pub fn sweep(cfg: &ScenarioConfig) -> Result<SweepTable> {
    let spec = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::validation("sweep.axis", "no sweep configured"))?;
    let start = Instant::now();
    let mut bundle = BundleWriter::create(&cfg.out_dir)?;
    let mut entries = Vec::with_capacity(spec.values.len());
    for v in &spec.values {
        let mut raw = cfg.raw.clone();
        raw.set(&spec.axis, v)?;
        raw.set("sweep.axis", "")?;
        raw.set("sweep.values", "")?;
        let dir: PathBuf = cfg.out_dir.join(entry_dir_name(&spec.axis, v));
        raw.set("output.dir", &dir.to_string_lossy())?;
        let entry_cfg = ScenarioConfig::from_config(&raw)?;
        let outcome = run_single(&entry_cfg)?;
        entries.push(SweepEntry {
            value: v.parse().expect("validated as a number"),
            outcome,
        });
    }
    let with_reference = entries.iter().all(|e| e.outcome.summary.reference_abs.is_some());
    let mut header = vec!["value", "n_peaks", "homogeneity", "mass", "support"];
    if with_reference {
        header.extend(["ref_abs", "ref_rel"]);
    }
    let rows: Vec<Vec<f64>> = entries
        .iter()
        .map(|e| {
            let s = &e.outcome.summary;
            let mut row = vec![e.value, s.n_peaks as f64, s.homogeneity, s.mass, s.support];
            if with_reference {
                row.push(s.reference_abs.unwrap_or(f64::NAN));
                row.push(s.reference_rel.unwrap_or(f64::NAN));
            }
            row
        })
        .collect();
    bundle.csv("summary.csv", |out| {
        write_rows(out, &header, &rows)?;
        Ok(())
    })?;
    let mut orders = Vec::new();
    // successive ratios only mean an order when T is refined
    if with_reference && entries.len() > 1 && spec.axis == "model.T" {
        let mut order_rows = Vec::new();
        for w in entries.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            let ea = a.outcome.summary.reference_abs.unwrap_or(0.0);
            let eb = b.outcome.summary.reference_abs.unwrap_or(0.0);
            let ratio = b.value / a.value;
            let order = richardson_order(ea, eb, ratio).unwrap_or(f64::NAN);
            orders.push(order);
            order_rows.push([a.value, b.value, order]);
        }
        bundle.csv("richardson.csv", |out| {
            write_rows(out, &["value", "next", "order"], &order_rows)?;
            Ok(())
        })?;
    }
    let last = entries
        .last()
        .map(|e| e.outcome.summary.clone())
        .expect("sweeps have at least one value");
    let mut summary = last;
    summary.notes = vec![
        ("sweep_axis".into(), spec.axis.clone()),
        ("sweep_values".into(), spec.values.join(", ")),
    ];
    let text = manifest(&cfg.raw, &bundle_files(&bundle), &summary, start.elapsed().as_secs_f64());
    bundle.text("manifest.txt", &text)?;
    let (dir, files) = bundle.into_parts();
    Ok(SweepTable {
        axis: spec.axis.clone(),
        entries,
        orders,
        outcome: RunOutcome { dir, files, summary },
    })
}

fn bundle_files(b: &BundleWriter) -> Vec<PathBuf> {
    b.files().to_vec()
}
