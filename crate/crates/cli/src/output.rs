//! Result files: structured reports and flat tables.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use photoclone::engine::SweepResult;
use photoclone::report::CloneReport;
use serde::Serialize;

/// Full double precision (17 significant digits).
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<PathBuf> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
    Ok(path.to_path_buf())
}

fn write_rows(path: &Path, header: &[&str], rows: Vec<Vec<String>>) -> Result<PathBuf> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(path.to_path_buf())
}

/// `N, p_N, n, p_n_given_N, fidelity`, one row per `(N, n)`. Sectors that
/// cannot occur are left out.
pub fn write_analytic_table(path: &Path, report: &CloneReport) -> Result<PathBuf> {
    let mut rows = Vec::new();
    for rec in report.records.iter().filter(|r| r.p_n > 0.0) {
        for c in &rec.conditional {
            rows.push(vec![
                rec.n_total.to_string(),
                num(rec.p_n),
                c.n_correct.to_string(),
                num(c.probability),
                num(rec.fidelity),
            ]);
        }
    }
    write_rows(path, &["N", "p_N", "n", "p_n_given_N", "fidelity"], rows)
}

/// The analytic columns plus standard errors, which stay empty for
/// deterministic runs.
pub fn write_simulation_table(path: &Path, report: &CloneReport) -> Result<PathBuf> {
    let mut rows = Vec::new();
    for rec in &report.records {
        for c in &rec.conditional {
            rows.push(vec![
                rec.n_total.to_string(),
                num(rec.p_n),
                opt(rec.p_n_stderr),
                c.n_correct.to_string(),
                num(c.probability),
                num(rec.fidelity),
                opt(rec.fidelity_stderr),
            ]);
        }
    }
    write_rows(
        path,
        &[
            "N",
            "p_N",
            "p_N_stderr",
            "n",
            "p_n_given_N",
            "fidelity",
            "fidelity_stderr",
        ],
        rows,
    )
}

pub fn write_sweep_table(path: &Path, result: &SweepResult) -> Result<PathBuf> {
    let mut rows = Vec::new();
    for p in &result.points {
        for e in &p.entries {
            rows.push(vec![
                num(p.reflectivity),
                num(p.gain),
                e.n_total.to_string(),
                num(e.p_n),
                num(e.fidelity),
                opt(e.fidelity_stderr),
            ]);
        }
    }
    write_rows(
        path,
        &["reflectivity", "gain", "N", "p_N", "fidelity", "fidelity_stderr"],
        rows,
    )
}

pub fn write_argmax_table(path: &Path, result: &SweepResult) -> Result<PathBuf> {
    let rows = result
        .argmax
        .iter()
        .map(|a| {
            vec![
                a.n_total.to_string(),
                num(a.reflectivity),
                num(a.gain),
                num(a.fidelity),
            ]
        })
        .collect();
    write_rows(path, &["N", "reflectivity", "gain", "fidelity"], rows)
}

/// One-line summary of the best gain per sector.
pub fn argmax_line(result: &SweepResult) -> String {
    let parts: Vec<String> = result
        .argmax
        .iter()
        .map(|a| {
            format!(
                "N={} g={:.6} R={:.6} F={:.6}",
                a.n_total, a.gain, a.reflectivity, a.fidelity
            )
        })
        .collect();
    format!("argmax: {}", parts.join("; "))
}
