//! Per-run cloning statistics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for `sum P(N) + leakage = 1` in deterministic reports.
pub const WEIGHT_BALANCE_TOL: f64 = 1e-9;
/// Tolerance for each conditional distribution summing to 1.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// How a report was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Provenance {
    Analytic,
    MonteCarlo { samples: u64, seed: u64, batches: usize },
    Quadrature { order: usize },
}

/// Probability of `n_correct` photons in the input polarization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalEntry {
    pub n_correct: usize,
    pub probability: f64,
}

/// Statistics of the `N`-photon output sector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorRecord {
    pub n_total: usize,
    pub p_n: f64,
    pub p_n_stderr: Option<f64>,
    pub conditional: Vec<ConditionalEntry>,
    pub fidelity: f64,
    pub fidelity_stderr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CloneReport {
    pub reflectivity: f64,
    pub feedback: f64,
    pub gain: f64,
    pub records: Vec<SectorRecord>,
    /// Trace of every sector from 0 up to the cutoff.
    pub sector_weights: Vec<f64>,
    pub truncation_leakage: f64,
    pub provenance: Provenance,
    pub diagnostics: Vec<String>,
}

impl CloneReport {
    pub fn record(&self, n_total: usize) -> Option<&SectorRecord> {
        self.records.iter().find(|r| r.n_total == n_total)
    }

    pub fn is_monte_carlo(&self) -> bool {
        matches!(self.provenance, Provenance::MonteCarlo { .. })
    }

    /// Checks the weight balance and the row sums of every conditional
    /// distribution. Monte Carlo reports are balanced by construction of
    /// the estimator, so the same tolerance applies to them.
    pub fn check_invariants(&self) -> Result<()> {
        let total: f64 = self.sector_weights.iter().sum::<f64>() + self.truncation_leakage;
        if (total - 1.0).abs() > WEIGHT_BALANCE_TOL {
            return Err(Error::InvalidDensity(format!(
                "sector weights plus leakage sum to {total}"
            )));
        }
        for rec in &self.records {
            if rec.conditional.is_empty() {
                continue;
            }
            let row: f64 = rec.conditional.iter().map(|e| e.probability).sum();
            if (row - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::InvalidDensity(format!(
                    "P(n|{}) sums to {row}",
                    rec.n_total
                )));
            }
        }
        Ok(())
    }
}
