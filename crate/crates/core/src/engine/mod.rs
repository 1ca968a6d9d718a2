//! Numerical evaluation of the cloning loop.

pub mod accumulate;
pub mod coherent;
pub mod config;
pub mod measure;
pub mod quadrature;
pub mod sweep;

pub use accumulate::{accumulate_output, Accumulation, Pipeline};
pub use coherent::{coherent_amplification_check, CoherentCheck};
pub use config::{ExperimentConfig, GainSetting, Integrator, QubitConfig, SweepSpec};
pub use measure::{aligned_distribution, measure_fidelity};
pub use quadrature::GaussHermite;
pub use sweep::{gain_sweep, SweepArgmax, SweepEntry, SweepPoint, SweepResult};

use crate::error::{Error, Result};
use crate::report::CloneReport;
use crate::theory::analytic_report;

/// One report per requested `(R, gain)` pair.
///
/// The optimal gain uses the closed forms; any other gain, or a sweep over
/// gains, goes through the configured integrator.
pub fn reproduce_tables(config: &ExperimentConfig) -> Result<Vec<CloneReport>> {
    if config.n_max < 1 {
        return Err(Error::OutOfRange {
            what: "n_max",
            value: config.n_max.to_string(),
            allowed: ">= 1".into(),
        });
    }
    config.validate()?;
    let runs: Vec<ExperimentConfig> = match &config.sweep {
        None => vec![config.clone()],
        Some(sweep) => {
            let base = ExperimentConfig {
                sweep: None,
                ..config.clone()
            };
            let mut runs = Vec::new();
            for &g in sweep.gains.iter().flatten() {
                runs.push(base.clone().with_gain(GainSetting::Gain { value: g }));
            }
            for &r in sweep.reflectivities.iter().flatten() {
                runs.push(ExperimentConfig {
                    reflectivity: r,
                    ..base.clone()
                });
            }
            runs
        }
    };
    runs.iter()
        .map(|run| {
            let report = match run.gain {
                GainSetting::Optimal => analytic_report(run.reflectivity, run.n_max, run.cutoff)?,
                _ => accumulate_output(run)?.report,
            };
            report.check_invariants()?;
            Ok(report)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::PolarizationQubit;

    #[test]
    fn half_reflectivity_tables() {
        let cfg = ExperimentConfig::quadrature(0.5, PolarizationQubit::diagonal(), 6, 4);
        let reps = reproduce_tables(&cfg).unwrap();
        assert_eq!(reps.len(), 1);
        let p: Vec<f64> = reps[0].records.iter().map(|r| r.p_n).collect();
        let f: Vec<f64> = reps[0].records.iter().map(|r| r.fidelity).collect();
        for (got, want) in p.iter().zip([0.125, 0.1875, 0.1875, 0.15625]) {
            assert!((got - want).abs() < 1e-15);
        }
        for (got, want) in f.iter().zip([1.0, 5.0 / 6.0, 7.0 / 9.0, 0.75]) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn low_reflectivity_favours_one_photon() {
        let cfg = ExperimentConfig::quadrature(0.1, PolarizationQubit::horizontal(), 6, 4);
        let rep = &reproduce_tables(&cfg).unwrap()[0];
        let p1 = rep.records[0].p_n;
        assert!(rep.records[1..].iter().all(|r| r.p_n < p1));
    }

    #[test]
    fn empty_range_is_rejected() {
        let mut cfg = ExperimentConfig::quadrature(0.5, PolarizationQubit::horizontal(), 6, 4);
        cfg.n_max = 0;
        assert!(reproduce_tables(&cfg).is_err());
    }
}
