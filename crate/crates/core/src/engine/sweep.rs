use serde::{Deserialize, Serialize};

use super::accumulate::accumulate_output;
use super::config::{ExperimentConfig, GainSetting};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub n_total: usize,
    pub p_n: f64,
    pub fidelity: f64,
    pub fidelity_stderr: Option<f64>,
}

/// One evaluated sweep parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub reflectivity: f64,
    pub feedback: f64,
    pub gain: f64,
    pub entries: Vec<SweepEntry>,
    /// `P(N)`-weighted mean fidelity over the reported sectors.
    pub mean_fidelity: f64,
}

/// Gain (and reflectivity) of the best fidelity for one sector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepArgmax {
    pub n_total: usize,
    pub reflectivity: f64,
    pub gain: f64,
    pub fidelity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
    pub argmax: Vec<SweepArgmax>,
    pub monte_carlo: bool,
}

/// Evaluates the per-sector fidelity for every entry of the configured
/// sweep. Gains are realized through the general feedback path; the
/// optimal-gain shortcut is never used here.
pub fn gain_sweep(config: &ExperimentConfig) -> Result<SweepResult> {
    config.validate()?;
    let sweep = config.sweep.as_ref().ok_or_else(|| {
        Error::InvalidConfig(vec![crate::error::ConfigIssue::new(
            "sweep",
            "a sweep list is required",
        )])
    })?;
    let runs: Vec<ExperimentConfig> = match (&sweep.gains, &sweep.reflectivities) {
        (Some(gains), None) => gains
            .iter()
            .map(|&g| {
                let mut c = config.clone().with_gain(GainSetting::Gain { value: g });
                c.sweep = None;
                c
            })
            .collect(),
        (None, Some(rs)) => rs
            .iter()
            .map(|&r| {
                let mut c = config.clone();
                c.reflectivity = r;
                c.sweep = None;
                c
            })
            .collect(),
        _ => unreachable!("validated sweep"),
    };

    let mut points = Vec::with_capacity(runs.len());
    let mut monte_carlo = false;
    for run in &runs {
        let acc = accumulate_output(run)?;
        let rep = acc.report;
        monte_carlo = rep.is_monte_carlo();
        let entries: Vec<SweepEntry> = rep
            .records
            .iter()
            .map(|r| SweepEntry {
                n_total: r.n_total,
                p_n: r.p_n,
                fidelity: r.fidelity,
                fidelity_stderr: r.fidelity_stderr,
            })
            .collect();
        let mass: f64 = entries.iter().map(|e| e.p_n).sum();
        let mean_fidelity = entries
            .iter()
            .filter(|e| e.fidelity.is_finite())
            .map(|e| e.p_n * e.fidelity)
            .sum::<f64>()
            / mass;
        points.push(SweepPoint {
            reflectivity: rep.reflectivity,
            feedback: rep.feedback,
            gain: rep.gain,
            entries,
            mean_fidelity,
        });
    }

    let argmax = (1..=config.n_max)
        .filter_map(|n| {
            points
                .iter()
                .filter_map(|p| {
                    let e = p.entries.iter().find(|e| e.n_total == n)?;
                    e.fidelity.is_finite().then_some((p, e.fidelity))
                })
                // first maximum wins on ties
                .fold(None, |best: Option<(&SweepPoint, f64)>, (p, f)| match best {
                    Some((_, bf)) if bf >= f => best,
                    _ => Some((p, f)),
                })
                .map(|(p, f)| SweepArgmax {
                    n_total: n,
                    reflectivity: p.reflectivity,
                    gain: p.gain,
                    fidelity: f,
                })
        })
        .collect();

    Ok(SweepResult {
        points,
        argmax,
        monte_carlo,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::config::SweepSpec;
    use crate::fock::PolarizationQubit;

    fn base() -> ExperimentConfig {
        ExperimentConfig::quadrature(0.5, PolarizationQubit::from_bloch(1.0, 0.5), 4, 2)
    }

    #[test]
    fn three_gains_peak_at_the_optimum() {
        let mut cfg = base();
        cfg.sweep = Some(SweepSpec {
            gains: Some(vec![1.2, 2f64.sqrt(), 1.6]),
            reflectivities: None,
        });
        let res = gain_sweep(&cfg).unwrap();
        assert!(!res.monte_carlo);
        let best = res.argmax.iter().find(|a| a.n_total == 2).unwrap();
        assert!((best.gain - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn single_gain_is_a_degenerate_sweep() {
        let mut cfg = base();
        cfg.sweep = Some(SweepSpec {
            gains: Some(vec![2f64.sqrt()]),
            reflectivities: None,
        });
        let res = gain_sweep(&cfg).unwrap();
        assert_eq!(res.points.len(), 1);
        assert!((res.argmax[0].gain - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn fidelity_does_not_depend_on_reflectivity_at_the_optimum() {
        let mut cfg = base();
        cfg.sweep = Some(SweepSpec {
            gains: None,
            reflectivities: Some(vec![0.1, 0.3, 0.5, 0.7, 0.9]),
        });
        let res = gain_sweep(&cfg).unwrap();
        for p in &res.points {
            let f2 = p.entries.iter().find(|e| e.n_total == 2).unwrap().fidelity;
            assert!((f2 - 5.0 / 6.0).abs() < 1e-10, "R = {}", p.reflectivity);
        }
        assert!(res.points.windows(2).all(|w| w[0].gain < w[1].gain));
    }

    #[test]
    fn missing_sweep_is_rejected() {
        assert!(gain_sweep(&base()).is_err());
    }
}
