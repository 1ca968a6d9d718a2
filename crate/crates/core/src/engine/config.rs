use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{ConfigIssue, Error, Result};
use crate::fock::{FockBasis, PolarizationQubit};
use crate::heterodyne::FeedbackGain;

/// Current configuration schema version.
pub const SCHEMA_VERSION: u32 = 1;
/// Minimum number of Monte Carlo batches used for standard errors.
pub const MIN_BATCHES: usize = 20;

/// How the feedback displacement is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GainSetting {
    /// `f_R = sqrt(R / (1 - R))`.
    Optimal,
    /// Explicit feedback factor `f`.
    Feedback { value: f64 },
    /// Explicit amplitude gain `g = f sqrt(R) + sqrt(1 - R)`.
    Gain { value: f64 },
}

impl GainSetting {
    pub fn resolve(&self, reflectivity: f64) -> Result<FeedbackGain> {
        match *self {
            GainSetting::Optimal => FeedbackGain::optimal(reflectivity),
            GainSetting::Feedback { value } => FeedbackGain::new(value),
            GainSetting::Gain { value } => FeedbackGain::from_gain(value, reflectivity),
        }
    }
}

/// Input polarization as `[re, im]` pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QubitConfig {
    pub c_h: [f64; 2],
    pub c_v: [f64; 2],
}

impl QubitConfig {
    pub fn to_qubit(&self) -> Result<PolarizationQubit> {
        PolarizationQubit::new(
            C64::new(self.c_h[0], self.c_h[1]),
            C64::new(self.c_v[0], self.c_v[1]),
        )
    }
}

impl From<PolarizationQubit> for QubitConfig {
    fn from(q: PolarizationQubit) -> Self {
        Self {
            c_h: [q.c_h().re, q.c_h().im],
            c_v: [q.c_v().re, q.c_v().im],
        }
    }
}

fn default_workers() -> usize {
    1
}

fn default_batches() -> usize {
    MIN_BATCHES
}

/// Integration backend for the average over measurement outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Integrator {
    /// Exact sampling from the outcome density.
    MonteCarlo {
        samples: u64,
        seed: u64,
        #[serde(default = "default_batches")]
        batches: usize,
        #[serde(default = "default_workers")]
        workers: usize,
    },
    /// Tensor Gauss-Hermite rule over the four quadratures.
    GaussHermite {
        /// Points per quadrature; defaults to `cutoff + 2`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        points: Option<usize>,
        #[serde(default = "default_workers")]
        workers: usize,
    },
}

/// Parameter list for a sweep. Exactly one list is set.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gains: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reflectivities: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub reflectivity: f64,
    pub gain: GainSetting,
    pub qubit: QubitConfig,
    /// Total photon-number cutoff of the simulated basis.
    pub cutoff: usize,
    /// Largest output photon number reported.
    pub n_max: usize,
    pub integrator: Integrator,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
}

/// Fewest Gauss-Hermite points that integrate every matrix element of the
/// sectors `N <= n_top` exactly.
///
/// Each amplitude of sector `M` is a Gaussian times a polynomial of degree
/// `M + 1` in the quadratures, so a product of two such amplitudes has
/// degree at most `2 n_top + 2`, and an `n`-point rule is exact up to
/// degree `2n - 1`.
pub fn exact_quadrature_points(n_top: usize) -> usize {
    n_top + 2
}

impl ExperimentConfig {
    /// A Gauss-Hermite configuration at the optimal gain.
    pub fn quadrature(reflectivity: f64, qubit: PolarizationQubit, cutoff: usize, n_max: usize) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            reflectivity,
            gain: GainSetting::Optimal,
            qubit: qubit.into(),
            cutoff,
            n_max,
            integrator: Integrator::GaussHermite {
                points: None,
                workers: 1,
            },
            sweep: None,
        }
    }

    /// A Monte Carlo configuration at the optimal gain.
    pub fn monte_carlo(
        reflectivity: f64,
        qubit: PolarizationQubit,
        cutoff: usize,
        n_max: usize,
        samples: u64,
        seed: u64,
    ) -> Self {
        Self {
            integrator: Integrator::MonteCarlo {
                samples,
                seed,
                batches: MIN_BATCHES,
                workers: 1,
            },
            ..Self::quadrature(reflectivity, qubit, cutoff, n_max)
        }
    }

    pub fn with_gain(mut self, gain: GainSetting) -> Self {
        self.gain = gain;
        self
    }

    pub fn with_workers(mut self, n: usize) -> Self {
        match &mut self.integrator {
            Integrator::MonteCarlo { workers, .. } | Integrator::GaussHermite { workers, .. } => *workers = n,
        }
        self
    }

    pub fn with_seed(mut self, new_seed: u64) -> Self {
        if let Integrator::MonteCarlo { seed, .. } = &mut self.integrator {
            *seed = new_seed;
        }
        self
    }

    pub fn qubit(&self) -> Result<PolarizationQubit> {
        self.qubit.to_qubit()
    }

    pub fn basis(&self) -> Result<FockBasis> {
        FockBasis::new(self.cutoff)
    }

    /// Quadrature points actually used.
    pub fn quadrature_points(&self) -> Option<usize> {
        match self.integrator {
            Integrator::GaussHermite { points, .. } => {
                Some(points.unwrap_or_else(|| exact_quadrature_points(self.cutoff)))
            }
            Integrator::MonteCarlo { .. } => None,
        }
    }

    /// Nonfatal remarks about the configuration.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let Some(points) = self.quadrature_points() {
            let needed = exact_quadrature_points(self.n_max);
            if points < needed {
                out.push(format!(
                    "integrator.points = {points} is below the exactness bound {needed} for n_max = {}",
                    self.n_max
                ));
            } else if points < exact_quadrature_points(self.cutoff) {
                out.push(format!(
                    "integrator.points = {points} integrates sectors above {} only approximately; \
                     the reported leakage is approximate",
                    points - 2
                ));
            }
        }
        out
    }

    /// Collects every schema violation, addressed by field path.
    pub fn issues(&self) -> Vec<ConfigIssue> {
        let mut issues = Vec::new();
        let mut push = |path: &str, msg: String| issues.push(ConfigIssue::new(path, msg));
        if self.schema_version != SCHEMA_VERSION {
            push(
                "schema_version",
                format!(
                    "unsupported version {}, expected {SCHEMA_VERSION}",
                    self.schema_version
                ),
            );
        }
        let r_ok = (0.0..1.0).contains(&self.reflectivity);
        if !r_ok {
            push("reflectivity", format!("{} is outside [0, 1)", self.reflectivity));
        }
        if let Err(e) = self.qubit.to_qubit() {
            push("qubit", e.to_string());
        }
        if r_ok {
            if let Err(e) = self.gain.resolve(self.reflectivity) {
                push("gain.value", e.to_string());
            }
        }
        if self.n_max < 1 {
            push("n_max", "the reported photon-number range is empty".into());
        }
        if self.cutoff < self.n_max + 2 {
            push(
                "cutoff",
                format!("{} is below n_max + 2 = {}", self.cutoff, self.n_max + 2),
            );
        }
        match self.integrator {
            Integrator::MonteCarlo {
                samples,
                batches,
                workers,
                ..
            } => {
                if batches < MIN_BATCHES {
                    push(
                        "integrator.batches",
                        format!("{batches} is below the minimum {MIN_BATCHES}"),
                    );
                }
                if samples < batches as u64 || samples < 1 {
                    push(
                        "integrator.samples",
                        format!("{samples} samples cannot fill {batches} batches"),
                    );
                }
                if workers < 1 {
                    push("integrator.workers", "at least one worker is required".into());
                }
            }
            Integrator::GaussHermite { points, workers } => {
                if let Some(p) = points {
                    if p < 2 {
                        push("integrator.points", format!("{p} is below the minimum 2"));
                    }
                }
                if workers < 1 {
                    push("integrator.workers", "at least one worker is required".into());
                }
            }
        }
        if let Some(sweep) = &self.sweep {
            match (&sweep.gains, &sweep.reflectivities) {
                (Some(_), Some(_)) | (None, None) => push(
                    "sweep",
                    "exactly one of sweep.gains or sweep.reflectivities must be given".into(),
                ),
                (Some(list), None) => {
                    check_list("sweep.gains", list, &mut push);
                    if r_ok {
                        for (i, &g) in list.iter().enumerate() {
                            if let Err(e) = FeedbackGain::from_gain(g, self.reflectivity) {
                                push(&format!("sweep.gains[{i}]"), e.to_string());
                            }
                        }
                    }
                }
                (None, Some(list)) => {
                    check_list("sweep.reflectivities", list, &mut push);
                    for (i, &r) in list.iter().enumerate() {
                        if !(0.0..1.0).contains(&r) {
                            push(
                                &format!("sweep.reflectivities[{i}]"),
                                format!("{r} is outside [0, 1)"),
                            );
                        } else if let Err(e) = self.gain.resolve(r) {
                            push(&format!("sweep.reflectivities[{i}]"), e.to_string());
                        }
                    }
                }
            }
        }
        issues
    }

    pub fn validate(&self) -> Result<()> {
        let issues = self.issues();
        if issues.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(issues))
        }
    }
}

fn check_list(path: &str, list: &[f64], push: &mut impl FnMut(&str, String)) {
    if list.is_empty() {
        push(path, "the sweep list is empty".into());
    }
    if list.iter().any(|x| !x.is_finite()) {
        push(path, "values must be finite".into());
    }
    if list.windows(2).any(|w| w[0] >= w[1]) {
        push(path, "values must be strictly increasing".into());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_quadrature_is_valid() {
        let cfg = ExperimentConfig::quadrature(0.5, PolarizationQubit::horizontal(), 12, 5);
        cfg.validate().unwrap();
        assert_eq!(cfg.quadrature_points(), Some(14));
        assert!(cfg.warnings().is_empty());
    }

    #[test]
    fn issues_carry_field_paths() {
        let mut cfg = ExperimentConfig::monte_carlo(1.2, PolarizationQubit::horizontal(), 3, 2, 5, 1);
        cfg.qubit.c_v = [0.5, 0.0];
        cfg.sweep = Some(SweepSpec {
            gains: Some(vec![1.0, 0.9]),
            reflectivities: None,
        });
        let paths: Vec<String> = cfg.issues().into_iter().map(|i| i.path).collect();
        for expected in [
            "reflectivity",
            "qubit",
            "cutoff",
            "integrator.samples",
            "sweep.gains",
        ] {
            assert!(
                paths.iter().any(|p| p == expected),
                "missing {expected} in {paths:?}"
            );
        }
    }

    #[test]
    fn empty_range_and_low_order() {
        let mut cfg = ExperimentConfig::quadrature(0.5, PolarizationQubit::horizontal(), 6, 0);
        assert!(cfg.issues().iter().any(|i| i.path == "n_max"));
        cfg.n_max = 4;
        cfg.integrator = Integrator::GaussHermite {
            points: Some(4),
            workers: 1,
        };
        cfg.validate().unwrap();
        assert_eq!(cfg.warnings().len(), 1);
    }

    #[test]
    fn unreachable_gain_is_reported() {
        let cfg = ExperimentConfig::quadrature(0.5, PolarizationQubit::horizontal(), 6, 2)
            .with_gain(GainSetting::Gain { value: 0.5 });
        assert!(cfg.issues().iter().any(|i| i.path == "gain.value"));
    }
}
