//! Averages the feedback-displaced conditional state over measurement
//! outcomes, by tensor Gauss-Hermite quadrature or by exact sampling.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{ExperimentConfig, Integrator};
use super::measure::{aligned_distribution, measure_fidelity};
use super::quadrature::GaussHermite;
use crate::error::{Error, Result};
use crate::fock::{DensityOperator, FockBasis, PolarizationQubit, TwoModeState};
use crate::heterodyne::{displaced_conditional_state, sample_outcome, FeedbackGain, HeterodyneOutcome};
use crate::optics::SafetyBound;
use crate::report::{CloneReport, ConditionalEntry, Provenance, SectorRecord};

/// Rows per dense rank-k update.
const BLOCK_ROWS: usize = 256;

/// The pipeline parameters after validation.
#[derive(Debug, Clone, Copy)]
pub struct Pipeline {
    pub qubit: PolarizationQubit,
    pub reflectivity: f64,
    pub gain: FeedbackGain,
    pub basis: FockBasis,
}

impl Pipeline {
    pub fn from_config(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            qubit: config.qubit()?,
            reflectivity: config.reflectivity,
            gain: config.gain.resolve(config.reflectivity)?,
            basis: config.basis()?,
        })
    }

    /// Unnormalized integrand `sqrt(p(beta)) D(f beta) |psi(beta)>`.
    ///
    /// Matrix elements come from the closed form, so they are exact for
    /// any outcome; only the weight above the cutoff is lost.
    pub fn integrand(&self, beta: &HeterodyneOutcome) -> Result<TwoModeState> {
        displaced_conditional_state(
            &self.qubit,
            self.reflectivity,
            beta,
            &self.gain,
            &self.basis,
            SafetyBound::Unbounded,
        )
    }
}

/// Result of [`accumulate_output`].
#[derive(Debug, Clone)]
pub struct Accumulation {
    pub output: DensityOperator,
    /// Monte Carlo standard error of every matrix entry (modulus).
    pub entry_stderr: Option<DMatrix<f64>>,
    pub report: CloneReport,
}

/// Averages the output state over all outcomes with the configured
/// integrator and summarizes it as a [`CloneReport`].
pub fn accumulate_output(config: &ExperimentConfig) -> Result<Accumulation> {
    let pipeline = Pipeline::from_config(config)?;
    let mut diagnostics = config.warnings();
    match config.integrator {
        Integrator::GaussHermite { workers, .. } => {
            let points = config.quadrature_points().expect("quadrature integrator");
            let output = quadrature_output(&pipeline, points, workers)?;
            let mut report = build_report(
                &pipeline,
                &output,
                config.n_max,
                Provenance::Quadrature { order: points },
                None,
            )?;
            report.diagnostics.append(&mut diagnostics);
            Ok(Accumulation {
                output,
                entry_stderr: None,
                report,
            })
        }
        Integrator::MonteCarlo {
            samples,
            seed,
            batches,
            workers,
        } => {
            let mc = monte_carlo_output(&pipeline, samples, seed, batches, workers)?;
            let entry_stderr = batch_entry_stderr(&mc.batch_means);
            let mut report = build_report(
                &pipeline,
                &mc.output,
                config.n_max,
                Provenance::MonteCarlo {
                    samples,
                    seed,
                    batches,
                },
                Some(&mc.batch_means),
            )?;
            report.diagnostics.append(&mut diagnostics);
            Ok(Accumulation {
                output: mc.output,
                entry_stderr: Some(entry_stderr),
                report,
            })
        }
    }
}

/// Tensor Gauss-Hermite average over the four quadratures.
///
/// Every matrix element of the integrand is
/// `exp(-(1 + f^2) |beta|^2)` times a polynomial, so the nodes are scaled by
/// `1 / sqrt(1 + f^2)` to match the rule's weight exactly.
pub fn quadrature_output(pipeline: &Pipeline, points: usize, workers: usize) -> Result<DensityOperator> {
    let rule = GaussHermite::new(points);
    let f = pipeline.gain.feedback();
    let scale = 1.0 / (1.0 + f * f).sqrt();
    let nodes: Vec<f64> = rule.nodes().iter().map(|t| t * scale).collect();
    let weights: Vec<f64> = rule
        .nodes()
        .iter()
        .zip(rule.weights())
        .map(|(t, w)| w * (t * t).exp() * scale)
        .collect();
    let dim = pipeline.basis.dim();
    let n = points;

    let slab = |i: usize| -> Result<DMatrix<C64>> {
        let mut acc = DMatrix::<C64>::zeros(dim, dim);
        let mut rows = RankUpdate::new(dim);
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let beta = HeterodyneOutcome::from_quadratures([nodes[i], nodes[j], nodes[k], nodes[l]]);
                    let w = weights[i] * weights[j] * weights[k] * weights[l];
                    let psi = pipeline.integrand(&beta)?;
                    rows.push(psi.amplitudes(), w.sqrt(), &mut acc);
                }
            }
        }
        rows.flush(&mut acc);
        Ok(acc)
    };

    let slabs = run_ordered(workers, n, slab)?;
    let mut total = DMatrix::<C64>::zeros(dim, dim);
    for s in slabs {
        total += s;
    }
    Ok(DensityOperator::from_matrix(pipeline.basis, total)?.hermitized())
}

/// Monte Carlo accumulation with its per-batch means.
#[derive(Debug, Clone)]
pub struct MonteCarloOutput {
    pub output: DensityOperator,
    pub batch_means: Vec<DensityOperator>,
}

/// Averages normalized displaced conditional states over outcomes drawn
/// exactly from `p(beta)`.
///
/// Batch `b` draws from its own ChaCha8 stream `b` under `seed`, and the
/// batch sums are reduced in batch order, so the result does not depend
/// on the number of workers.
pub fn monte_carlo_output(
    pipeline: &Pipeline,
    samples: u64,
    seed: u64,
    batches: usize,
    workers: usize,
) -> Result<MonteCarloOutput> {
    if batches == 0 || samples < batches as u64 {
        return Err(Error::OutOfRange {
            what: "Monte Carlo samples",
            value: samples.to_string(),
            allowed: format!(">= batches ({batches})"),
        });
    }
    let dim = pipeline.basis.dim();
    let per_batch = samples / batches as u64;
    let extra = samples % batches as u64;
    let batch_size = |b: usize| per_batch + u64::from((b as u64) < extra);

    let batch = |b: usize| -> Result<DMatrix<C64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(b as u64);
        let mut acc = DMatrix::<C64>::zeros(dim, dim);
        let mut rows = RankUpdate::new(dim);
        for _ in 0..batch_size(b) {
            let beta = sample_outcome(&pipeline.qubit, pipeline.reflectivity, &mut rng);
            let psi = pipeline.integrand(&beta)?;
            rows.push(psi.amplitudes(), 1.0 / psi.weight().sqrt(), &mut acc);
        }
        rows.flush(&mut acc);
        Ok(acc)
    };

    let sums = run_ordered(workers, batches, batch)?;
    let mut total = DMatrix::<C64>::zeros(dim, dim);
    let mut batch_means = Vec::with_capacity(batches);
    for (b, s) in sums.into_iter().enumerate() {
        total += &s;
        let mean = s / C64::new(batch_size(b) as f64, 0.0);
        batch_means.push(DensityOperator::from_matrix(pipeline.basis, mean)?.hermitized());
    }
    let output =
        DensityOperator::from_matrix(pipeline.basis, total / C64::new(samples as f64, 0.0))?.hermitized();
    Ok(MonteCarloOutput { output, batch_means })
}

/// Runs `job(0..count)` on `workers` threads and returns results in index order.
fn run_ordered<T, F>(workers: usize, count: usize, job: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Send + Sync,
{
    if workers <= 1 {
        return (0..count).map(job).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| {
            Error::InvalidConfig(vec![crate::error::ConfigIssue::new(
                "integrator.workers",
                e.to_string(),
            )])
        })?;
    pool.install(|| (0..count).into_par_iter().map(job).collect())
}

/// Buffers weighted state vectors and folds them into a Hermitian
/// accumulator as `acc += M^† M`, where row `k` of `M` is `conj(w_k psi_k)`.
struct RankUpdate {
    block: DMatrix<C64>,
    filled: usize,
}

impl RankUpdate {
    fn new(dim: usize) -> Self {
        Self {
            block: DMatrix::zeros(BLOCK_ROWS, dim),
            filled: 0,
        }
    }

    fn push(&mut self, psi: &nalgebra::DVector<C64>, scale: f64, acc: &mut DMatrix<C64>) {
        for (c, a) in psi.iter().enumerate() {
            self.block[(self.filled, c)] = a.conj() * scale;
        }
        self.filled += 1;
        if self.filled == BLOCK_ROWS {
            self.flush(acc);
        }
    }

    fn flush(&mut self, acc: &mut DMatrix<C64>) {
        if self.filled == 0 {
            return;
        }
        let rows = self.block.rows(0, self.filled);
        acc.gemm_ad(C64::new(1.0, 0.0), &rows, &rows, C64::new(1.0, 0.0));
        self.filled = 0;
    }
}

fn batch_entry_stderr(batch_means: &[DensityOperator]) -> DMatrix<f64> {
    let b = batch_means.len() as f64;
    let dim = batch_means[0].basis().dim();
    DMatrix::from_fn(dim, dim, |i, j| {
        let values: Vec<C64> = batch_means.iter().map(|m| m.matrix()[(i, j)]).collect();
        let mean: C64 = values.iter().sum::<C64>() / b;
        let var: f64 = values.iter().map(|v| (v - mean).norm_sqr()).sum::<f64>() / (b - 1.0);
        (var / b).sqrt()
    })
}

/// Standard error of the mean of per-batch values.
fn stderr_of(values: &[f64]) -> Option<f64> {
    if values.len() < 2 {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Some((var / n).sqrt())
}

/// Summarizes an accumulated output state. With `batch_means`, standard
/// errors of `P(N)` and `F_N` are estimated from the spread of batch values.
pub fn build_report(
    pipeline: &Pipeline,
    output: &DensityOperator,
    n_max: usize,
    provenance: Provenance,
    batch_means: Option<&[DensityOperator]>,
) -> Result<CloneReport> {
    if n_max < 1 {
        return Err(Error::OutOfRange {
            what: "report photon-number range",
            value: n_max.to_string(),
            allowed: ">= 1".into(),
        });
    }
    if n_max > pipeline.basis.cutoff() {
        return Err(Error::OutOfRange {
            what: "report photon-number range",
            value: n_max.to_string(),
            allowed: format!("<= cutoff {}", pipeline.basis.cutoff()),
        });
    }
    let q = &pipeline.qubit;
    let sector_weights = output.sector_weights();
    let captured: f64 = sector_weights.iter().sum();
    let mut diagnostics = Vec::new();
    let mut records = Vec::with_capacity(n_max);
    for (n, &p_n) in sector_weights.iter().enumerate().take(n_max + 1).skip(1) {
        let (conditional, fidelity) = match aligned_distribution(output, q, n) {
            Ok(dist) => (
                dist.into_iter()
                    .enumerate()
                    .map(|(k, probability)| ConditionalEntry {
                        n_correct: k,
                        probability,
                    })
                    .collect(),
                measure_fidelity(output, q, n)?,
            ),
            Err(Error::EmptySector(_)) => {
                diagnostics.push(format!("sector N = {n} received no weight"));
                (Vec::new(), f64::NAN)
            }
            Err(e) => return Err(e),
        };
        let (p_n_stderr, fidelity_stderr) = match batch_means {
            Some(batches) => {
                let weights: Vec<f64> = batches.iter().map(|m| m.sector_weights()[n]).collect();
                let fids: Vec<f64> = batches
                    .iter()
                    .filter_map(|m| measure_fidelity(m, q, n).ok())
                    .collect();
                if fids.len() < batches.len() {
                    diagnostics.push(format!(
                        "sector N = {n} is empty in {} of {} batches",
                        batches.len() - fids.len(),
                        batches.len()
                    ));
                }
                (stderr_of(&weights), stderr_of(&fids))
            }
            None => (None, None),
        };
        records.push(SectorRecord {
            n_total: n,
            p_n,
            p_n_stderr,
            conditional,
            fidelity,
            fidelity_stderr,
        });
    }
    Ok(CloneReport {
        reflectivity: pipeline.reflectivity,
        feedback: pipeline.gain.feedback(),
        gain: pipeline.gain.gain(pipeline.reflectivity),
        records,
        sector_weights,
        truncation_leakage: (1.0 - captured).max(0.0),
        provenance,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::config::GainSetting;
    use crate::fock::trace_distance;
    use crate::theory::{analytic_output, optimal_fidelity};

    #[test]
    fn quadrature_reproduces_the_closed_form_at_small_cutoff() {
        let q = PolarizationQubit::from_bloch(0.8, 0.4);
        let cfg = ExperimentConfig::quadrature(0.5, q, 5, 3);
        let acc = accumulate_output(&cfg).unwrap();
        let exact = analytic_output(&q, 0.5, &acc.output.basis().clone()).unwrap();
        assert!(trace_distance(&acc.output, &exact).unwrap() < 1e-10);
        acc.report.check_invariants().unwrap();
        for rec in &acc.report.records {
            assert!((rec.fidelity - optimal_fidelity(rec.n_total).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn quadrature_is_exact_at_the_default_order() {
        let q = PolarizationQubit::diagonal();
        let base = ExperimentConfig::quadrature(0.3, q, 4, 2).with_gain(GainSetting::Gain { value: 1.1 });
        let lo = accumulate_output(&base).unwrap().output;
        let mut hi_cfg = base.clone();
        hi_cfg.integrator = Integrator::GaussHermite {
            points: Some(10),
            workers: 1,
        };
        let hi = accumulate_output(&hi_cfg).unwrap().output;
        assert!((lo.matrix() - hi.matrix()).camax() < 1e-13);
    }

    #[test]
    fn tiny_reflectivity_returns_the_input() {
        let q = PolarizationQubit::from_bloch(1.9, -2.0);
        let acc = accumulate_output(&ExperimentConfig::quadrature(1e-9, q, 4, 2)).unwrap();
        let rec = acc.report.record(1).unwrap();
        assert!((rec.p_n - 1.0).abs() < 1e-8);
        assert!((rec.fidelity - 1.0).abs() < 1e-12);
    }

    #[test]
    fn monte_carlo_is_independent_of_workers() {
        let q = PolarizationQubit::horizontal();
        let cfg = ExperimentConfig::monte_carlo(0.5, q, 4, 2, 2_000, 7);
        let one = accumulate_output(&cfg).unwrap();
        let three = accumulate_output(&cfg.clone().with_workers(3)).unwrap();
        assert_eq!(one.output, three.output);
        assert_eq!(one.report, three.report);
        assert!(one.report.record(2).unwrap().fidelity_stderr.is_some());
        one.report.check_invariants().unwrap();
    }

    #[test]
    fn quadrature_is_independent_of_workers() {
        let q = PolarizationQubit::from_bloch(0.3, 0.3);
        let cfg = ExperimentConfig::quadrature(0.4, q, 4, 2);
        let one = accumulate_output(&cfg).unwrap();
        let two = accumulate_output(&cfg.clone().with_workers(2)).unwrap();
        assert_eq!(one.output, two.output);
    }

    #[test]
    fn invalid_configuration_is_rejected_before_running() {
        let cfg = ExperimentConfig::quadrature(0.5, PolarizationQubit::horizontal(), 3, 2);
        assert!(matches!(accumulate_output(&cfg), Err(Error::InvalidConfig(_))));
    }
}
