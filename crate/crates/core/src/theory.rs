//! Closed-form cloning statistics at the optimal feedback gain.
//!
//! Nothing here touches the heterodyne integrand; these results are the
//! reference the numerical pipelines in [`crate::engine`] are checked
//! against.

use crate::error::{Error, Result};
use crate::fock::{apply_creation_superposition, DensityOperator, FockBasis, PolarizationQubit};
use crate::heterodyne::check_reflectivity;
use crate::optics::thermal_weights;
use crate::report::{CloneReport, ConditionalEntry, Provenance, SectorRecord};

/// Optimal feedback factor and the amplitude gain it realizes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalFeedback {
    /// `f_R = sqrt(R / (1 - R))`
    pub feedback: f64,
    /// `g_R = 1 / sqrt(1 - R)`
    pub gain: f64,
}

pub fn optimal_feedback(reflectivity: f64) -> Result<OptimalFeedback> {
    check_reflectivity(reflectivity)?;
    Ok(OptimalFeedback {
        feedback: (reflectivity / (1.0 - reflectivity)).sqrt(),
        gain: 1.0 / (1.0 - reflectivity).sqrt(),
    })
}

/// Output density operator `(1 - R) A eta_R A^†`, where `eta_R` is the
/// two-mode thermal state with `R / (1 - R)` photons per mode and
/// `A = c_H a_H^† + c_V a_V^†`.
///
/// The thermal weights are not renormalized, so every sector below the
/// cutoff is exact and the trace falls short of 1 by the truncation
/// leakage.
pub fn analytic_output(
    q: &PolarizationQubit,
    reflectivity: f64,
    basis: &FockBasis,
) -> Result<DensityOperator> {
    check_reflectivity(reflectivity)?;
    let eta = thermal_weights(basis, reflectivity / (1.0 - reflectivity))?;
    Ok(apply_creation_superposition(q, &eta).scaled(1.0 - reflectivity))
}

/// Probability of an `N`-photon output, `(1-R)^3 / (2R) R^N N (N+1)`.
pub fn prob_n(reflectivity: f64, n_total: usize) -> Result<f64> {
    check_reflectivity(reflectivity)?;
    if n_total < 1 {
        return Err(Error::OutOfRange {
            what: "output photon number",
            value: n_total.to_string(),
            allowed: ">= 1".into(),
        });
    }
    if reflectivity == 0.0 {
        return Ok(if n_total == 1 { 1.0 } else { 0.0 });
    }
    let n = n_total as f64;
    // R^N / (2R) written as R^(N-1) / 2 so that small R does not overflow
    Ok((1.0 - reflectivity).powi(3) * reflectivity.powi(n_total as i32 - 1) * n * (n + 1.0) / 2.0)
}

/// The unpolarized `(N-1)`-photon operator.
#[derive(Debug, Clone, PartialEq)]
pub struct UnpolarizedOperator {
    pub n_total: usize,
    /// Coefficient `2 / (N (N+1))` multiplying each projector in the raw form.
    pub raw_coefficient: f64,
    /// Uniform mixture over the `N` states of the `(N-1)`-photon sector, trace 1.
    pub state: DensityOperator,
}

pub fn unpolarized_operator(n_total: usize, basis: &FockBasis) -> Result<UnpolarizedOperator> {
    if n_total < 1 || n_total > basis.cutoff() + 1 {
        return Err(Error::OutOfRange {
            what: "unpolarized operator photon number",
            value: n_total.to_string(),
            allowed: format!("1..={}", basis.cutoff() + 1),
        });
    }
    let weight = 1.0 / n_total as f64;
    let state = DensityOperator::diagonal(basis, |h, v| if h + v + 1 == n_total { weight } else { 0.0 });
    Ok(UnpolarizedOperator {
        n_total,
        raw_coefficient: 2.0 / (n_total * (n_total + 1)) as f64,
        state,
    })
}

/// Normalized `N`-photon output `A C_N A^†`.
pub fn rho_n(q: &PolarizationQubit, n_total: usize, basis: &FockBasis) -> Result<DensityOperator> {
    if n_total > basis.cutoff() {
        return Err(Error::OutOfRange {
            what: "output photon number",
            value: n_total.to_string(),
            allowed: format!("1..={}", basis.cutoff()),
        });
    }
    let c = unpolarized_operator(n_total, basis)?;
    Ok(apply_creation_superposition(q, &c.state).normalized())
}

/// Probability of `n` correctly polarized photons among `N`, `2n / (N (N+1))`.
pub fn prob_n_given_n(n: usize, n_total: usize) -> Result<f64> {
    if n < 1 || n > n_total {
        return Err(Error::OutOfRange {
            what: "correctly polarized photon number",
            value: n.to_string(),
            allowed: format!("1..={n_total}"),
        });
    }
    Ok(2.0 * n as f64 / (n_total * (n_total + 1)) as f64)
}

/// Optimal `1 -> N` fidelity `(2N + 1) / (3N)`.
pub fn optimal_fidelity(n_total: usize) -> Result<f64> {
    if n_total < 1 {
        return Err(Error::OutOfRange {
            what: "output photon number",
            value: n_total.to_string(),
            allowed: ">= 1".into(),
        });
    }
    let n = n_total as f64;
    Ok((2.0 * n + 1.0) / (3.0 * n))
}

/// Mixture `(1 - eps) rho_N + eps W_N` with the white-noise background
/// `W_N = C_{N+1}`, together with its predicted fidelity
/// `(1 - eps) F_N + eps / 2`.
pub fn white_noise_mix(
    q: &PolarizationQubit,
    n_total: usize,
    noise: f64,
    basis: &FockBasis,
) -> Result<(DensityOperator, f64)> {
    if !(0.0..=1.0).contains(&noise) {
        return Err(Error::OutOfRange {
            what: "white-noise fraction",
            value: noise.to_string(),
            allowed: "[0, 1]".into(),
        });
    }
    let clean = rho_n(q, n_total, basis)?;
    let white = unpolarized_operator(n_total + 1, basis)?.state;
    let mixed = clean.combine(1.0 - noise, &white, noise)?;
    Ok((mixed, (1.0 - noise) * optimal_fidelity(n_total)? + noise * 0.5))
}

/// Closed-form report for `N = 1..=n_max` at the optimal gain. Sector
/// weights are listed up to `cutoff`; the leakage is the tail above it.
pub fn analytic_report(reflectivity: f64, n_max: usize, cutoff: usize) -> Result<CloneReport> {
    let opt = optimal_feedback(reflectivity)?;
    if n_max < 1 {
        return Err(Error::OutOfRange {
            what: "report photon-number range",
            value: n_max.to_string(),
            allowed: ">= 1".into(),
        });
    }
    let mut sector_weights = vec![0.0];
    for n in 1..=cutoff.max(n_max) {
        sector_weights.push(prob_n(reflectivity, n)?);
    }
    let captured: f64 = sector_weights.iter().sum();
    let records = (1..=n_max)
        .map(|n| {
            Ok(SectorRecord {
                n_total: n,
                p_n: prob_n(reflectivity, n)?,
                p_n_stderr: None,
                conditional: (1..=n)
                    .map(|k| {
                        Ok(ConditionalEntry {
                            n_correct: k,
                            probability: prob_n_given_n(k, n)?,
                        })
                    })
                    .collect::<Result<_>>()?,
                fidelity: optimal_fidelity(n)?,
                fidelity_stderr: None,
            })
        })
        .collect::<Result<_>>()?;
    Ok(CloneReport {
        reflectivity,
        feedback: opt.feedback,
        gain: opt.gain,
        records,
        sector_weights,
        truncation_leakage: (1.0 - captured).max(0.0),
        provenance: Provenance::Analytic,
        diagnostics: Vec::new(),
    })
}
