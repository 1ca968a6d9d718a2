//! Coherent-state input through the same measure-and-displace loop.
//!
//! Coherent states stay coherent at every stage, so the pipeline reduces to
//! complex amplitudes: the beam splitter transmits `sqrt(1-R) alpha`, the
//! heterodyne outcome is Gaussian around `sqrt(R) alpha` with variance 1/2
//! per quadrature, and the output amplitude is `sqrt(1-R) alpha + f beta`.

use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heterodyne::{check_reflectivity, FeedbackGain};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherentCheck {
    pub samples: u64,
    /// Expected gain `f sqrt(R) + sqrt(1 - R)`.
    pub expected_gain: f64,
    /// Mean output amplitudes `(H, V)`.
    pub mean_output: [C64; 2],
    /// Standard errors of the mean output quadratures `[x_H, y_H, x_V, y_V]`.
    pub mean_stderr: [f64; 4],
    /// Sample variance of each output quadrature.
    pub quadrature_variance: [f64; 4],
    /// `Re(<alpha, mean output>) / |alpha|^2`, absent for vacuum input.
    pub gain_estimate: Option<f64>,
    pub gain_stderr: Option<f64>,
}

pub fn coherent_amplification_check(
    alpha_h: C64,
    alpha_v: C64,
    reflectivity: f64,
    feedback: f64,
    samples: u64,
    seed: u64,
) -> Result<CoherentCheck> {
    check_reflectivity(reflectivity)?;
    let gain = FeedbackGain::new(feedback)?;
    if samples < 2 {
        return Err(Error::OutOfRange {
            what: "coherent check samples",
            value: samples.to_string(),
            allowed: ">= 2".into(),
        });
    }
    let t = (1.0 - reflectivity).sqrt();
    let r = reflectivity.sqrt();
    let f = gain.feedback();
    let alpha = [alpha_h, alpha_v];
    let alpha_sqr = alpha_h.norm_sqr() + alpha_v.norm_sqr();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut quad_stats = [Welford::default(); 4];
    let mut gain_stats = Welford::default();
    for _ in 0..samples {
        let mut out = [C64::new(0.0, 0.0); 2];
        for (k, a) in alpha.iter().enumerate() {
            let x: f64 = StandardNormal.sample(&mut rng);
            let y: f64 = StandardNormal.sample(&mut rng);
            let beta = a * r + C64::new(x, y) * std::f64::consts::FRAC_1_SQRT_2;
            out[k] = a * t + beta * f;
        }
        let quads = [out[0].re, out[0].im, out[1].re, out[1].im];
        for (stat, x) in quad_stats.iter_mut().zip(quads) {
            stat.push(x);
        }
        if alpha_sqr > 0.0 {
            gain_stats.push((alpha_h.conj() * out[0] + alpha_v.conj() * out[1]).re / alpha_sqr);
        }
    }
    let n = samples as f64;
    let mean: [f64; 4] = std::array::from_fn(|k| quad_stats[k].mean);
    let variance: [f64; 4] = std::array::from_fn(|k| quad_stats[k].variance());
    let (gain_estimate, gain_stderr) = if alpha_sqr > 0.0 {
        (Some(gain_stats.mean), Some((gain_stats.variance() / n).sqrt()))
    } else {
        (None, None)
    };
    Ok(CoherentCheck {
        samples,
        expected_gain: gain.gain(reflectivity),
        mean_output: [C64::new(mean[0], mean[1]), C64::new(mean[2], mean[3])],
        mean_stderr: std::array::from_fn(|k| (variance[k] / n).sqrt()),
        quadrature_variance: variance,
        gain_estimate,
        gain_stderr,
    })
}

/// Running mean and variance without cancellation.
#[derive(Debug, Clone, Copy, Default)]
struct Welford {
    count: f64,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, x: f64) {
        self.count += 1.0;
        let delta = x - self.mean;
        self.mean += delta / self.count;
        self.m2 += delta * (x - self.mean);
    }

    fn variance(&self) -> f64 {
        self.m2 / (self.count - 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_feedback_is_pure_attenuation() {
        let a = C64::new(1.5, -0.5);
        let chk = coherent_amplification_check(a, C64::new(0.0, 0.0), 0.36, 0.0, 1000, 1).unwrap();
        assert!((chk.expected_gain - 0.8).abs() < 1e-15);
        // without feedback the output carries no measurement noise
        assert!((chk.mean_output[0] - a * 0.8).norm() < 1e-12);
        assert!(chk.quadrature_variance.iter().all(|v| v.abs() < 1e-20));
    }

    #[test]
    fn optimal_gain_at_half_reflectivity() {
        let chk = coherent_amplification_check(C64::new(2.0, 0.0), C64::new(0.0, 0.0), 0.5, 1.0, 100_000, 3)
            .unwrap();
        let expect = 2f64.sqrt() * 2.0;
        assert!((chk.mean_output[0].re - expect).abs() < 5.0 * chk.mean_stderr[0]);
        assert!(chk.mean_output[1].norm() < 5.0 * chk.mean_stderr[2].max(chk.mean_stderr[3]) * 2f64.sqrt());
    }

    #[test]
    fn vacuum_input_adds_measurement_noise() {
        let f: f64 = 1.3;
        let n = 100_000;
        let chk = coherent_amplification_check(C64::new(0.0, 0.0), C64::new(0.0, 0.0), 0.4, f, n, 9).unwrap();
        assert!(chk.gain_estimate.is_none());
        let expect = f * f * 0.5;
        // the sample variance of a Gaussian has standard error var * sqrt(2/(n-1))
        let tol = 5.0 * expect * (2.0 / (n as f64 - 1.0)).sqrt();
        for k in 0..4 {
            assert!((chk.quadrature_variance[k] - expect).abs() < tol);
            assert!(chk.mean_stderr[k] > 0.0);
        }
    }
}
