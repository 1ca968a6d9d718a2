//! Dual-homodyne measurement of the reflected field and the resulting
//! conditional state of the transmitted modes.
//!
//! The reflected modes are projected on coherent states with POVM density
//! `(1/pi^2) |beta_H; beta_V><beta_H; beta_V|` over the four real
//! quadratures. For a single-photon input the outcome density is
//!
//! `p(beta) = pi^-2 exp(-|beta|^2) [ (1 - R) + R |beta_H^* c_H + beta_V^* c_V|^2 ]`
//!
//! and the transmitted modes are left in a superposition of vacuum and the
//! input photon.

use nalgebra::{DVector, Matrix2};
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{FockBasis, PolarizationQubit, TwoModeState};
use crate::optics::{apply_displacement, Displacement, SafetyBound};

const PI2: f64 = std::f64::consts::PI * std::f64::consts::PI;

/// Measured complex amplitudes `beta_H = x_H + i y_H`, `beta_V = x_V + i y_V`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeterodyneOutcome {
    pub beta_h: C64,
    pub beta_v: C64,
}

impl HeterodyneOutcome {
    pub fn new(beta_h: C64, beta_v: C64) -> Self {
        Self { beta_h, beta_v }
    }

    /// From the quadratures `[x_H, y_H, x_V, y_V]`.
    pub fn from_quadratures(q: [f64; 4]) -> Self {
        Self::new(C64::new(q[0], q[1]), C64::new(q[2], q[3]))
    }

    pub fn quadratures(&self) -> [f64; 4] {
        [self.beta_h.re, self.beta_h.im, self.beta_v.re, self.beta_v.im]
    }

    /// `|beta_H|^2 + |beta_V|^2`.
    pub fn norm_sqr(&self) -> f64 {
        self.beta_h.norm_sqr() + self.beta_v.norm_sqr()
    }

    /// `beta_H^* c_H + beta_V^* c_V`.
    pub fn overlap(&self, q: &PolarizationQubit) -> C64 {
        self.beta_h.conj() * q.c_h() + self.beta_v.conj() * q.c_v()
    }

    pub fn rotated(&self, u: &Matrix2<C64>) -> Self {
        Self::new(
            u[(0, 0)] * self.beta_h + u[(0, 1)] * self.beta_v,
            u[(1, 0)] * self.beta_h + u[(1, 1)] * self.beta_v,
        )
    }

    pub fn scaled(&self, f: f64) -> Displacement {
        Displacement::new(self.beta_h * f, self.beta_v * f)
    }
}

/// Feedback factor `f`: the displacement applied to the transmitted modes
/// is `f * beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeedbackGain {
    feedback: f64,
}

impl FeedbackGain {
    pub fn new(feedback: f64) -> Result<Self> {
        if !feedback.is_finite() || feedback < 0.0 {
            return Err(Error::InvalidFeedback(feedback));
        }
        Ok(Self { feedback })
    }

    /// `f_R = sqrt(R / (1 - R))`.
    pub fn optimal(reflectivity: f64) -> Result<Self> {
        check_reflectivity(reflectivity)?;
        Self::new((reflectivity / (1.0 - reflectivity)).sqrt())
    }

    /// Feedback factor that realizes the amplitude gain `g = f sqrt(R) + sqrt(1 - R)`.
    pub fn from_gain(gain: f64, reflectivity: f64) -> Result<Self> {
        check_reflectivity(reflectivity)?;
        let transmitted = (1.0 - reflectivity).sqrt();
        let unreachable = Error::UnreachableGain { gain, reflectivity };
        if reflectivity == 0.0 {
            return if (gain - 1.0).abs() < 1e-15 {
                Self::new(0.0)
            } else {
                Err(unreachable)
            };
        }
        let f = (gain - transmitted) / reflectivity.sqrt();
        if !f.is_finite() || f < 0.0 {
            return Err(unreachable);
        }
        Self::new(f)
    }

    pub fn feedback(&self) -> f64 {
        self.feedback
    }

    pub fn gain(&self, reflectivity: f64) -> f64 {
        self.feedback * reflectivity.sqrt() + (1.0 - reflectivity).sqrt()
    }
}

/// Rejects reflectivities outside `[0, 1)`.
pub fn check_reflectivity(reflectivity: f64) -> Result<()> {
    if !(0.0..1.0).contains(&reflectivity) {
        return Err(Error::InvalidReflectivity(reflectivity, "[0, 1)"));
    }
    Ok(())
}

/// Outcome density `p(beta)` over the four real quadratures.
pub fn outcome_density(q: &PolarizationQubit, reflectivity: f64, beta: &HeterodyneOutcome) -> Result<f64> {
    check_reflectivity(reflectivity)?;
    Ok((-beta.norm_sqr()).exp() / PI2 * ((1.0 - reflectivity) + reflectivity * beta.overlap(q).norm_sqr()))
}

/// Conditional transmitted state
/// `(1/pi) e^{-|beta|^2/2} [sqrt(1-R) (c_H a_H^† + c_V a_V^†) + sqrt(R) (beta_H^* c_H + beta_V^* c_V)] |0;0>`,
/// unnormalized, with weight `p(beta)`.
pub fn conditional_state(
    q: &PolarizationQubit,
    reflectivity: f64,
    beta: &HeterodyneOutcome,
    basis: &FockBasis,
) -> Result<TwoModeState> {
    let density = outcome_density(q, reflectivity, beta)?;
    let prefactor = (-0.5 * beta.norm_sqr()).exp() / std::f64::consts::PI;
    let photon = (1.0 - reflectivity).sqrt() * prefactor;
    let mut amps = DVector::zeros(basis.dim());
    amps[0] = beta.overlap(q) * (reflectivity.sqrt() * prefactor);
    amps[basis.index(1, 0).expect("cutoff >= 1")] = q.c_h() * photon;
    amps[basis.index(0, 1).expect("cutoff >= 1")] = q.c_v() * photon;
    Ok(TwoModeState::with_weight(*basis, amps, density))
}

/// Conditional state after the feedback displacement `D(f beta)`.
pub fn displaced_conditional_state(
    q: &PolarizationQubit,
    reflectivity: f64,
    beta: &HeterodyneOutcome,
    gain: &FeedbackGain,
    basis: &FockBasis,
    bound: SafetyBound,
) -> Result<TwoModeState> {
    let state = conditional_state(q, reflectivity, beta, basis)?;
    apply_displacement(&state, &beta.scaled(gain.feedback()), bound)
}

/// Draws an outcome exactly from `p(beta)`.
///
/// `p` is a two-component mixture once `beta` is written as
/// `z u + w u_perp` with `u = (c_H, c_V)`: with probability `1 - R` both
/// `z` and `w` are standard circular Gaussians; with probability `R`,
/// `|z|^2 ~ Gamma(2, 1)` with uniform phase and `w` stays Gaussian.
pub fn sample_outcome<G: Rng + ?Sized>(
    q: &PolarizationQubit,
    reflectivity: f64,
    rng: &mut G,
) -> HeterodyneOutcome {
    let circular = |rng: &mut G| {
        let x: f64 = StandardNormal.sample(rng);
        let y: f64 = StandardNormal.sample(rng);
        C64::new(x, y) * std::f64::consts::FRAC_1_SQRT_2
    };
    let z = if rng.random::<f64>() < reflectivity {
        let e1: f64 = Exp1.sample(rng);
        let e2: f64 = Exp1.sample(rng);
        let phase = rng.random::<f64>() * std::f64::consts::TAU;
        C64::from_polar((e1 + e2).sqrt(), phase)
    } else {
        circular(rng)
    };
    let w = circular(rng);
    let perp = q.orthogonal();
    HeterodyneOutcome::new(z * q.c_h() + w * perp.c_h(), z * q.c_v() + w * perp.c_v())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::apply_creation_superposition;
    use crate::optics::{coherent_state, SafetyBound};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn vacuum_heterodyne_without_reflection() {
        let q = PolarizationQubit::from_bloch(0.4, 1.0);
        let beta = HeterodyneOutcome::new(c(0.3, 0.1), c(-0.5, 0.2));
        let p = outcome_density(&q, 0.0, &beta).unwrap();
        assert!((p - (-beta.norm_sqr()).exp() / PI2).abs() < 1e-16);
    }

    #[test]
    fn density_at_origin() {
        let q = PolarizationQubit::horizontal();
        let zero = HeterodyneOutcome::new(c(0.0, 0.0), c(0.0, 0.0));
        assert!((outcome_density(&q, 0.5, &zero).unwrap() - 0.5 / PI2).abs() < 1e-16);
        assert!(outcome_density(&q, 1.0, &zero).is_err());
    }

    #[test]
    fn conditional_state_at_origin_keeps_the_photon() {
        let b = FockBasis::new(3).unwrap();
        let q = PolarizationQubit::from_bloch(1.0, 0.5);
        let zero = HeterodyneOutcome::new(c(0.0, 0.0), c(0.0, 0.0));
        let s = conditional_state(&q, 0.3, &zero, &b).unwrap();
        let scale = 0.7f64.sqrt() / std::f64::consts::PI;
        assert_eq!(s.amplitude(0, 0), c(0.0, 0.0));
        assert!((s.amplitude(1, 0) - q.c_h() * scale).norm() < 1e-16);
        assert!((s.amplitude(0, 1) - q.c_v() * scale).norm() < 1e-16);
    }

    #[test]
    fn no_reflection_returns_the_input() {
        let b = FockBasis::new(2).unwrap();
        let q = PolarizationQubit::from_bloch(2.0, -0.3);
        let beta = HeterodyneOutcome::new(c(1.1, -0.4), c(0.2, 0.9));
        let s = conditional_state(&q, 0.0, &beta, &b).unwrap().normalized();
        let input = TwoModeState::single_photon(&b, &q);
        assert!((s.inner(&input).unwrap().norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn vacuum_to_photon_ratio() {
        let b = FockBasis::new(2).unwrap();
        let beta = HeterodyneOutcome::new(c(1.0, 0.0), c(0.0, 0.0));
        let s = conditional_state(&PolarizationQubit::horizontal(), 0.5, &beta, &b).unwrap();
        assert!((s.amplitude(0, 0) / s.amplitude(1, 0) - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn squared_norm_matches_density() {
        let b = FockBasis::new(1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let q = PolarizationQubit::from_bloch(
                rng.random::<f64>() * std::f64::consts::PI,
                rng.random::<f64>() * std::f64::consts::TAU,
            );
            let r = rng.random::<f64>() * 0.99;
            let beta = HeterodyneOutcome::from_quadratures(std::array::from_fn(|_| {
                4.0 * (rng.random::<f64>() - 0.5)
            }));
            let s = conditional_state(&q, r, &beta, &b).unwrap();
            assert!((s.norm_sqr() - s.weight()).abs() < 1e-14);
            assert_eq!(s.weight(), outcome_density(&q, r, &beta).unwrap());
        }
    }

    #[test]
    fn reduction_matches_four_mode_projection() {
        use crate::optics::{beam_splitter_oracle, BeamSplitter, FourModeState};
        let b = FockBasis::new(2).unwrap();
        let q = PolarizationQubit::from_bloch(0.9, 2.2);
        for r in [0.2, 0.5, 0.8] {
            let split =
                beam_splitter_oracle(&FourModeState::single_photon(&q), &BeamSplitter::new(r).unwrap())
                    .unwrap();
            for beta in [
                HeterodyneOutcome::new(c(0.0, 0.0), c(0.0, 0.0)),
                HeterodyneOutcome::new(c(0.7, -0.2), c(-0.4, 1.1)),
            ] {
                let projected = split.project_reflected(beta.beta_h, beta.beta_v, &b);
                let reduced = conditional_state(&q, r, &beta, &b).unwrap();
                let diff = projected.amplitudes() / c(std::f64::consts::PI, 0.0) - reduced.amplitudes();
                assert!(diff.camax() < 1e-15);
            }
        }
    }

    #[test]
    fn gain_laws() {
        let f = FeedbackGain::optimal(0.5).unwrap();
        assert!((f.feedback() - 1.0).abs() < 1e-15);
        assert!((f.gain(0.5) - 2f64.sqrt()).abs() < 1e-15);
        let back = FeedbackGain::from_gain(1.3, 0.4).unwrap();
        assert!((back.gain(0.4) - 1.3).abs() < 1e-14);
        assert!(FeedbackGain::from_gain(0.5, 0.5).is_err());
        assert!(FeedbackGain::from_gain(1.0, 0.0).unwrap().feedback() == 0.0);
        assert!(FeedbackGain::new(-1.0).is_err());
    }

    #[test]
    fn zero_feedback_leaves_the_conditional_state() {
        let b = FockBasis::new(4).unwrap();
        let q = PolarizationQubit::diagonal();
        let beta = HeterodyneOutcome::new(c(0.3, 0.3), c(-0.1, 0.4));
        let plain = conditional_state(&q, 0.6, &beta, &b).unwrap();
        let fb = displaced_conditional_state(
            &q,
            0.6,
            &beta,
            &FeedbackGain::new(0.0).unwrap(),
            &b,
            SafetyBound::default(),
        )
        .unwrap();
        assert_eq!(plain, fb);
    }

    #[test]
    fn optimal_feedback_yields_photon_on_coherent_state() {
        let b = FockBasis::new(24).unwrap();
        let q = PolarizationQubit::from_bloch(1.3, 0.8);
        let r = 0.5;
        let f = FeedbackGain::optimal(r).unwrap();
        for beta in [
            HeterodyneOutcome::new(c(0.4, -0.3), c(0.2, 0.5)),
            HeterodyneOutcome::new(c(-0.8, 0.1), c(0.0, -0.6)),
        ] {
            let fb = displaced_conditional_state(&q, r, &beta, &f, &b, SafetyBound::default())
                .unwrap()
                .normalized();
            let d = beta.scaled(f.feedback());
            let coh = coherent_state(&b, d.alpha_h, d.alpha_v, SafetyBound::default()).unwrap();
            let target = apply_creation_superposition(&q, &coh.to_density());
            let overlap = fb.expectation(target.matrix()).re / target.trace();
            assert!((overlap - 1.0).abs() < 1e-8, "overlap {overlap}");
        }
    }

    #[test]
    fn density_invariant_under_polarization_rotation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let q = PolarizationQubit::from_bloch(0.5, 0.25);
        let beta = HeterodyneOutcome::new(c(0.6, 0.2), c(-0.3, 0.9));
        let p0 = outcome_density(&q, 0.35, &beta).unwrap();
        for _ in 0..50 {
            let u = crate::testing::random_unitary(&mut rng);
            let p = outcome_density(&q.rotated(&u), 0.35, &beta.rotated(&u)).unwrap();
            assert!((p - p0).abs() < 1e-15);
        }
    }

    #[test]
    fn sampler_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let n = 100_000;
        let q = PolarizationQubit::horizontal();
        let mut sums = [0.0; 4];
        let mut squares = [0.0; 4];
        for _ in 0..n {
            let beta = sample_outcome(&q, 0.0, &mut rng).quadratures();
            for k in 0..4 {
                sums[k] += beta[k];
                squares[k] += beta[k] * beta[k];
            }
        }
        for k in 0..4 {
            let mean = sums[k] / n as f64;
            let var = squares[k] / n as f64 - mean * mean;
            // standard errors: sqrt(0.5/n) for the mean, sqrt(2*0.25/n) for the variance
            assert!(mean.abs() < 5.0 * (0.5 / n as f64).sqrt());
            assert!((var - 0.5).abs() < 5.0 * (0.5 / n as f64).sqrt());
        }

        let mut h = 0.0;
        let mut h2 = 0.0;
        let mut v = 0.0;
        let mut v2 = 0.0;
        for _ in 0..n {
            let beta = sample_outcome(&q, 0.5, &mut rng);
            h += beta.beta_h.norm_sqr();
            h2 += beta.beta_h.norm_sqr().powi(2);
            v += beta.beta_v.norm_sqr();
            v2 += beta.beta_v.norm_sqr().powi(2);
        }
        let nf = n as f64;
        let (mh, mv) = (h / nf, v / nf);
        let (sh, sv) = (
            ((h2 / nf - mh * mh) / nf).sqrt(),
            ((v2 / nf - mv * mv) / nf).sqrt(),
        );
        assert!((mh - 1.5).abs() < 5.0 * sh, "E|beta_H|^2 = {mh}");
        assert!((mv - 1.0).abs() < 5.0 * sv, "E|beta_V|^2 = {mv}");
    }
}
