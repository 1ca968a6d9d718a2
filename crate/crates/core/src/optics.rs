//! Optical primitives: displacement, coherent and thermal states, and a
//! small four-mode beam splitter used to cross-check the reduced
//! single-photon description.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{DensityOperator, FockBasis, PolarizationQubit, TwoModeState};

/// Coherent displacement amplitudes for the H and V modes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Displacement {
    pub alpha_h: C64,
    pub alpha_v: C64,
}

impl Displacement {
    pub fn new(alpha_h: C64, alpha_v: C64) -> Self {
        Self { alpha_h, alpha_v }
    }

    pub fn zero() -> Self {
        Self::new(C64::new(0.0, 0.0), C64::new(0.0, 0.0))
    }

    /// `|alpha_H|^2 + |alpha_V|^2`.
    pub fn magnitude_sqr(&self) -> f64 {
        self.alpha_h.norm_sqr() + self.alpha_v.norm_sqr()
    }

    pub fn is_finite(&self) -> bool {
        self.alpha_h.is_finite() && self.alpha_v.is_finite()
    }

    pub fn negated(&self) -> Self {
        Self::new(-self.alpha_h, -self.alpha_v)
    }
}

/// Admissible displacement size relative to the basis cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SafetyBound {
    /// Reject `|alpha|^2 > fraction * cutoff`.
    CutoffFraction(f64),
    /// Accept any finite amplitude. Matrix elements stay exact; only the
    /// norm lost above the cutoff grows.
    Unbounded,
}

impl Default for SafetyBound {
    fn default() -> Self {
        SafetyBound::CutoffFraction(0.25)
    }
}

impl SafetyBound {
    pub fn check(&self, basis: &FockBasis, d: &Displacement) -> Result<()> {
        let magnitude_sqr = d.magnitude_sqr();
        if !d.is_finite() {
            return Err(Error::DisplacementTooLarge {
                magnitude_sqr,
                bound: f64::INFINITY,
            });
        }
        if let SafetyBound::CutoffFraction(fraction) = *self {
            let bound = fraction * basis.cutoff() as f64;
            if magnitude_sqr > bound {
                return Err(Error::DisplacementTooLarge { magnitude_sqr, bound });
            }
        }
        Ok(())
    }
}

/// Generalized Laguerre polynomial `L_n^{(k)}(x)`.
pub fn laguerre(n: usize, k: usize, x: f64) -> f64 {
    let k = k as f64;
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 1.0 + k - x;
    for j in 1..n {
        let j = j as f64;
        let next = ((2.0 * j + 1.0 + k - x) * cur - (j + k) * prev) / (j + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Single-mode displacement matrix elements `<m|D(alpha)|n>` for
/// `m = 0..=max_row`, `n = 0..=max_col`, from the Laguerre closed form.
pub fn single_mode_displacement(alpha: C64, max_row: usize, max_col: usize) -> DMatrix<C64> {
    let x = alpha.norm_sqr();
    let gauss = (-0.5 * x).exp();
    let minus_conj = -alpha.conj();
    DMatrix::from_fn(max_row + 1, max_col + 1, |m, n| {
        let (hi, lo, base) = if m >= n { (m, n, alpha) } else { (n, m, minus_conj) };
        // sqrt(lo!/hi!)
        let ratio: f64 = ((lo + 1)..=hi).map(|k| 1.0 / (k as f64).sqrt()).product();
        base.powu((hi - lo) as u32) * (ratio * gauss * laguerre(lo, hi - lo, x))
    })
}

/// Two-mode displacement operator restricted to the truncated basis.
pub fn displacement_matrix(basis: &FockBasis, d: &Displacement, bound: SafetyBound) -> Result<DMatrix<C64>> {
    bound.check(basis, d)?;
    let c = basis.cutoff();
    let dh = single_mode_displacement(d.alpha_h, c, c);
    let dv = single_mode_displacement(d.alpha_v, c, c);
    let states: Vec<_> = basis.states().collect();
    let mut m = DMatrix::zeros(basis.dim(), basis.dim());
    for &(row, mh, mv) in &states {
        for &(col, nh, nv) in &states {
            m[(row, col)] = dh[(mh, nh)] * dv[(mv, nv)];
        }
    }
    Ok(m)
}

/// Applies `D(d)` to a state. The weight is unchanged (the displacement is
/// unitary); amplitude pushed above the cutoff is dropped.
pub fn apply_displacement(
    state: &TwoModeState,
    d: &Displacement,
    bound: SafetyBound,
) -> Result<TwoModeState> {
    let basis = *state.basis();
    bound.check(&basis, d)?;
    let c = basis.cutoff();
    let occupied: Vec<(usize, usize, C64)> = basis
        .states()
        .filter_map(|(i, h, v)| {
            let a = state.amplitudes()[i];
            (a != C64::new(0.0, 0.0)).then_some((h, v, a))
        })
        .collect();
    let max_h = occupied.iter().map(|o| o.0).max().unwrap_or(0);
    let max_v = occupied.iter().map(|o| o.1).max().unwrap_or(0);
    let dh = single_mode_displacement(d.alpha_h, c, max_h);
    let dv = single_mode_displacement(d.alpha_v, c, max_v);
    let out = DVector::from_iterator(
        basis.dim(),
        basis.states().map(|(_, mh, mv)| {
            occupied
                .iter()
                .map(|&(nh, nv, a)| dh[(mh, nh)] * dv[(mv, nv)] * a)
                .sum::<C64>()
        }),
    );
    Ok(TwoModeState::with_weight(basis, out, state.weight()))
}

/// Largest total photon number of the interior sub-basis on which the
/// displacement is checked: `cutoff - ceil(4|alpha|^2) - 4`.
pub fn interior_limit(basis: &FockBasis, d: &Displacement) -> Option<usize> {
    let margin = (4.0 * d.magnitude_sqr()).ceil() as usize + 4;
    basis.cutoff().checked_sub(margin)
}

/// `max |(D^† D - 1)_{ij}|` over the interior sub-basis, or `None` when
/// the cutoff leaves no interior.
pub fn displacement_unitarity_residual(basis: &FockBasis, d: &Displacement) -> Option<f64> {
    let limit = interior_limit(basis, d)?;
    let dm = displacement_matrix(basis, d, SafetyBound::Unbounded).ok()?;
    let gram = dm.adjoint() * &dm;
    let end = basis.sector_range(limit).end;
    let mut worst: f64 = 0.0;
    for i in 0..end {
        for j in 0..end {
            let id = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[(i, j)] - C64::new(id, 0.0)).norm());
        }
    }
    Some(worst)
}

/// Residual of the reordering identity
/// `D(alpha) (A + c_H alpha_H^* + c_V alpha_V^*) = A D(alpha)` with
/// `A = c_H a_H^† + c_V a_V^†`, over matrix elements whose row and column
/// both have total photon number `<= interior`.
pub fn displacement_reorder_check(
    basis: &FockBasis,
    q: &PolarizationQubit,
    d: &Displacement,
    interior: usize,
) -> Result<f64> {
    if interior >= basis.cutoff() {
        return Err(Error::OutOfRange {
            what: "interior photon number",
            value: interior.to_string(),
            allowed: format!("< cutoff {}", basis.cutoff()),
        });
    }
    let dm = displacement_matrix(basis, d, SafetyBound::Unbounded)?;
    let a = q.creation_op(basis);
    let shift = q.c_h() * d.alpha_h.conj() + q.c_v() * d.alpha_v.conj();
    let shifted = &a + DMatrix::<C64>::identity(basis.dim(), basis.dim()) * shift;
    let lhs = &dm * shifted;
    let rhs = &a * &dm;
    let end = basis.sector_range(interior).end;
    let mut worst: f64 = 0.0;
    for i in 0..end {
        for j in 0..end {
            worst = worst.max((lhs[(i, j)] - rhs[(i, j)]).norm());
        }
    }
    Ok(worst)
}

/// Coherent state `|alpha_H; alpha_V>`; the weight is 1 and the norm
/// deficit of the stored amplitudes is its truncation leakage.
pub fn coherent_state(
    basis: &FockBasis,
    alpha_h: C64,
    alpha_v: C64,
    bound: SafetyBound,
) -> Result<TwoModeState> {
    let d = Displacement::new(alpha_h, alpha_v);
    bound.check(basis, &d)?;
    let gauss = (-0.5 * d.magnitude_sqr()).exp();
    let c = basis.cutoff();
    let single = |alpha: C64| -> Vec<C64> {
        let mut v = Vec::with_capacity(c + 1);
        let mut term = C64::new(1.0, 0.0);
        for n in 0..=c {
            if n > 0 {
                term = term * alpha / (n as f64).sqrt();
            }
            v.push(term);
        }
        v
    };
    let (h, v) = (single(alpha_h), single(alpha_v));
    let amps = DVector::from_iterator(
        basis.dim(),
        basis.states().map(|(_, nh, nv)| h[nh] * v[nv] * gauss),
    );
    Ok(TwoModeState::with_weight(*basis, amps, 1.0))
}

/// Thermal state renormalized after truncation.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalState {
    pub state: DensityOperator,
    /// Probability mass of the untruncated state above the cutoff.
    pub leakage: f64,
}

/// Exact (unrenormalized) two-mode thermal weights
/// `prod_modes nbar^n / (1 + nbar)^(n+1)` on the truncated basis.
pub fn thermal_weights(basis: &FockBasis, mean_photons_per_mode: f64) -> Result<DensityOperator> {
    if !mean_photons_per_mode.is_finite() || mean_photons_per_mode < 0.0 {
        return Err(Error::OutOfRange {
            what: "thermal mean photon number",
            value: mean_photons_per_mode.to_string(),
            allowed: ">= 0".into(),
        });
    }
    let ratio = mean_photons_per_mode / (1.0 + mean_photons_per_mode);
    let ground = 1.0 / (1.0 + mean_photons_per_mode);
    Ok(DensityOperator::diagonal(basis, |h, v| {
        ground * ground * ratio.powi((h + v) as i32)
    }))
}

pub fn thermal_state(basis: &FockBasis, mean_photons_per_mode: f64) -> Result<ThermalState> {
    let raw = thermal_weights(basis, mean_photons_per_mode)?;
    let captured = raw.trace();
    Ok(ThermalState {
        state: raw.scaled(1.0 / captured),
        leakage: (1.0 - captured).max(0.0),
    })
}

/// Beam splitter of reflectivity `R`: `a^† -> sqrt(1-R) a^† + sqrt(R) b^†`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamSplitter {
    reflectivity: f64,
}

impl BeamSplitter {
    pub fn new(reflectivity: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&reflectivity) {
            return Err(Error::InvalidReflectivity(reflectivity, "[0, 1]"));
        }
        Ok(Self { reflectivity })
    }

    pub fn reflectivity(&self) -> f64 {
        self.reflectivity
    }

    pub fn transmission_amplitude(&self) -> f64 {
        (1.0 - self.reflectivity).sqrt()
    }

    pub fn reflection_amplitude(&self) -> f64 {
        self.reflectivity.sqrt()
    }
}

/// Largest photon number accepted by the four-mode oracle.
pub const ORACLE_MAX_PHOTONS: usize = 2;

/// Occupation numbers of the four modes `[a_H, a_V, b_H, b_V]`
/// (transmitted H, transmitted V, reflected H, reflected V).
pub type FourModeOccupation = [u8; 4];

/// Sparse state on four modes with at most [`ORACLE_MAX_PHOTONS`] photons.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FourModeState {
    terms: BTreeMap<FourModeOccupation, C64>,
}

impl FourModeState {
    pub fn new(terms: impl IntoIterator<Item = (FourModeOccupation, C64)>) -> Result<Self> {
        let mut state = Self::default();
        for (occ, amp) in terms {
            let photons = total_photons(&occ);
            if photons > ORACLE_MAX_PHOTONS {
                return Err(Error::OracleCapacity {
                    photons,
                    max: ORACLE_MAX_PHOTONS,
                });
            }
            *state.terms.entry(occ).or_default() += amp;
        }
        Ok(state)
    }

    /// Single photon `c_H |1>_{a_H} + c_V |1>_{a_V}` with the reflected modes empty.
    pub fn single_photon(q: &PolarizationQubit) -> Self {
        Self::new([([1, 0, 0, 0], q.c_h()), ([0, 1, 0, 0], q.c_v())]).expect("one photon")
    }

    pub fn amplitude(&self, occ: FourModeOccupation) -> C64 {
        self.terms.get(&occ).copied().unwrap_or_default()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.terms.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&FourModeOccupation, &C64)> {
        self.terms.iter()
    }

    /// Total photon number of every nonzero term.
    pub fn photon_numbers(&self) -> Vec<usize> {
        self.terms
            .iter()
            .filter(|(_, a)| a.norm_sqr() > 0.0)
            .map(|(o, _)| total_photons(o))
            .collect()
    }

    /// `<beta_H; beta_V|_b psi>`: projects the reflected modes on a
    /// coherent state, leaving an unnormalized transmitted-mode state.
    pub fn project_reflected(&self, beta_h: C64, beta_v: C64, basis: &FockBasis) -> TwoModeState {
        let gauss = (-0.5 * (beta_h.norm_sqr() + beta_v.norm_sqr())).exp();
        let bra = |beta: C64, n: u8| beta.conj().powu(n as u32) / factorial(n).sqrt();
        let mut amps = DVector::zeros(basis.dim());
        for (occ, amp) in &self.terms {
            if let Some(i) = basis.index(occ[0] as usize, occ[1] as usize) {
                amps[i] += amp * bra(beta_h, occ[2]) * bra(beta_v, occ[3]) * gauss;
            }
        }
        TwoModeState::from_amplitudes(*basis, amps)
    }
}

fn total_photons(occ: &FourModeOccupation) -> usize {
    occ.iter().map(|&n| n as usize).sum()
}

fn factorial(n: u8) -> f64 {
    (1..=n as u32).map(f64::from).product()
}

/// Applies the beam splitter to both polarizations of a four-mode state.
///
/// Each Fock term is written as a monomial in creation operators, the
/// transmitted-mode operators are substituted, and the resulting
/// polynomial is converted back to normalized Fock states.
pub fn beam_splitter_oracle(input: &FourModeState, bs: &BeamSplitter) -> Result<FourModeState> {
    let t = bs.transmission_amplitude();
    let r = bs.reflection_amplitude();
    // monomials: exponents of [a_H^†, a_V^†, b_H^†, b_V^†]
    let mut poly: BTreeMap<FourModeOccupation, C64> = BTreeMap::new();
    for (occ, &amp) in &input.terms {
        let photons = total_photons(occ);
        if photons > ORACLE_MAX_PHOTONS {
            return Err(Error::OracleCapacity {
                photons,
                max: ORACLE_MAX_PHOTONS,
            });
        }
        // |occ> = prod_k (c_k^†)^{n_k} / sqrt(n_k!) |0>
        let norm: f64 = occ.iter().map(|&n| factorial(n)).product::<f64>().sqrt();
        let mut term: BTreeMap<FourModeOccupation, C64> = BTreeMap::new();
        term.insert([0; 4], amp / norm);
        for (mode, &n) in occ.iter().enumerate() {
            // a-modes split into (t a + r b); b-modes are not driven by an input port here
            let image: Vec<(usize, f64)> = match mode {
                0 => vec![(0, t), (2, r)],
                1 => vec![(1, t), (3, r)],
                2 => vec![(2, t), (0, -r)],
                _ => vec![(3, t), (1, -r)],
            };
            for _ in 0..n {
                let mut next: BTreeMap<FourModeOccupation, C64> = BTreeMap::new();
                for (mono, coeff) in &term {
                    for &(target, factor) in &image {
                        if factor == 0.0 {
                            continue;
                        }
                        let mut m = *mono;
                        m[target] += 1;
                        *next.entry(m).or_default() += coeff * factor;
                    }
                }
                term = next;
            }
        }
        for (mono, coeff) in term {
            *poly.entry(mono).or_default() += coeff;
        }
    }
    // monomial prod (c^†)^{m} |0> = sqrt(prod m!) |m>
    FourModeState::new(poly.into_iter().map(|(mono, coeff)| {
        let norm: f64 = mono.iter().map(|&n| factorial(n)).product::<f64>().sqrt();
        (mono, coeff * norm)
    }))
}
