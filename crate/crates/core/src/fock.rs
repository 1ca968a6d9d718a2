//! Truncated two-mode Fock space for the H and V polarization modes.
//!
//! Basis states `|n_H; n_V>` are kept up to a total photon number
//! `cutoff`. They are stored sector by sector: all states with total
//! photon number `N` occupy the contiguous index range
//! `N(N+1)/2 .. (N+1)(N+2)/2`, ordered by increasing `n_V`. Operators
//! that would push amplitude above the cutoff drop it; callers see the
//! loss as truncation leakage.

use std::ops::Range;

use nalgebra::{DMatrix, DVector, Matrix2};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Elementwise Hermiticity tolerance for density operators.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Smallest admissible eigenvalue of a density operator.
pub const SPECTRAL_TOL: f64 = 1e-10;
/// Trace tolerance for operators flagged as normalized.
pub const TRACE_TOL: f64 = 1e-10;
/// Normalization tolerance for pure states and qubits.
pub const NORM_TOL: f64 = 1e-12;

/// Polarization mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    H,
    V,
}

/// Two-mode photon-number basis truncated at a maximal total photon number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FockBasis {
    cutoff: usize,
}

impl FockBasis {
    pub fn new(cutoff_total: usize) -> Result<Self> {
        if cutoff_total < 1 {
            return Err(Error::InvalidCutoff(cutoff_total));
        }
        Ok(Self { cutoff: cutoff_total })
    }

    /// Maximal total photon number kept.
    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn dim(&self) -> usize {
        (self.cutoff + 1) * (self.cutoff + 2) / 2
    }

    /// Flat index of `|n_h; n_v>`, or `None` above the cutoff.
    pub fn index(&self, n_h: usize, n_v: usize) -> Option<usize> {
        let total = n_h + n_v;
        (total <= self.cutoff).then(|| sector_offset(total) + n_v)
    }

    /// Occupation numbers `(n_h, n_v)` of a flat index.
    ///
    /// Panics if `idx >= self.dim()`.
    pub fn occupation(&self, idx: usize) -> (usize, usize) {
        assert!(
            idx < self.dim(),
            "index {idx} outside basis of dimension {}",
            self.dim()
        );
        let mut total = 0;
        while sector_offset(total + 1) <= idx {
            total += 1;
        }
        let n_v = idx - sector_offset(total);
        (total - n_v, n_v)
    }

    /// Index range of the total-photon-number sector `n_total`.
    pub fn sector_range(&self, n_total: usize) -> Range<usize> {
        if n_total > self.cutoff {
            return self.dim()..self.dim();
        }
        sector_offset(n_total)..sector_offset(n_total + 1)
    }

    /// Iterator over `(index, n_h, n_v)` in storage order.
    pub fn states(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        (0..=self.cutoff)
            .flat_map(move |total| (0..=total).map(move |n_v| (sector_offset(total) + n_v, total - n_v, n_v)))
    }

    pub(crate) fn ensure_same(&self, other: &FockBasis) -> Result<()> {
        if self != other {
            return Err(Error::BasisMismatch {
                left: self.cutoff,
                right: other.cutoff,
            });
        }
        Ok(())
    }
}

fn sector_offset(total: usize) -> usize {
    total * (total + 1) / 2
}

/// Polarization amplitudes `(c_H, c_V)` of a single input photon.
///
/// The photon state is `c_H |1;0> + c_V |0;1>`, i.e. the first slot of
/// `|n_H; n_V>` always counts horizontal photons.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarizationQubit {
    c_h: C64,
    c_v: C64,
}

impl PolarizationQubit {
    pub fn new(c_h: C64, c_v: C64) -> Result<Self> {
        let norm = c_h.norm_sqr() + c_v.norm_sqr();
        if !norm.is_finite() || (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::UnnormalizedQubit(norm));
        }
        Ok(Self { c_h, c_v })
    }

    /// Builds `cos(theta/2) |H> + e^{i phi} sin(theta/2) |V>`.
    pub fn from_bloch(theta: f64, phi: f64) -> Self {
        Self {
            c_h: C64::new((theta / 2.0).cos(), 0.0),
            c_v: C64::from_polar((theta / 2.0).sin(), phi),
        }
    }

    pub fn horizontal() -> Self {
        Self {
            c_h: C64::new(1.0, 0.0),
            c_v: C64::new(0.0, 0.0),
        }
    }

    pub fn vertical() -> Self {
        Self {
            c_h: C64::new(0.0, 0.0),
            c_v: C64::new(1.0, 0.0),
        }
    }

    pub fn diagonal() -> Self {
        let a = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            c_h: C64::new(a, 0.0),
            c_v: C64::new(a, 0.0),
        }
    }

    pub fn c_h(&self) -> C64 {
        self.c_h
    }

    pub fn c_v(&self) -> C64 {
        self.c_v
    }

    /// The orthogonal polarization `(-c_V*, c_H*)`.
    pub fn orthogonal(&self) -> Self {
        Self {
            c_h: -self.c_v.conj(),
            c_v: self.c_h.conj(),
        }
    }

    /// Applies a 2x2 polarization unitary to the amplitude vector.
    pub fn rotated(&self, u: &Matrix2<C64>) -> Self {
        let c_h = u[(0, 0)] * self.c_h + u[(0, 1)] * self.c_v;
        let c_v = u[(1, 0)] * self.c_h + u[(1, 1)] * self.c_v;
        let norm = (c_h.norm_sqr() + c_v.norm_sqr()).sqrt();
        Self {
            c_h: c_h / norm,
            c_v: c_v / norm,
        }
    }

    /// Creation operator `c_H a_H^† + c_V a_V^†` of a photon in this polarization.
    pub fn creation_op(&self, basis: &FockBasis) -> DMatrix<C64> {
        creation_op(basis, Mode::H) * self.c_h + creation_op(basis, Mode::V) * self.c_v
    }

    /// Number operator counting photons in this polarization.
    pub fn number_op(&self, basis: &FockBasis) -> DMatrix<C64> {
        let a_dag = self.creation_op(basis);
        &a_dag * a_dag.adjoint()
    }

    /// Normalized Fock state with `n_par` photons in this polarization and
    /// `n_perp` in the orthogonal one.
    pub fn aligned_fock_state(&self, basis: &FockBasis, n_par: usize, n_perp: usize) -> Result<TwoModeState> {
        if n_par + n_perp > basis.cutoff() {
            return Err(Error::OutOfRange {
                what: "aligned photon number",
                value: (n_par + n_perp).to_string(),
                allowed: format!("<= cutoff {}", basis.cutoff()),
            });
        }
        let par = self.creation_op(basis);
        let perp = self.orthogonal().creation_op(basis);
        let mut v = TwoModeState::vacuum(basis).amplitudes;
        let mut norm = 1.0;
        for k in 1..=n_par {
            v = &par * v;
            norm *= k as f64;
        }
        for k in 1..=n_perp {
            v = &perp * v;
            norm *= k as f64;
        }
        v /= C64::new(norm.sqrt(), 0.0);
        Ok(TwoModeState::from_amplitudes(*basis, v))
    }
}

/// Creation operator of one polarization mode, truncated at the cutoff.
pub fn creation_op(basis: &FockBasis, mode: Mode) -> DMatrix<C64> {
    let dim = basis.dim();
    let mut m = DMatrix::zeros(dim, dim);
    for (col, n_h, n_v) in basis.states() {
        let (target, n) = match mode {
            Mode::H => (basis.index(n_h + 1, n_v), n_h),
            Mode::V => (basis.index(n_h, n_v + 1), n_v),
        };
        if let Some(row) = target {
            m[(row, col)] = C64::new(((n + 1) as f64).sqrt(), 0.0);
        }
    }
    m
}

/// Annihilation operator of one polarization mode.
pub fn annihilation_op(basis: &FockBasis, mode: Mode) -> DMatrix<C64> {
    creation_op(basis, mode).adjoint()
}

/// Pure (possibly unnormalized) two-mode state.
///
/// `weight` is the squared norm the state would have without truncation.
/// For conditional measurement states it is the outcome density; for
/// ordinary normalized states it is 1.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoModeState {
    basis: FockBasis,
    amplitudes: DVector<C64>,
    weight: f64,
}

impl TwoModeState {
    /// Wraps an amplitude vector; the weight is its squared norm.
    pub fn from_amplitudes(basis: FockBasis, amplitudes: DVector<C64>) -> Self {
        assert_eq!(amplitudes.len(), basis.dim(), "amplitude vector length");
        let weight = amplitudes.norm_squared();
        Self {
            basis,
            amplitudes,
            weight,
        }
    }

    /// Wraps amplitudes whose untruncated squared norm is known to be `weight`.
    pub fn with_weight(basis: FockBasis, amplitudes: DVector<C64>, weight: f64) -> Self {
        assert_eq!(amplitudes.len(), basis.dim(), "amplitude vector length");
        assert!(weight >= 0.0, "negative state weight {weight}");
        Self {
            basis,
            amplitudes,
            weight,
        }
    }

    pub fn vacuum(basis: &FockBasis) -> Self {
        Self::fock(basis, 0, 0).expect("vacuum always fits")
    }

    pub fn fock(basis: &FockBasis, n_h: usize, n_v: usize) -> Result<Self> {
        let idx = basis.index(n_h, n_v).ok_or_else(|| Error::OutOfRange {
            what: "Fock state photon number",
            value: (n_h + n_v).to_string(),
            allowed: format!("<= cutoff {}", basis.cutoff()),
        })?;
        let mut amps = DVector::zeros(basis.dim());
        amps[idx] = C64::new(1.0, 0.0);
        Ok(Self::from_amplitudes(*basis, amps))
    }

    /// The single-photon state `c_H |1;0> + c_V |0;1>`.
    pub fn single_photon(basis: &FockBasis, q: &PolarizationQubit) -> Self {
        let mut amps = DVector::zeros(basis.dim());
        amps[basis.index(1, 0).unwrap()] = q.c_h();
        amps[basis.index(0, 1).unwrap()] = q.c_v();
        Self::from_amplitudes(*basis, amps)
    }

    pub fn basis(&self) -> &FockBasis {
        &self.basis
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> DVector<C64> {
        self.amplitudes
    }

    pub fn amplitude(&self, n_h: usize, n_v: usize) -> C64 {
        self.basis
            .index(n_h, n_v)
            .map_or(C64::new(0.0, 0.0), |i| self.amplitudes[i])
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    /// Squared norm of the stored (truncated) amplitudes.
    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.norm_squared()
    }

    /// Fraction of the weight lost above the cutoff.
    pub fn leakage(&self) -> f64 {
        if self.weight == 0.0 {
            return 0.0;
        }
        (1.0 - self.norm_sqr() / self.weight).max(0.0)
    }

    /// Rescales to unit weight; a zero-weight state is returned unchanged.
    pub fn normalized(&self) -> Self {
        if self.weight == 0.0 {
            return self.clone();
        }
        let s = 1.0 / self.weight.sqrt();
        Self {
            basis: self.basis,
            amplitudes: self.amplitudes.map(|a| a * s),
            weight: 1.0,
        }
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &TwoModeState) -> Result<C64> {
        self.basis.ensure_same(&other.basis)?;
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    /// Expectation value `<psi|op|psi>` of the stored amplitudes.
    pub fn expectation(&self, op: &DMatrix<C64>) -> C64 {
        self.amplitudes.dotc(&(op * &self.amplitudes))
    }

    /// The projector `|psi><psi|` built from the stored amplitudes.
    pub fn to_density(&self) -> DensityOperator {
        DensityOperator {
            basis: self.basis,
            matrix: &self.amplitudes * self.amplitudes.adjoint(),
        }
    }
}

/// Density operator on a truncated two-mode basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    basis: FockBasis,
    matrix: DMatrix<C64>,
}

/// Total-photon-number sector of a density operator.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorBlock {
    pub n_total: usize,
    /// Trace of the sector before renormalization.
    pub weight: f64,
    /// The renormalized sector, zero outside it; all zeros if `weight == 0`.
    pub block: DensityOperator,
}

impl SectorBlock {
    pub fn is_empty(&self) -> bool {
        self.weight == 0.0
    }
}

impl DensityOperator {
    /// Wraps a square matrix of the basis dimension. No positivity or
    /// trace checks are made; see [`DensityOperator::validate`].
    pub fn from_matrix(basis: FockBasis, matrix: DMatrix<C64>) -> Result<Self> {
        if matrix.nrows() != basis.dim() || matrix.ncols() != basis.dim() {
            return Err(Error::InvalidDensity(format!(
                "matrix is {}x{}, basis dimension is {}",
                matrix.nrows(),
                matrix.ncols(),
                basis.dim()
            )));
        }
        Ok(Self { basis, matrix })
    }

    pub fn zeros(basis: &FockBasis) -> Self {
        Self {
            basis: *basis,
            matrix: DMatrix::zeros(basis.dim(), basis.dim()),
        }
    }

    /// Diagonal operator with the given real weight per basis state.
    pub fn diagonal(basis: &FockBasis, mut weight: impl FnMut(usize, usize) -> f64) -> Self {
        let mut rho = Self::zeros(basis);
        for (i, n_h, n_v) in basis.states() {
            rho.matrix[(i, i)] = C64::new(weight(n_h, n_v), 0.0);
        }
        rho
    }

    pub fn basis(&self) -> &FockBasis {
        &self.basis
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// Largest elementwise deviation from Hermiticity.
    pub fn hermiticity_residual(&self) -> f64 {
        let n = self.matrix.nrows();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = hermitian_part(&self.matrix)
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// Checks Hermiticity, positivity and (if `normalized`) unit trace.
    pub fn validate(&self, normalized: bool) -> Result<()> {
        let herm = self.hermiticity_residual();
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidDensity(format!(
                "Hermiticity residual {herm:e} exceeds {HERMITIAN_TOL:e}"
            )));
        }
        let min_ev = self.eigenvalues().first().copied().unwrap_or(0.0);
        if min_ev < -SPECTRAL_TOL {
            return Err(Error::InvalidDensity(format!(
                "eigenvalue {min_ev:e} below -{SPECTRAL_TOL:e}"
            )));
        }
        let tr = self.matrix.trace();
        if tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidDensity(format!(
                "trace has imaginary part {:e}",
                tr.im
            )));
        }
        if normalized && (tr.re - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidDensity(format!("trace {} differs from 1", tr.re)));
        }
        Ok(())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            basis: self.basis,
            matrix: self.matrix.map(|z| z * factor),
        }
    }

    /// Rescales to unit trace; a zero-trace operator is returned unchanged.
    pub fn normalized(&self) -> Self {
        let tr = self.trace();
        if tr == 0.0 {
            return self.clone();
        }
        self.scaled(1.0 / tr)
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &DensityOperator, b: f64) -> Result<Self> {
        self.basis.ensure_same(&other.basis)?;
        Ok(Self {
            basis: self.basis,
            matrix: self.matrix.map(|z| z * a) + other.matrix.map(|z| z * b),
        })
    }

    /// Replaces the matrix by its Hermitian part `(M + M^†)/2`.
    pub fn hermitized(&self) -> Self {
        Self {
            basis: self.basis,
            matrix: hermitian_part(&self.matrix),
        }
    }

    /// `Tr(op rho)`.
    pub fn expectation(&self, op: &DMatrix<C64>) -> C64 {
        (op * &self.matrix).trace()
    }

    /// Mean total photon number.
    pub fn mean_photon_number(&self) -> f64 {
        self.basis
            .states()
            .map(|(i, n_h, n_v)| (n_h + n_v) as f64 * self.matrix[(i, i)].re)
            .sum()
    }

    /// Extracts the total-photon-number sector `n_total`, dropping all
    /// coherences with other sectors, and renormalizes it.
    pub fn project_total_n(&self, n_total: usize) -> Result<SectorBlock> {
        if n_total > self.basis.cutoff() {
            return Err(Error::OutOfRange {
                what: "sector photon number",
                value: n_total.to_string(),
                allowed: format!("0..={}", self.basis.cutoff()),
            });
        }
        let range = self.basis.sector_range(n_total);
        let weight: f64 = range.clone().map(|i| self.matrix[(i, i)].re).sum();
        let mut block = Self::zeros(&self.basis);
        if weight > 0.0 {
            for i in range.clone() {
                for j in range.clone() {
                    block.matrix[(i, j)] = self.matrix[(i, j)] / weight;
                }
            }
        }
        Ok(SectorBlock {
            n_total,
            weight: weight.max(0.0),
            block,
        })
    }

    /// Trace of every sector `0..=cutoff`.
    pub fn sector_weights(&self) -> Vec<f64> {
        (0..=self.basis.cutoff())
            .map(|n| self.basis.sector_range(n).map(|i| self.matrix[(i, i)].re).sum())
            .collect()
    }

    /// Restriction to the sectors with total photon number `<= n_max`,
    /// including inter-sector coherences.
    pub fn truncated_to(&self, n_max: usize) -> Self {
        let keep = self.basis.sector_range(n_max.min(self.basis.cutoff())).end;
        let mut out = self.clone();
        for i in 0..self.basis.dim() {
            for j in 0..self.basis.dim() {
                if i >= keep || j >= keep {
                    out.matrix[(i, j)] = C64::new(0.0, 0.0);
                }
            }
        }
        out
    }
}

/// `A rho A^†` with `A = c_H a_H^† + c_V a_V^†`; the result is not renormalized.
pub fn apply_creation_superposition(q: &PolarizationQubit, rho: &DensityOperator) -> DensityOperator {
    let a = q.creation_op(rho.basis());
    DensityOperator {
        basis: *rho.basis(),
        matrix: &a * rho.matrix() * a.adjoint(),
    }
}

/// Trace distance `1/2 ||rho1 - rho2||_1`.
pub fn trace_distance(rho1: &DensityOperator, rho2: &DensityOperator) -> Result<f64> {
    rho1.basis().ensure_same(rho2.basis())?;
    let diff = hermitian_part(&(rho1.matrix() - rho2.matrix()));
    Ok(0.5 * diff.symmetric_eigenvalues().iter().map(|e| e.abs()).sum::<f64>())
}

/// Overlap `<psi|rho|psi>` with a pure state.
pub fn fidelity_overlap(rho: &DensityOperator, psi: &TwoModeState) -> Result<f64> {
    rho.basis().ensure_same(psi.basis())?;
    Ok(psi.expectation(rho.matrix()).re)
}

fn hermitian_part(m: &DMatrix<C64>) -> DMatrix<C64> {
    (m + m.adjoint()).map(|z| z * 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn basis_dimensions() {
        assert_eq!(FockBasis::new(1).unwrap().dim(), 3);
        assert_eq!(FockBasis::new(2).unwrap().dim(), 6);
        assert_eq!(FockBasis::new(12).unwrap().dim(), 13 * 14 / 2);
        assert_eq!(FockBasis::new(0), Err(Error::InvalidCutoff(0)));
    }

    #[test]
    fn smallest_basis_ordering() {
        let b = FockBasis::new(1).unwrap();
        let states: Vec<_> = b.states().map(|(_, h, v)| (h, v)).collect();
        assert_eq!(states, vec![(0, 0), (1, 0), (0, 1)]);
    }

    #[test]
    fn index_map_round_trips() {
        let b = FockBasis::new(9).unwrap();
        for idx in 0..b.dim() {
            let (h, v) = b.occupation(idx);
            assert_eq!(b.index(h, v), Some(idx));
        }
        assert_eq!(b.index(5, 5), None);
        for n in 0..=9 {
            let r = b.sector_range(n);
            assert_eq!(r.len(), n + 1);
            assert!(r.clone().all(|i| {
                let (h, v) = b.occupation(i);
                h + v == n
            }));
        }
    }

    #[test]
    fn creation_ladder_coefficients() {
        let b = FockBasis::new(4).unwrap();
        let ad = creation_op(&b, Mode::H);
        let vac = TwoModeState::vacuum(&b);
        let one = &ad * vac.amplitudes();
        assert_eq!(one[b.index(1, 0).unwrap()], c(1.0, 0.0));
        assert_eq!(one.norm_squared(), 1.0);
        let two = &ad * &one;
        assert!((two[b.index(2, 0).unwrap()].re - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn number_operator_matches_index_map() {
        let b = FockBasis::new(7).unwrap();
        for mode in [Mode::H, Mode::V] {
            let n_op = creation_op(&b, mode) * annihilation_op(&b, mode);
            let direct = DMatrix::from_fn(b.dim(), b.dim(), |i, j| {
                if i != j {
                    return c(0.0, 0.0);
                }
                let (h, v) = b.occupation(i);
                c(if mode == Mode::H { h } else { v } as f64, 0.0)
            });
            assert!((n_op - direct).camax() < 1e-14);
        }
    }

    #[test]
    fn commutator_is_identity_below_cutoff() {
        let b = FockBasis::new(6).unwrap();
        for mode in [Mode::H, Mode::V] {
            let a = annihilation_op(&b, mode);
            let ad = creation_op(&b, mode);
            let comm = &a * &ad - &ad * &a;
            let interior = b.sector_range(b.cutoff() - 1).end;
            for i in 0..interior {
                for j in 0..interior {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((comm[(i, j)] - c(expect, 0.0)).norm() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn creation_superposition_on_vacuum() {
        let b = FockBasis::new(3).unwrap();
        let vac = TwoModeState::vacuum(&b).to_density();
        let out = apply_creation_superposition(&PolarizationQubit::horizontal(), &vac);
        let expect = TwoModeState::fock(&b, 1, 0).unwrap().to_density();
        assert!(trace_distance(&out, &expect).unwrap() < 1e-15);

        let d = PolarizationQubit::diagonal();
        let out = apply_creation_superposition(&d, &vac);
        let psi = TwoModeState::single_photon(&b, &d);
        assert!((fidelity_overlap(&out, &psi).unwrap() - 1.0).abs() < 1e-14);
        assert!((out.trace() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn creation_superposition_on_thermal_trace() {
        // Tr(a^† rho a) = 1 + <n_H> for a single mode; thermal mean 1 per mode.
        let b = FockBasis::new(60).unwrap();
        let mean: f64 = 1.0;
        let x = mean / (1.0 + mean);
        let thermal = DensityOperator::diagonal(&b, |h, v| (1.0 - x).powi(2) * x.powi((h + v) as i32));
        let oracle: f64 = b
            .states()
            .map(|(_, h, v)| (h as f64 + 1.0) * (1.0 - x).powi(2) * x.powi((h + v) as i32))
            .sum();
        let out = apply_creation_superposition(&PolarizationQubit::horizontal(), &thermal);
        assert!((oracle - 2.0).abs() < 1e-12);
        // the top sector is pushed above the cutoff
        let pushed_out: f64 = b
            .sector_range(b.cutoff())
            .map(|i| {
                let (h, _) = b.occupation(i);
                (h as f64 + 1.0) * thermal.matrix()[(i, i)].re
            })
            .sum();
        assert!((out.trace() + pushed_out - oracle).abs() < 1e-12);
        out.validate(false).unwrap();
    }

    #[test]
    fn sector_projection() {
        let b = FockBasis::new(3).unwrap();
        let rho = TwoModeState::fock(&b, 1, 0).unwrap().to_density();
        let s1 = rho.project_total_n(1).unwrap();
        assert_eq!(s1.weight, 1.0);
        assert!(trace_distance(&s1.block, &rho).unwrap() < 1e-15);
        let s2 = rho.project_total_n(2).unwrap();
        assert!(s2.is_empty());
        assert_eq!(s2.block.trace(), 0.0);
        assert!(rho.project_total_n(4).is_err());
    }

    #[test]
    fn trace_distance_and_overlap() {
        let b = FockBasis::new(2).unwrap();
        let vac = TwoModeState::vacuum(&b).to_density();
        let one = TwoModeState::fock(&b, 1, 0).unwrap();
        assert_eq!(trace_distance(&vac, &vac).unwrap(), 0.0);
        assert!((trace_distance(&vac, &one.to_density()).unwrap() - 1.0).abs() < 1e-15);

        let mixed = TwoModeState::fock(&b, 1, 0)
            .unwrap()
            .to_density()
            .combine(0.5, &TwoModeState::fock(&b, 0, 1).unwrap().to_density(), 0.5)
            .unwrap();
        assert!((fidelity_overlap(&mixed, &one).unwrap() - 0.5).abs() < 1e-15);

        let other = FockBasis::new(3).unwrap();
        assert!(trace_distance(&vac, &TwoModeState::vacuum(&other).to_density()).is_err());
    }

    #[test]
    fn qubit_validation() {
        assert!(PolarizationQubit::new(c(1.0, 0.0), c(0.1, 0.0)).is_err());
        assert!(PolarizationQubit::new(c(0.6, 0.0), c(0.0, 0.8)).is_ok());
        let q = PolarizationQubit::from_bloch(1.1, 0.3);
        let p = q.orthogonal();
        assert!((q.c_h().conj() * p.c_h() + q.c_v().conj() * p.c_v()).norm() < 1e-15);
    }

    #[test]
    fn aligned_states_are_orthonormal() {
        let b = FockBasis::new(4).unwrap();
        let q = PolarizationQubit::from_bloch(0.7, -1.3);
        let states: Vec<_> = (0..=3)
            .map(|n| q.aligned_fock_state(&b, n, 3 - n).unwrap())
            .collect();
        for (i, s) in states.iter().enumerate() {
            for (j, t) in states.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((s.inner(t).unwrap() - c(expect, 0.0)).norm() < 1e-13);
            }
            assert!((s.expectation(&q.number_op(&b)).re - i as f64).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn sector_weights_sum_to_trace(seed in 0u64..1000, cutoff in 1usize..6) {
            let b = FockBasis::new(cutoff).unwrap();
            let amps = DVector::from_fn(b.dim(), |i, _| {
                let t = (seed as f64 + 1.0) * (i as f64 + 0.5);
                c(t.sin(), (1.7 * t).cos())
            });
            let rho = TwoModeState::from_amplitudes(b, amps).to_density();
            let total: f64 = (0..=cutoff).map(|n| rho.project_total_n(n).unwrap().weight).sum();
            prop_assert!((total - rho.trace()).abs() < 1e-12 * rho.trace().max(1.0));
        }
    }
}
