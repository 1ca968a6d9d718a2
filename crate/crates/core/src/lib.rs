//! Single-photon polarization cloning by heterodyne measurement and
//! coherent feedback.
//!
//! A photon in an arbitrary polarization qubit is split on a beam splitter
//! of reflectivity `R`. The reflected mode is heterodyne-detected in both
//! polarizations and the transmitted mode is displaced by `f` times the
//! outcome. At the optimal feedback the `N`-photon output is the best
//! universal `1 -> N` cloner.
//!
//! * [`fock`]: truncated two-mode Fock basis, states, density operators.
//! * [`optics`]: displacement, coherent and thermal states, beam splitter.
//! * [`heterodyne`]: outcome density, conditional states, exact sampler.
//! * [`theory`]: closed-form output statistics.
//! * [`engine`]: numerical averaging over outcomes, sweeps and reports.

pub mod engine;
pub mod error;
pub mod fock;
pub mod heterodyne;
pub mod optics;
pub mod report;
pub mod testing;
pub mod theory;

pub use error::{ConfigIssue, Error, Result};
pub use fock::{DensityOperator, FockBasis, Mode, PolarizationQubit, TwoModeState};
pub use heterodyne::{FeedbackGain, HeterodyneOutcome};
pub use optics::{Displacement, SafetyBound};
pub use report::{CloneReport, Provenance, SectorRecord};
