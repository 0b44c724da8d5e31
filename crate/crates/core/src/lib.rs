//! End-to-end simulation and analysis of an orbital-angular-momentum (OAM)
//! photon-pair entanglement experiment.
//!
//! The crate models the measurement chain of a Stokes/anti-Stokes photon-pair
//! source analyzed with displaced fork holograms and single-mode fibers:
//!
//! * [`oam_optics`] — Laguerre-Gaussian modes, hologram transmission, and the
//!   displacement-dependent projection integral evaluated by deterministic
//!   polar quadrature;
//! * [`quantum_state`] — two-qubit OAM states, analyzer-induced measurement
//!   vectors, conservation-law checks, and entanglement measures (fidelity,
//!   concurrence, entanglement of formation);
//! * [`coincidence_sim`] — Monte Carlo generation of time-resolved coincidence
//!   histograms and displacement-sweep count data;
//! * [`histogram_analysis`] — background estimation, the g(τ) correlation
//!   statistic, the normalized-signal sum, and least-squares sweep fitting;
//! * [`tomography`] — 16-setting two-qubit state tomography with linear
//!   inversion and maximum-likelihood reconstruction.
//!
//! All numeric code is generic over the scalar type (`f32`/`f64`) through
//! [`scalar::Real`]; the `*64` aliases at the crate root fix the default
//! double-precision instantiations.

// Validation comparisons are written `!(x > 0)` so NaN fails them; index
// loops in the small dense kernels mirror the matrix algebra.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod error;
pub mod scalar;

pub mod coincidence_sim;
pub mod fitting;
pub mod histogram_analysis;
pub mod linalg;
pub mod oam_optics;
pub mod quadrature;
pub mod quantum_state;
pub mod seeding;
pub mod tomography;

pub use error::{Error, Result};
pub use scalar::{real, Real};

/// Complex double-precision scalar.
pub type C64 = num_complex::Complex<f64>;

/// Double-precision LG mode.
pub type LgMode64 = oam_optics::LgMode<f64>;
/// Double-precision transverse field.
pub type Field64 = oam_optics::TransverseField<f64>;
/// Double-precision hologram setting.
pub type Hologram64 = oam_optics::HologramSetting<f64>;
/// Double-precision quadrature spec.
pub type Quadrature64 = quadrature::QuadratureSpec<f64>;
/// Double-precision two-qubit pure state.
pub type Ket64 = quantum_state::KetVector4<f64>;
/// Double-precision two-qubit density matrix.
pub type Density64 = quantum_state::DensityMatrix4<f64>;
/// Double-precision analyzer setting.
pub type Analyzer64 = quantum_state::AnalyzerSetting<f64>;
