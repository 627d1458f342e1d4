//! Weak-measurement simulation on small labeled Hilbert spaces.
//!
//! The crate computes weak values of observables for pre- and postselected
//! systems in two ways: directly from transition amplitudes, and by full
//! pointer-coupled evolution of a one-dimensional Gaussian pointer. Both
//! routes are exact; no weak-coupling expansion is used outside of test
//! assertions. Two interferometers are built in: a 3-path spin-1
//! interferometer with recombining lower arms and a nested Mach-Zehnder,
//! both tuned so that selected path projectors carry a weak value of zero
//! while the pointer state stays unchanged at every coupling strength.
//!
//! Module layout:
//! - [`hilbert`]: labeled bases, kets, operators, staged evolution
//! - [`pointer`]: closed-form Gaussian pointer algebra
//! - [`protocol`]: weak values, transition amplitudes, coupled runs
//! - [`setups`]: Wigner d1 rotations, angle solvers, scenario builders
//! - [`scenario`]: staged scenario container shared by the above
//! - [`runner`]: scenario files, result rows, CSV/JSON emission

pub mod error;
pub mod hilbert;
pub mod pointer;
pub mod protocol;
pub mod runner;
pub mod scenario;
pub mod setups;
pub mod tol;

pub use error::{Error, Result};
pub use hilbert::{Basis, BasisLabel, Hermiticity, Ket, LinOp, StageSequence};
pub use pointer::{GaussianBase, PointerState};
pub use protocol::{Mode, Probe, Regime, WeakReport};
pub use scenario::{NamedProbe, Scenario};

/// Complex scalar used throughout the crate.
pub type Complex = num_complex::Complex64;
