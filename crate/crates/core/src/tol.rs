//! Central numerical tolerances.
//!
//! All spaces are at most ~10-dimensional, so exact-algebra identities hold
//! to a few ulps and 1e-12 is a comfortable bound. Solver-derived angles
//! carry bisection residue and get the looser 1e-9.

/// Exact-algebra identities in f64 (unitarity, hermiticity, pointer kernels).
pub const EXACT: f64 = 1e-12;

/// Quantities that pass through a root solver.
pub const SOLVER: f64 = 1e-9;

/// Residual the angle solvers must reach on their defining conditions.
pub const SOLVER_RESIDUAL: f64 = 1e-10;

/// Amplitudes at or below this count as zero (orthogonality cutoffs).
pub const AMP_CUTOFF: f64 = 1e-12;

/// Eigenvalues closer than this are merged into one pointer branch.
pub const DEGENERACY: f64 = 1e-9;

/// Largest g/sigma accepted in weak mode.
pub const WEAK_G_MAX: f64 = 0.05;

/// Smallest g/sigma accepted in strong mode.
pub const STRONG_G_MIN: f64 = 8.0;

/// Squared-norm threshold under which a pointer state counts as unnormalizable.
pub const NORM_SQR_CUTOFF: f64 = 1e-24;
