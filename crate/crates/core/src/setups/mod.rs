//! Builders for the two interferometer scenarios, plus the spin rotation
//! machinery and detector-overlap factor they share.

pub mod nested_mzi;
pub mod three_path;
pub mod wigner;

pub use nested_mzi::{build_nested_mzi, NestedMzi};
pub use three_path::{build_three_path, RegionOverlaps, ThreePath};
pub use wigner::{
    postselection_condition, solve_postselection, solve_unit_weak_values, splitting_coefficients,
    unit_value_condition, wigner_d1, WignerD1,
};

use crate::error::{Error, Result};

/// Default coupling for probes created by the builders.
pub const DEFAULT_PROBE_G: f64 = 0.01;

/// Default pointer spread for probes created by the builders.
pub const DEFAULT_POINTER_SIGMA: f64 = 1.0;

/// Detection efficiency of a Gaussian region detector: `|<Gamma_X|xi>|^2`
/// for a normalized detector profile of position spread `delta` against a
/// normalized wavepacket of spread `wavepacket_sigma`, with centers
/// separated by `offset`.
///
/// Equals 1 only for matched widths at zero offset. The factor multiplies
/// the weak values of the non-null region projectors; null weak values stay
/// zero at any efficiency.
pub fn gamma_overlap_factor(delta: f64, wavepacket_sigma: f64, offset: f64) -> Result<f64> {
    if !delta.is_finite() || delta <= 0.0 {
        return Err(Error::Domain(format!(
            "detector width must be positive, got {delta}"
        )));
    }
    if !wavepacket_sigma.is_finite() || wavepacket_sigma <= 0.0 {
        return Err(Error::Domain(format!(
            "wavepacket width must be positive, got {wavepacket_sigma}"
        )));
    }
    if !offset.is_finite() {
        return Err(Error::Domain(format!(
            "offset must be finite, got {offset}"
        )));
    }
    let ssum = delta * delta + wavepacket_sigma * wavepacket_sigma;
    let prefactor = 2.0 * delta * wavepacket_sigma / ssum;
    Ok(prefactor * (-offset * offset / (2.0 * ssum)).exp())
}
