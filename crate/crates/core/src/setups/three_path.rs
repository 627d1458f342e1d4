//! The 3-path spin-1 interferometer with recombining lower arms.
//!
//! A splitter separates the incoming `|m_z = 0>` wavepacket into three arms
//! correlated with the spin projection along the splitting axis: D carries
//! k = +1, E carries k = 0, F carries k = -1. The two lower arms merge into
//! region O, separate again into E' and F', merge once more into O', and
//! all arms recombine before a final spin measurement along the
//! postselection axis selects `|m_phi = +1>`.
//!
//! Slices: 0 = preparation, 1 = {D, E, F}, 2 = {D, O}, 3 = {D, E', F'},
//! 4 = {D, O'}, 5 = detection. Merges and splits are ideal relabeling
//! isometries; the two packets sharing a merged region stay distinguishable
//! by their spin tag, which is what makes the merge unitary on the
//! reachable labels.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hilbert::{Basis, BasisLabel, Ket, LinOp, StageSequence};
use crate::pointer::GaussianBase;
use crate::protocol::Probe;
use crate::scenario::{NamedProbe, Scenario};
use crate::tol;

use super::wigner::{postselect_overlaps, postselection_condition, splitting_coefficients};
use super::{DEFAULT_POINTER_SIGMA, DEFAULT_PROBE_G};

/// Probe regions in slice order: (region, slice index).
pub const REGIONS: [(&str, usize); 7] = [
    ("E", 1),
    ("F", 1),
    ("D", 2),
    ("O", 2),
    ("E'", 3),
    ("F'", 3),
    ("O'", 4),
];

/// Detection-efficiency factors per probe region, each in [0, 1].
/// Regions not listed default to perfect overlap.
#[derive(Clone, Debug, Default)]
pub struct RegionOverlaps(pub BTreeMap<String, f64>);

impl RegionOverlaps {
    pub fn full() -> Self {
        Self::default()
    }

    pub fn with(mut self, region: &str, factor: f64) -> Self {
        self.0.insert(region.to_string(), factor);
        self
    }

    fn factor(&self, region: &str) -> f64 {
        self.0.get(region).copied().unwrap_or(1.0)
    }
}

/// The assembled 3-path scenario together with its angles.
#[derive(Clone, Debug)]
pub struct ThreePath {
    alpha: f64,
    phi: f64,
    scenario: Scenario,
}

impl ThreePath {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn into_scenario(self) -> Scenario {
        self.scenario
    }
}

fn label(path: &str, spin: i8) -> BasisLabel {
    BasisLabel::with_spin(path, spin).expect("static spin label")
}

/// Build the scenario at the given angles.
///
/// The pair must satisfy the postselection orthogonality condition to 1e-9;
/// use the solvers in [`super::wigner`] to obtain such angles. Probes carry
/// the default pointer and coupling; regions with an overlap factor below 1
/// couple to the correspondingly scaled region projector (the compression of
/// the detector projector onto the arm's wavepacket).
pub fn build_three_path(alpha: f64, phi: f64, overlaps: &RegionOverlaps) -> Result<ThreePath> {
    let residual = postselection_condition(alpha, phi).abs();
    if residual > tol::SOLVER {
        return Err(Error::Validation {
            key: "three-path angles".into(),
            reason: format!(
                "postselection condition residual {residual:.3e} exceeds {:.0e}",
                tol::SOLVER
            ),
        });
    }
    for (region, factor) in &overlaps.0 {
        if !(0.0..=1.0).contains(factor) {
            return Err(Error::Validation {
                key: format!("overlap '{region}'"),
                reason: format!("factor {factor} outside [0, 1]"),
            });
        }
        if !REGIONS.iter().any(|(r, _)| r == region) {
            return Err(Error::Validation {
                key: format!("overlap '{region}'"),
                reason: "unknown probe region".into(),
            });
        }
    }

    let spins = [1i8, 0, -1];
    let slice0 = Basis::product(&["in"], &spins)?;
    let slice1 = Basis::new(vec![label("D", 1), label("E", 0), label("F", -1)])?;
    let slice2 = Basis::new(vec![label("D", 1), label("O", 0), label("O", -1)])?;
    let slice3 = Basis::new(vec![label("D", 1), label("E'", 0), label("F'", -1)])?;
    let slice4 = Basis::new(vec![label("D", 1), label("O'", 0), label("O'", -1)])?;
    let slice5 = Basis::product(&["out"], &spins)?;

    let mut seq = StageSequence::new(slice0.clone());
    // splitter: each spin component leaves on its own arm
    seq.push_stage(LinOp::relabeling(
        slice0.clone(),
        slice1.clone(),
        &[
            (label("in", 1), label("D", 1)),
            (label("in", 0), label("E", 0)),
            (label("in", -1), label("F", -1)),
        ],
    )?)?;
    // E and F merge into O
    seq.push_stage(LinOp::relabeling(
        slice1.clone(),
        slice2.clone(),
        &[
            (label("D", 1), label("D", 1)),
            (label("E", 0), label("O", 0)),
            (label("F", -1), label("O", -1)),
        ],
    )?)?;
    // O separates into E' and F'
    seq.push_stage(LinOp::relabeling(
        slice2.clone(),
        slice3.clone(),
        &[
            (label("D", 1), label("D", 1)),
            (label("O", 0), label("E'", 0)),
            (label("O", -1), label("F'", -1)),
        ],
    )?)?;
    // E' and F' merge into O'
    seq.push_stage(LinOp::relabeling(
        slice3.clone(),
        slice4.clone(),
        &[
            (label("D", 1), label("D", 1)),
            (label("E'", 0), label("O'", 0)),
            (label("F'", -1), label("O'", -1)),
        ],
    )?)?;
    // full recombination ahead of the final spin measurement
    seq.push_stage(LinOp::relabeling(
        slice4.clone(),
        slice5.clone(),
        &[
            (label("D", 1), label("out", 1)),
            (label("O'", 0), label("out", 0)),
            (label("O'", -1), label("out", -1)),
        ],
    )?)?;

    // |m_z = 0> expanded over the splitting-axis spin states
    let d = splitting_coefficients(alpha);
    let preselect = Ket::from_map(
        slice0,
        &[
            (label("in", 1), Complex64::new(d[0], 0.0)),
            (label("in", 0), Complex64::new(d[1], 0.0)),
            (label("in", -1), Complex64::new(d[2], 0.0)),
        ],
    )?;
    // |m_phi = +1> in the same spin basis
    let f = postselect_overlaps(alpha, phi);
    let postselect = Ket::from_map(
        slice5,
        &[
            (label("out", 1), Complex64::new(f[0], 0.0)),
            (label("out", 0), Complex64::new(f[1], 0.0)),
            (label("out", -1), Complex64::new(f[2], 0.0)),
        ],
    )?;

    let pointer = GaussianBase::new(DEFAULT_POINTER_SIGMA)?;
    let mut probes = Vec::with_capacity(REGIONS.len());
    for (region, slice) in REGIONS {
        let basis = seq.basis(slice)?.clone();
        let projector = LinOp::path_projector(basis, region)?;
        let factor = overlaps.factor(region);
        let observable = projector.scaled(Complex64::new(factor, 0.0));
        probes.push(NamedProbe {
            label: format!("t{slice}:{region}"),
            probe: Probe {
                slice,
                observable,
                pointer,
                g: DEFAULT_PROBE_G,
            },
        });
    }

    let scenario = Scenario::new("three-path", seq, preselect, postselect, probes)?;
    Ok(ThreePath {
        alpha,
        phi,
        scenario,
    })
}
