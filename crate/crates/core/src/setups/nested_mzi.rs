//! The nested Mach-Zehnder interferometer.
//!
//! A photon enters an outer interferometer with arms C and E; a second,
//! balanced interferometer with arms A and B sits on arm E and is tuned so
//! that nothing exits toward the continuation E' (everything leaves through
//! the dump port G). The outer splitters send one third of the intensity
//! through C and two thirds into the nested loop; postselection is a click
//! in port D. Under these conventions the projector weak values are exactly
//! 1 on C, A and C', -1 on B, and 0 on E and E'.
//!
//! Beamsplitter phases: straight-through amplitudes are real, reflections
//! carry `i`. Slices: 0 = source, 1 = {C, E}, 2 = {C, A, B},
//! 3 = {C', E', G}, 4 = {D, D2, G}.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hilbert::{Basis, BasisLabel, Ket, LinOp, StageSequence};
use crate::pointer::GaussianBase;
use crate::protocol::Probe;
use crate::scenario::{NamedProbe, Scenario};
use crate::tol;

use super::{DEFAULT_POINTER_SIGMA, DEFAULT_PROBE_G};

/// Probe regions in slice order: (region, slice index).
pub const REGIONS: [(&str, usize); 6] =
    [("C", 1), ("E", 1), ("A", 2), ("B", 2), ("C'", 3), ("E'", 3)];

/// The assembled nested interferometer.
#[derive(Clone, Debug)]
pub struct NestedMzi {
    scenario: Scenario,
}

impl NestedMzi {
    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn into_scenario(self) -> Scenario {
        self.scenario
    }
}

/// Build the nested interferometer with the inner loop balanced.
pub fn build_nested_mzi() -> Result<NestedMzi> {
    build_nested_mzi_with_phase(0.0)
}

/// Build with an extra phase on inner arm B. Any phase that spoils the
/// complete destructive interference toward E' is rejected, which pins the
/// balanced setting as the only valid one under these conventions.
pub fn build_nested_mzi_with_phase(inner_phase: f64) -> Result<NestedMzi> {
    let c = Complex64::new;
    let i = Complex64::new(0.0, 1.0);
    let r2 = std::f64::consts::FRAC_1_SQRT_2;
    let r3 = 1.0 / 3.0_f64.sqrt();
    let q3 = (2.0 / 3.0_f64).sqrt();

    let slice0 = Basis::spatial(&["in"])?;
    let slice1 = Basis::spatial(&["C", "E"])?;
    let slice2 = Basis::spatial(&["C", "A", "B"])?;
    let slice3 = Basis::spatial(&["C'", "E'", "G"])?;
    let slice4 = Basis::spatial(&["D", "D2", "G"])?;

    let mut seq = StageSequence::new(slice0.clone());
    // outer splitter, one third through C and two thirds into the loop arm
    seq.push_stage(LinOp::from_matrix(
        slice0.clone(),
        slice1.clone(),
        DMatrix::from_column_slice(2, 1, &[c(r3, 0.0), i * q3]),
    )?)?;
    // inner splitter on E; C passes untouched (rows C, A, B / cols C, E)
    seq.push_stage(LinOp::from_matrix(
        slice1.clone(),
        slice2.clone(),
        DMatrix::from_row_slice(
            3,
            2,
            &[
                c(1.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(r2, 0.0),
                c(0.0, 0.0),
                i * r2,
            ],
        ),
    )?)?;
    // inner recombiner toward E' and the dump G (rows C', E', G / cols C, A, B)
    let phase = Complex64::from_polar(1.0, inner_phase);
    seq.push_stage(LinOp::from_matrix(
        slice2.clone(),
        slice3.clone(),
        DMatrix::from_row_slice(
            3,
            3,
            &[
                c(1.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(r2, 0.0),
                i * r2 * phase,
                c(0.0, 0.0),
                i * r2,
                c(r2, 0.0) * phase,
            ],
        ),
    )?)?;
    // outer recombiner into the detectors; G passes (rows D, D2, G / cols C', E', G)
    seq.push_stage(LinOp::from_matrix(
        slice3.clone(),
        slice4.clone(),
        DMatrix::from_row_slice(
            3,
            3,
            &[
                c(r3, 0.0),
                -i * q3,
                c(0.0, 0.0),
                -i * q3,
                c(r3, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(1.0, 0.0),
            ],
        ),
    )?)?;

    let preselect = Ket::basis_state(slice0, &BasisLabel::path("in"))?;
    let postselect = Ket::basis_state(slice4, &BasisLabel::path("D"))?;

    let pointer = GaussianBase::new(DEFAULT_POINTER_SIGMA)?;
    let mut probes = Vec::with_capacity(REGIONS.len());
    for (region, slice) in REGIONS {
        let basis = seq.basis(slice)?.clone();
        probes.push(NamedProbe {
            label: format!("t{slice}:{region}"),
            probe: Probe {
                slice,
                observable: LinOp::path_projector(basis, region)?,
                pointer,
                g: DEFAULT_PROBE_G,
            },
        });
    }

    let scenario = Scenario::new("nested-mzi", seq, preselect, postselect, probes)?;

    // the loop must be fully destructive toward the continuation arm
    let at_merge = scenario.forward_state(3)?;
    let leak = at_merge.amplitude(&BasisLabel::path("E'")).unwrap().norm();
    if leak > tol::EXACT {
        return Err(Error::Validation {
            key: "nested-mzi".into(),
            reason: format!("inner loop leaks {leak:.3e} toward E'"),
        });
    }
    Ok(NestedMzi { scenario })
}
