//! Staged interferometer scenario: slice bases, stage maps, pre/postselected
//! kets and probe placements.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hilbert::{Ket, LinOp, StageSequence};
use crate::protocol::Probe;

/// A probe placement with a stable label for result rows.
#[derive(Clone, Debug)]
pub struct NamedProbe {
    pub label: String,
    pub probe: Probe,
}

/// A fully assembled scenario.
///
/// The preselected ket lives on the first slice, the postselected ket on the
/// last; both are normalized at construction so that postselection
/// probabilities are meaningful. Weak values are invariant under that
/// normalization.
#[derive(Clone, Debug)]
pub struct Scenario {
    name: String,
    seq: StageSequence,
    preselect: Ket,
    postselect: Ket,
    probes: Vec<NamedProbe>,
}

impl Scenario {
    pub fn new(
        name: impl Into<String>,
        seq: StageSequence,
        preselect: Ket,
        postselect: Ket,
        probes: Vec<NamedProbe>,
    ) -> Result<Self> {
        let name = name.into();
        if preselect.basis() != seq.basis(0)? {
            return Err(Error::Validation {
                key: "preselect".into(),
                reason: "not defined on the first slice basis".into(),
            });
        }
        let last = seq.n_slices() - 1;
        if postselect.basis() != seq.basis(last)? {
            return Err(Error::Validation {
                key: "postselect".into(),
                reason: "not defined on the final slice basis".into(),
            });
        }
        let preselect = preselect.normalized().map_err(|_| Error::Validation {
            key: "preselect".into(),
            reason: "zero norm".into(),
        })?;
        let postselect = postselect.normalized().map_err(|_| Error::Validation {
            key: "postselect".into(),
            reason: "zero norm".into(),
        })?;
        for np in &probes {
            let slice_basis = seq.basis(np.probe.slice).map_err(|_| Error::Validation {
                key: format!("probe '{}'", np.label),
                reason: format!(
                    "slice {} out of range ({} slices)",
                    np.probe.slice,
                    seq.n_slices()
                ),
            })?;
            if !np.probe.observable.is_square() || np.probe.observable.domain() != slice_basis {
                return Err(Error::Validation {
                    key: format!("probe '{}'", np.label),
                    reason: "observable is not a square operator on its slice basis".into(),
                });
            }
            if !np.probe.g.is_finite() {
                return Err(Error::Validation {
                    key: format!("probe '{}'", np.label),
                    reason: "coupling g must be finite".into(),
                });
            }
            if np.label.contains(',') {
                return Err(Error::Validation {
                    key: format!("probe '{}'", np.label),
                    reason: "labels may not contain commas".into(),
                });
            }
        }
        Ok(Self {
            name,
            seq,
            preselect,
            postselect,
            probes,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn sequence(&self) -> &StageSequence {
        &self.seq
    }

    pub fn preselect(&self) -> &Ket {
        &self.preselect
    }

    pub fn postselect(&self) -> &Ket {
        &self.postselect
    }

    pub fn probes(&self) -> &[NamedProbe] {
        &self.probes
    }

    pub fn last_slice(&self) -> usize {
        self.seq.n_slices() - 1
    }

    /// Preselected ket evolved forward to the given slice.
    pub fn forward_state(&self, slice: usize) -> Result<Ket> {
        self.seq.evolve(&self.preselect, 0, slice)
    }

    /// Postselected ket dragged backward (adjoint stages) to the given slice.
    pub fn backward_state(&self, slice: usize) -> Result<Ket> {
        self.seq
            .evolve_backward(&self.postselect, self.last_slice(), slice)
    }

    /// Overlap `<chi(slice)|psi(slice)>`; independent of the slice for
    /// unitary stages.
    pub fn selection_overlap(&self, slice: usize) -> Result<Complex64> {
        self.backward_state(slice)?
            .inner(&self.forward_state(slice)?)
    }

    /// Projector onto all labels of a spatial path at the given slice.
    pub fn path_projector(&self, slice: usize, path: &str) -> Result<LinOp> {
        LinOp::path_projector(self.seq.basis(slice)?.clone(), path)
    }
}
