//! Labeled finite-dimensional Hilbert space algebra.
//!
//! States live over an explicit list of [`BasisLabel`]s (a path name plus an
//! optional spin projection), so interferometer code never juggles raw
//! indices. Operators may be rectangular: a stage of an interferometer is an
//! isometry from the labels present at one time slice to the labels present
//! at the next, which keeps merges of spin-tagged paths honest (two labels
//! merge into one spatial region only when their spins differ).

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tol;

/// One basis vector: a spatial path label and an optional spin projection.
///
/// Spinless setups use `spin: None`. Spin-1 setups tag labels with the
/// projection quantum number in {-1, 0, +1} along the quantization axis
/// declared by the scenario.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BasisLabel {
    pub path: String,
    pub spin: Option<i8>,
}

impl BasisLabel {
    /// Spatial-only label.
    pub fn path(path: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            spin: None,
        }
    }

    /// Path label carrying a spin projection in {-1, 0, +1}.
    pub fn with_spin(path: impl Into<String>, spin: i8) -> Result<Self> {
        if !(-1..=1).contains(&spin) {
            return Err(Error::Domain(format!(
                "spin projection must be -1, 0 or +1, got {spin}"
            )));
        }
        Ok(Self {
            path: path.into(),
            spin: Some(spin),
        })
    }

    /// Pure spin label (used as the right factor of a tensor product).
    pub fn spin_only(spin: i8) -> Result<Self> {
        Self::with_spin("", spin)
    }
}

impl fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.spin {
            None => write!(f, "{}", self.path),
            Some(s) if self.path.is_empty() => write!(f, "m={s:+}"),
            Some(s) => write!(f, "{}:{s:+}", self.path),
        }
    }
}

/// Ordered set of unique basis labels.
///
/// Product bases built through [`Basis::product`] have size
/// `paths.len() * spins.len()`; scenario slices may restrict to the labels
/// that are physically reachable at that time.
#[derive(Clone, Debug)]
pub struct Basis {
    labels: Vec<BasisLabel>,
    index: HashMap<BasisLabel, usize>,
}

impl PartialEq for Basis {
    fn eq(&self, other: &Self) -> bool {
        self.labels == other.labels
    }
}

impl Basis {
    pub fn new(labels: Vec<BasisLabel>) -> Result<Arc<Self>> {
        if labels.is_empty() {
            return Err(Error::Dimension("basis must have dimension >= 1".into()));
        }
        let mut index = HashMap::with_capacity(labels.len());
        for (i, l) in labels.iter().enumerate() {
            if index.insert(l.clone(), i).is_some() {
                return Err(Error::Dimension(format!("duplicate basis label '{l}'")));
            }
        }
        Ok(Arc::new(Self { labels, index }))
    }

    /// Spatial basis without spin.
    pub fn spatial<S: AsRef<str>>(paths: &[S]) -> Result<Arc<Self>> {
        Self::new(paths.iter().map(|p| BasisLabel::path(p.as_ref())).collect())
    }

    /// Spin-only basis in the given projection order.
    pub fn spins(spins: &[i8]) -> Result<Arc<Self>> {
        Self::new(
            spins
                .iter()
                .map(|&s| BasisLabel::spin_only(s))
                .collect::<Result<_>>()?,
        )
    }

    /// Full product basis, path-major: `(p0,s0), (p0,s1), ..., (p1,s0), ...`.
    pub fn product<S: AsRef<str>>(paths: &[S], spins: &[i8]) -> Result<Arc<Self>> {
        let mut labels = Vec::with_capacity(paths.len() * spins.len());
        for p in paths {
            for &s in spins {
                labels.push(BasisLabel::with_spin(p.as_ref(), s)?);
            }
        }
        Self::new(labels)
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[BasisLabel] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &BasisLabel {
        &self.labels[i]
    }

    pub fn index_of(&self, label: &BasisLabel) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn contains(&self, label: &BasisLabel) -> bool {
        self.index.contains_key(label)
    }

    /// Indices of all labels on the given spatial path.
    pub fn path_indices(&self, path: &str) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, l)| l.path == path)
            .map(|(i, _)| i)
            .collect()
    }
}

fn require_same_basis(a: &Arc<Basis>, b: &Arc<Basis>, what: &str) -> Result<()> {
    if a != b {
        return Err(Error::Dimension(format!(
            "{what}: bases differ ({} vs {} labels, first '{}' vs '{}')",
            a.dim(),
            b.dim(),
            a.label(0),
            b.label(0)
        )));
    }
    Ok(())
}

/// Complex amplitude vector over a labeled basis.
#[derive(Clone, Debug, PartialEq)]
pub struct Ket {
    basis: Arc<Basis>,
    amp: DVector<Complex64>,
}

impl Ket {
    pub fn zero(basis: Arc<Basis>) -> Self {
        let n = basis.dim();
        Self {
            basis,
            amp: DVector::zeros(n),
        }
    }

    pub fn from_amplitudes(basis: Arc<Basis>, amp: Vec<Complex64>) -> Result<Self> {
        if amp.len() != basis.dim() {
            return Err(Error::Dimension(format!(
                "{} amplitudes for a {}-dimensional basis",
                amp.len(),
                basis.dim()
            )));
        }
        Ok(Self {
            basis,
            amp: DVector::from_vec(amp),
        })
    }

    /// Basis vector |label>.
    pub fn basis_state(basis: Arc<Basis>, label: &BasisLabel) -> Result<Self> {
        let i = basis
            .index_of(label)
            .ok_or_else(|| Error::Dimension(format!("label '{label}' not in basis")))?;
        let mut k = Self::zero(basis);
        k.amp[i] = Complex64::new(1.0, 0.0);
        Ok(k)
    }

    /// Ket from sparse (label, amplitude) pairs; unlisted labels are zero.
    pub fn from_map(basis: Arc<Basis>, entries: &[(BasisLabel, Complex64)]) -> Result<Self> {
        let mut k = Self::zero(basis);
        for (label, a) in entries {
            let i = k
                .basis
                .index_of(label)
                .ok_or_else(|| Error::Dimension(format!("label '{label}' not in basis")))?;
            k.amp[i] += *a;
        }
        Ok(k)
    }

    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn amplitude(&self, label: &BasisLabel) -> Option<Complex64> {
        self.basis.index_of(label).map(|i| self.amp[i])
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amp
    }

    pub fn norm(&self) -> f64 {
        self.amp.norm()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amp.norm_squared()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm() - 1.0).abs() <= tol::EXACT
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n <= tol::AMP_CUTOFF {
            return Err(Error::ZeroNorm);
        }
        Ok(self.scaled(Complex64::new(1.0 / n, 0.0)))
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self {
            basis: self.basis.clone(),
            amp: &self.amp * c,
        }
    }

    pub fn add(&self, other: &Ket) -> Result<Self> {
        require_same_basis(&self.basis, &other.basis, "ket addition")?;
        Ok(Self {
            basis: self.basis.clone(),
            amp: &self.amp + &other.amp,
        })
    }

    /// Inner product `<self|other>`, conjugate-linear in `self`.
    pub fn inner(&self, other: &Ket) -> Result<Complex64> {
        require_same_basis(&self.basis, &other.basis, "inner product")?;
        Ok(self.amp.dotc(&other.amp))
    }

    /// Tensor product of a spatial ket (spin-free labels) with a spin ket
    /// (path-free labels); the result lives on the path-major product basis.
    pub fn tensor(&self, spin: &Ket) -> Result<Self> {
        if self.basis.labels().iter().any(|l| l.spin.is_some()) {
            return Err(Error::Domain(
                "tensor: left factor must be a spatial ket (no spin tags)".into(),
            ));
        }
        if spin
            .basis
            .labels()
            .iter()
            .any(|l| l.spin.is_none() || !l.path.is_empty())
        {
            return Err(Error::Domain(
                "tensor: right factor must be a pure spin ket".into(),
            ));
        }
        let paths: Vec<&str> = self
            .basis
            .labels()
            .iter()
            .map(|l| l.path.as_str())
            .collect();
        let spins: Vec<i8> = spin
            .basis
            .labels()
            .iter()
            .map(|l| l.spin.unwrap())
            .collect();
        let basis = Basis::product(&paths, &spins)?;
        let mut amp = Vec::with_capacity(basis.dim());
        for i in 0..self.dim() {
            for j in 0..spin.dim() {
                amp.push(self.amp[i] * spin.amp[j]);
            }
        }
        Ket::from_amplitudes(basis, amp)
    }
}

/// Tri-state hermiticity tag carried by [`LinOp`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Hermiticity {
    Hermitian,
    NonHermitian,
    Unchecked,
}

/// Complex matrix between two labeled bases.
///
/// Observables are square (`domain == codomain`); interferometer stages are
/// isometries whose codomain may be a different slice basis.
#[derive(Clone, Debug)]
pub struct LinOp {
    domain: Arc<Basis>,
    codomain: Arc<Basis>,
    mat: DMatrix<Complex64>,
    herm: Hermiticity,
}

impl LinOp {
    pub fn from_matrix(
        domain: Arc<Basis>,
        codomain: Arc<Basis>,
        mat: DMatrix<Complex64>,
    ) -> Result<Self> {
        if mat.nrows() != codomain.dim() || mat.ncols() != domain.dim() {
            return Err(Error::Dimension(format!(
                "matrix is {}x{} but bases are {} (codomain) and {} (domain)",
                mat.nrows(),
                mat.ncols(),
                codomain.dim(),
                domain.dim()
            )));
        }
        Ok(Self {
            domain,
            codomain,
            mat,
            herm: Hermiticity::Unchecked,
        })
    }

    /// Square operator over one basis.
    pub fn square(basis: Arc<Basis>, mat: DMatrix<Complex64>) -> Result<Self> {
        Self::from_matrix(basis.clone(), basis, mat)
    }

    pub fn identity(basis: Arc<Basis>) -> Self {
        let n = basis.dim();
        Self {
            domain: basis.clone(),
            codomain: basis,
            mat: DMatrix::identity(n, n),
            herm: Hermiticity::Hermitian,
        }
    }

    pub fn zero(basis: Arc<Basis>) -> Self {
        let n = basis.dim();
        Self {
            domain: basis.clone(),
            codomain: basis,
            mat: DMatrix::zeros(n, n),
            herm: Hermiticity::Hermitian,
        }
    }

    /// Diagonal projector onto the listed labels.
    pub fn projector(basis: Arc<Basis>, labels: &[BasisLabel]) -> Result<Self> {
        let mut op = Self::zero(basis);
        for l in labels {
            let i = op
                .domain
                .index_of(l)
                .ok_or_else(|| Error::Dimension(format!("label '{l}' not in basis")))?;
            op.mat[(i, i)] = Complex64::new(1.0, 0.0);
        }
        op.herm = Hermiticity::Hermitian;
        Ok(op)
    }

    /// Projector onto every label that sits on the given spatial path.
    pub fn path_projector(basis: Arc<Basis>, path: &str) -> Result<Self> {
        let idx = basis.path_indices(path);
        if idx.is_empty() {
            return Err(Error::Dimension(format!("no basis label on path '{path}'")));
        }
        let mut op = Self::zero(basis);
        for i in idx {
            op.mat[(i, i)] = Complex64::new(1.0, 0.0);
        }
        op.herm = Hermiticity::Hermitian;
        Ok(op)
    }

    /// |a><b| over a shared basis.
    pub fn outer(a: &Ket, b: &Ket) -> Result<Self> {
        require_same_basis(a.basis(), b.basis(), "outer product")?;
        let mat = a.amplitudes() * b.amplitudes().adjoint();
        Self::square(a.basis().clone(), mat)
    }

    /// Embed a spin-space matrix (rows/cols ordered m = +1, 0, -1) into a
    /// slice basis, acting identically on every path: entries connect
    /// `(p, k') -> (p, k)` and vanish between different paths. Labels whose
    /// spin is absent from the basis simply contribute nothing.
    pub fn from_spin_matrix(basis: Arc<Basis>, spin_mat: &DMatrix<Complex64>) -> Result<Self> {
        if spin_mat.nrows() != 3 || spin_mat.ncols() != 3 {
            return Err(Error::Dimension("spin matrix must be 3x3".into()));
        }
        let spin_idx = |s: i8| (1 - s) as usize; // +1 -> 0, 0 -> 1, -1 -> 2
        let mut op = Self::zero(basis);
        for (i, li) in op.domain.labels().iter().enumerate() {
            for (j, lj) in op.domain.labels().iter().enumerate() {
                if li.path != lj.path {
                    continue;
                }
                let (Some(si), Some(sj)) = (li.spin, lj.spin) else {
                    return Err(Error::Domain("spin operator on a spinless basis".into()));
                };
                op.mat[(i, j)] = spin_mat[(spin_idx(si), spin_idx(sj))];
            }
        }
        op.herm = Hermiticity::Unchecked;
        Ok(op)
    }

    /// Isometry defined by a list of `source -> target` label pairs.
    /// Every domain label must appear exactly once as a source, and targets
    /// must be distinct codomain labels.
    pub fn relabeling(
        domain: Arc<Basis>,
        codomain: Arc<Basis>,
        pairs: &[(BasisLabel, BasisLabel)],
    ) -> Result<Self> {
        if pairs.len() != domain.dim() {
            return Err(Error::Dimension(format!(
                "relabeling lists {} pairs for a {}-dimensional domain",
                pairs.len(),
                domain.dim()
            )));
        }
        let mut mat = DMatrix::zeros(codomain.dim(), domain.dim());
        let mut seen_src = vec![false; domain.dim()];
        let mut seen_dst = vec![false; codomain.dim()];
        for (src, dst) in pairs {
            let j = domain
                .index_of(src)
                .ok_or_else(|| Error::Dimension(format!("source label '{src}' not in domain")))?;
            let i = codomain
                .index_of(dst)
                .ok_or_else(|| Error::Dimension(format!("target label '{dst}' not in codomain")))?;
            if seen_src[j] || seen_dst[i] {
                return Err(Error::Dimension(format!(
                    "relabeling reuses '{src}' or '{dst}'"
                )));
            }
            seen_src[j] = true;
            seen_dst[i] = true;
            mat[(i, j)] = Complex64::new(1.0, 0.0);
        }
        Self::from_matrix(domain, codomain, mat)
    }

    pub fn domain(&self) -> &Arc<Basis> {
        &self.domain
    }

    pub fn codomain(&self) -> &Arc<Basis> {
        &self.codomain
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.mat
    }

    pub fn is_square(&self) -> bool {
        self.domain == self.codomain
    }

    pub fn hermiticity(&self) -> Hermiticity {
        self.herm
    }

    /// Largest entry modulus of `M - M^dagger`, or `None` for rectangular ops.
    pub fn hermiticity_defect(&self) -> Option<f64> {
        if !self.is_square() {
            return None;
        }
        let d = &self.mat - self.mat.adjoint();
        Some(d.iter().map(|z| z.norm()).fold(0.0, f64::max))
    }

    /// Check hermiticity numerically and cache the result.
    pub fn checked_hermitian(mut self) -> Result<Self> {
        match self.hermiticity_defect() {
            Some(d) if d <= tol::EXACT => {
                self.herm = Hermiticity::Hermitian;
                Ok(self)
            }
            Some(d) => {
                self.herm = Hermiticity::NonHermitian;
                Err(Error::Spectral(format!(
                    "operator is not hermitian (defect {d:.3e})"
                )))
            }
            None => Err(Error::Dimension(
                "hermiticity is only defined for square operators".into(),
            )),
        }
    }

    pub fn is_hermitian(&self) -> bool {
        match self.herm {
            Hermiticity::Hermitian => true,
            Hermiticity::NonHermitian => false,
            Hermiticity::Unchecked => {
                matches!(self.hermiticity_defect(), Some(d) if d <= tol::EXACT)
            }
        }
    }

    pub fn adjoint(&self) -> Self {
        Self {
            domain: self.codomain.clone(),
            codomain: self.domain.clone(),
            mat: self.mat.adjoint(),
            herm: self.herm,
        }
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self {
            domain: self.domain.clone(),
            codomain: self.codomain.clone(),
            mat: &self.mat * c,
            herm: if c.im.abs() <= f64::EPSILON && self.herm == Hermiticity::Hermitian {
                Hermiticity::Hermitian
            } else {
                Hermiticity::Unchecked
            },
        }
    }

    pub fn add(&self, other: &LinOp) -> Result<Self> {
        require_same_basis(&self.domain, &other.domain, "operator addition")?;
        require_same_basis(&self.codomain, &other.codomain, "operator addition")?;
        Ok(Self {
            domain: self.domain.clone(),
            codomain: self.codomain.clone(),
            mat: &self.mat + &other.mat,
            herm: Hermiticity::Unchecked,
        })
    }

    /// Composition `self . first` (apply `first`, then `self`).
    pub fn compose(&self, first: &LinOp) -> Result<Self> {
        require_same_basis(&self.domain, &first.codomain, "operator composition")?;
        Ok(Self {
            domain: first.domain.clone(),
            codomain: self.codomain.clone(),
            mat: &self.mat * &first.mat,
            herm: Hermiticity::Unchecked,
        })
    }

    /// Standard linear action on a ket.
    pub fn apply(&self, k: &Ket) -> Result<Ket> {
        require_same_basis(&self.domain, k.basis(), "operator application")?;
        Ok(Ket {
            basis: self.codomain.clone(),
            amp: &self.mat * k.amplitudes(),
        })
    }

    /// Largest deviation of `U^dagger U` from the identity on the domain.
    pub fn isometry_defect(&self) -> f64 {
        let utu = self.mat.adjoint() * &self.mat;
        let n = self.domain.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((utu[(i, j)] - Complex64::new(target, 0.0)).norm());
            }
        }
        worst
    }

    pub fn is_isometry(&self) -> bool {
        self.isometry_defect() <= tol::EXACT
    }

    pub fn max_abs(&self) -> f64 {
        self.mat.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Ordered interferometer stages with one basis per time slice.
///
/// Stage `i` maps slice `i` to slice `i + 1` and must be an isometry
/// (`U^dagger U = 1` on its domain within 1e-12).
#[derive(Clone, Debug)]
pub struct StageSequence {
    slice_bases: Vec<Arc<Basis>>,
    stages: Vec<LinOp>,
}

impl StageSequence {
    pub fn new(initial: Arc<Basis>) -> Self {
        Self {
            slice_bases: vec![initial],
            stages: Vec::new(),
        }
    }

    pub fn push_stage(&mut self, stage: LinOp) -> Result<()> {
        let last = self.slice_bases.last().unwrap();
        require_same_basis(stage.domain(), last, "stage registration")?;
        let defect = stage.isometry_defect();
        if defect > tol::EXACT {
            return Err(Error::Validation {
                key: format!("stage {}", self.stages.len()),
                reason: format!("not an isometry (U^dagger U deviates by {defect:.3e})"),
            });
        }
        self.slice_bases.push(stage.codomain().clone());
        self.stages.push(stage);
        Ok(())
    }

    pub fn n_slices(&self) -> usize {
        self.slice_bases.len()
    }

    pub fn n_stages(&self) -> usize {
        self.stages.len()
    }

    pub fn basis(&self, slice: usize) -> Result<&Arc<Basis>> {
        self.slice_bases.get(slice).ok_or(Error::SliceIndex {
            index: slice,
            len: self.slice_bases.len(),
        })
    }

    pub fn stage(&self, i: usize) -> Result<&LinOp> {
        self.stages.get(i).ok_or(Error::SliceIndex {
            index: i,
            len: self.stages.len(),
        })
    }

    pub fn stages(&self) -> &[LinOp] {
        &self.stages
    }

    fn check_slice(&self, slice: usize) -> Result<()> {
        if slice >= self.slice_bases.len() {
            return Err(Error::SliceIndex {
                index: slice,
                len: self.slice_bases.len(),
            });
        }
        Ok(())
    }

    /// Forward evolution from `from_slice` to `to_slice` (left-composition of
    /// the stage maps in order). `evolve(k, i, i)` returns `k` unchanged.
    pub fn evolve(&self, k: &Ket, from_slice: usize, to_slice: usize) -> Result<Ket> {
        self.check_slice(from_slice)?;
        self.check_slice(to_slice)?;
        if from_slice > to_slice {
            return Err(Error::Domain(format!(
                "evolve requires from_slice <= to_slice ({from_slice} > {to_slice})"
            )));
        }
        require_same_basis(k.basis(), &self.slice_bases[from_slice], "evolve input")?;
        let mut out = k.clone();
        for stage in &self.stages[from_slice..to_slice] {
            out = stage.apply(&out)?;
        }
        Ok(out)
    }

    /// Backward evolution with adjoint stage maps, from a later slice down to
    /// an earlier one. Used to drag a postselected ket to the coupling time.
    pub fn evolve_backward(&self, k: &Ket, from_slice: usize, to_slice: usize) -> Result<Ket> {
        self.check_slice(from_slice)?;
        self.check_slice(to_slice)?;
        if from_slice < to_slice {
            return Err(Error::Domain(format!(
                "backward evolution requires from_slice >= to_slice ({from_slice} < {to_slice})"
            )));
        }
        require_same_basis(k.basis(), &self.slice_bases[from_slice], "evolve input")?;
        let mut out = k.clone();
        for stage in self.stages[to_slice..from_slice].iter().rev() {
            out = stage.adjoint().apply(&out)?;
        }
        Ok(out)
    }

    /// Product of all stage matrices between two slices (forward order).
    pub fn composite(&self, from_slice: usize, to_slice: usize) -> Result<LinOp> {
        self.check_slice(from_slice)?;
        self.check_slice(to_slice)?;
        if from_slice > to_slice {
            return Err(Error::Domain("composite requires from <= to".into()));
        }
        let mut op = LinOp::identity(self.slice_bases[from_slice].clone());
        for stage in &self.stages[from_slice..to_slice] {
            op = stage.compose(&op)?;
        }
        Ok(op)
    }
}
