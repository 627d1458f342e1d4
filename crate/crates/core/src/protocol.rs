//! The weak-measurement engine.
//!
//! A weak value is the ratio of a transition amplitude to the selection
//! overlap: `A_w = <chi(t_w)|A|psi(t_w)> / <chi(t_w)|psi(t_w)>`, with the
//! preselected state evolved forward and the postselected state dragged
//! backward to the coupling slice. `run_coupled` instead performs the full
//! entangled evolution of system and Gaussian pointer, exactly at any
//! coupling strength: the observable is spectrally decomposed, each
//! eigenbranch translates the pointer by `g` times its eigenvalue, and the
//! postselected branch amplitudes weight the shifted Gaussians.
//!
//! A vanishing transition amplitude leaves the pointer in its initial state
//! at every coupling strength; the two routes agree in the weak limit.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hilbert::{Hermiticity, Ket, LinOp};
use crate::pointer::{couple, readout_shift, GaussianBase, PointerState};
use crate::scenario::Scenario;
use crate::tol;

/// A pointer weakly (or strongly) coupled to an observable at a time slice.
#[derive(Clone, Debug)]
pub struct Probe {
    pub slice: usize,
    pub observable: LinOp,
    pub pointer: GaussianBase,
    pub g: f64,
}

/// Evaluation mode for [`run_coupled`].
///
/// `Weak` and `Strong` gate the coupling strength against the pointer
/// spread (g <= 0.05 sigma, g >= 8 sigma); `Exact` accepts any g.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Weak,
    Strong,
    Exact,
}

/// How a result row was produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    /// Weak value from the transition-amplitude formula, no pointer.
    Analytic,
    /// Full coupled evolution at the given g.
    ExactCoupled,
    /// Full coupled evolution in the which-path regime.
    Strong,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Analytic => "analytic",
            Regime::ExactCoupled => "exact-coupled",
            Regime::Strong => "strong",
        }
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Outcome of one coupled run.
///
/// `weak_value` is `None` when pre- and postselection are orthogonal at the
/// coupling slice (the ratio is undefined there, although the coupled run
/// itself still reports exact numbers). `pointer_shift` is `None` when the
/// postselection probability vanishes including pointer corrections.
#[derive(Clone, Debug)]
pub struct WeakReport {
    pub weak_value: Option<Complex64>,
    pub postselect_prob: f64,
    pub pointer_shift: Option<f64>,
    pub initial_fidelity: Option<f64>,
    pub regime: Regime,
    /// The exact unnormalized post-measurement pointer state.
    pub pointer_state: PointerState,
}

/// Transition amplitude `<chi(slice)| A |psi(slice)>`.
///
/// Zero means the postselected state cannot be reached through the action
/// of `A` at that slice.
pub fn transition_amplitude(
    scenario: &Scenario,
    observable: &LinOp,
    slice: usize,
) -> Result<Complex64> {
    let psi = scenario.forward_state(slice)?;
    let chi = scenario.backward_state(slice)?;
    chi.inner(&observable.apply(&psi)?)
}

/// Weak value `A_w = <chi|A|psi> / <chi|psi>` at the given slice.
///
/// Invariant under rescaling of either selected ket. Errors with
/// [`Error::UndefinedWeakValue`] when the selection overlap vanishes.
pub fn weak_value(scenario: &Scenario, observable: &LinOp, slice: usize) -> Result<Complex64> {
    let psi = scenario.forward_state(slice)?;
    let chi = scenario.backward_state(slice)?;
    let denom = chi.inner(&psi)?;
    if denom.norm() <= tol::AMP_CUTOFF {
        return Err(Error::UndefinedWeakValue {
            overlap: denom.norm(),
        });
    }
    Ok(chi.inner(&observable.apply(&psi)?)? / denom)
}

/// `Pi_X A Pi_X`: the observable `A` confined to the region selected by the
/// projector, as seen by a pointer coupled only inside that region.
pub fn localized_observable(pi_x: &LinOp, observable: &LinOp) -> Result<LinOp> {
    if !pi_x.is_square() {
        return Err(Error::Projector("projector must be square".into()));
    }
    let idem = pi_x
        .compose(pi_x)?
        .add(&pi_x.scaled(Complex64::new(-1.0, 0.0)))?;
    let defect = idem.max_abs();
    if defect > tol::EXACT {
        return Err(Error::Projector(format!(
            "not idempotent (|P^2 - P| = {defect:.3e})"
        )));
    }
    pi_x.compose(observable)?.compose(pi_x)
}

/// Spectral branches of a Hermitian observable: eigenvalues (ascending,
/// merged when closer than the degeneracy tolerance) with the postselected
/// branch amplitudes `<chi|P_k|psi>`.
fn hermitian_branches(observable: &LinOp, chi: &Ket, psi: &Ket) -> Result<Vec<(f64, Complex64)>> {
    if !observable.is_square() {
        return Err(Error::Spectral("observable must be square".into()));
    }
    match observable.hermiticity() {
        Hermiticity::Hermitian => {}
        _ => {
            let defect = observable.hermiticity_defect().unwrap_or(f64::INFINITY);
            if defect > tol::EXACT {
                // A normal operator with real spectrum is Hermitian, so any
                // non-Hermitian observable would translate the pointer by a
                // complex amount; reject with a diagnostic.
                let m = observable.matrix();
                let comm = m * m.adjoint() - m.adjoint() * m;
                let normality: f64 = comm.iter().map(|z| z.norm()).fold(0.0, f64::max);
                let kind = if normality <= tol::EXACT {
                    "normal but not hermitian (complex spectrum)"
                } else {
                    "not normal"
                };
                return Err(Error::Spectral(format!(
                    "pointer coupling needs a hermitian observable; this one is {kind} \
                     (hermiticity defect {defect:.3e})"
                )));
            }
        }
    }
    // Work on the exactly Hermitian part so the eigensolver sees a clean input.
    let sym = (observable.matrix() + observable.matrix().adjoint()).scale(0.5);
    let eig = sym.symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let mut branches: Vec<(f64, Complex64)> = Vec::new();
    for &i in &order {
        let v = eig.eigenvectors.column(i);
        // <chi|v><v|psi>
        let chi_v = chi.amplitudes().dotc(&v.clone_owned());
        let v_psi = v.clone_owned().dotc(psi.amplitudes());
        let amp = chi_v * v_psi;
        let lambda = eig.eigenvalues[i];
        match branches.last_mut() {
            Some((l, a)) if (lambda - *l).abs() <= tol::DEGENERACY => *a += amp,
            _ => branches.push((lambda, amp)),
        }
    }
    Ok(branches)
}

/// Full pointer-coupled evolution with postselection.
///
/// Builds the exact post-measurement pointer state from the spectral
/// decomposition of the observable, reports the postselection probability
/// (the squared norm of the unnormalized pointer state), the pointer
/// readout, and the fidelity with the initial pointer. Orthogonal
/// postselection is not an error here: the exact numbers are reported and
/// only the weak value is left undefined.
pub fn run_coupled(scenario: &Scenario, probe: &Probe, mode: Mode) -> Result<WeakReport> {
    let sigma = probe.pointer.sigma();
    let g_abs = probe.g.abs();
    match mode {
        Mode::Weak if g_abs > tol::WEAK_G_MAX * sigma => {
            return Err(Error::Regime {
                mode: "weak",
                g: probe.g,
                sigma,
            })
        }
        Mode::Strong if g_abs < tol::STRONG_G_MIN * sigma => {
            return Err(Error::Regime {
                mode: "strong",
                g: probe.g,
                sigma,
            })
        }
        _ => {}
    }

    let psi = scenario.forward_state(probe.slice)?;
    let chi = scenario.backward_state(probe.slice)?;
    if probe.observable.domain() != psi.basis() {
        return Err(Error::Dimension(
            "probe observable does not live on its slice basis".into(),
        ));
    }
    let branches = hermitian_branches(&probe.observable, &chi, &psi)?;
    let eigen_pairs: Vec<(Complex64, f64)> = branches
        .iter()
        .map(|&(lambda, amp)| (amp, lambda))
        .collect();
    let pointer = couple(probe.pointer, &eigen_pairs, probe.g)?;
    let prob = pointer.norm_sqr().min(1.0 + tol::EXACT);
    let defined = prob > tol::NORM_SQR_CUTOFF;

    let pointer_shift = if defined && probe.g != 0.0 {
        Some(readout_shift(&pointer, probe.g)?)
    } else {
        None
    };
    let initial_fidelity = if defined {
        Some(pointer.initial_fidelity()?)
    } else {
        None
    };
    let weak_value = match weak_value(scenario, &probe.observable, probe.slice) {
        Ok(wv) => Some(wv),
        Err(Error::UndefinedWeakValue { .. }) => None,
        Err(e) => return Err(e),
    };

    let regime = match mode {
        Mode::Strong => Regime::Strong,
        _ => Regime::ExactCoupled,
    };
    Ok(WeakReport {
        weak_value,
        postselect_prob: prob,
        pointer_shift,
        initial_fidelity,
        regime,
        pointer_state: pointer,
    })
}

/// Expectation value of `A` in `psi` decomposed over postselection outcomes:
/// the weighted sum of weak values, one per outcome of a projective
/// measurement in the given orthonormal complete basis, with weights
/// `|<chi_f|psi>|^2`. Outcomes orthogonal to `psi` carry weight zero and are
/// skipped. The sum equals `<psi|A|psi>` and its imaginary part vanishes.
pub fn expectation_decomposition(
    psi: &Ket,
    observable: &LinOp,
    postselection_basis: &[Ket],
) -> Result<(Complex64, Vec<(f64, Complex64)>)> {
    let n = psi.dim();
    if postselection_basis.len() != n {
        return Err(Error::Basis(format!(
            "{} outcomes for a {n}-dimensional space",
            postselection_basis.len()
        )));
    }
    // Orthonormality and completeness: sum |chi_f><chi_f| = 1.
    let mut gram_defect: f64 = 0.0;
    for (i, a) in postselection_basis.iter().enumerate() {
        for (j, b) in postselection_basis.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            gram_defect = gram_defect.max((a.inner(b)? - Complex64::new(target, 0.0)).norm());
        }
    }
    if gram_defect > tol::SOLVER {
        return Err(Error::Basis(format!(
            "not orthonormal/complete (Gram defect {gram_defect:.3e})"
        )));
    }

    let a_psi = observable.apply(psi)?;
    let mut sum = Complex64::new(0.0, 0.0);
    let mut terms = Vec::new();
    for chi in postselection_basis {
        let overlap = chi.inner(psi)?;
        if overlap.norm() <= tol::AMP_CUTOFF {
            continue;
        }
        let prob = overlap.norm_sqr();
        let wv = chi.inner(&a_psi)? / overlap;
        sum += prob * wv;
        terms.push((prob, wv));
    }
    Ok((sum, terms))
}

/// Spin-1 operators in the basis ordered m = +1, 0, -1 (hbar = 1).
pub mod spin1 {
    use super::*;
    use crate::setups::wigner::wigner_d1;

    /// Spin component along an axis tilted by `angle` from the quantization
    /// axis (rotation about y): `R(angle) J_z R(angle)^T`.
    pub fn along(angle: f64) -> DMatrix<Complex64> {
        let d = wigner_d1(angle);
        let r = DMatrix::from_fn(3, 3, |i, j| Complex64::new(d.matrix()[(i, j)], 0.0));
        &r * jz() * r.transpose()
    }

    pub fn jz() -> DMatrix<Complex64> {
        DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(-1.0, 0.0),
        ]))
    }

    pub fn jx() -> DMatrix<Complex64> {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        DMatrix::from_row_slice(
            3,
            3,
            &[
                Complex64::new(0.0, 0.0),
                Complex64::new(s, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(s, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(s, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(s, 0.0),
                Complex64::new(0.0, 0.0),
            ],
        )
    }

    pub fn jy() -> DMatrix<Complex64> {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        DMatrix::from_row_slice(
            3,
            3,
            &[
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, -s),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, s),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, -s),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, s),
                Complex64::new(0.0, 0.0),
            ],
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{Basis, BasisLabel, StageSequence};
    use crate::scenario::NamedProbe;
    use approx::assert_abs_diff_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    use std::sync::Arc;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_unitary(rng: &mut StdRng, n: usize) -> DMatrix<Complex64> {
        let raw = DMatrix::from_fn(n, n, |_, _| {
            c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        raw.qr().q()
    }

    fn random_hermitian(rng: &mut StdRng, n: usize) -> DMatrix<Complex64> {
        let raw = DMatrix::from_fn(n, n, |_, _| {
            c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        (&raw + raw.adjoint()).scale(0.5)
    }

    fn random_ket(rng: &mut StdRng, basis: &Arc<Basis>) -> Ket {
        let amp: Vec<Complex64> = (0..basis.dim())
            .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        Ket::from_amplitudes(basis.clone(), amp)
            .unwrap()
            .normalized()
            .unwrap()
    }

    /// Random three-slice scenario on a fixed 4-path basis with unitary stages.
    fn random_scenario(rng: &mut StdRng) -> Scenario {
        let b = Basis::spatial(&["p0", "p1", "p2", "p3"]).unwrap();
        let mut seq = StageSequence::new(b.clone());
        for _ in 0..2 {
            let u = LinOp::square(b.clone(), random_unitary(rng, 4)).unwrap();
            seq.push_stage(u).unwrap();
        }
        let pre = random_ket(rng, &b);
        let post = random_ket(rng, &b);
        Scenario::new("random", seq, pre, post, vec![]).unwrap()
    }

    #[test]
    fn zero_observable_has_zero_transition_amplitude() {
        let mut rng = StdRng::seed_from_u64(41);
        let scn = random_scenario(&mut rng);
        let zero = LinOp::zero(scn.sequence().basis(1).unwrap().clone());
        let ta = transition_amplitude(&scn, &zero, 1).unwrap();
        assert_eq!(ta, c(0.0, 0.0));
    }

    #[test]
    fn transition_amplitude_matches_matrix_chain_oracle() {
        // Oracle: <chi_f| U(t_f, t_w) A U(t_w, t_i) |psi_i> by explicit
        // composite-matrix products, never using backward evolution.
        let mut rng = StdRng::seed_from_u64(43);
        for _ in 0..20 {
            let scn = random_scenario(&mut rng);
            let a = LinOp::square(
                scn.sequence().basis(1).unwrap().clone(),
                random_hermitian(&mut rng, 4),
            )
            .unwrap();
            let ta = transition_amplitude(&scn, &a, 1).unwrap();

            let early = scn.sequence().composite(0, 1).unwrap();
            let late = scn.sequence().composite(1, 2).unwrap();
            let chain = late.compose(&a.compose(&early).unwrap()).unwrap();
            let oracle = scn
                .postselect()
                .inner(&chain.apply(scn.preselect()).unwrap())
                .unwrap();
            assert!((ta - oracle).norm() <= tol::EXACT);
        }
    }

    #[test]
    fn identity_weak_value_is_one() {
        let mut rng = StdRng::seed_from_u64(47);
        let scn = random_scenario(&mut rng);
        let id = LinOp::identity(scn.sequence().basis(1).unwrap().clone());
        let wv = weak_value(&scn, &id, 1).unwrap();
        assert!((wv - c(1.0, 0.0)).norm() <= tol::EXACT);
    }

    #[test]
    fn weak_value_is_linear() {
        let mut rng = StdRng::seed_from_u64(53);
        for _ in 0..100 {
            let scn = random_scenario(&mut rng);
            let basis = scn.sequence().basis(1).unwrap().clone();
            let a = LinOp::square(basis.clone(), random_hermitian(&mut rng, 4)).unwrap();
            let b = LinOp::square(basis, random_hermitian(&mut rng, 4)).unwrap();
            let alpha = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let beta = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let combo = a.scaled(alpha).add(&b.scaled(beta)).unwrap();
            let lhs = weak_value(&scn, &combo, 1).unwrap();
            let rhs =
                alpha * weak_value(&scn, &a, 1).unwrap() + beta * weak_value(&scn, &b, 1).unwrap();
            assert!((lhs - rhs).norm() <= tol::EXACT * 10.0);
        }
    }

    #[test]
    fn weak_value_is_gauge_invariant() {
        // Rescaling pre- or postselected kets by any nonzero complex number
        // leaves every weak value unchanged.
        let mut rng = StdRng::seed_from_u64(59);
        for _ in 0..100 {
            let b = Basis::spatial(&["p0", "p1", "p2", "p3"]).unwrap();
            let mut seq = StageSequence::new(b.clone());
            seq.push_stage(LinOp::square(b.clone(), random_unitary(&mut rng, 4)).unwrap())
                .unwrap();
            seq.push_stage(LinOp::square(b.clone(), random_unitary(&mut rng, 4)).unwrap())
                .unwrap();
            let pre = random_ket(&mut rng, &b);
            let post = random_ket(&mut rng, &b);
            let a = LinOp::square(b.clone(), random_hermitian(&mut rng, 4)).unwrap();

            let scale_pre = c(rng.gen_range(0.1..2.0), rng.gen_range(-1.0..1.0));
            let scale_post = c(rng.gen_range(0.1..2.0), rng.gen_range(-1.0..1.0));
            let scn1 = Scenario::new("a", seq.clone(), pre.clone(), post.clone(), vec![]).unwrap();
            let scn2 = Scenario::new(
                "b",
                seq,
                pre.scaled(scale_pre),
                post.scaled(scale_post),
                vec![],
            )
            .unwrap();
            let w1 = weak_value(&scn1, &a, 1).unwrap();
            let w2 = weak_value(&scn2, &a, 1).unwrap();
            assert!((w1 - w2).norm() <= tol::EXACT * 10.0);
        }
    }

    #[test]
    fn orthogonal_postselection_is_undefined() {
        let b = Basis::spatial(&["p0", "p1"]).unwrap();
        let seq = StageSequence::new(b.clone());
        let pre = Ket::basis_state(b.clone(), &BasisLabel::path("p0")).unwrap();
        let post = Ket::basis_state(b.clone(), &BasisLabel::path("p1")).unwrap();
        let scn = Scenario::new("orth", seq, pre, post, vec![]).unwrap();
        let id = LinOp::identity(b);
        assert!(matches!(
            weak_value(&scn, &id, 0),
            Err(Error::UndefinedWeakValue { .. })
        ));
    }

    #[test]
    fn projector_completeness_sum_rule() {
        // Path projectors resolving the identity have weak values summing to 1.
        let mut rng = StdRng::seed_from_u64(61);
        for _ in 0..100 {
            let scn = random_scenario(&mut rng);
            let mut total = c(0.0, 0.0);
            for path in ["p0", "p1", "p2", "p3"] {
                let p = scn.path_projector(1, path).unwrap();
                total += weak_value(&scn, &p, 1).unwrap();
            }
            assert!((total - c(1.0, 0.0)).norm() <= tol::EXACT * 100.0);
        }
    }

    #[test]
    fn run_coupled_rejects_non_hermitian() {
        let mut rng = StdRng::seed_from_u64(67);
        let scn = random_scenario(&mut rng);
        let basis = scn.sequence().basis(1).unwrap().clone();
        let n = basis.dim();
        let raw = DMatrix::from_fn(n, n, |_, _| {
            c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let probe = Probe {
            slice: 1,
            observable: LinOp::square(basis, raw).unwrap(),
            pointer: GaussianBase::new(1.0).unwrap(),
            g: 0.01,
        };
        assert!(matches!(
            run_coupled(&scn, &probe, Mode::Exact),
            Err(Error::Spectral(_))
        ));
    }

    #[test]
    fn run_coupled_mode_gates_coupling_strength() {
        let mut rng = StdRng::seed_from_u64(71);
        let scn = random_scenario(&mut rng);
        let basis = scn.sequence().basis(1).unwrap().clone();
        let probe = |g: f64| Probe {
            slice: 1,
            observable: LinOp::identity(basis.clone()),
            pointer: GaussianBase::new(1.0).unwrap(),
            g,
        };
        assert!(matches!(
            run_coupled(&scn, &probe(0.5), Mode::Weak),
            Err(Error::Regime { .. })
        ));
        assert!(matches!(
            run_coupled(&scn, &probe(0.5), Mode::Strong),
            Err(Error::Regime { .. })
        ));
        assert!(run_coupled(&scn, &probe(0.5), Mode::Exact).is_ok());
        assert!(run_coupled(&scn, &probe(0.01), Mode::Weak).is_ok());
        assert!(run_coupled(&scn, &probe(9.0), Mode::Strong).is_ok());
    }

    #[test]
    fn coupled_shift_tracks_weak_value_at_small_g() {
        let mut rng = StdRng::seed_from_u64(73);
        for _ in 0..25 {
            let scn = random_scenario(&mut rng);
            let basis = scn.sequence().basis(1).unwrap().clone();
            let a = LinOp::square(basis, random_hermitian(&mut rng, 4))
                .unwrap()
                .checked_hermitian()
                .unwrap();
            let wv = match weak_value(&scn, &a, 1) {
                Ok(w) if w.norm() < 20.0 => w,
                _ => continue, // skip nearly-orthogonal selections
            };
            let sigma = 1.0;
            let g = 0.01 * sigma;
            let probe = Probe {
                slice: 1,
                observable: a,
                pointer: GaussianBase::new(sigma).unwrap(),
                g,
            };
            let report = run_coupled(&scn, &probe, Mode::Exact).unwrap();
            let shift = report.pointer_shift.unwrap();
            let bound = 0.05 * (1.0 + wv.norm_sqr()) * g / sigma;
            assert!(
                (shift / g - wv.re).abs() <= bound,
                "shift/g = {}, Re wv = {}, bound = {}",
                shift / g,
                wv.re,
                bound
            );
        }
    }

    #[test]
    fn null_transition_amplitude_leaves_pointer_untouched_at_any_g() {
        // Probe the projector onto a direction orthogonal to the preselected
        // state: its branch amplitude vanishes while the selection overlap
        // stays finite, so the pointer never moves, at any coupling.
        let b = Basis::spatial(&["p0", "p1"]).unwrap();
        let seq = StageSequence::new(b.clone());
        let pre = Ket::from_amplitudes(b.clone(), vec![c(0.6, 0.0), c(0.8, 0.0)]).unwrap();
        let perp = Ket::from_amplitudes(b.clone(), vec![c(0.8, 0.0), c(-0.6, 0.0)]).unwrap();
        let post = Ket::basis_state(b.clone(), &BasisLabel::path("p0")).unwrap();
        let proj = LinOp::outer(&perp, &perp).unwrap();
        let scn = Scenario::new("null", seq, pre, post, vec![]).unwrap();
        assert!(transition_amplitude(&scn, &proj, 0).unwrap().norm() <= tol::EXACT);
        assert!(scn.selection_overlap(0).unwrap().norm() > 0.5);
        for g in [0.01, 0.5, 2.0, 10.0, 50.0] {
            let probe = Probe {
                slice: 0,
                observable: proj.clone(),
                pointer: GaussianBase::new(1.0).unwrap(),
                g,
            };
            let report = run_coupled(&scn, &probe, Mode::Exact).unwrap();
            assert!((report.initial_fidelity.unwrap() - 1.0).abs() <= tol::EXACT);
            assert!(report.pointer_shift.unwrap().abs() <= tol::EXACT);
        }
    }

    #[test]
    fn degenerate_eigenvalues_merge_into_one_branch() {
        // Identity observable: every eigenvalue is 1; the pointer must see a
        // single branch regardless of eigenvector basis.
        let mut rng = StdRng::seed_from_u64(79);
        let scn = random_scenario(&mut rng);
        let basis = scn.sequence().basis(1).unwrap().clone();
        let probe = Probe {
            slice: 1,
            observable: LinOp::identity(basis),
            pointer: GaussianBase::new(1.0).unwrap(),
            g: 5.0,
        };
        let report = run_coupled(&scn, &probe, Mode::Exact).unwrap();
        assert_abs_diff_eq!(report.pointer_shift.unwrap(), 5.0, epsilon = tol::EXACT);
        assert!((report.weak_value.unwrap() - c(1.0, 0.0)).norm() <= tol::EXACT);
    }

    #[test]
    fn expectation_decomposition_identity() {
        let mut rng = StdRng::seed_from_u64(83);
        let b = Basis::spatial(&["p0", "p1", "p2"]).unwrap();
        let psi = random_ket(&mut rng, &b);
        let basis_kets: Vec<Ket> = (0..3)
            .map(|i| Ket::basis_state(b.clone(), b.label(i)).unwrap())
            .collect();
        let id = LinOp::identity(b.clone());
        let (sum, terms) = expectation_decomposition(&psi, &id, &basis_kets).unwrap();
        assert!((sum - c(1.0, 0.0)).norm() <= tol::EXACT * 10.0);
        for (_, wv) in terms {
            assert!((wv - c(1.0, 0.0)).norm() <= tol::EXACT * 10.0);
        }
    }

    #[test]
    fn expectation_decomposition_jz_null_eigenstate() {
        let b = Basis::product(&["x"], &[1, 0, -1]).unwrap();
        let psi = Ket::basis_state(b.clone(), &BasisLabel::with_spin("x", 0).unwrap()).unwrap();
        let jz = LinOp::from_spin_matrix(b.clone(), &spin1::jz()).unwrap();
        let basis_kets: Vec<Ket> = (0..3)
            .map(|i| Ket::basis_state(b.clone(), b.label(i)).unwrap())
            .collect();
        let (sum, _) = expectation_decomposition(&psi, &jz, &basis_kets).unwrap();
        assert!(sum.norm() <= tol::EXACT);
    }

    #[test]
    fn expectation_decomposition_matches_eigen_oracle() {
        // Oracle: the textbook eigen-route sum over |<a_f|psi>|^2 a_f.
        let mut rng = StdRng::seed_from_u64(89);
        for trial in 0..100 {
            let dim = 2 + trial % 5; // dimensions 2..=6
            let paths: Vec<String> = (0..dim).map(|i| format!("p{i}")).collect();
            let b = Basis::spatial(&paths).unwrap();
            let psi = random_ket(&mut rng, &b);
            let h = random_hermitian(&mut rng, dim);
            let a = LinOp::square(b.clone(), h.clone()).unwrap();
            let u = random_unitary(&mut rng, dim);
            let basis_kets: Vec<Ket> = (0..dim)
                .map(|i| {
                    Ket::from_amplitudes(b.clone(), u.column(i).iter().copied().collect()).unwrap()
                })
                .collect();
            let (sum, _) = expectation_decomposition(&psi, &a, &basis_kets).unwrap();

            let eig = h.clone().symmetric_eigen();
            let mut oracle = 0.0;
            for i in 0..dim {
                let v = eig.eigenvectors.column(i).clone_owned();
                let ov = v.dotc(psi.amplitudes());
                oracle += ov.norm_sqr() * eig.eigenvalues[i];
            }
            assert!((sum.re - oracle).abs() <= 1e-10, "trial {trial}");
            assert!(sum.im.abs() <= 1e-10, "trial {trial}");
        }
    }

    #[test]
    fn expectation_decomposition_rejects_incomplete_basis() {
        let b = Basis::spatial(&["p0", "p1", "p2"]).unwrap();
        let psi = Ket::basis_state(b.clone(), &BasisLabel::path("p0")).unwrap();
        let id = LinOp::identity(b.clone());
        let two = vec![
            Ket::basis_state(b.clone(), b.label(0)).unwrap(),
            Ket::basis_state(b.clone(), b.label(1)).unwrap(),
        ];
        assert!(matches!(
            expectation_decomposition(&psi, &id, &two),
            Err(Error::Basis(_))
        ));
        // Right count but a repeated vector: not complete either.
        let repeated = vec![
            Ket::basis_state(b.clone(), b.label(0)).unwrap(),
            Ket::basis_state(b.clone(), b.label(1)).unwrap(),
            Ket::basis_state(b.clone(), b.label(1)).unwrap(),
        ];
        assert!(matches!(
            expectation_decomposition(&psi, &id, &repeated),
            Err(Error::Basis(_))
        ));
    }

    #[test]
    fn localized_observable_with_identity_returns_projector() {
        let b = Basis::spatial(&["p0", "p1", "p2"]).unwrap();
        let pi = LinOp::projector(b.clone(), &[BasisLabel::path("p0")]).unwrap();
        let a = LinOp::identity(b);
        let loc = localized_observable(&pi, &a).unwrap();
        let diff = loc.add(&pi.scaled(c(-1.0, 0.0))).unwrap();
        assert!(diff.max_abs() <= tol::EXACT);
    }

    #[test]
    fn localized_observable_commuting_case() {
        // [A, Pi] = 0 implies Pi A Pi = Pi A.
        let b = Basis::spatial(&["p0", "p1", "p2"]).unwrap();
        let pi =
            LinOp::projector(b.clone(), &[BasisLabel::path("p0"), BasisLabel::path("p1")]).unwrap();
        let diag = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            c(2.0, 0.0),
            c(-1.0, 0.0),
            c(0.5, 0.0),
        ]));
        let a = LinOp::square(b, diag).unwrap();
        let lhs = localized_observable(&pi, &a).unwrap();
        let rhs = pi.compose(&a).unwrap();
        let diff = lhs.add(&rhs.scaled(c(-1.0, 0.0))).unwrap();
        assert!(diff.max_abs() <= tol::EXACT);
    }

    #[test]
    fn localized_observable_rejects_non_idempotent() {
        let b = Basis::spatial(&["p0", "p1"]).unwrap();
        let not_proj = LinOp::square(
            b.clone(),
            DMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]),
        )
        .unwrap();
        let a = LinOp::identity(b);
        assert!(matches!(
            localized_observable(&not_proj, &a),
            Err(Error::Projector(_))
        ));
    }

    #[test]
    fn probe_placement_validation() {
        let b = Basis::spatial(&["p0", "p1"]).unwrap();
        let seq = StageSequence::new(b.clone());
        let pre = Ket::basis_state(b.clone(), &BasisLabel::path("p0")).unwrap();
        let post = pre.clone();
        let bad = NamedProbe {
            label: "t9".into(),
            probe: Probe {
                slice: 9,
                observable: LinOp::identity(b.clone()),
                pointer: GaussianBase::new(1.0).unwrap(),
                g: 0.01,
            },
        };
        assert!(matches!(
            Scenario::new("bad", seq, pre, post, vec![bad]),
            Err(Error::Validation { .. })
        ));
    }
}
