//! Closed-form algebra of shifted Gaussian pointer states.
//!
//! The pointer starts in a normalized Gaussian of position spread `sigma`.
//! Coupling an observable to the pointer momentum translates each
//! eigenbranch, so the post-measurement pointer is a superposition of
//! position-shifted copies of one base Gaussian. Every norm, overlap and
//! first moment of such a state has a closed form; no grid or quadrature
//! appears outside of test oracles.
//!
//! Convention: a term `(c, s)` means `c * G(x + s)`, whose probability
//! density is centered at `-s`. The readout reports the negated mean so
//! that a branch shifted by `g * a` reads out as `+g * a`, and in the weak
//! limit the readout divided by `g` converges to the real part of the weak
//! value with a positive sign.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tol;

/// Normalized base Gaussian, parametrized by its position spread (the
/// standard deviation of `|G|^2`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianBase {
    sigma: f64,
}

impl GaussianBase {
    pub fn new(sigma: f64) -> Result<Self> {
        if !sigma.is_finite() || sigma <= 0.0 {
            return Err(Error::Domain(format!(
                "pointer spread must be positive and finite, got {sigma}"
            )));
        }
        Ok(Self { sigma })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Amplitude overlap `<G(.+a)|G(.+b)> = exp(-(a-b)^2 / (8 sigma^2))`.
    ///
    /// Symmetric in its arguments, equal to 1 at `a == b`, and strictly
    /// decreasing in `|a - b|`.
    pub fn overlap(&self, shift_a: f64, shift_b: f64) -> f64 {
        let d = shift_a - shift_b;
        (-d * d / (8.0 * self.sigma * self.sigma)).exp()
    }

    /// Value of the normalized amplitude `G(x)` (used by test oracles).
    pub fn amplitude(&self, x: f64) -> f64 {
        let s2 = self.sigma * self.sigma;
        (2.0 * std::f64::consts::PI * s2).powf(-0.25) * (-x * x / (4.0 * s2)).exp()
    }
}

/// Superposition of position-shifted copies of one base Gaussian.
#[derive(Clone, Debug)]
pub struct PointerState {
    base: GaussianBase,
    terms: Vec<(Complex64, f64)>,
}

impl PointerState {
    pub fn new(base: GaussianBase, terms: Vec<(Complex64, f64)>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::Domain(
                "pointer state needs at least one term".into(),
            ));
        }
        if terms.iter().any(|(c, s)| !c.is_finite() || !s.is_finite()) {
            return Err(Error::Domain("pointer term is not finite".into()));
        }
        Ok(Self { base, terms })
    }

    pub fn base(&self) -> GaussianBase {
        self.base
    }

    pub fn terms(&self) -> &[(Complex64, f64)] {
        &self.terms
    }

    /// Squared norm via the Gaussian overlap kernel. The kernel is positive
    /// semidefinite, so the result is clamped at zero against rounding.
    pub fn norm_sqr(&self) -> f64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (ci, si) in &self.terms {
            for (cj, sj) in &self.terms {
                acc += ci.conj() * cj * self.base.overlap(*si, *sj);
            }
        }
        debug_assert!(acc.im.abs() <= tol::EXACT * (1.0 + acc.re.abs()));
        acc.re.max(0.0)
    }

    /// Mean position of the normalized state.
    ///
    /// For the single term `c * G(x + s)` this is `-s` (the density of
    /// `G(x + s)` is centered at `-s`).
    pub fn mean_position(&self) -> Result<f64> {
        let n2 = self.norm_sqr();
        if n2 <= tol::NORM_SQR_CUTOFF {
            return Err(Error::ZeroNorm);
        }
        let mut first = Complex64::new(0.0, 0.0);
        for (ci, si) in &self.terms {
            for (cj, sj) in &self.terms {
                // Integral of x * G(x + si) G(x + sj) over x is
                // -(si + sj)/2 times the pair overlap.
                first += ci.conj() * cj * (-(si + sj) / 2.0) * self.base.overlap(*si, *sj);
            }
        }
        Ok(first.re / n2)
    }

    /// Amplitude overlap with the unshifted initial Gaussian, squared and
    /// normalized: 1 exactly when the state is the initial pointer up to a
    /// phase.
    pub fn initial_fidelity(&self) -> Result<f64> {
        let n2 = self.norm_sqr();
        if n2 <= tol::NORM_SQR_CUTOFF {
            return Err(Error::ZeroNorm);
        }
        let mut ip = Complex64::new(0.0, 0.0);
        for (c, s) in &self.terms {
            ip += c * self.base.overlap(0.0, *s);
        }
        Ok(ip.norm_sqr() / n2)
    }
}

/// Exact pointer state after coupling: each eigenbranch `(amplitude, a)`
/// contributes `amplitude * G(x + g * a)`. No weak-coupling approximation;
/// branches whose shifts coincide are merged into a single term.
pub fn couple(
    base: GaussianBase,
    eigen_pairs: &[(Complex64, f64)],
    g: f64,
) -> Result<PointerState> {
    if eigen_pairs.is_empty() {
        return Err(Error::Domain(
            "coupling needs at least one eigenbranch".into(),
        ));
    }
    let merge_tol = tol::EXACT * base.sigma();
    let mut terms: Vec<(Complex64, f64)> = Vec::with_capacity(eigen_pairs.len());
    for (amp, a) in eigen_pairs {
        let shift = g * a;
        match terms
            .iter_mut()
            .find(|(_, s)| (*s - shift).abs() <= merge_tol)
        {
            Some((c, _)) => *c += amp,
            None => terms.push((*amp, shift)),
        }
    }
    PointerState::new(base, terms)
}

/// Pointer readout: the reported translation of the pointer, positive for a
/// branch at shift `+g`. As `g -> 0` with branch amplitudes from a weak
/// measurement, `readout_shift / g` converges to the real part of the weak
/// value with error `O(g)`.
pub fn readout_shift(state: &PointerState, g: f64) -> Result<f64> {
    if g == 0.0 {
        return Err(Error::Domain(
            "readout requires a nonzero coupling g".into(),
        ));
    }
    Ok(-state.mean_position()?)
}
