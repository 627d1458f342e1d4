//! Spin-1 reduced rotation matrices and the postselection-angle solvers for
//! the 3-path interferometer.
//!
//! Conventions (fixed for reproducibility):
//! - rotations act about the y-axis, `R(beta) = exp(-i beta J_y)`;
//! - `d1(beta)` is the real 3x3 matrix of `R(beta)` in the `m = +1, 0, -1`
//!   basis (rows and columns in that order);
//! - the splitting axis at angle `alpha` defines spin states
//!   `|m_alpha = k> = R(alpha) |m_z = k>`, so the amplitudes of the incoming
//!   `|m_z = 0>` state along the three arms are `d_k(alpha) = d1(-alpha)[k, 0]`;
//! - the postselected spin state is `|m_phi = +1>`, whose amplitudes in the
//!   `m_alpha` basis are the `m' = +1` column of `d1(phi - alpha)`.

use nalgebra::Matrix3;

use crate::error::{Error, Result};
use crate::tol;

/// Reduced spin-1 rotation matrix `d1(beta)`, orthogonal with
/// `d1(0) = identity` and the group law `d1(a) d1(b) = d1(a + b)`.
#[derive(Clone, Debug)]
pub struct WignerD1 {
    beta: f64,
    m: Matrix3<f64>,
}

impl WignerD1 {
    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.m
    }

    /// Matrix element `d1_{m, m'}(beta)` for projections in {-1, 0, +1}.
    pub fn element(&self, m: i8, mp: i8) -> f64 {
        self.m[(spin_index(m), spin_index(mp))]
    }
}

/// Row/column position of a spin projection: +1 -> 0, 0 -> 1, -1 -> 2.
pub fn spin_index(m: i8) -> usize {
    (1 - m) as usize
}

/// Build `d1(beta)` in closed form.
pub fn wigner_d1(beta: f64) -> WignerD1 {
    let (s, c) = beta.sin_cos();
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let m = Matrix3::new(
        (1.0 + c) / 2.0,
        -s * r,
        (1.0 - c) / 2.0,
        s * r,
        c,
        -s * r,
        (1.0 - c) / 2.0,
        s * r,
        (1.0 + c) / 2.0,
    );
    WignerD1 { beta, m }
}

/// Arm amplitudes `d_k(alpha) = <m_alpha = k | m_z = 0>` for k = +1, 0, -1.
pub fn splitting_coefficients(alpha: f64) -> [f64; 3] {
    let d = wigner_d1(-alpha);
    [d.element(1, 0), d.element(0, 0), d.element(-1, 0)]
}

/// Postselected-state amplitudes `<m_alpha = k | m_phi = +1>` for k = +1, 0, -1.
pub fn postselect_overlaps(alpha: f64, phi: f64) -> [f64; 3] {
    let d = wigner_d1(phi - alpha);
    [d.element(1, 1), d.element(0, 1), d.element(-1, 1)]
}

/// The two summands of the postselection orthogonality condition: the k = 0
/// and k = -1 contributions to the transition amplitude into the merged
/// lower path.
fn condition_terms(alpha: f64, phi: f64) -> (f64, f64) {
    let d = splitting_coefficients(alpha);
    let f = postselect_overlaps(alpha, phi);
    (d[1] * f[1], d[2] * f[2])
}

/// Residual of the orthogonality condition: the merged lower path is
/// unreachable from the postselected state when this vanishes.
pub fn postselection_condition(alpha: f64, phi: f64) -> f64 {
    let (u, v) = condition_terms(alpha, phi);
    u + v
}

/// Residual of the extra condition that makes the upper-arm weak values hit
/// exactly +1 and -1: equal transition weight through the k = 0 arm and the
/// k = +1 arm.
pub fn unit_value_condition(alpha: f64, phi: f64) -> f64 {
    let d = splitting_coefficients(alpha);
    let f = postselect_overlaps(alpha, phi);
    d[1] * f[1] - d[0] * f[0]
}

const SCAN_POINTS: usize = 720;
const BISECT_ITERS: usize = 200;

/// Deterministic bisection on a bracketing interval.
fn bisect<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo);
    for _ in 0..BISECT_ITERS {
        let mid = 0.5 * (lo + hi);
        let fmid = f(mid);
        if fmid == 0.0 {
            return mid;
        }
        if (flo < 0.0) == (fmid < 0.0) {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
        if (hi - lo) <= f64::EPSILON * lo.abs().max(hi.abs()).max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Smallest postselection angle `phi` in (0, 2 pi) at which the merged lower
/// path becomes unreachable from the postselected state.
///
/// The scan walks a fixed 720-point grid and refines every sign change by
/// bisection, so the result is deterministic. Roots where both condition
/// terms vanish individually are skipped: there the postselection axis
/// coincides with the splitting axis and the condition holds vacuously,
/// with no interference between the lower arms at all.
pub fn solve_postselection(alpha: f64) -> Result<f64> {
    if !alpha.is_finite() {
        return Err(Error::Domain(format!("alpha must be finite, got {alpha}")));
    }
    let f = |phi: f64| postselection_condition(alpha, phi);
    let two_pi = 2.0 * std::f64::consts::PI;
    let grid = |i: usize| two_pi * (i as f64) / ((SCAN_POINTS + 1) as f64);

    let mut prev = grid(1);
    let mut fprev = f(prev);
    for i in 2..=SCAN_POINTS {
        let phi = grid(i);
        let fphi = f(phi);
        if fprev == 0.0 || (fprev < 0.0) != (fphi < 0.0) {
            let root = if fprev == 0.0 {
                prev
            } else {
                bisect(&f, prev, phi)
            };
            let residual = f(root).abs();
            let (u, v) = condition_terms(alpha, root);
            let vacuous = u.abs() <= tol::SOLVER && v.abs() <= tol::SOLVER;
            if residual <= tol::SOLVER_RESIDUAL && !vacuous {
                return Ok(root);
            }
        }
        prev = phi;
        fprev = fphi;
    }
    Err(Error::NoPostselection {
        alpha,
        reason: "no sign change with interfering lower arms in (0, 2 pi)".into(),
    })
}

/// Splitting and postselection angles at which the projector weak values on
/// the five open regions are exactly (+1, -1, +1, +1, -1) and both merged
/// regions carry weak value zero.
///
/// Solves the pair {orthogonality condition, unit-value condition} by a
/// deterministic scan over the splitting angle with the inner solver
/// supplying `phi(alpha)`; the smallest qualifying root is returned.
pub fn solve_unit_weak_values() -> Result<(f64, f64)> {
    let margin = 0.05;
    let lo = margin;
    let hi = std::f64::consts::PI - margin;
    let eval = |alpha: f64| -> Option<f64> {
        solve_postselection(alpha)
            .ok()
            .map(|phi| unit_value_condition(alpha, phi))
    };

    let grid = |i: usize| lo + (hi - lo) * (i as f64) / (SCAN_POINTS as f64);
    let mut prev: Option<(f64, f64)> = None;
    for i in 0..=SCAN_POINTS {
        let alpha = grid(i);
        let Some(val) = eval(alpha) else {
            prev = None;
            continue;
        };
        if let Some((pa, pv)) = prev {
            if (pv < 0.0) != (val < 0.0) {
                let root = bisect(&|a: f64| eval(a).unwrap_or(f64::NAN), pa, alpha);
                let phi = solve_postselection(root)?;
                let r1 = postselection_condition(root, phi).abs();
                let r2 = unit_value_condition(root, phi).abs();
                if r1 <= tol::SOLVER_RESIDUAL && r2 <= tol::SOLVER {
                    return Ok((root, phi));
                }
            }
        }
        prev = Some((alpha, val));
    }
    Err(Error::NoSolution)
}
