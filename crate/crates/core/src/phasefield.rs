//! Pointwise phase-field ingredients: anisotropic structural tensor,
//! stiffness degradation, tensile/compressive energy split and the history
//! variable enforcing damage irreversibility.

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

/// Regularization and stability parameters of the phase-field model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseFieldParams {
    /// Characteristic length scale (mm).
    pub ell0: f64,
    /// Penalty steering the crack along the material orientation.
    pub beta_penalty: f64,
    /// Residual stiffness keeping the degraded system invertible.
    pub k_p: f64,
}

impl Default for PhaseFieldParams {
    fn default() -> Self {
        PhaseFieldParams {
            ell0: 0.015_625,
            beta_penalty: 20.0,
            k_p: 1e-6,
        }
    }
}

/// A = I + beta (I - n ⊗ n) with n = (cos theta, sin theta).
///
/// Gradients along n cost factor 1, gradients across it 1 + beta, which
/// penalizes crack growth perpendicular to the weak plane.
pub fn structural_tensor(theta: f64, beta_penalty: f64) -> Matrix2<f64> {
    let (s, c) = theta.sin_cos();
    let n = Vector2::new(c, s);
    let eye = Matrix2::identity();
    eye + beta_penalty * (eye - n * n.transpose())
}

/// Stiffness degradation g(phi) = (1 - phi)^2 + k_p.
#[inline]
pub fn degradation(phi: f64, k_p: f64) -> f64 {
    let r = 1.0 - phi;
    r * r + k_p
}

/// Tensile/compressive strain energy densities from the principal split.
///
/// Takes the strain tensor components (eps_xx, eps_yy, eps_xy) — note tensor
/// shear, not the engineering gamma — and the effective Lamé constants.
/// Returns (psi_plus, psi_minus).
pub fn spectral_split(
    eps_xx: f64,
    eps_yy: f64,
    eps_xy: f64,
    lambda: f64,
    mu: f64,
) -> (f64, f64) {
    // closed-form eigenvalues of the symmetric 2x2 strain
    let mean = 0.5 * (eps_xx + eps_yy);
    let radius = (0.25 * (eps_xx - eps_yy).powi(2) + eps_xy * eps_xy).sqrt();
    let e1 = mean + radius;
    let e2 = mean - radius;

    let tr = eps_xx + eps_yy;
    let tr_plus = 0.5 * (tr + tr.abs());
    let tr_minus = 0.5 * (tr - tr.abs());

    let macaulay_plus = |v: f64| 0.5 * (v + v.abs());
    let macaulay_minus = |v: f64| 0.5 * (v - v.abs());

    let psi_plus = 0.5 * lambda * tr_plus * tr_plus
        + mu * (macaulay_plus(e1).powi(2) + macaulay_plus(e2).powi(2));
    let psi_minus = 0.5 * lambda * tr_minus * tr_minus
        + mu * (macaulay_minus(e1).powi(2) + macaulay_minus(e2).powi(2));
    (psi_plus, psi_minus)
}

/// Irreversibility: the history variable is the running maximum of psi_plus.
#[inline]
pub fn update_history(h_old: f64, psi_plus: f64) -> f64 {
    h_old.max(psi_plus)
}

/// Hybrid-model constraint: damage is wiped where the compressive energy
/// dominates (psi_plus strictly below psi_minus).
#[inline]
pub fn hybrid_constraint(psi_plus: f64, psi_minus: f64, phi: f64) -> f64 {
    if psi_plus < psi_minus {
        0.0
    } else {
        phi
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn structural_tensor_zero_penalty_is_identity() {
        for &theta in &[0.0, 0.3, 1.2] {
            let a = structural_tensor(theta, 0.0);
            assert!((a - Matrix2::identity()).norm() < 1e-15);
        }
    }

    #[test]
    fn structural_tensor_axis_aligned() {
        let a = structural_tensor(0.0, 20.0);
        assert_relative_eq!(a[(0, 0)], 1.0, epsilon = 1e-14);
        assert_relative_eq!(a[(1, 1)], 21.0, epsilon = 1e-13);
        assert!(a[(0, 1)].abs() < 1e-13);
    }

    #[test]
    fn structural_tensor_at_45_degrees() {
        let a = structural_tensor(std::f64::consts::FRAC_PI_4, 20.0);
        assert_relative_eq!(a[(0, 0)], 11.0, epsilon = 1e-12);
        assert_relative_eq!(a[(1, 1)], 11.0, epsilon = 1e-12);
        assert_relative_eq!(a[(0, 1)], -10.0, epsilon = 1e-12);
        assert_relative_eq!(a[(1, 0)], -10.0, epsilon = 1e-12);
    }

    #[test]
    fn structural_tensor_eigenpairs() {
        for k in 0..12 {
            let theta = k as f64 * std::f64::consts::PI / 6.5;
            let beta = 20.0;
            let a = structural_tensor(theta, beta);
            let n = Vector2::new(theta.cos(), theta.sin());
            let n_perp = Vector2::new(-theta.sin(), theta.cos());
            // A n = n, A n_perp = (1+beta) n_perp
            assert!((a * n - n).norm() < 1e-12);
            assert!((a * n_perp - (1.0 + beta) * n_perp).norm() < 1e-12);
        }
    }

    #[test]
    fn degradation_endpoints() {
        let k_p = 1e-6;
        assert_relative_eq!(degradation(0.0, k_p), 1.0 + k_p, epsilon = 1e-16);
        assert_relative_eq!(degradation(1.0, k_p), k_p, epsilon = 1e-16);
        assert_relative_eq!(degradation(0.5, k_p), 0.250_001, epsilon = 1e-12);
    }

    #[test]
    fn split_zero_strain() {
        let (p, m) = spectral_split(0.0, 0.0, 0.0, 100.0, 50.0);
        assert_eq!(p, 0.0);
        assert_eq!(m, 0.0);
    }

    #[test]
    fn split_uniaxial_tension() {
        let (lambda, mu) = (80.0, 40.0);
        let e = 0.01;
        let (p, m) = spectral_split(e, 0.0, 0.0, lambda, mu);
        assert_relative_eq!(p, 0.5 * lambda * e * e + mu * e * e, max_relative = 1e-14);
        assert_eq!(m, 0.0);
    }

    #[test]
    fn split_pure_shear_rotated() {
        // principal strains (e, -e): trace vanishes, both branches keep mu e^2
        let (lambda, mu) = (200.0, 30.0);
        let e = 2e-3;
        // rotate diag(e, -e) by an arbitrary angle; the split is frame-indifferent
        let alpha = 0.7f64;
        let (s, c) = alpha.sin_cos();
        let exx = e * (c * c - s * s);
        let eyy = -exx;
        let exy = 2.0 * e * s * c;
        let (p, m) = spectral_split(exx, eyy, exy, lambda, mu);
        assert_relative_eq!(p, mu * e * e, max_relative = 1e-12);
        assert_relative_eq!(m, mu * e * e, max_relative = 1e-12);
    }

    #[test]
    fn history_running_maximum() {
        assert_eq!(update_history(5.0, 3.0), 5.0);
        assert_eq!(update_history(0.0, 7.0), 7.0);
        let mut h = 0.0;
        let mut trace = Vec::new();
        for psi in [2.0, 9.0, 4.0] {
            h = update_history(h, psi);
            trace.push(h);
        }
        assert_eq!(trace, vec![2.0, 9.0, 9.0]);
    }

    #[test]
    fn hybrid_constraint_cases() {
        assert_eq!(hybrid_constraint(1.0, 5.0, 0.8), 0.0);
        assert_eq!(hybrid_constraint(5.0, 1.0, 0.8), 0.8);
        // strict inequality: equal energies leave phi alone
        assert_eq!(hybrid_constraint(3.0, 3.0, 0.3), 0.3);
    }

    proptest! {
        /// psi+ + psi- must recover the full elastic energy density.
        #[test]
        fn split_is_exact_partition(
            exx in -1e-2f64..1e-2,
            eyy in -1e-2f64..1e-2,
            exy in -1e-2f64..1e-2,
        ) {
            let (lambda, mu) = (121_000.0, 47_000.0);
            let (p, m) = spectral_split(exx, eyy, exy, lambda, mu);
            let tr = exx + eyy;
            // tr(eps^2) in tensor components
            let tr_sq = exx * exx + eyy * eyy + 2.0 * exy * exy;
            let psi = 0.5 * lambda * tr * tr + mu * tr_sq;
            let scale = psi.abs().max(1e-30);
            prop_assert!(((p + m) - psi).abs() <= 1e-10 * scale);
        }

        /// The split only sees principal strains, so rigid rotations leave it alone.
        #[test]
        fn split_frame_indifference(
            exx in -1e-2f64..1e-2,
            eyy in -1e-2f64..1e-2,
            exy in -1e-2f64..1e-2,
            alpha in 0.0f64..std::f64::consts::TAU,
        ) {
            let (lambda, mu) = (80_000.0, 46_000.0);
            let (p0, m0) = spectral_split(exx, eyy, exy, lambda, mu);
            let (s, c) = alpha.sin_cos();
            // R eps R^T
            let rxx = c * c * exx - 2.0 * s * c * exy + s * s * eyy;
            let ryy = s * s * exx + 2.0 * s * c * exy + c * c * eyy;
            let rxy = s * c * (exx - eyy) + (c * c - s * s) * exy;
            let (p1, m1) = spectral_split(rxx, ryy, rxy, lambda, mu);
            let scale = (p0 + m0).abs().max(1e-25);
            prop_assert!((p0 - p1).abs() <= 1e-10 * scale);
            prop_assert!((m0 - m1).abs() <= 1e-10 * scale);
        }
    }
}
