//! Complex step covariances for planar tours.
//!
//! A planar step `z = Δx + iΔy` is a circular complex Gaussian; its
//! covariance `Ψ = E(z z^H)` is real here, and the real and imaginary parts
//! are independent with covariance `Ψ/2` each.

use nalgebra::{Matrix2, Matrix3};

use crate::error::{Error, Result};

/// `1/sqrt(2)`; the three-step covariance is positive definite for
/// `|rho| < 1/sqrt(2)`.
pub const RHO_SINGULAR: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Covariance of two consecutive planar steps, its inverse and the
/// determinant of the inverse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoStepCovariance {
    pub psi: Matrix2<f64>,
    pub phi: Matrix2<f64>,
    pub delta: f64,
}

impl TwoStepCovariance {
    pub fn new() -> Self {
        // E(z1 z1*) = E|r2|² + E|r1|² = 4,  E(z1 z2*) = -E|r2|² = -2.
        let psi = Matrix2::new(4.0, -2.0, -2.0, 4.0);
        let phi = psi.try_inverse().expect("positive definite");
        TwoStepCovariance {
            psi,
            phi,
            delta: phi.determinant(),
        }
    }

    /// Joint density of `a = |z1|`, `b = |z2|`:
    /// `4Δ ab exp(-φ11 a² - φ22 b²) I_0(2ab|φ12|)`, written with the scaled
    /// Bessel function so the exponent stays bounded.
    pub fn density(&self, a: f64, b: f64) -> f64 {
        let x = 2.0 * a * b * self.phi[(0, 1)].abs();
        let i0 = crate::special::bessel_i_scaled(0, x).expect("x >= 0");
        let exponent = -self.phi[(0, 0)] * a * a - self.phi[(1, 1)] * b * b + x;
        4.0 * self.delta * a * b * exponent.exp() * i0
    }
}

impl Default for TwoStepCovariance {
    fn default() -> Self {
        Self::new()
    }
}

/// `Ψ(ρ) = 4 [[1, ρ, 0], [ρ, 1, ρ], [0, ρ, 1]]`, its inverse `Φ(ρ)` and
/// `Δ(ρ) = det Φ(ρ)`. `ρ = -1/2` is the covariance of three consecutive
/// steps of a planar tour.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexCovariance {
    pub rho: f64,
    pub psi: Matrix3<f64>,
    pub phi: Matrix3<f64>,
    pub delta: f64,
}

impl ComplexCovariance {
    /// Requires `|rho| < 1/sqrt(2)`.
    pub fn new(rho: f64) -> Result<Self> {
        if rho.is_nan() || rho.abs() >= RHO_SINGULAR {
            return Err(Error::domain(format!(
                "Psi(rho) is singular or indefinite for rho = {rho}; need |rho| < 1/sqrt(2)"
            )));
        }
        let r2 = rho * rho;
        let psi = 4.0 * Matrix3::new(1.0, rho, 0.0, rho, 1.0, rho, 0.0, rho, 1.0);
        let s = 1.0 / (4.0 * (1.0 - 2.0 * r2));
        let phi = s * Matrix3::new(1.0 - r2, -rho, r2, -rho, 1.0, -rho, r2, -rho, 1.0 - r2);
        let delta = 1.0 / (64.0 * (1.0 - 2.0 * r2));
        Ok(ComplexCovariance {
            rho,
            psi,
            phi,
            delta,
        })
    }

    /// Smallest eigenvalue of `Φ(ρ)`; the amplitude density is bounded by
    /// `8Δ abc exp(-λ_min (a² + b² + c²))`.
    pub fn phi_min_eigenvalue(&self) -> f64 {
        self.phi.symmetric_eigenvalues().min()
    }
}
