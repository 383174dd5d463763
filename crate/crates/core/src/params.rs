//! Physical and reduced (dimensionless) drive parameters.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::elliptic;
use crate::error::{Error, Result};

/// Drive parameters in rad/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// Atomic transition frequency ω₀.
    pub omega0: f64,
    /// Laser frequency ω.
    pub omega: f64,
    /// Rabi frequency Ω₀.
    pub rabi: f64,
}

impl PhysicalParams {
    pub fn new(omega0: f64, omega: f64, rabi: f64) -> Result<Self> {
        let p = Self { omega0, omega, rabi };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return Err(Error::Domain(format!("omega must be positive, got {}", self.omega)));
        }
        if !(self.omega0 > 0.0 && self.omega0.is_finite()) {
            return Err(Error::Domain(format!("omega0 must be positive, got {}", self.omega0)));
        }
        if !(self.rabi >= 0.0 && self.rabi.is_finite()) {
            return Err(Error::Domain(format!("Rabi frequency must be non-negative, got {}", self.rabi)));
        }
        Ok(())
    }
}

/// Dimensionless parameters `γ = Ω₀/ω`, `ε = ω₀/ω` plus the constants
/// used by the large-ε asymptotics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedParams {
    pub gamma: f64,
    pub epsilon: f64,
    /// Coupling ratio `γ/ε`.
    pub alpha: f64,
    /// `√(1 + 4α²)`.
    pub lambda: f64,
    /// Elliptic parameter `4α²/(1 + 4α²)`.
    pub k2: f64,
    /// Half-period of the sawtooth `ν(ε)`.
    pub epsilon0: f64,
}

impl ReducedParams {
    /// Builds from `(γ, ε)`.
    pub fn new(gamma: f64, epsilon: f64) -> Result<Self> {
        check_gamma_epsilon(gamma, epsilon)?;
        Ok(Self::assemble(gamma, epsilon, gamma / epsilon))
    }

    /// Builds from `(α, ε)`; `γ` is set to `α·ε`.
    pub fn from_alpha(alpha: f64, epsilon: f64) -> Result<Self> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::Domain(format!("alpha must be non-negative, got {alpha}")));
        }
        let gamma = alpha * epsilon;
        check_gamma_epsilon(gamma, epsilon)?;
        Ok(Self::assemble(gamma, epsilon, alpha))
    }

    fn assemble(gamma: f64, epsilon: f64, alpha: f64) -> Self {
        let (lambda, k2) = lambda_k2(alpha);
        Self {
            gamma,
            epsilon,
            alpha,
            lambda,
            k2,
            epsilon0: epsilon_zero(alpha),
        }
    }
}

fn check_gamma_epsilon(gamma: f64, epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::Domain(format!("epsilon must be positive, got {epsilon}")));
    }
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::Domain(format!("gamma must be non-negative, got {gamma}")));
    }
    Ok(())
}

fn lambda_k2(alpha: f64) -> (f64, f64) {
    let a2 = 4.0 * alpha * alpha;
    ((1.0 + a2).sqrt(), a2 / (1.0 + a2))
}

/// Converts physical parameters to reduced ones.
pub fn reduce(p: &PhysicalParams) -> Result<ReducedParams> {
    p.validate()?;
    ReducedParams::new(p.rabi / p.omega, p.omega0 / p.omega)
}

/// `π / (2λ E(k²))`.
pub fn epsilon_zero(alpha: f64) -> f64 {
    let (lambda, k2) = lambda_k2(alpha);
    PI / (2.0 * lambda * elliptic::e_unchecked(k2))
}

/// The ε at which the large-ε Floquet phase `Ω(ε, α)` equals `r`.
///
/// `r ≈ n` gives `ν ≈ 0`, `r ≈ n + ½` gives `ν ≈ ½`.
pub fn select_epsilon(r: f64, alpha: f64) -> Result<f64> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Domain(format!("r must be positive, got {r}")));
    }
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::Domain(format!("alpha must be non-negative, got {alpha}")));
    }
    let (lambda, k2) = lambda_k2(alpha);
    let e = elliptic::ellip_ecomp(k2)?;
    let k = elliptic::ellip_k(k2)?;
    let corr = (1.0 + 8.0 * alpha * alpha) * e - k;
    let disc = 1.0 - 2.0 * e * corr / (3.0 * r * r * PI * PI);
    if disc < 0.0 {
        return Err(Error::Domain(format!(
            "no real ε for r = {r}, α = {alpha}: discriminant {disc}"
        )));
    }
    Ok(r * PI / (2.0 * lambda * e) * (1.0 + disc.sqrt()))
}
