//! Legendre elliptic integrals in the parameter convention `m = k²`,
//! evaluated through Carlson's symmetric forms.
//!
//! The incomplete integrals accept any real amplitude; outside
//! `[-π/2, π/2]` they are continued by quasi-periodicity,
//! `F(x + nπ) = F(x) + 2nK` and likewise for `E`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Distance from 1 below which the complete integrals refuse to evaluate.
pub const COMPLETE_MARGIN: f64 = 1e-12;

/// Carlson's `R_F(x, y, z)`, symmetric and homogeneous of degree −½.
///
/// At most one argument may be zero; all must be non-negative.
pub fn carlson_rf(x: f64, y: f64, z: f64) -> f64 {
    const TOL: f64 = 8e-4;
    let (mut x, mut y, mut z) = (x, y, z);
    let mut ave;
    let (mut dx, mut dy, mut dz);
    loop {
        let (sx, sy, sz) = (x.sqrt(), y.sqrt(), z.sqrt());
        let lam = sx * (sy + sz) + sy * sz;
        x = 0.25 * (x + lam);
        y = 0.25 * (y + lam);
        z = 0.25 * (z + lam);
        ave = (x + y + z) / 3.0;
        dx = (ave - x) / ave;
        dy = (ave - y) / ave;
        dz = (ave - z) / ave;
        if dx.abs().max(dy.abs()).max(dz.abs()) <= TOL {
            break;
        }
    }
    let e2 = dx * dy - dz * dz;
    let e3 = dx * dy * dz;
    (1.0 + (e2 / 24.0 - 0.1 - 3.0 / 44.0 * e3) * e2 + e3 / 14.0) / ave.sqrt()
}

/// Carlson's `R_D(x, y, z)`; `z` must be positive.
pub fn carlson_rd(x: f64, y: f64, z: f64) -> f64 {
    const TOL: f64 = 5e-4;
    const C1: f64 = 3.0 / 14.0;
    const C2: f64 = 1.0 / 6.0;
    const C3: f64 = 9.0 / 22.0;
    const C4: f64 = 3.0 / 26.0;
    const C5: f64 = 0.25 * C3;
    const C6: f64 = 1.5 * C4;
    let (mut x, mut y, mut z) = (x, y, z);
    let mut sum = 0.0;
    let mut fac = 1.0;
    let mut ave;
    let (mut dx, mut dy, mut dz);
    loop {
        let (sx, sy, sz) = (x.sqrt(), y.sqrt(), z.sqrt());
        let lam = sx * (sy + sz) + sy * sz;
        sum += fac / (sz * (z + lam));
        fac *= 0.25;
        x = 0.25 * (x + lam);
        y = 0.25 * (y + lam);
        z = 0.25 * (z + lam);
        ave = 0.2 * (x + y + 3.0 * z);
        dx = (ave - x) / ave;
        dy = (ave - y) / ave;
        dz = (ave - z) / ave;
        if dx.abs().max(dy.abs()).max(dz.abs()) <= TOL {
            break;
        }
    }
    let ea = dx * dy;
    let eb = dz * dz;
    let ec = ea - eb;
    let ed = ea - 6.0 * eb;
    let ee = ed + ec + ec;
    3.0 * sum
        + fac
            * (1.0
                + ed * (-C1 + C5 * ed - C6 * dz * ee)
                + dz * (C2 * ee + dz * (-C3 * ec + dz * C4 * ea)))
            / (ave * ave.sqrt())
}

fn check_parameter(m: f64) -> Result<()> {
    if !(0.0..1.0).contains(&m) {
        return Err(Error::Domain(format!(
            "elliptic parameter must lie in [0, 1), got {m}"
        )));
    }
    Ok(())
}

/// Complete integral of the first kind without the margin check.
pub(crate) fn k_unchecked(m: f64) -> f64 {
    carlson_rf(0.0, 1.0 - m, 1.0)
}

/// Complete integral of the second kind; valid on `[0, 1]`.
pub(crate) fn e_unchecked(m: f64) -> f64 {
    if m >= 1.0 {
        return 1.0;
    }
    let y = 1.0 - m;
    carlson_rf(0.0, y, 1.0) - m / 3.0 * carlson_rd(0.0, y, 1.0)
}

/// Splits `x = nπ + y` with `y ∈ [−π/2, π/2]`.
fn reduce_amplitude(x: f64) -> (f64, f64) {
    let n = (x / PI).round();
    (n, x - n * PI)
}

fn f_principal(y: f64, m: f64) -> f64 {
    let (s, c) = y.sin_cos();
    s * carlson_rf(c * c, 1.0 - m * s * s, 1.0)
}

fn e_principal(y: f64, m: f64) -> f64 {
    let (s, c) = y.sin_cos();
    let (cc, d) = (c * c, 1.0 - m * s * s);
    s * carlson_rf(cc, d, 1.0) - m / 3.0 * s * s * s * carlson_rd(cc, d, 1.0)
}

/// Incomplete integral of the first kind, `∫₀^x dθ / √(1 − m sin²θ)`.
pub fn ellip_f(x: f64, m: f64) -> Result<f64> {
    check_parameter(m)?;
    if !x.is_finite() {
        return Err(Error::Domain(format!("amplitude must be finite, got {x}")));
    }
    let (n, y) = reduce_amplitude(x);
    let base = f_principal(y, m);
    Ok(if n == 0.0 { base } else { 2.0 * n * k_unchecked(m) + base })
}

/// Incomplete integral of the second kind, `∫₀^x √(1 − m sin²θ) dθ`.
pub fn ellip_e(x: f64, m: f64) -> Result<f64> {
    check_parameter(m)?;
    if !x.is_finite() {
        return Err(Error::Domain(format!("amplitude must be finite, got {x}")));
    }
    let (n, y) = reduce_amplitude(x);
    let base = e_principal(y, m);
    Ok(if n == 0.0 { base } else { 2.0 * n * e_unchecked(m) + base })
}

/// Complete integral of the first kind, `K(m)`.
pub fn ellip_k(m: f64) -> Result<f64> {
    check_parameter(m)?;
    if m >= 1.0 - COMPLETE_MARGIN {
        return Err(Error::Domain(format!(
            "K(m) diverges as m → 1; got m = {m}"
        )));
    }
    Ok(k_unchecked(m))
}

/// Complete integral of the second kind, `E(m)`.
pub fn ellip_ecomp(m: f64) -> Result<f64> {
    check_parameter(m)?;
    if m >= 1.0 - COMPLETE_MARGIN {
        return Err(Error::Domain(format!(
            "complete integrals are not evaluated this close to m = 1; got m = {m}"
        )));
    }
    Ok(e_unchecked(m))
}
