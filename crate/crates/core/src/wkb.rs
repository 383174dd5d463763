//! Large-ε (WKB) closed forms for `α = γ/ε` of order one.
//!
//! The phase is carried to the `1/ε` correction:
//!
//! ```text
//! θ(x) = ελ E(x) + ((1+8α²) E(x) − F(x)) / (6ελ),    Φ = e^{iθ/2}
//! ```
//!
//! with `E(x)`, `F(x)` incomplete elliptic integrals of parameter `k²`.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::elliptic;
use crate::error::{Error, Result};
use crate::floquet::fold_nu;
use crate::params::ReducedParams;
use crate::quad;
use crate::spectrum::{LineClass, Route, SpectrumLine, SplitComponents};

/// Below this ε the expansions are reported as outside their validity.
pub const EPSILON_MIN: f64 = 5.0;

/// Tolerance on `dist(Ω ± ν, ℤ)` for the hyper-Raman sign rule.
pub const INTEGRALITY_TOL: f64 = 1e-6;

const QUAD_TOL: f64 = 1e-10;

fn envelope(alpha: f64, x: f64) -> f64 {
    let c = x.cos();
    (1.0 + 4.0 * alpha * alpha * c * c).sqrt()
}

/// `(E(x), F(x))` at parameter `k²`.
fn incomplete(p: &ReducedParams, x: f64) -> (f64, f64) {
    let e = elliptic::ellip_e(x, p.k2).expect("k² < 1 for finite α");
    let f = elliptic::ellip_f(x, p.k2).expect("k² < 1 for finite α");
    (e, f)
}

/// Full phase `θ(x)`; `Φ = e^{iθ/2}`.
pub fn phase_angle(x: f64, p: &ReducedParams) -> f64 {
    let (e, f) = incomplete(p, x);
    let el = p.epsilon * p.lambda;
    el * e + ((1.0 + 8.0 * p.alpha * p.alpha) * e - f) / (6.0 * el)
}

/// `Φ(x)`.
pub fn wkb_phase(x: f64, p: &ReducedParams) -> C64 {
    C64::from_polar(1.0, 0.5 * phase_angle(x, p))
}

/// `(f₁, f₂)`.
pub fn wkb_f(x: f64, p: &ReducedParams) -> (C64, C64) {
    let (a, l) = (p.alpha, p.lambda);
    let s = envelope(a, x);
    let c = x.cos();
    let ph = wkb_phase(x, p);
    let f1 = ((l + 2.0 * a) * (s - 2.0 * a * c)).sqrt() * ph;
    let f2 = ((l - 2.0 * a) * (s + 2.0 * a * c)).sqrt() * ph.conj();
    (f1, f2)
}

/// Approximate fundamental pair `(u, v)`.
pub fn wkb_uv(x: f64, p: &ReducedParams) -> (C64, C64) {
    let (a, l) = (p.alpha, p.lambda);
    let (f1, f2) = wkb_f(x, p);
    let q4 = envelope(a, x).sqrt();
    let drive = C64::from_polar(1.0, p.gamma * x.sin());
    let u = drive * l.sqrt() / (2.0 * q4) * ((1.0 - 2.0 * a / l) * f1 + (1.0 + 2.0 * a / l) * f2);
    let v = C64::new(0.0, 1.0) * drive / (p.epsilon * l.sqrt()) * (f2 - f1) / q4;
    (u, v)
}

/// Floquet phase `Ω(ε, α)`.
pub fn wkb_omega(p: &ReducedParams) -> f64 {
    let e = elliptic::e_unchecked(p.k2);
    let k = elliptic::k_unchecked(p.k2);
    let el = p.epsilon * p.lambda;
    (el * e + ((1.0 + 8.0 * p.alpha * p.alpha) * e - k) / (6.0 * el)) / PI
}

/// `ν = (1/π) arcsin |sin πΩ|`, the distance from Ω to the nearest integer.
pub fn wkb_nu(p: &ReducedParams) -> f64 {
    nu_from_omega(wkb_omega(p))
}

fn nu_from_omega(omega: f64) -> f64 {
    fold_nu(omega)
}

/// `arcsin |sin Ω|` with Ω taken in radians, for comparison reports.
pub fn wkb_nu_literal(p: &ReducedParams) -> f64 {
    wkb_omega(p).sin().abs().asin()
}

/// Leading-order sawtooth `ν(ε)` with period `2ε₀`.
pub fn sawtooth_nu(epsilon: f64, alpha: f64) -> f64 {
    fold_nu(epsilon / (2.0 * crate::params::epsilon_zero(alpha)))
}

pub fn wkb_sawtooth(epsilons: &[f64], alpha: f64) -> Vec<f64> {
    epsilons.iter().map(|&e| sawtooth_nu(e, alpha)).collect()
}

/// Triangle-wave fit to sampled `ν(ε)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SawtoothFit {
    pub period: f64,
    /// Unwrapped phase at `ε = 0`.
    pub offset: f64,
    /// `max |ν − tri(ε/period + offset)|`.
    pub max_residual: f64,
}

/// Estimates the period of a sampled triangle wave with values in `[0, ½]`.
///
/// The samples are unwrapped into a monotone phase `Ω(ε)` with `ν =
/// fold(Ω)`: each sample takes the candidate `k ± ν` nearest to the previous
/// phase advanced by the median step. The phase is then fitted by a straight
/// line.
pub fn fit_sawtooth(eps: &[f64], nu: &[f64]) -> Result<SawtoothFit> {
    if eps.len() != nu.len() || eps.len() < 4 {
        return Err(Error::Precondition("need at least 4 matching samples".into()));
    }
    let n = eps.len();
    let mut steps: Vec<f64> = nu.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    steps.sort_by(f64::total_cmp);
    let step = steps[steps.len() / 2];
    let mut phase = Vec::with_capacity(n);
    phase.push(if nu[1] >= nu[0] { nu[0] } else { 1.0 - nu[0] });
    for &v in &nu[1..] {
        let target = phase[phase.len() - 1] + step;
        let k = target.floor();
        let best = [k - v, k + v, k + 1.0 - v, k + 1.0 + v]
            .into_iter()
            .min_by(|a, b| (a - target).abs().total_cmp(&(b - target).abs()))
            .expect("non-empty");
        phase.push(best);
    }
    let mx = eps.iter().sum::<f64>() / n as f64;
    let my = phase.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for i in 0..n {
        sxy += (eps[i] - mx) * (phase[i] - my);
        sxx += (eps[i] - mx) * (eps[i] - mx);
    }
    let slope = sxy / sxx;
    if slope <= 0.0 {
        return Err(Error::Degenerate("samples do not wind; no period".into()));
    }
    let offset = my - slope * mx;
    let max_residual = (0..n)
        .map(|i| (nu[i] - fold_nu(slope * eps[i] + offset)).abs())
        .fold(0.0, f64::max);
    Ok(SawtoothFit {
        period: 1.0 / slope,
        offset,
        max_residual,
    })
}

/// `Δ₁(x) = −(2α/λ) cos x / √(1 + 4α² cos² x)`.
pub fn wkb_delta1(x: f64, alpha: f64) -> f64 {
    let lambda = (1.0 + 4.0 * alpha * alpha).sqrt();
    -2.0 * alpha / lambda * x.cos() / envelope(alpha, x)
}

/// `Π₁(x) = −1 / (λ √(1 + 4α² cos² x))`.
pub fn wkb_pi1(x: f64, alpha: f64) -> f64 {
    let lambda = (1.0 + 4.0 * alpha * alpha).sqrt();
    -1.0 / (lambda * envelope(alpha, x))
}

/// `Δ₂(x) = (2α/λ) cos θ(x) / √(1 + 4α² cos² x)`.
pub fn wkb_delta2(x: f64, p: &ReducedParams) -> f64 {
    2.0 * p.alpha / p.lambda * phase_angle(x, p).cos() / envelope(p.alpha, x)
}

/// `Π₂(x) = −(4α²/λ) cos x cos θ(x) / √(1 + 4α² cos² x)`.
pub fn wkb_pi2(x: f64, p: &ReducedParams) -> f64 {
    -4.0 * p.alpha * p.alpha / p.lambda * x.cos() * phase_angle(x, p).cos() / envelope(p.alpha, x)
}

/// Closed form of the first odd-harmonic amplitude,
/// `−(2/(πα)) (E − K/(1+4α²))`.
pub fn wkb_d0_closed(alpha: f64) -> f64 {
    if alpha == 0.0 {
        return 0.0;
    }
    let a2 = 4.0 * alpha * alpha;
    let m = a2 / (1.0 + a2);
    -2.0 / (PI * alpha) * (elliptic::e_unchecked(m) - elliptic::k_unchecked(m) / (1.0 + a2))
}

/// `+1` when Ω + ν is an integer, `−1` when Ω − ν is.
pub fn sign_rule(omega: f64, nu: f64) -> Result<f64> {
    let dist = |y: f64| (y - y.round()).abs();
    let (plus, minus) = (dist(omega + nu), dist(omega - nu));
    match (plus <= INTEGRALITY_TOL, minus <= INTEGRALITY_TOL) {
        (true, false) => Ok(1.0),
        (false, true) => Ok(-1.0),
        _ => Err(Error::Integrality { plus, minus }),
    }
}

/// Closed-form WKB evaluables at one parameter point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WkbSolution {
    pub params: ReducedParams,
    pub omega: f64,
    pub nu: f64,
    pub warnings: Vec<String>,
}

impl WkbSolution {
    pub fn new(params: ReducedParams) -> Self {
        let mut warnings = Vec::new();
        if params.epsilon <= EPSILON_MIN {
            let w = format!(
                "ε = {} is at or below {EPSILON_MIN}; WKB expressions are outside their validity range",
                params.epsilon
            );
            log::warn!("{w}");
            warnings.push(w);
        }
        let omega = wkb_omega(&params);
        Self {
            params,
            omega,
            nu: nu_from_omega(omega),
            warnings,
        }
    }

    pub fn phase(&self, x: f64) -> C64 {
        wkb_phase(x, &self.params)
    }

    pub fn uv(&self, x: f64) -> (C64, C64) {
        wkb_uv(x, &self.params)
    }

    pub fn f(&self, x: f64) -> (C64, C64) {
        wkb_f(x, &self.params)
    }

    /// `D ≈ Δ₁ + Δ₂`.
    pub fn dipole(&self, x: f64) -> f64 {
        self.delta1(x) + self.delta2(x)
    }

    /// `W ≈ Π₁ + Π₂`.
    pub fn inversion(&self, x: f64) -> f64 {
        self.pi1(x) + self.pi2(x)
    }

    pub fn sign(&self) -> Result<f64> {
        sign_rule(self.omega, self.nu)
    }
}

impl SplitComponents for WkbSolution {
    fn delta1(&self, x: f64) -> f64 {
        wkb_delta1(x, self.params.alpha)
    }
    fn delta2(&self, x: f64) -> f64 {
        wkb_delta2(x, &self.params)
    }
    fn pi1(&self, x: f64) -> f64 {
        wkb_pi1(x, self.params.alpha)
    }
    fn pi2(&self, x: f64) -> f64 {
        wkb_pi2(x, &self.params)
    }
}

/// `∫₀^{π/2} g` with panels no wider than `π/(2(1 + rate))`.
fn oscillatory(g: impl Fn(f64) -> f64, rate: f64) -> Result<f64> {
    let panels = (1.0 + rate.abs()).ceil() as usize;
    quad::integrate_panels(g, 0.0, FRAC_PI_2, panels, QUAD_TOL)
}

/// Odd-harmonic and hyper-Raman amplitudes for `j ≤ j_max`.
pub fn wkb_dipole_amps(p: &ReducedParams, j_max: usize) -> Result<Vec<SpectrumLine>> {
    let sol = WkbSolution::new(*p);
    let (a, l) = (p.alpha, p.lambda);
    let nu = sol.nu;
    let route = Route::Wkb;
    let mut lines = Vec::with_capacity(3 * j_max + 2);
    for j in 0..=j_max {
        let w = (2 * j + 1) as f64;
        let v = -8.0 * a / (PI * l) * oscillatory(|x| x.cos() * (w * x).cos() / envelope(a, x), w)?;
        lines.push(SpectrumLine::new(LineClass::OddHarmonic, j, nu, v, route));
    }
    if let Some(d0) = lines.first() {
        let closed = wkb_d0_closed(a);
        if (d0.amplitude - closed).abs() > 1e-8 {
            log::warn!("first harmonic quadrature {} differs from closed form {closed}", d0.amplitude);
        }
    }
    // The shifted lines carry a factor α; the sign is irrelevant when it vanishes.
    let sign = if a == 0.0 { 1.0 } else { sol.sign()? };
    let rate = p.epsilon * l;
    let pref = 4.0 * a / (PI * l);
    for j in 0..=j_max {
        let k = 2.0 * (j as f64 + nu);
        let v = pref * oscillatory(|x| (phase_angle(x, p) + sign * k * x).cos() / envelope(a, x), rate + k)?;
        lines.push(SpectrumLine::new(LineClass::HyperRamanUp, j, nu, v, route));
    }
    for j in 1..=j_max {
        let k = 2.0 * (j as f64 - nu);
        let v = pref * oscillatory(|x| (phase_angle(x, p) - sign * k * x).cos() / envelope(a, x), rate + k)?;
        lines.push(SpectrumLine::new(LineClass::HyperRamanDown, j, nu, v, route));
    }
    Ok(lines)
}

/// Even-harmonic and shifted-odd amplitudes for `j ≤ j_max`.
pub fn wkb_inversion_amps(p: &ReducedParams, j_max: usize) -> Result<Vec<SpectrumLine>> {
    let sol = WkbSolution::new(*p);
    let (a, l) = (p.alpha, p.lambda);
    let nu = sol.nu;
    let route = Route::Wkb;
    let mut lines = Vec::with_capacity(3 * j_max + 3);
    for j in 0..=j_max {
        let w = 2.0 * j as f64;
        let m = if j == 0 { 1.0 } else { 2.0 };
        let v = -2.0 * m / (PI * l) * oscillatory(|x| (w * x).cos() / envelope(a, x), w)?;
        lines.push(SpectrumLine::new(LineClass::EvenHarmonic, j, nu, v, route));
    }
    // The shifted lines carry a factor α; the sign is irrelevant when it vanishes.
    let sign = if a == 0.0 { 1.0 } else { sol.sign()? };
    let rate = p.epsilon * l;
    let pref = -8.0 * a * a / (PI * l);
    for j in 0..=j_max {
        let k = 2.0 * j as f64 + 1.0 + 2.0 * nu;
        let v = pref * oscillatory(|x| x.cos() * (phase_angle(x, p) + sign * k * x).cos() / envelope(a, x), rate + k)?;
        lines.push(SpectrumLine::new(LineClass::ShiftedOddUp, j, nu, v, route));
    }
    for j in 0..=j_max {
        let k = 2.0 * j as f64 + 1.0 - 2.0 * nu;
        let v = pref * oscillatory(|x| x.cos() * (phase_angle(x, p) - sign * k * x).cos() / envelope(a, x), rate + k)?;
        lines.push(SpectrumLine::new(LineClass::ShiftedOddDown, j, nu, v, route));
    }
    Ok(lines)
}

/// Residuals of the WKB hierarchy against the implemented closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HierarchyReport {
    pub order: u8,
    /// `max |z₀'² + ¼(1 + 4α² cos² x)|`.
    pub eikonal: f64,
    /// `max |∫₀^x Im z₀' − (λ/2) E(x)|`.
    pub leading_phase: f64,
    /// `max |∫₀^x z₁' − ln √((s − 2α cos x) λ / (s (λ − 2α)))|`, order 1 only.
    pub amplitude: Option<f64>,
    /// `max_n |∫₀^{nπ} Im z₂' − ((1+8α²)E − F)(nπ)/(12λ)|` for `n = 1..4`.
    pub correction_secular: Option<f64>,
    /// Largest pointwise gap between the same two quantities on `[0, 2π]`.
    /// The closed form keeps only the part that grows with `x`.
    pub correction_periodic: Option<f64>,
}

/// Checks the eikonal/transport hierarchy numerically on a grid.
///
/// Writing `q = exp(iγ sin x + ε Σ z_k ε^{−k})`, the orders satisfy
/// `z₀'² = −¼(1+4α²cos²x)`, `2z₀'z₁' = iα sin x − z₀''` and
/// `2z₀'z₂' = −(z₁'' + z₁'²)`.
pub fn wkb_hierarchy_check(p: &ReducedParams, order: u8) -> Result<HierarchyReport> {
    if order > 1 {
        return Err(Error::Domain(format!("hierarchy order must be 0 or 1, got {order}")));
    }
    let a = p.alpha;
    let l = p.lambda;
    let s = |x: f64| envelope(a, x);
    let z0 = |x: f64| C64::new(0.0, 0.5 * s(x));
    let grid: Vec<f64> = (0..=64).map(|i| i as f64 * 2.0 * PI / 64.0).collect();
    let tol = 1e-13;

    let mut eikonal: f64 = 0.0;
    let mut leading: f64 = 0.0;
    for &x in &grid {
        let c = x.cos();
        let z = z0(x);
        eikonal = eikonal.max((z * z + 0.25 * (1.0 + 4.0 * a * a * c * c)).norm());
        let integral = quad::integrate_panels(|t| z0(t).im, 0.0, x, 4, tol)?;
        let (e, _) = incomplete(p, x);
        leading = leading.max((integral - 0.5 * l * e).abs());
    }
    let mut report = HierarchyReport {
        order,
        eikonal,
        leading_phase: leading,
        amplitude: None,
        correction_secular: None,
        correction_periodic: None,
    };
    if order == 0 {
        return Ok(report);
    }

    let sp = |x: f64| -4.0 * a * a * x.cos() * x.sin() / s(x);
    let z0pp = |x: f64| C64::new(0.0, 0.5 * sp(x));
    let z1 = |x: f64| (C64::new(0.0, a * x.sin()) - z0pp(x)) / (2.0 * z0(x));
    let z1p_closed = |x: f64| {
        let (sn, c) = x.sin_cos();
        let n = a * sn * (s(x) + 2.0 * a * c);
        let np = a * c * (s(x) + 2.0 * a * c) + a * sn * (sp(x) - 2.0 * a * sn);
        (n / (s(x) * s(x)), np / (s(x) * s(x)) - 2.0 * n * sp(x) / s(x).powi(3))
    };
    let z2_im = |x: f64| {
        let (z1v, z1d) = z1p_closed(x);
        (-(z1d + z1v * z1v) / (2.0 * z0(x))).im
    };

    let mut amplitude: f64 = 0.0;
    let mut periodic: f64 = 0.0;
    let corr = |x: f64| {
        let (e, f) = incomplete(p, x);
        ((1.0 + 8.0 * a * a) * e - f) / (12.0 * l)
    };
    for &x in &grid {
        // z₁' from the recursion must match its closed form.
        let (closed, _) = z1p_closed(x);
        amplitude = amplitude.max((z1(x) - C64::from(closed)).norm());
        let integral = quad::integrate_panels(|t| z1(t).re, 0.0, x, 4, tol)?;
        let c = x.cos();
        let want = 0.5 * ((s(x) - 2.0 * a * c) * l / (s(x) * (l - 2.0 * a))).ln();
        amplitude = amplitude.max((integral - want).abs());
        let phase = quad::integrate_panels(z2_im, 0.0, x, 4, tol)?;
        periodic = periodic.max((phase - corr(x)).abs());
    }
    let mut secular: f64 = 0.0;
    for n in 1..=4 {
        let x = n as f64 * PI;
        let phase = quad::integrate_panels(z2_im, 0.0, x, 4 * n, tol)?;
        secular = secular.max((phase - corr(x)).abs());
    }
    report.amplitude = Some(amplitude);
    report.correction_secular = Some(secular);
    report.correction_periodic = Some(periodic);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_phase_at_zero_coupling() {
        let p = ReducedParams::from_alpha(0.0, 7.0).unwrap();
        for &x in &[0.0, 0.4, 2.0, 5.5] {
            assert!((wkb_phase(x, &p) - C64::from_polar(1.0, 3.5 * x)).norm() < 1e-13);
            let (u, v) = wkb_uv(x, &p);
            assert!((u - C64::from((3.5 * x).cos())).norm() < 1e-13);
            assert!((v - C64::from((3.5 * x).sin() / 3.5)).norm() < 1e-13);
        }
    }

    #[test]
    fn initial_values() {
        let p = ReducedParams::from_alpha(1.0, 12.0).unwrap();
        let (f1, f2) = wkb_f(0.0, &p);
        assert!((f1 - C64::from(1.0)).norm() < 1e-14);
        assert!((f2 - C64::from(1.0)).norm() < 1e-14);
        let (u, v) = wkb_uv(0.0, &p);
        assert!((u - C64::from(1.0)).norm() < 1e-14);
        assert!(v.norm() < 1e-15);
        assert!((wkb_delta1(0.0, 1.0) + 0.4).abs() < 1e-15);
        assert!((wkb_pi1(0.0, 1.0) + 0.2).abs() < 1e-15);
        assert!((wkb_delta1(0.0, 1.0) + wkb_delta2(0.0, &p)).abs() < 1e-15);
        assert!((wkb_pi1(0.0, 1.0) + wkb_pi2(0.0, &p) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn omega_free_winding() {
        let p = ReducedParams::from_alpha(0.0, 1.0).unwrap();
        assert!((wkb_omega(&p) - 0.5).abs() < 1e-15);
        assert!((wkb_nu(&p) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn sign_rule_cases() {
        assert_eq!(sign_rule(16.786, 0.214).unwrap(), 1.0);
        assert_eq!(sign_rule(16.2, 0.2).unwrap(), -1.0);
        assert!(matches!(sign_rule(16.0, 0.0), Err(Error::Integrality { .. })));
        assert!(matches!(sign_rule(16.3, 0.1), Err(Error::Integrality { .. })));
    }

    #[test]
    fn d0_closed_reference() {
        assert!((wkb_d0_closed(1.0) + 0.4628536790935601).abs() < 1e-14);
        assert_eq!(wkb_d0_closed(0.0), 0.0);
    }

    #[test]
    fn sawtooth_fit_recovers_period() {
        let eps: Vec<f64> = (0..300).map(|i| 3.0 + 0.013 * i as f64).collect();
        let nu: Vec<f64> = eps.iter().map(|e| fold_nu(e / 0.77 + 0.1)).collect();
        let fit = fit_sawtooth(&eps, &nu).unwrap();
        assert!((fit.period - 0.77).abs() < 1e-3);
        assert!(fit.max_residual < 0.02);
    }

    #[test]
    fn hierarchy_trivial_at_zero_coupling() {
        let p = ReducedParams::from_alpha(0.0, 10.0).unwrap();
        let r = wkb_hierarchy_check(&p, 1).unwrap();
        assert!(r.eikonal < 1e-15 && r.leading_phase < 1e-12);
        assert!(r.amplitude.unwrap() < 1e-12);
        assert!(r.correction_periodic.unwrap() < 1e-12);
    }
}
