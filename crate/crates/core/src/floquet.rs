//! Floquet exponent and Fourier coefficients of the periodic factor.
//!
//! A Floquet solution has the form `e^{iνx} Σ_p F_p e^{ipx}`. Substituting
//! into the equation gives the three-term recurrence
//!
//! ```text
//! ((p+ν)² − ε²/4) F_p = γ(p+ν+1) F_{p+1} + γ(p+ν−1) F_{p−1}
//! ```
//!
//! whose decaying solution is built from two continued fractions meeting at
//! a matching index. ν is a root of the matching condition, seeded from the
//! monodromy.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::SolutionGrid;
use crate::params::ReducedParams;

const TINY: f64 = 1e-300;
const LENTZ_MAX_ITER: usize = 100_000;

/// Maps any real exponent to its representative in `[0, ½]`.
pub fn fold_nu(nu: f64) -> f64 {
    let r = nu.rem_euclid(1.0);
    if r > 0.5 {
        1.0 - r
    } else {
        r
    }
}

/// ν read from the quarter-period values of the fundamental pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonodromyEstimate {
    pub nu: f64,
    /// `ε |Re(u v*)|` at `π/2` before clamping to `[0, 1]`.
    pub sine: f64,
    /// `(1/2π) arccos Re u(2π)` when the grid reaches `2π`.
    pub nu_trace: Option<f64>,
    /// How far `sine` exceeded 1 (zero when no clamping happened).
    pub clamp_excess: f64,
}

/// `ν = (1/π) arcsin(ε |Re[u(π/2) v*(π/2)]|)`.
///
/// For γ = 0 the exponent is `fold(ε/2)` exactly; arcsin near 1 would lose
/// half the digits, so the analytic value is returned instead.
pub fn nu_from_monodromy(grid: &SolutionGrid) -> Result<MonodromyEstimate> {
    let q = grid.nodes_per_period / 4;
    if grid.len() <= q {
        return Err(Error::Precondition(format!(
            "monodromy needs the grid to reach π/2; it ends at {}",
            grid.x_max()
        )));
    }
    let s = grid.epsilon * (grid.u[q] * grid.v[q].conj()).re.abs();
    let clamp_excess = (s - 1.0).max(0.0);
    if clamp_excess > 1e-6 {
        log::warn!("monodromy sine exceeds 1 by {clamp_excess:e}; clamped");
    }
    let nu = if grid.gamma == 0.0 {
        fold_nu(0.5 * grid.epsilon)
    } else {
        s.min(1.0).asin() / PI
    };
    let period = grid.nodes_per_period;
    let nu_trace = (grid.len() > period).then(|| grid.u[period].re.clamp(-1.0, 1.0).acos() / (2.0 * PI));
    Ok(MonodromyEstimate {
        nu,
        sine: s,
        nu_trace,
        clamp_excess,
    })
}

/// Coefficients of the recurrence multiplied through by γ.
#[derive(Debug, Clone, Copy)]
struct Recurrence {
    gamma: f64,
    e2: f64,
    nu: f64,
}

impl Recurrence {
    fn diag(&self, p: i64) -> f64 {
        let s = p as f64 + self.nu;
        s * s - self.e2
    }
    fn up(&self, p: i64) -> f64 {
        self.gamma * (p as f64 + self.nu + 1.0)
    }
    fn lo(&self, p: i64) -> f64 {
        self.gamma * (p as f64 + self.nu - 1.0)
    }

    /// Modified Lentz evaluation of `a₁/(b₁ + a₂/(b₂ + …))`.
    fn lentz(&self, term: impl Fn(usize) -> (f64, f64)) -> Result<f64> {
        let mut f = TINY;
        let mut c = f;
        let mut d = 0.0;
        for k in 1..=LENTZ_MAX_ITER {
            let (a, b) = term(k);
            d = b + a * d;
            if d.abs() < TINY {
                d = TINY;
            }
            c = b + a / c;
            if c.abs() < TINY {
                c = TINY;
            }
            d = 1.0 / d;
            let delta = c * d;
            f *= delta;
            if (delta - 1.0).abs() < 4.0 * f64::EPSILON {
                return Ok(f);
            }
        }
        Err(Error::Convergence {
            iterations: LENTZ_MAX_ITER,
            residual: f64::NAN,
        })
    }

    /// `F_p / F_{p−1}` of the solution decaying as `p → +∞`.
    fn ratio_up(&self, p: i64) -> Result<f64> {
        self.lentz(|k| {
            let k = k as i64;
            if k == 1 {
                (self.lo(p), self.diag(p))
            } else {
                (-self.up(p + k - 2) * self.lo(p + k - 1), self.diag(p + k - 1))
            }
        })
    }

    /// `F_p / F_{p+1}` of the solution decaying as `p → −∞`.
    fn ratio_down(&self, p: i64) -> Result<f64> {
        self.lentz(|k| {
            let k = k as i64;
            if k == 1 {
                (self.up(p), self.diag(p))
            } else {
                (-self.lo(p - k + 2) * self.up(p - k + 1), self.diag(p - k + 1))
            }
        })
    }

    /// Matching condition at index `m`, scaled to be dimensionless.
    fn characteristic(&self, m: i64) -> Result<f64> {
        let g = self.diag(m) - self.up(m) * self.ratio_up(m + 1)? - self.lo(m) * self.ratio_down(m - 1)?;
        Ok(g / (1.0 + self.diag(m).abs() + self.up(m).abs() + self.lo(m).abs()))
    }

    /// Unnormalized coefficients `F_{−J..=J}` with `F_m = 1`.
    fn coefficients(&self, m: i64, j: i64) -> Result<Vec<f64>> {
        let mut f = vec![0.0; (2 * j + 1) as usize];
        let idx = |p: i64| (p + j) as usize;
        f[idx(m)] = 1.0;
        // Tail ratio by Lentz, interior by the (stable) backward sweep.
        if m < j {
            let mut ratios = vec![0.0; (j - m) as usize];
            let mut r = self.ratio_up(j)?;
            ratios[(j - m - 1) as usize] = r;
            for p in (m + 1..j).rev() {
                let den = self.diag(p) - self.up(p) * r;
                r = self.lo(p) / if den == 0.0 { TINY } else { den };
                ratios[(p - m - 1) as usize] = r;
            }
            for p in m + 1..=j {
                f[idx(p)] = ratios[(p - m - 1) as usize] * f[idx(p - 1)];
            }
        }
        if m > -j {
            let mut ratios = vec![0.0; (m + j) as usize];
            let mut l = self.ratio_down(-j)?;
            ratios[0] = l;
            for p in -j + 1..m {
                let den = self.diag(p) - self.lo(p) * l;
                l = self.up(p) / if den == 0.0 { TINY } else { den };
                ratios[(p + j) as usize] = l;
            }
            for p in (-j..m).rev() {
                f[idx(p)] = ratios[(p + j) as usize] * f[idx(p + 1)];
            }
        }
        Ok(f)
    }

    fn residual(&self, f: &[f64], j: i64) -> f64 {
        let at = |p: i64| if p.abs() > j { 0.0 } else { f[(p + j) as usize] };
        (-j + 1..j)
            .map(|p| (self.diag(p) * at(p) - self.up(p) * at(p + 1) - self.lo(p) * at(p - 1)).abs())
            .fold(0.0, f64::max)
    }
}

/// Exponent, normalized Fourier coefficients and superposition weights.
///
/// `F` is real, `Σ F_p² = 1`, and its largest entry is positive. The
/// second independent solution is `e^{−iνx} F_+(π − x)`; the amplitude `q`
/// equals `A e^{iνx} F_+(x) + B e^{−iνx} F_+(π − x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FloquetData {
    pub gamma: f64,
    pub epsilon: f64,
    pub nu: f64,
    /// Coefficients are stored for `|p| ≤ truncation`.
    pub truncation: usize,
    pub coefficients: Vec<f64>,
    pub m_even: f64,
    pub m_odd: f64,
    pub a: f64,
    pub b: f64,
    /// `+1` when `(A, B) = (M_e, −M_o)/M²`, `−1` when `(A, B) = (M_o, M_e)/M²`.
    pub orientation: f64,
    /// Largest absolute residual of the (γ-scaled) recurrence.
    pub residual: f64,
    /// Mismatch of `q'(0) = iε/2` for the chosen weights.
    pub slope_mismatch: f64,
}

impl FloquetData {
    /// Builds from explicitly supplied coefficients `F_{−J..=J}`.
    pub fn from_coefficients(gamma: f64, epsilon: f64, nu: f64, coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.len() % 2 != 1 {
            return Err(Error::Precondition("coefficient vector must have odd length".into()));
        }
        let truncation = coefficients.len() / 2;
        let mut fd = Self {
            gamma,
            epsilon,
            nu,
            truncation,
            coefficients,
            m_even: 0.0,
            m_odd: 0.0,
            a: 0.0,
            b: 0.0,
            orientation: 1.0,
            residual: 0.0,
            slope_mismatch: 0.0,
        };
        (fd.m_even, fd.m_odd) = mode_sums(&fd.coefficients);
        fd.choose_weights();
        let rec = Recurrence {
            gamma,
            e2: 0.25 * epsilon * epsilon,
            nu,
        };
        fd.residual = rec.residual(&fd.coefficients, truncation as i64);
        Ok(fd)
    }

    /// Uncoupled atom: `q = e^{iεx/2}`, a single Fourier mode.
    pub fn free_atom(params: &ReducedParams) -> Self {
        let eps = params.epsilon;
        let nu = fold_nu(0.5 * eps);
        let shift = 0.5 * eps - nu;
        let n = shift.round();
        let j = n.abs() as usize + 1;
        let mut c = vec![0.0; 2 * j + 1];
        if (shift - n).abs() < 1e-9 {
            c[(n as i64 + j as i64) as usize] = 1.0;
        } else {
            // ε/2 = m − ν: the mode belongs to the mirrored branch.
            let m = -(0.5 * eps + nu).round() as i64;
            c[(m + j as i64) as usize] = 1.0;
        }
        Self::from_coefficients(0.0, eps, nu, c).expect("odd length by construction")
    }

    /// `F_p`, zero outside the stored range.
    pub fn coefficient(&self, p: i64) -> f64 {
        let j = self.truncation as i64;
        if p.abs() > j {
            0.0
        } else {
            self.coefficients[(p + j) as usize]
        }
    }

    pub fn indices(&self) -> impl Iterator<Item = i64> {
        let j = self.truncation as i64;
        -j..=j
    }

    /// `F_+(x) = Σ F_p e^{ipx}` and its derivative.
    pub fn periodic_part(&self, x: f64) -> (C64, C64) {
        let mut f = C64::new(0.0, 0.0);
        let mut fp = C64::new(0.0, 0.0);
        for p in self.indices() {
            let c = self.coefficient(p);
            if c == 0.0 {
                continue;
            }
            let e = C64::from_polar(c, p as f64 * x);
            f += e;
            fp += C64::new(0.0, p as f64) * e;
        }
        (f, fp)
    }

    /// The two Floquet solutions and their derivatives at `x`.
    pub fn branches(&self, x: f64) -> [(C64, C64); 2] {
        let (f, fp) = self.periodic_part(x);
        let (g, gp) = self.periodic_part(PI - x);
        let ep = C64::from_polar(1.0, self.nu * x);
        let em = ep.conj();
        let i_nu = C64::new(0.0, self.nu);
        [
            (ep * f, ep * (i_nu * f + fp)),
            (em * g, em * (-i_nu * g - gp)),
        ]
    }

    /// `q(x)` reconstructed from the Floquet representation.
    pub fn q(&self, x: f64) -> (C64, C64) {
        let [(p1, d1), (p2, d2)] = self.branches(x);
        (self.a * p1 + self.b * p2, self.a * d1 + self.b * d2)
    }

    /// Periodic and Floquet-shifted parts `(Δ₁, Δ₂)` of `D(x)`.
    pub fn delta_split(&self, x: f64) -> (f64, f64) {
        let (f, _) = self.periodic_part(x);
        let (g, _) = self.periodic_part(PI - x);
        let d1 = self.a * self.a * f.norm_sqr() + self.b * self.b * g.norm_sqr() - 1.0;
        let d2 = 2.0 * self.a * self.b * (C64::from_polar(1.0, 2.0 * self.nu * x) * f * g.conj()).re;
        (d1, d2)
    }

    /// Periodic and Floquet-shifted parts `(Π₁, Π₂)` of `W(x)`.
    pub fn pi_split(&self, x: f64) -> (f64, f64) {
        let [(p1, d1), (p2, d2)] = self.branches(x);
        let k = -2.0 / self.epsilon;
        let direct = self.a * self.a * (p1.conj() * d1).im + self.b * self.b * (p2.conj() * d2).im;
        let cross = self.a * self.b * ((p1.conj() * d2).im + (p2.conj() * d1).im);
        (k * direct, k * cross)
    }

    fn choose_weights(&mut self) {
        let m2 = self.m_even * self.m_even + self.m_odd * self.m_odd;
        if m2 == 0.0 {
            return;
        }
        let (mut s1, mut t1) = (0.0, 0.0);
        for p in self.indices() {
            let w = (p as f64 + self.nu) * self.coefficient(p);
            s1 += w;
            t1 += if p % 2 == 0 { w } else { -w };
        }
        let half = 0.5 * self.epsilon;
        let plus = (self.m_even / m2, -self.m_odd / m2);
        let minus = (self.m_odd / m2, self.m_even / m2);
        let r_plus = (plus.0 * s1 - plus.1 * t1 - half).abs();
        let r_minus = (minus.0 * s1 - minus.1 * t1 - half).abs();
        let ((a, b), o, r) = if r_plus <= r_minus {
            (plus, 1.0, r_plus)
        } else {
            (minus, -1.0, r_minus)
        };
        self.a = a;
        self.b = b;
        self.orientation = o;
        self.slope_mismatch = r;
    }
}

/// `(M_e, M_o) = (Σ F_{2r}, Σ F_{2r+1})` for coefficients stored on
/// `−J..=J`.
pub fn mode_sums(coefficients: &[f64]) -> (f64, f64) {
    let j = (coefficients.len() / 2) as i64;
    let (mut e, mut o) = (0.0, 0.0);
    for (i, c) in coefficients.iter().enumerate() {
        if (i as i64 - j) % 2 == 0 {
            e += c;
        } else {
            o += c;
        }
    }
    (e, o)
}

fn default_truncation(params: &ReducedParams) -> usize {
    (0.5 * params.epsilon * params.lambda + 2.0 * params.gamma).ceil() as usize + 24
}

/// Solves the recurrence by continued fractions, refining `nu_seed` to a
/// root of the matching condition. The result is folded into `[0, ½]`.
pub fn solve_recurrence(params: &ReducedParams, nu_seed: f64, truncation: Option<usize>) -> Result<FloquetData> {
    if params.gamma == 0.0 {
        return Err(Error::Degenerate(
            "γ = 0 decouples the recurrence; use FloquetData::free_atom".into(),
        ));
    }
    if !nu_seed.is_finite() {
        return Err(Error::Domain(format!("seed must be finite, got {nu_seed}")));
    }
    let mut j = truncation.unwrap_or_else(|| default_truncation(params)).max(4) as i64;
    let e2 = 0.25 * params.epsilon * params.epsilon;
    let rec_at = |nu: f64| Recurrence {
        gamma: params.gamma,
        e2,
        nu,
    };

    for _ in 0..6 {
        let m = matching_index(&rec_at(nu_seed), j)?;
        let nu = refine_root(|nu| rec_at(nu).characteristic(m), nu_seed)?;
        let nu = fold_nu(nu);
        let rec = rec_at(nu);
        let m = matching_index(&rec, j)?;
        let mut f = rec.coefficients(m, j)?;
        let (imax, fmax) = f
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .map(|(i, v)| (i, *v))
            .unwrap();
        let tail = f[0].abs().max(f[f.len() - 1].abs());
        if tail > 1e-13 * fmax.abs() && truncation.is_none() {
            log::debug!("truncation {j} too short (tail {tail:e}); doubling");
            j *= 2;
            continue;
        }
        let norm = f.iter().map(|c| c * c).sum::<f64>().sqrt() * f[imax].signum();
        for c in &mut f {
            *c /= norm;
        }
        return FloquetData::from_coefficients(params.gamma, params.epsilon, nu, f);
    }
    Err(Error::Convergence {
        iterations: 6,
        residual: f64::NAN,
    })
}

/// Index of the largest coefficient at this ν, found by iterating from the
/// most resonant index.
fn matching_index(rec: &Recurrence, j: i64) -> Result<i64> {
    let mut m = (-j..=j)
        .min_by(|&a, &b| rec.diag(a).abs().total_cmp(&rec.diag(b).abs()).then(b.cmp(&a)))
        .unwrap();
    for _ in 0..4 {
        let f = rec.coefficients(m, j)?;
        let best = f
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .map(|(i, _)| i as i64 - j)
            .unwrap();
        // Keep the matching index away from the ends.
        let best = best.clamp(-j + 2, j - 2);
        if best == m {
            break;
        }
        m = best;
    }
    Ok(m)
}

fn refine_root<G: Fn(f64) -> Result<f64>>(g: G, seed: f64) -> Result<f64> {
    let g0 = g(seed)?;
    if g0 == 0.0 {
        return Ok(seed);
    }
    let edge = seed.rem_euclid(0.5).min(0.5 - seed.rem_euclid(0.5));
    let mut d = (0.4 * edge).clamp(1e-12, 1e-8);
    while d < 0.3 {
        let (lo, hi) = (seed - d, seed + d);
        let (glo, ghi) = (g(lo)?, g(hi)?);
        if glo == 0.0 {
            return Ok(lo);
        }
        if ghi == 0.0 {
            return Ok(hi);
        }
        if glo.signum() != g0.signum() {
            return brent(&g, lo, seed, glo, g0);
        }
        if ghi.signum() != g0.signum() {
            return brent(&g, seed, hi, g0, ghi);
        }
        d *= 3.0;
    }
    // A double root (ν at 0 or ½) touches zero without a sign change.
    let (x, gx) = golden_min(|x| g(x).map(f64::abs), seed - 1e-4, seed + 1e-4)?;
    if gx < 1e-9 {
        Ok(x)
    } else {
        Err(Error::Convergence {
            iterations: 0,
            residual: gx,
        })
    }
}

fn brent<G: Fn(f64) -> Result<f64>>(g: &G, mut a: f64, mut b: f64, mut fa: f64, mut fb: f64) -> Result<f64> {
    const TOL: f64 = 1e-16;
    if fa.abs() < fb.abs() {
        std::mem::swap(&mut a, &mut b);
        std::mem::swap(&mut fa, &mut fb);
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * TOL;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            if 2.0 * p < (3.0 * xm * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(xm) };
        fb = g(b)?;
    }
    Err(Error::Convergence {
        iterations: 200,
        residual: fb.abs(),
    })
}

fn golden_min<G: Fn(f64) -> Result<f64>>(g: G, mut a: f64, mut b: f64) -> Result<(f64, f64)> {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut gc, mut gd) = (g(c)?, g(d)?);
    while (b - a).abs() > 1e-15 {
        if gc < gd {
            b = d;
            d = c;
            gd = gc;
            c = b - r * (b - a);
            gc = g(c)?;
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + r * (b - a);
            gd = g(d)?;
        }
    }
    let x = 0.5 * (a + b);
    Ok((x, g(x)?))
}

/// How `fit_superposition` obtained its weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitMethod {
    InitialConditions,
    LeastSquares,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuperpositionFit {
    pub a: C64,
    pub b: C64,
    pub method: FitMethod,
    /// Condition number of the initial-condition system.
    pub condition: f64,
    /// `max |A φ₊ + B φ₋ − q|` over the grid.
    pub max_error: f64,
}

/// Condition number of a complex 2×2 matrix.
fn cond2(m: [[C64; 2]; 2]) -> f64 {
    let fro2: f64 = m.iter().flatten().map(|z| z.norm_sqr()).sum();
    let det = (m[0][0] * m[1][1] - m[0][1] * m[1][0]).norm();
    let disc = (fro2 * fro2 - 4.0 * det * det).max(0.0).sqrt();
    let smax = (0.5 * (fro2 + disc)).sqrt();
    let smin2 = 0.5 * (fro2 - disc);
    let smin = if smin2 > 0.0 { smin2.sqrt() } else { det / smax };
    if smin == 0.0 {
        f64::INFINITY
    } else {
        smax / smin
    }
}

fn solve2(m: [[C64; 2]; 2], r: [C64; 2]) -> (C64, C64) {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    (
        (r[0] * m[1][1] - m[0][1] * r[1]) / det,
        (m[0][0] * r[1] - m[1][0] * r[0]) / det,
    )
}

/// Determines `q = A φ₊ + B φ₋` from the initial data, falling back to a
/// least-squares fit over the whole grid when the 2×2 system is
/// ill-conditioned (ν near 0 or ½).
pub fn fit_superposition(grid: &SolutionGrid, floquet: &FloquetData) -> Result<SuperpositionFit> {
    let [(p0, dp0), (m0, dm0)] = floquet.branches(0.0);
    let mat = [[p0, m0], [dp0, dm0]];
    let condition = cond2(mat);
    let (q, _) = crate::ode::q_of_x(grid);
    let phis: Vec<[C64; 2]> = grid
        .x
        .iter()
        .map(|&x| {
            let [(a, _), (b, _)] = floquet.branches(x);
            [a, b]
        })
        .collect();
    let (a, b, method) = if condition <= 1e6 {
        let (a, b) = solve2(mat, [C64::new(1.0, 0.0), C64::new(0.0, 0.5 * grid.epsilon)]);
        (a, b, FitMethod::InitialConditions)
    } else {
        log::warn!("initial-condition system has condition number {condition:e}; using least squares");
        let mut n = [[C64::new(0.0, 0.0); 2]; 2];
        let mut r = [C64::new(0.0, 0.0); 2];
        for (phi, qk) in phis.iter().zip(&q) {
            for i in 0..2 {
                for k in 0..2 {
                    n[i][k] += phi[i].conj() * phi[k];
                }
                r[i] += phi[i].conj() * qk;
            }
        }
        let c = cond2(n);
        if c > 1e14 {
            return Err(Error::Conditioning {
                cond: c,
                hint: "the two Floquet branches are numerically dependent".into(),
            });
        }
        let (a, b) = solve2(n, r);
        (a, b, FitMethod::LeastSquares)
    };
    let max_error = phis
        .iter()
        .zip(&q)
        .map(|(phi, qk)| (a * phi[0] + b * phi[1] - qk).norm())
        .fold(0.0, f64::max);
    Ok(SuperpositionFit {
        a,
        b,
        method,
        condition,
        max_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fold() {
        assert_eq!(fold_nu(0.25), 0.25);
        assert_eq!(fold_nu(0.75), 0.25);
        assert!((fold_nu(-0.1) - 0.1).abs() < 1e-15);
        assert_eq!(fold_nu(1.0), 0.0);
        assert_eq!(fold_nu(1.5), 0.5);
    }

    #[test]
    fn toy_mode_sums() {
        let (e, o) = mode_sums(&[0.0, 1.0, 0.0]);
        assert_eq!((e, o), (1.0, 0.0));
        let (e, o) = mode_sums(&[0.0, 0.0, 0.0, 1.0, 0.0]);
        assert_eq!((e, o), (0.0, 1.0));
    }

    #[test]
    fn free_atom_branch() {
        let p = ReducedParams::new(0.0, 1.0).unwrap();
        let f = FloquetData::free_atom(&p);
        assert_eq!(f.nu, 0.5);
        assert!((f.a - 1.0).abs() < 1e-15 && f.b.abs() < 1e-15);
        for &x in &[0.0, 0.7, 2.0] {
            let (q, _) = f.q(x);
            assert!((q - C64::from_polar(1.0, 0.5 * x)).norm() < 1e-14);
        }
        for &eps in &[0.5, 2.0, 2.6, 3.3] {
            let f = FloquetData::free_atom(&ReducedParams::new(0.0, eps).unwrap());
            for &x in &[0.3, 1.9] {
                let (q, qp) = f.q(x);
                let want = C64::from_polar(1.0, 0.5 * eps * x);
                assert!((q - want).norm() < 1e-13, "ε = {eps}");
                assert!((qp - C64::new(0.0, 0.5 * eps) * want).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn gamma_zero_is_degenerate() {
        let p = ReducedParams::new(0.0, 1.0).unwrap();
        assert!(matches!(solve_recurrence(&p, 0.5, None), Err(Error::Degenerate(_))));
    }

    #[test]
    fn lentz_on_golden_ratio() {
        // 1/(1 + 1/(1 + …)) = (√5 − 1)/2
        let rec = Recurrence { gamma: 1.0, e2: 0.0, nu: 0.0 };
        let v = rec.lentz(|_| (1.0, 1.0)).unwrap();
        assert!((v - 0.5 * (5f64.sqrt() - 1.0)).abs() < 1e-15);
    }
}
