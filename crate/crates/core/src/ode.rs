//! Fundamental solutions of `q'' − 2iγ cos x q' + (ε²/4) q = 0` and the
//! dipole/inversion series derived from them.
//!
//! Only the quarter period `[0, π/2]` is integrated. The reflection
//! `x → π − x` and the half-period shift `x → x + π` map solutions to
//! solutions, so the rest of the real line follows algebraically.

use std::f64::consts::{FRAC_PI_2, TAU};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{self, StepControl};
use crate::params::ReducedParams;

/// Values of the fundamental pair at the quarter and half period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtensionBasis {
    pub u_quarter: C64,
    pub up_quarter: C64,
    pub v_quarter: C64,
    pub vp_quarter: C64,
    pub u_half: C64,
    pub up_half: C64,
    pub v_half: C64,
    pub vp_half: C64,
}

/// Largest violations of the conserved quantities over a grid.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ToleranceReport {
    /// `max | |u|² + (ε²/4)|v|² − 1 |`.
    pub first_integral: f64,
    /// Max of `|u' + (ε²/4) e^{2iγ sin x} v*|` and `|v' − e^{2iγ sin x} u*|`.
    pub derivative_relations: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

/// `u`, `v` and their derivatives on the uniform grid `x_i = 2πi/N`.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionGrid {
    pub gamma: f64,
    pub epsilon: f64,
    /// `N`, the number of grid intervals per 2π.
    pub nodes_per_period: usize,
    pub x: Vec<f64>,
    pub u: Vec<C64>,
    pub up: Vec<C64>,
    pub v: Vec<C64>,
    pub vp: Vec<C64>,
    /// Present once the grid has been extended past `π/2`.
    pub basis: Option<ExtensionBasis>,
    pub report: ToleranceReport,
}

impl SolutionGrid {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn step(&self) -> f64 {
        TAU / self.nodes_per_period as f64
    }

    pub fn x_max(&self) -> f64 {
        self.x.last().copied().unwrap_or(0.0)
    }

    /// `|u|² + (ε²/4)|v|² − 1` at node `i`.
    pub fn first_integral_deviation(&self, i: usize) -> f64 {
        self.u[i].norm_sqr() + 0.25 * self.epsilon * self.epsilon * self.v[i].norm_sqr() - 1.0
    }

    /// Index of the node at `x`, if `x` is (to rounding) a grid node.
    pub fn node_index(&self, x: f64) -> Option<usize> {
        let r = x / self.step();
        let i = r.round();
        ((r - i).abs() < 1e-6 && i >= 0.0 && (i as usize) < self.len()).then_some(i as usize)
    }

    fn tolerance_report(&self) -> ToleranceReport {
        let e2 = 0.25 * self.epsilon * self.epsilon;
        let mut rep = self.report;
        rep.first_integral = 0.0;
        rep.derivative_relations = 0.0;
        for i in 0..self.len() {
            rep.first_integral = rep.first_integral.max(self.first_integral_deviation(i).abs());
            let ph = C64::from_polar(1.0, 2.0 * self.gamma * self.x[i].sin());
            let r1 = (self.up[i] + e2 * ph * self.v[i].conj()).norm();
            let r2 = (self.vp[i] - ph * self.u[i].conj()).norm();
            rep.derivative_relations = rep.derivative_relations.max(r1).max(r2);
        }
        rep
    }
}

fn grid_nodes(n: usize, nodes_per_period: usize) -> Vec<f64> {
    (0..n).map(|i| TAU * i as f64 / nodes_per_period as f64).collect()
}

/// Integrates the fundamental pair directly on `[0, 2π·last/N]` without any
/// symmetry shortcut. `ε = 0` is accepted here.
pub fn integrate_direct(
    gamma: f64,
    epsilon: f64,
    last_node: usize,
    control: &StepControl,
) -> Result<SolutionGrid> {
    control.validate()?;
    if !(epsilon >= 0.0 && epsilon.is_finite() && gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::Domain(format!(
            "need γ ≥ 0 and ε ≥ 0, got γ = {gamma}, ε = {epsilon}"
        )));
    }
    let e2 = 0.25 * epsilon * epsilon;
    let rhs = |x: f64, y: &[f64; 8], d: &mut [f64; 8]| {
        let g = 2.0 * gamma * x.cos();
        // u, then v: value (re, im), slope (re, im).
        for o in [0, 4] {
            d[o] = y[o + 2];
            d[o + 1] = y[o + 3];
            d[o + 2] = -g * y[o + 3] - e2 * y[o];
            d[o + 3] = g * y[o + 2] - e2 * y[o + 1];
        }
    };
    let nodes = grid_nodes(last_node + 1, control.nodes_per_period);
    let y0 = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0];
    let (ys, stats) = integrator::solve_dense(rhs, 0.0, y0, &nodes, control)?;
    let mut g = SolutionGrid {
        gamma,
        epsilon,
        nodes_per_period: control.nodes_per_period,
        u: ys.iter().map(|y| C64::new(y[0], y[1])).collect(),
        up: ys.iter().map(|y| C64::new(y[2], y[3])).collect(),
        v: ys.iter().map(|y| C64::new(y[4], y[5])).collect(),
        vp: ys.iter().map(|y| C64::new(y[6], y[7])).collect(),
        x: nodes,
        basis: None,
        report: ToleranceReport {
            accepted_steps: stats.accepted,
            rejected_steps: stats.rejected,
            ..ToleranceReport::default()
        },
    };
    g.report = g.tolerance_report();
    Ok(g)
}

/// Fundamental pair on `[0, π/2]`.
pub fn integrate_uv(params: &ReducedParams, control: &StepControl) -> Result<SolutionGrid> {
    integrate_direct(params.gamma, params.epsilon, control.nodes_per_period / 4, control)
}

/// Extends a quarter-period grid to `[0, x_max]` (rounded up to a node).
pub fn extend_solution(grid: &SolutionGrid, x_max: f64) -> Result<SolutionGrid> {
    let n = grid.nodes_per_period;
    let q = n / 4;
    if grid.len() < q + 1 || (grid.x[q] - FRAC_PI_2).abs() > 1e-12 {
        return Err(Error::Precondition(format!(
            "extension needs a grid covering [0, π/2]; this one ends at {}",
            grid.x_max()
        )));
    }
    if !(x_max >= 0.0 && x_max.is_finite()) {
        return Err(Error::Domain(format!("x_max must be finite and non-negative, got {x_max}")));
    }
    let last = (x_max / grid.step() - 1e-9).ceil().max(0.0) as usize;
    let e2 = 0.25 * grid.epsilon * grid.epsilon;

    let (a, ap, b, bp) = (grid.u[q], grid.up[q], grid.v[q], grid.vp[q]);
    let wr = a * bp - ap * b;
    // r(x) = z(π − x) solves the same equation; match r and r' at π/2.
    let u_half = (a * bp + ap * b) / wr;
    let up_half = 2.0 * a * ap / wr;
    let v_half = 2.0 * b * bp / wr;
    let vp_half = (a * bp + ap * b) / wr;

    let total = last + 1;
    let mut u = Vec::with_capacity(total);
    let mut up = Vec::with_capacity(total);
    let mut v = Vec::with_capacity(total);
    let mut vp = Vec::with_capacity(total);
    for i in 0..total.min(q + 1) {
        u.push(grid.u[i]);
        up.push(grid.up[i]);
        v.push(grid.v[i]);
        vp.push(grid.vp[i]);
    }
    // (π/2, π]: reflection.
    for i in (q + 1)..total.min(2 * q + 1) {
        let j = 2 * q - i;
        u.push(u_half * grid.u[j] - up_half * grid.v[j]);
        up.push(-(u_half * grid.up[j] - up_half * grid.vp[j]));
        v.push(v_half * grid.u[j] - vp_half * grid.v[j]);
        vp.push(-(v_half * grid.up[j] - vp_half * grid.vp[j]));
    }
    // x > π: half-period shift applied to already-known values.
    let cu = u_half;
    let cv = -e2 * v_half.conj();
    let du = v_half;
    let dv = u_half.conj();
    for i in (2 * q + 1)..total {
        let j = i - 2 * q;
        let (uj, upj, vj, vpj) = (u[j].conj(), up[j].conj(), v[j].conj(), vp[j].conj());
        u.push(cu * uj + cv * vj);
        up.push(cu * upj + cv * vpj);
        v.push(du * uj + dv * vj);
        vp.push(du * upj + dv * vpj);
    }
    let mut out = SolutionGrid {
        gamma: grid.gamma,
        epsilon: grid.epsilon,
        nodes_per_period: n,
        x: grid_nodes(total, n),
        u,
        up,
        v,
        vp,
        basis: Some(ExtensionBasis {
            u_quarter: a,
            up_quarter: ap,
            v_quarter: b,
            vp_quarter: bp,
            u_half,
            up_half,
            v_half,
            vp_half,
        }),
        report: grid.report,
    };
    out.report = out.tolerance_report();
    Ok(out)
}

/// Integrates on `[0, π/2]` and extends to `[0, x_max]`.
pub fn solve(params: &ReducedParams, control: &StepControl, x_max: f64) -> Result<SolutionGrid> {
    let quarter = integrate_uv(params, control)?;
    extend_solution(&quarter, x_max)
}

/// `q = u + i(ε/2) v` and its derivative at every node.
pub fn q_of_x(grid: &SolutionGrid) -> (Vec<C64>, Vec<C64>) {
    let c = C64::new(0.0, 0.5 * grid.epsilon);
    let q = grid.u.iter().zip(&grid.v).map(|(u, v)| u + c * v).collect();
    let qp = grid.up.iter().zip(&grid.vp).map(|(u, v)| u + c * v).collect();
    (q, qp)
}

/// Dipole `D` and inversion `W` with their analytic first derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct BlochSeries {
    pub gamma: f64,
    pub epsilon: f64,
    pub nodes_per_period: usize,
    pub x: Vec<f64>,
    pub d: Vec<f64>,
    pub w: Vec<f64>,
    pub d_prime: Vec<f64>,
    pub w_prime: Vec<f64>,
}

impl BlochSeries {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// `D = ε Im(u v*)`, `W = −Re[e^{−2iγ sin x}(u² + (ε²/4) v²)]`.
pub fn dipole_inversion(grid: &SolutionGrid) -> BlochSeries {
    let eps = grid.epsilon;
    let e2 = 0.25 * eps * eps;
    let n = grid.len();
    let mut s = BlochSeries {
        gamma: grid.gamma,
        epsilon: eps,
        nodes_per_period: grid.nodes_per_period,
        x: grid.x.clone(),
        d: Vec::with_capacity(n),
        w: Vec::with_capacity(n),
        d_prime: Vec::with_capacity(n),
        w_prime: Vec::with_capacity(n),
    };
    for i in 0..n {
        let (u, up, v, vp) = (grid.u[i], grid.up[i], grid.v[i], grid.vp[i]);
        let x = grid.x[i];
        s.d.push(eps * (u * v.conj()).im);
        s.d_prime.push(eps * (up * v.conj() + u * vp.conj()).im);
        let ph = C64::from_polar(1.0, -2.0 * grid.gamma * x.sin());
        let z = u * u + e2 * v * v;
        let zp = 2.0 * u * up + 2.0 * e2 * v * vp;
        s.w.push(-(ph * z).re);
        let dz = C64::new(0.0, -2.0 * grid.gamma * x.cos()) * z + zp;
        s.w_prime.push(-(ph * dz).re);
    }
    s
}

/// Maximum residuals of the second-order Bloch system along a series.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BlochResiduals {
    /// `D'' + ε² D − 2εγ cos x W`, with `D''` from differences of `D'`.
    pub dipole: f64,
    /// `W' + (2γ/ε) cos x D'`.
    pub inversion: f64,
    /// `D'² + ε² D² + ε² W² − ε²`.
    pub invariant: f64,
}

/// Evaluates the Bloch-system residuals. `D''` uses a sixth-order central
/// difference of the analytic `D'`, so the first and last three nodes are
/// skipped for that equation.
pub fn bloch_residuals(s: &BlochSeries) -> Result<BlochResiduals> {
    if s.epsilon <= 0.0 {
        return Err(Error::Domain("residuals need ε > 0".into()));
    }
    if s.len() < 7 {
        return Err(Error::Precondition("need at least 7 nodes".into()));
    }
    let (g, e) = (s.gamma, s.epsilon);
    let h = TAU / s.nodes_per_period as f64;
    let mut r = BlochResiduals::default();
    let dp = &s.d_prime;
    for i in 3..s.len() - 3 {
        let dpp = (-dp[i - 3] + 9.0 * dp[i - 2] - 45.0 * dp[i - 1] + 45.0 * dp[i + 1]
            - 9.0 * dp[i + 2]
            + dp[i + 3])
            / (60.0 * h);
        let c = s.x[i].cos();
        r.dipole = r.dipole.max((dpp + e * e * s.d[i] - 2.0 * e * g * c * s.w[i]).abs());
    }
    for i in 0..s.len() {
        let c = s.x[i].cos();
        r.inversion = r.inversion.max((s.w_prime[i] + 2.0 * g / e * c * dp[i]).abs());
        let inv = dp[i] * dp[i] + e * e * (s.d[i] * s.d[i] + s.w[i] * s.w[i]) - e * e;
        r.invariant = r.invariant.max(inv.abs());
    }
    Ok(r)
}

/// `Re u(2π)` predicted from quarter-period data.
pub fn monodromy_trace_from_quarter(grid: &SolutionGrid) -> Result<f64> {
    let q = grid.nodes_per_period / 4;
    if grid.len() <= q {
        return Err(Error::Precondition("grid does not reach π/2".into()));
    }
    let s = grid.epsilon * (grid.u[q] * grid.v[q].conj()).re;
    Ok(1.0 - 2.0 * s * s)
}
