//! Emission line amplitudes of the dipole `D(x)` and inversion `W(x)`.
//!
//! `D` carries odd harmonics `2j+1` and hyper-Raman lines `2(j ± ν)`; `W`
//! carries even harmonics `2j` and shifted odd lines `2j+1 ± 2ν`. Amplitudes
//! come from three independent routes: continued-fraction sums over the
//! Floquet coefficients, quadrature of a periodic/shifted split, and a
//! least-squares projection of a sampled series onto the known frequencies.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::floquet::FloquetData;
use crate::ode::BlochSeries;
use crate::params::ReducedParams;
use crate::quad;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LineClass {
    /// `D`, frequency `2j+1`.
    OddHarmonic,
    /// `D`, frequency `2(j+ν)`.
    #[serde(rename = "hyperraman-up")]
    HyperRamanUp,
    /// `D`, frequency `2(j−ν)`, `j ≥ 1`.
    #[serde(rename = "hyperraman-down")]
    HyperRamanDown,
    /// `W`, frequency `2j`.
    EvenHarmonic,
    /// `W`, frequency `2j+1+2ν`.
    ShiftedOddUp,
    /// `W`, frequency `2j+1−2ν`.
    ShiftedOddDown,
}

impl LineClass {
    pub const DIPOLE: [LineClass; 3] = [Self::OddHarmonic, Self::HyperRamanUp, Self::HyperRamanDown];
    pub const INVERSION: [LineClass; 3] = [Self::EvenHarmonic, Self::ShiftedOddUp, Self::ShiftedOddDown];

    pub fn is_dipole(self) -> bool {
        matches!(self, Self::OddHarmonic | Self::HyperRamanUp | Self::HyperRamanDown)
    }

    pub fn frequency(self, j: usize, nu: f64) -> f64 {
        let j = j as f64;
        match self {
            Self::OddHarmonic => 2.0 * j + 1.0,
            Self::HyperRamanUp => 2.0 * (j + nu),
            Self::HyperRamanDown => 2.0 * (j - nu),
            Self::EvenHarmonic => 2.0 * j,
            Self::ShiftedOddUp => 2.0 * j + 1.0 + 2.0 * nu,
            Self::ShiftedOddDown => 2.0 * j + 1.0 - 2.0 * nu,
        }
    }

    /// Smallest index for which the class is defined.
    pub fn first_index(self) -> usize {
        if self == Self::HyperRamanDown {
            1
        } else {
            0
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::OddHarmonic => "odd-harmonic",
            Self::HyperRamanUp => "hyperraman-up",
            Self::HyperRamanDown => "hyperraman-down",
            Self::EvenHarmonic => "even-harmonic",
            Self::ShiftedOddUp => "shifted-odd-up",
            Self::ShiftedOddDown => "shifted-odd-down",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    Cf,
    Quadrature,
    Projection,
    Wkb,
}

impl Route {
    pub fn label(self) -> &'static str {
        match self {
            Self::Cf => "cf",
            Self::Quadrature => "quadrature",
            Self::Projection => "projection",
            Self::Wkb => "wkb",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumLine {
    pub freq: f64,
    pub amplitude: f64,
    pub class: LineClass,
    pub j: usize,
    pub route: Route,
}

impl SpectrumLine {
    pub fn new(class: LineClass, j: usize, nu: f64, amplitude: f64, route: Route) -> Self {
        Self {
            freq: class.frequency(j, nu),
            amplitude,
            class,
            j,
            route,
        }
    }
}

/// Lines of one parameter point, possibly from several routes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSet {
    pub params: ReducedParams,
    pub nu: f64,
    pub lines: Vec<SpectrumLine>,
    /// Largest `|1 + Σ W amplitudes|` over the routes that produced `W` lines.
    pub w0_sumrule_residual: f64,
}

impl SpectrumSet {
    pub fn new(params: ReducedParams, nu: f64, lines: Vec<SpectrumLine>) -> Self {
        let mut routes: Vec<Route> = lines.iter().map(|l| l.route).collect();
        routes.sort();
        routes.dedup();
        let w0_sumrule_residual = routes
            .into_iter()
            .filter_map(|r| sum_rule_residual(&lines, r))
            .fold(0.0, f64::max);
        Self {
            params,
            nu,
            lines,
            w0_sumrule_residual,
        }
    }

    pub fn route(&self, route: Route) -> impl Iterator<Item = &SpectrumLine> {
        self.lines.iter().filter(move |l| l.route == route)
    }
}

/// `|1 + Σ W|` over the inversion lines of `route`; `W(0) = −1` makes this
/// vanish for a complete set. `None` if the route has no inversion lines.
pub fn sum_rule_residual(lines: &[SpectrumLine], route: Route) -> Option<f64> {
    let mut any = false;
    let mut total = 1.0;
    for l in lines.iter().filter(|l| l.route == route && !l.class.is_dipole()) {
        any = true;
        total += l.amplitude;
    }
    any.then_some(total.abs())
}

/// Amplitude lookup keyed by `(class, j)`.
#[derive(Debug, Clone, Default)]
pub struct LineTable(BTreeMap<(LineClass, usize), f64>);

impl LineTable {
    pub fn from_lines<'a>(lines: impl IntoIterator<Item = &'a SpectrumLine>) -> Self {
        Self(lines.into_iter().map(|l| ((l.class, l.j), l.amplitude)).collect())
    }

    pub fn get(&self, class: LineClass, j: usize) -> Option<f64> {
        self.0.get(&(class, j)).copied()
    }

    /// Largest contiguous index available for `class`.
    pub fn max_index(&self, class: LineClass) -> Option<usize> {
        let mut j = class.first_index();
        if self.get(class, j).is_none() {
            return None;
        }
        while self.get(class, j + 1).is_some() {
            j += 1;
        }
        Some(j)
    }
}

/// Dipole amplitudes from the Floquet coefficients, for `j ≤ j_max`.
pub fn dipole_amps_cf(floquet: &FloquetData, j_max: usize) -> Result<Vec<SpectrumLine>> {
    let (me, mo) = (floquet.m_even, floquet.m_odd);
    let m2 = me * me + mo * mo;
    if m2 < 1e-14 {
        return Err(Error::Degenerate(format!(
            "mode sums vanish (M_e² + M_o² = {m2:e}); normalization undefined"
        )));
    }
    let s = floquet.orientation;
    let c_odd = s * 2.0 * (me * me - mo * mo) / (m2 * m2);
    let c_hr = -s * 2.0 * me * mo / (m2 * m2);
    let f = |p: i64| floquet.coefficient(p);
    let nu = floquet.nu;
    let mut lines = Vec::with_capacity(3 * j_max + 2);
    for j in 0..=j_max {
        let sum: f64 = floquet.indices().map(|r| f(r) * f(r + 2 * j as i64 + 1)).sum();
        lines.push(SpectrumLine::new(LineClass::OddHarmonic, j, nu, c_odd * sum, Route::Cf));
    }
    let shifted = |shift: i64| -> f64 {
        floquet
            .indices()
            .map(|r| {
                let sign = if r % 2 == 0 { 1.0 } else { -1.0 };
                sign * f(-r) * f(r + shift)
            })
            .sum()
    };
    for j in 0..=j_max {
        let up = c_hr * shifted(2 * j as i64);
        lines.push(SpectrumLine::new(LineClass::HyperRamanUp, j, nu, up, Route::Cf));
    }
    for j in 1..=j_max {
        let down = c_hr * shifted(-2 * j as i64);
        lines.push(SpectrumLine::new(LineClass::HyperRamanDown, j, nu, down, Route::Cf));
    }
    Ok(lines)
}

/// Inversion amplitudes from dipole amplitudes via `W' = −(2γ/ε) cos x D'`.
///
/// Dipole lines must be present for `j ≤ j_max + 1`; `W_0` closes the sum
/// rule `W(0) = −1`. The output inherits the route of the input lines.
pub fn inversion_amps(dipole: &[SpectrumLine], nu: f64, params: &ReducedParams, j_max: usize) -> Result<Vec<SpectrumLine>> {
    let route = dipole.first().map(|l| l.route).unwrap_or(Route::Cf);
    let t = LineTable::from_lines(dipole);
    let need = j_max + 1;
    for class in LineClass::DIPOLE {
        if t.max_index(class).is_none_or(|m| m < need) {
            return Err(Error::Precondition(format!(
                "{} lines must reach j = {need}",
                class.label()
            )));
        }
    }
    if (1.0 - 2.0 * nu).abs() < 1e-12 {
        return Err(Error::Degenerate(
            "ν = ½ makes the lowest shifted inversion line singular; use the projection route".into(),
        ));
    }
    let k = -params.gamma / params.epsilon;
    let d = |c: LineClass, j: usize| t.get(c, j).unwrap();
    use LineClass::*;
    let mut lines = Vec::with_capacity(3 * j_max + 3);
    let mut others = 0.0;
    for j in 1..=j_max {
        let (a, b) = (d(OddHarmonic, j), d(OddHarmonic, j - 1));
        let w = k * (a + b + (a - b) / (2.0 * j as f64));
        others += w;
        lines.push(SpectrumLine::new(EvenHarmonic, j, nu, w, route));
    }
    for j in 0..=j_max {
        let (a, b) = (d(HyperRamanUp, j), d(HyperRamanUp, j + 1));
        let w = k * (a + b + (b - a) / (2.0 * j as f64 + 1.0 + 2.0 * nu));
        others += w;
        lines.push(SpectrumLine::new(ShiftedOddUp, j, nu, w, route));
    }
    {
        let (a, b) = (d(HyperRamanUp, 0), d(HyperRamanDown, 1));
        let w = k * (a + b + (b - a) / (1.0 - 2.0 * nu));
        others += w;
        lines.push(SpectrumLine::new(ShiftedOddDown, 0, nu, w, route));
    }
    for j in 1..=j_max {
        let (a, b) = (d(HyperRamanDown, j), d(HyperRamanDown, j + 1));
        let w = k * (a + b + (b - a) / (2.0 * j as f64 + 1.0 - 2.0 * nu));
        others += w;
        lines.push(SpectrumLine::new(ShiftedOddDown, j, nu, w, route));
    }
    lines.insert(0, SpectrumLine::new(EvenHarmonic, 0, nu, -1.0 - others, route));
    Ok(lines)
}

/// Settings for [`amps_by_projection`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionOptions {
    pub j_max: usize,
    /// Number of 2π periods used; at least 32.
    pub periods: usize,
    pub samples_per_period: usize,
    /// Largest tolerated condition number of the design matrix.
    pub max_condition: f64,
}

impl Default for ProjectionOptions {
    fn default() -> Self {
        Self {
            j_max: 24,
            periods: 64,
            samples_per_period: 512,
            max_condition: 1e8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionResult {
    pub lines: Vec<SpectrumLine>,
    pub condition_d: f64,
    pub condition_w: f64,
    /// Largest pointwise misfit of the `D` and `W` fits.
    pub residual_d: f64,
    pub residual_w: f64,
}

/// Candidate lines for one quantity, with collided frequencies merged.
fn frequency_set(classes: [LineClass; 3], j_max: usize, nu: f64) -> Vec<(LineClass, usize, f64)> {
    let mut out: Vec<(LineClass, usize, f64)> = Vec::new();
    for class in classes {
        for j in class.first_index()..=j_max {
            let f = class.frequency(j, nu);
            if f < -1e-12 {
                continue;
            }
            if out.iter().any(|&(_, _, g)| (g - f).abs() < 1e-9) {
                continue;
            }
            out.push((class, j, f.max(0.0)));
        }
    }
    out
}

fn least_squares(freqs: &[f64], x: &[f64], y: &[f64], max_condition: f64) -> Result<(Vec<f64>, f64, f64)> {
    let (m, n) = (x.len(), freqs.len());
    let a = DMatrix::from_fn(m, n, |i, k| (freqs[k] * x[i]).cos());
    let qr = a.qr();
    let r = qr.r();
    let sv = r.singular_values();
    let smax = sv.max();
    let smin = sv.min();
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if cond > max_condition {
        return Err(Error::Conditioning {
            cond,
            hint: "frequencies are too close for this window; use more periods".into(),
        });
    }
    let mut b = DVector::from_column_slice(y);
    qr.q_tr_mul(&mut b);
    let rhs = b.rows(0, n).into_owned();
    let sol = r
        .solve_upper_triangular(&rhs)
        .ok_or_else(|| Error::Conditioning {
            cond,
            hint: "singular triangular factor".into(),
        })?;
    let coef: Vec<f64> = sol.iter().copied().collect();
    let resid = x
        .iter()
        .zip(y)
        .map(|(&xi, &yi)| {
            let fit: f64 = freqs.iter().zip(&coef).map(|(f, c)| c * (f * xi).cos()).sum();
            (fit - yi).abs()
        })
        .fold(0.0, f64::max);
    Ok((coef, cond, resid))
}

/// Least-squares projection of a sampled series onto the line lattice.
pub fn amps_by_projection(series: &BlochSeries, nu: f64, opts: &ProjectionOptions) -> Result<ProjectionResult> {
    let n = series.nodes_per_period;
    let available = (series.len().saturating_sub(1)) / n;
    let periods = available.min(opts.periods);
    if periods < 32 {
        return Err(Error::Precondition(format!(
            "projection needs at least 32 periods; series covers {available}"
        )));
    }
    if opts.samples_per_period == 0 {
        return Err(Error::Domain("samples_per_period must be positive".into()));
    }
    let stride = (n / opts.samples_per_period).max(1);
    let idx: Vec<usize> = (0..periods * n).step_by(stride).collect();
    let x: Vec<f64> = idx.iter().map(|&i| series.x[i]).collect();
    let dy: Vec<f64> = idx.iter().map(|&i| series.d[i]).collect();
    let wy: Vec<f64> = idx.iter().map(|&i| series.w[i]).collect();

    let dset = frequency_set(LineClass::DIPOLE, opts.j_max, nu);
    let wset = frequency_set(LineClass::INVERSION, opts.j_max, nu);
    let dfreq: Vec<f64> = dset.iter().map(|t| t.2).collect();
    let wfreq: Vec<f64> = wset.iter().map(|t| t.2).collect();
    let (dc, condition_d, residual_d) = least_squares(&dfreq, &x, &dy, opts.max_condition)?;
    let (wc, condition_w, residual_w) = least_squares(&wfreq, &x, &wy, opts.max_condition)?;
    let mut lines = Vec::with_capacity(dset.len() + wset.len());
    for (set, coef) in [(&dset, &dc), (&wset, &wc)] {
        for (&(class, j, freq), &amplitude) in set.iter().zip(coef.iter()) {
            lines.push(SpectrumLine {
                freq,
                amplitude,
                class,
                j,
                route: Route::Projection,
            });
        }
    }
    Ok(ProjectionResult {
        lines,
        condition_d,
        condition_w,
        residual_d,
        residual_w,
    })
}

/// Split of `D = Δ₁ + Δ₂` and `W = Π₁ + Π₂` into periodic and
/// Floquet-shifted parts.
pub trait SplitComponents {
    fn delta1(&self, x: f64) -> f64;
    fn delta2(&self, x: f64) -> f64;
    fn pi1(&self, x: f64) -> f64;
    fn pi2(&self, x: f64) -> f64;
}

impl SplitComponents for FloquetData {
    fn delta1(&self, x: f64) -> f64 {
        self.delta_split(x).0
    }
    fn delta2(&self, x: f64) -> f64 {
        self.delta_split(x).1
    }
    fn pi1(&self, x: f64) -> f64 {
        self.pi_split(x).0
    }
    fn pi2(&self, x: f64) -> f64 {
        self.pi_split(x).1
    }
}

/// Split given by four plain functions.
pub struct FnSplit<A, B, C, D> {
    pub delta1: A,
    pub delta2: B,
    pub pi1: C,
    pub pi2: D,
}

impl<A, B, C, D> SplitComponents for FnSplit<A, B, C, D>
where
    A: Fn(f64) -> f64,
    B: Fn(f64) -> f64,
    C: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    fn delta1(&self, x: f64) -> f64 {
        (self.delta1)(x)
    }
    fn delta2(&self, x: f64) -> f64 {
        (self.delta2)(x)
    }
    fn pi1(&self, x: f64) -> f64 {
        (self.pi1)(x)
    }
    fn pi2(&self, x: f64) -> f64 {
        (self.pi2)(x)
    }
}

/// Width of the bands around ν = 0 and ν = ½ where the quadrature route is
/// disabled.
pub const QUADRATURE_NU_MARGIN: f64 = 1e-3;

/// Line amplitudes by quadrature over `[0, π/2]` of the split components.
pub fn amps_by_quadrature<S: SplitComponents + ?Sized>(split: &S, nu: f64, j_max: usize) -> Result<Vec<SpectrumLine>> {
    if !(QUADRATURE_NU_MARGIN..=0.5 - QUADRATURE_NU_MARGIN).contains(&nu) {
        return Err(Error::Degenerate(format!(
            "ν = {nu} lies within {QUADRATURE_NU_MARGIN} of 0 or ½; use the projection route"
        )));
    }
    const TOL: f64 = 1e-10;
    let s2 = (2.0 * PI * nu).sin();
    let integrate = |g: &dyn Fn(f64) -> f64, freq: f64| {
        let panels = 4 + (2.0 * freq).ceil() as usize;
        quad::integrate_panels(g, 0.0, FRAC_PI_2, panels, TOL)
    };
    let route = Route::Quadrature;
    let mut lines = Vec::with_capacity(6 * j_max + 5);
    use LineClass::*;
    for j in 0..=j_max {
        let w = (2 * j + 1) as f64;
        let v = 4.0 / PI * integrate(&|x| split.delta1(x) * (w * x).cos(), w)?;
        lines.push(SpectrumLine::new(OddHarmonic, j, nu, v, route));
    }
    let shifted_d = |w: f64, sign: f64| -> Result<f64> {
        let c = integrate(&|x| split.delta2(x) * (w * x).cos(), w)?;
        let s = integrate(&|x| (split.delta2(x - PI) - split.delta2(x + PI)) * (w * x).sin(), w)?;
        Ok(2.0 / PI * c + sign * s / (PI * s2))
    };
    for j in 0..=j_max {
        let v = shifted_d(HyperRamanUp.frequency(j, nu), 1.0)?;
        lines.push(SpectrumLine::new(HyperRamanUp, j, nu, v, route));
    }
    for j in 1..=j_max {
        let v = shifted_d(HyperRamanDown.frequency(j, nu), -1.0)?;
        lines.push(SpectrumLine::new(HyperRamanDown, j, nu, v, route));
    }
    for j in 0..=j_max {
        let w = 2.0 * j as f64;
        let m = if j == 0 { 1.0 } else { 2.0 };
        let v = 2.0 * m / PI * integrate(&|x| split.pi1(x) * (w * x).cos(), w)?;
        lines.push(SpectrumLine::new(EvenHarmonic, j, nu, v, route));
    }
    let shifted_w = |w: f64, sign: f64| -> Result<f64> {
        let c = integrate(&|x| split.pi2(x) * (w * x).cos(), w)?;
        let s = integrate(&|x| (split.pi2(x - PI) - split.pi2(x + PI)) * (w * x).sin(), w)?;
        Ok(2.0 / PI * c - sign * s / (PI * s2))
    };
    for j in 0..=j_max {
        let v = shifted_w(ShiftedOddUp.frequency(j, nu), 1.0)?;
        lines.push(SpectrumLine::new(ShiftedOddUp, j, nu, v, route));
    }
    for j in 0..=j_max {
        let v = shifted_w(ShiftedOddDown.frequency(j, nu), -1.0)?;
        lines.push(SpectrumLine::new(ShiftedOddDown, j, nu, v, route));
    }
    Ok(lines)
}

/// Partial sums `(D_rec, W_rec)` of the line expansions at `x_nodes`.
pub fn reconstruct(lines: &[SpectrumLine], x_nodes: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut d = vec![0.0; x_nodes.len()];
    let mut w = vec![0.0; x_nodes.len()];
    for l in lines {
        let target = if l.class.is_dipole() { &mut d } else { &mut w };
        for (t, &x) in target.iter_mut().zip(x_nodes) {
            *t += l.amplitude * (l.freq * x).cos();
        }
    }
    (d, w)
}

/// Keeps lines with `j ≤ cutoff`.
pub fn truncate(lines: &[SpectrumLine], cutoff: usize) -> Vec<SpectrumLine> {
    lines.iter().filter(|l| l.j <= cutoff).copied().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Triplet {
    /// The centre is the odd harmonic `2s+1`.
    pub s: usize,
    pub lower_freq: f64,
    pub lower_amp: f64,
    pub center_freq: f64,
    pub center_amp: f64,
    pub upper_freq: f64,
    pub upper_amp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plateau {
    pub class: LineClass,
    pub threshold: f64,
    /// Indices `j` with `|amplitude| ≥ threshold`, ascending.
    pub indices: Vec<usize>,
    pub lower_edge: usize,
    pub upper_edge: usize,
    pub contiguous: bool,
    /// `Σ j a_j² / Σ a_j²` over the branch.
    pub centroid: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TripletReport {
    /// Shift `δ = 1 − 2ν` of the side lines.
    pub delta: f64,
    pub triplets: Vec<Triplet>,
    pub plateau: Option<Plateau>,
}

/// Groups dipole lines into triplets `{2s+1−δ, 2s+1, 2s+1+δ}` and locates
/// the plateau of the stronger hyper-Raman branch (or of `branch` if given).
///
/// The plateau threshold is a tenth of the largest odd-harmonic amplitude.
pub fn triplet_report(lines: &[SpectrumLine], nu: f64, branch: Option<LineClass>) -> TripletReport {
    let t = LineTable::from_lines(lines.iter().filter(|l| l.class.is_dipole()));
    let delta = 1.0 - 2.0 * nu;
    let nonzero = lines.iter().any(|l| l.class.is_dipole() && l.amplitude != 0.0);
    if !nonzero {
        return TripletReport {
            delta,
            ..TripletReport::default()
        };
    }
    use LineClass::*;
    let mut triplets = Vec::new();
    let mut s = 0;
    while let (Some(c), Some(lo), Some(hi)) = (
        t.get(OddHarmonic, s),
        t.get(HyperRamanUp, s),
        t.get(HyperRamanDown, s + 1),
    ) {
        let centre = (2 * s + 1) as f64;
        triplets.push(Triplet {
            s,
            lower_freq: centre - delta,
            lower_amp: lo,
            center_freq: centre,
            center_amp: c,
            upper_freq: centre + delta,
            upper_amp: hi,
        });
        s += 1;
    }
    let max_odd = lines
        .iter()
        .filter(|l| l.class == OddHarmonic)
        .map(|l| l.amplitude.abs())
        .fold(0.0, f64::max);
    let power = |c: LineClass| -> f64 {
        lines.iter().filter(|l| l.class == c).map(|l| l.amplitude * l.amplitude).sum()
    };
    let class = branch.unwrap_or(if power(HyperRamanDown) > power(HyperRamanUp) {
        HyperRamanDown
    } else {
        HyperRamanUp
    });
    let plateau = band(lines, class, 0.1 * max_odd);
    TripletReport {
        delta,
        triplets,
        plateau,
    }
}

/// Band of lines in `class` whose amplitude reaches `threshold`.
pub fn band(lines: &[SpectrumLine], class: LineClass, threshold: f64) -> Option<Plateau> {
    let mut branch: Vec<&SpectrumLine> = lines.iter().filter(|l| l.class == class).collect();
    branch.sort_by_key(|l| l.j);
    let indices: Vec<usize> = branch
        .iter()
        .filter(|l| l.amplitude.abs() >= threshold)
        .map(|l| l.j)
        .collect();
    let (&lower_edge, &upper_edge) = (indices.first()?, indices.last()?);
    let contiguous = indices.len() == upper_edge - lower_edge + 1;
    let (num, den) = branch.iter().fold((0.0, 0.0), |(n, d), l| {
        let p = l.amplitude * l.amplitude;
        (n + l.j as f64 * p, d + p)
    });
    Some(Plateau {
        class,
        threshold,
        indices,
        lower_edge,
        upper_edge,
        contiguous,
        centroid: num / den,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(class: LineClass, j: usize, nu: f64, a: f64) -> SpectrumLine {
        SpectrumLine::new(class, j, nu, a, Route::Cf)
    }

    #[test]
    fn class_frequencies() {
        let nu = 0.2;
        assert_eq!(LineClass::OddHarmonic.frequency(3, nu), 7.0);
        assert!((LineClass::HyperRamanUp.frequency(1, nu) - 2.4).abs() < 1e-15);
        assert!((LineClass::HyperRamanDown.frequency(1, nu) - 1.6).abs() < 1e-15);
        assert!((LineClass::ShiftedOddDown.frequency(0, nu) - 0.6).abs() < 1e-15);
    }

    #[test]
    fn toy_coefficients_give_no_dipole() {
        let f = FloquetData::from_coefficients(1.0, 1.0, 0.3, vec![0.0, 1.0, 0.0]).unwrap();
        for l in dipole_amps_cf(&f, 4).unwrap() {
            assert_eq!(l.amplitude, 0.0);
        }
    }

    #[test]
    fn zero_dipole_gives_ground_state_inversion() {
        let p = ReducedParams::new(1.0, 1.0).unwrap();
        let nu = 0.3;
        let mut d = Vec::new();
        for class in LineClass::DIPOLE {
            for j in class.first_index()..=6 {
                d.push(line(class, j, nu, 0.0));
            }
        }
        let w = inversion_amps(&d, nu, &p, 5).unwrap();
        for l in &w {
            let want = if l.class == LineClass::EvenHarmonic && l.j == 0 { -1.0 } else { 0.0 };
            assert_eq!(l.amplitude, want);
        }
        assert_eq!(sum_rule_residual(&w, Route::Cf), Some(0.0));
    }

    #[test]
    fn inversion_needs_one_extra_index() {
        let p = ReducedParams::new(1.0, 1.0).unwrap();
        let d: Vec<_> = (0..=3).map(|j| line(LineClass::OddHarmonic, j, 0.3, 0.0)).collect();
        assert!(matches!(inversion_amps(&d, 0.3, &p, 3), Err(Error::Precondition(_))));
    }

    #[test]
    fn inversion_at_half_is_degenerate() {
        let p = ReducedParams::new(1.0, 1.0).unwrap();
        let mut d = Vec::new();
        for class in LineClass::DIPOLE {
            for j in class.first_index()..=3 {
                d.push(line(class, j, 0.5, 0.0));
            }
        }
        assert!(matches!(inversion_amps(&d, 0.5, &p, 2), Err(Error::Degenerate(_))));
    }

    #[test]
    fn merged_frequencies_at_half() {
        let set = frequency_set(LineClass::DIPOLE, 3, 0.5);
        // Up-shifted lines land on odd harmonics, down-shifted ones too.
        assert_eq!(set.len(), 4);
        let set = frequency_set(LineClass::DIPOLE, 3, 0.2);
        assert_eq!(set.len(), 4 + 4 + 3);
    }

    #[test]
    fn quadrature_orthogonality() {
        let split = FnSplit {
            delta1: |x: f64| x.cos(),
            delta2: |_| 0.0,
            pi1: |_| -1.0,
            pi2: |_| 0.0,
        };
        let lines = amps_by_quadrature(&split, 0.3, 3).unwrap();
        let t = LineTable::from_lines(&lines);
        assert!((t.get(LineClass::OddHarmonic, 0).unwrap() - 1.0).abs() < 1e-12);
        assert!(t.get(LineClass::OddHarmonic, 1).unwrap().abs() < 1e-12);
        assert!((t.get(LineClass::EvenHarmonic, 0).unwrap() + 1.0).abs() < 1e-12);
        for l in lines.iter().filter(|l| matches!(l.class, LineClass::HyperRamanUp | LineClass::HyperRamanDown)) {
            assert_eq!(l.amplitude, 0.0);
        }
    }

    #[test]
    fn quadrature_refuses_degenerate_nu() {
        let split = FnSplit {
            delta1: |_| 0.0,
            delta2: |_| 0.0,
            pi1: |_| 0.0,
            pi2: |_| 0.0,
        };
        assert!(amps_by_quadrature(&split, 0.0005, 2).is_err());
        assert!(amps_by_quadrature(&split, 0.4995, 2).is_err());
    }

    #[test]
    fn triplet_layout() {
        let nu = 0.25;
        let mut lines = Vec::new();
        for class in LineClass::DIPOLE {
            for j in class.first_index()..=3 {
                lines.push(line(class, j, nu, 0.1));
            }
        }
        let r = triplet_report(&lines, nu, None);
        assert_eq!(r.delta, 0.5);
        let t = r.triplets[1];
        assert_eq!((t.lower_freq, t.center_freq, t.upper_freq), (2.5, 3.0, 3.5));
    }

    #[test]
    fn empty_report_without_dipole() {
        let lines = vec![line(LineClass::EvenHarmonic, 0, 0.5, -1.0)];
        let r = triplet_report(&lines, 0.5, None);
        assert!(r.triplets.is_empty() && r.plateau.is_none());
    }

    #[test]
    fn band_contiguity() {
        let amps = [0.0, 0.5, 0.6, 0.01, 0.7, 0.0];
        let lines: Vec<_> = amps
            .iter()
            .enumerate()
            .map(|(j, &a)| line(LineClass::HyperRamanUp, j, 0.2, a))
            .collect();
        let b = band(&lines, LineClass::HyperRamanUp, 0.1).unwrap();
        assert_eq!(b.indices, vec![1, 2, 4]);
        assert!(!b.contiguous);
        assert_eq!((b.lower_edge, b.upper_edge), (1, 4));
    }
}
