//! The subcommands. Each writes its files under `config.out` and returns
//! the list of paths it produced.

use std::f64::consts::TAU;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::Serialize;
use twolevel_core::floquet::{self, FitMethod, MonodromyEstimate, SuperpositionFit};
use twolevel_core::ode::{self, BlochResiduals};
use twolevel_core::params::epsilon_zero;
use twolevel_core::spectrum::{self, LineClass, LineTable, ProjectionOptions, ProjectionResult};
use twolevel_core::wkb::{self, SawtoothFit};
use twolevel_core::{
    BlochSeries, Error, FloquetData, ReducedParams, Route, SolutionGrid, SpectrumLine, SpectrumSet, StepControl,
    WkbSolution,
};

use crate::output::{write_json, Csv, Num};
use crate::{CliError, Context, Result, RunConfig};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Artifacts {
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

#[derive(Serialize)]
struct ParamsJson {
    gamma: Num,
    epsilon: Num,
    alpha: Num,
    lambda: Num,
    k2: Num,
    epsilon0: Num,
}

impl From<&ReducedParams> for ParamsJson {
    fn from(p: &ReducedParams) -> Self {
        Self {
            gamma: p.gamma.into(),
            epsilon: p.epsilon.into(),
            alpha: p.alpha.into(),
            lambda: p.lambda.into(),
            k2: p.k2.into(),
            epsilon0: p.epsilon0.into(),
        }
    }
}

#[derive(Serialize)]
struct LineJson {
    freq: Num,
    amplitude: Num,
    class: &'static str,
    j: usize,
    route: &'static str,
}

#[derive(Serialize)]
struct SpectrumJson {
    params: ParamsJson,
    nu: Num,
    lines: Vec<LineJson>,
    sum_rule_residual: Num,
}

impl From<&SpectrumSet> for SpectrumJson {
    fn from(s: &SpectrumSet) -> Self {
        let mut lines: Vec<&SpectrumLine> = s.lines.iter().collect();
        lines.sort_by_key(|l| (l.route, l.class, l.j));
        Self {
            params: (&s.params).into(),
            nu: s.nu.into(),
            lines: lines
                .into_iter()
                .map(|l| LineJson {
                    freq: l.freq.into(),
                    amplitude: l.amplitude.into(),
                    class: l.class.label(),
                    j: l.j,
                    route: l.route.label(),
                })
                .collect(),
            sum_rule_residual: s.w0_sumrule_residual.into(),
        }
    }
}

/// Everything computed at one parameter point.
struct Point {
    params: ReducedParams,
    control: StepControl,
    grid: SolutionGrid,
    series: BlochSeries,
    monodromy: MonodromyEstimate,
    floquet: Option<FloquetData>,
    fit: Option<SuperpositionFit>,
    projection: Option<ProjectionResult>,
    wkb: Option<WkbSolution>,
    set: SpectrumSet,
    notes: Vec<String>,
}

impl Point {
    fn nu(&self) -> f64 {
        self.floquet.as_ref().map_or(self.monodromy.nu, |f| f.nu)
    }

    fn period_series(&self) -> BlochSeries {
        let n = self.control.nodes_per_period + 1;
        let mut s = self.series.clone();
        for v in [&mut s.x, &mut s.d, &mut s.w, &mut s.d_prime, &mut s.w_prime] {
            v.truncate(n);
        }
        s
    }
}

/// Errors that mean "this route does not apply here" rather than failure.
fn inapplicable(e: &Error) -> bool {
    matches!(e, Error::Degenerate(_) | Error::Conditioning { .. } | Error::Integrality { .. })
}

fn compute_point(cfg: &RunConfig, params: ReducedParams) -> Result<Point> {
    let control = cfg.step_control();
    let wants = |r: Route| cfg.routes.contains(&r);
    let coupled = params.gamma > 0.0;
    let periods = if coupled && wants(Route::Projection) { cfg.periods.max(1) } else { 1 };
    let grid = ode::solve(&params, &control, periods as f64 * TAU).context("integration")?;
    let series = ode::dipole_inversion(&grid);
    let monodromy = floquet::nu_from_monodromy(&grid).context("monodromy")?;
    let mut notes = Vec::new();
    let mut lines = Vec::new();
    let mut pt = Point {
        params,
        control,
        floquet: None,
        fit: None,
        projection: None,
        wkb: None,
        set: SpectrumSet::new(params, monodromy.nu, Vec::new()),
        notes: Vec::new(),
        grid,
        series,
        monodromy,
    };

    if !coupled {
        // Free precession: D ≡ 0, W ≡ −1 on every route.
        for &route in &cfg.routes {
            lines.push(SpectrumLine::new(LineClass::EvenHarmonic, 0, pt.monodromy.nu, -1.0, route));
        }
        pt.floquet = Some(FloquetData::free_atom(&params));
        pt.set = SpectrumSet::new(params, pt.monodromy.nu, lines);
        return Ok(pt);
    }

    let f = floquet::solve_recurrence(&params, pt.monodromy.nu, None).context("continued fraction")?;
    pt.fit = match floquet::fit_superposition(&pt.grid, &f) {
        Ok(fit) => Some(fit),
        Err(e) if inapplicable(&e) => {
            notes.push(format!("superposition fit skipped: {e}"));
            None
        }
        Err(e) => return Err(e).context("superposition fit"),
    };
    let nu = f.nu;
    let jmax = cfg.jmax;

    if wants(Route::Cf) {
        let dipole = spectrum::dipole_amps_cf(&f, jmax + 1).context("cf dipole amplitudes")?;
        match spectrum::inversion_amps(&dipole, nu, &params, jmax) {
            Ok(w) => lines.extend(w),
            Err(e) if inapplicable(&e) => notes.push(format!("cf inversion lines skipped: {e}")),
            Err(e) => return Err(e).context("cf inversion amplitudes"),
        }
        lines.extend(spectrum::truncate(&dipole, jmax));
    }
    if wants(Route::Quadrature) {
        match spectrum::amps_by_quadrature(&f, nu, jmax) {
            Ok(l) => lines.extend(l),
            Err(e) if inapplicable(&e) => notes.push(format!("quadrature route skipped: {e}")),
            Err(e) => return Err(e).context("quadrature amplitudes"),
        }
    }
    if wants(Route::Projection) {
        let opts = ProjectionOptions {
            j_max: jmax,
            periods: cfg.periods,
            ..ProjectionOptions::default()
        };
        match spectrum::amps_by_projection(&pt.series, nu, &opts) {
            Ok(r) => {
                lines.extend(r.lines.iter().copied());
                pt.projection = Some(r);
            }
            Err(e) if inapplicable(&e) => notes.push(format!("projection route skipped: {e}")),
            Err(e) => return Err(e).context("projection"),
        }
    }
    if wants(Route::Wkb) {
        let sol = WkbSolution::new(params);
        let amps = wkb::wkb_dipole_amps(&params, jmax)
            .and_then(|mut d| wkb::wkb_inversion_amps(&params, jmax).map(|w| {
                d.extend(w);
                d
            }));
        match amps {
            Ok(l) => lines.extend(l),
            Err(e) if inapplicable(&e) => notes.push(format!("wkb route skipped: {e}")),
            Err(e) => return Err(e).context("wkb amplitudes"),
        }
        pt.wkb = Some(sol);
    }
    pt.floquet = Some(f);
    pt.set = SpectrumSet::new(params, nu, lines);
    pt.notes = notes;
    Ok(pt)
}

fn solution_csv(pt: &Point) -> Csv {
    let mut csv = Csv::new(&["x", "re_u", "im_u", "re_v", "im_v", "D", "W", "first_integral_dev"]);
    let g = &pt.grid;
    for i in 0..=pt.control.nodes_per_period {
        csv.row(&[
            g.x[i],
            g.u[i].re,
            g.u[i].im,
            g.v[i].re,
            g.v[i].im,
            pt.series.d[i],
            pt.series.w[i],
            g.first_integral_deviation(i),
        ]);
    }
    csv
}

#[derive(Serialize)]
struct Discrepancy {
    a: &'static str,
    b: &'static str,
    max_abs: Num,
    relative: Num,
}

fn discrepancy(set: &SpectrumSet, a: Route, b: Route) -> Option<Discrepancy> {
    let tb = LineTable::from_lines(set.route(b));
    let (mut gap, mut scale, mut shared) = (0.0f64, 0.0f64, 0);
    for l in set.route(a) {
        if let Some(v) = tb.get(l.class, l.j) {
            shared += 1;
            gap = gap.max((v - l.amplitude).abs());
            scale = scale.max(v.abs()).max(l.amplitude.abs());
        }
    }
    (shared > 0).then(|| Discrepancy {
        a: a.label(),
        b: b.label(),
        max_abs: gap.into(),
        relative: (if scale > 0.0 { gap / scale } else { 0.0 }).into(),
    })
}

#[derive(Serialize)]
struct RouteSummary {
    route: &'static str,
    lines: usize,
    sum_rule_residual: Option<Num>,
    reconstruction_error_d: Num,
    reconstruction_error_w: Num,
}

#[derive(Serialize)]
struct ControlJson {
    rtol: Num,
    atol: Num,
    nodes_per_period: usize,
    x_max: Num,
}

#[derive(Serialize)]
struct IntegrationJson {
    accepted_steps: usize,
    rejected_steps: usize,
    first_integral: Num,
    derivative_relations: Num,
    monodromy_identity: Num,
}

#[derive(Serialize)]
struct BlochJson {
    dipole: Num,
    inversion: Num,
    invariant: Num,
}

#[derive(Serialize)]
struct FloquetJson {
    nu: Num,
    nu_monodromy: Num,
    nu_trace: Option<Num>,
    monodromy_clamp_excess: Num,
    nu_cf: Option<Num>,
    cf_residual: Option<Num>,
    truncation: Option<usize>,
    m_even: Option<Num>,
    m_odd: Option<Num>,
    fit_method: Option<&'static str>,
    fit_condition: Option<Num>,
    fit_max_error: Option<Num>,
}

#[derive(Serialize)]
struct ProjectionJson {
    condition_d: Num,
    condition_w: Num,
    residual_d: Num,
    residual_w: Num,
}

#[derive(Serialize)]
struct WkbJson {
    omega: Num,
    nu: Num,
    nu_literal: Num,
    warnings: Vec<String>,
}

#[derive(Serialize)]
struct Report {
    params: ParamsJson,
    control: ControlJson,
    integration: IntegrationJson,
    bloch: BlochJson,
    floquet: FloquetJson,
    routes: Vec<RouteSummary>,
    cross_route_discrepancy: Option<Num>,
    discrepancies: Vec<Discrepancy>,
    projection: Option<ProjectionJson>,
    wkb: Option<WkbJson>,
    notes: Vec<String>,
}

fn bloch(pt: &Point) -> Result<BlochResiduals> {
    if pt.params.epsilon == 0.0 {
        return Ok(BlochResiduals::default());
    }
    ode::bloch_residuals(&pt.period_series()).context("bloch residuals")
}

fn monodromy_identity(pt: &Point) -> Result<f64> {
    let predicted = ode::monodromy_trace_from_quarter(&pt.grid).context("monodromy identity")?;
    Ok((pt.grid.u[pt.control.nodes_per_period].re - predicted).abs())
}

fn report(pt: &Point) -> Result<Report> {
    let b = bloch(pt)?;
    let period = pt.period_series();
    let mut routes = Vec::new();
    let present: Vec<Route> = {
        let mut r: Vec<Route> = pt.set.lines.iter().map(|l| l.route).collect();
        r.sort();
        r.dedup();
        r
    };
    for &route in &present {
        let lines: Vec<SpectrumLine> = pt.set.route(route).copied().collect();
        let (d, w) = spectrum::reconstruct(&lines, &period.x);
        let err = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        routes.push(RouteSummary {
            route: route.label(),
            lines: lines.len(),
            sum_rule_residual: spectrum::sum_rule_residual(&lines, route).map(Num),
            reconstruction_error_d: err(&d, &period.d).into(),
            reconstruction_error_w: err(&w, &period.w).into(),
        });
    }
    let exact: Vec<Route> = present.iter().copied().filter(|&r| r != Route::Wkb).collect();
    let mut discrepancies = Vec::new();
    for (i, &a) in exact.iter().enumerate() {
        for &b in &exact[i + 1..] {
            discrepancies.extend(discrepancy(&pt.set, a, b));
        }
    }
    let cross = discrepancies.iter().map(|d| d.relative.0).reduce(f64::max).map(Num);
    if present.contains(&Route::Wkb) {
        if let Some(&reference) = exact.iter().rev().next() {
            discrepancies.extend(discrepancy(&pt.set, reference, Route::Wkb));
        }
    }
    let f = pt.floquet.as_ref().filter(|_| pt.params.gamma > 0.0);
    Ok(Report {
        params: (&pt.params).into(),
        control: ControlJson {
            rtol: pt.control.rtol.into(),
            atol: pt.control.atol.into(),
            nodes_per_period: pt.control.nodes_per_period,
            x_max: pt.grid.x_max().into(),
        },
        integration: IntegrationJson {
            accepted_steps: pt.grid.report.accepted_steps,
            rejected_steps: pt.grid.report.rejected_steps,
            first_integral: pt.grid.report.first_integral.into(),
            derivative_relations: pt.grid.report.derivative_relations.into(),
            monodromy_identity: monodromy_identity(pt)?.into(),
        },
        bloch: BlochJson {
            dipole: b.dipole.into(),
            inversion: b.inversion.into(),
            invariant: b.invariant.into(),
        },
        floquet: FloquetJson {
            nu: pt.nu().into(),
            nu_monodromy: pt.monodromy.nu.into(),
            nu_trace: pt.monodromy.nu_trace.map(Num),
            monodromy_clamp_excess: pt.monodromy.clamp_excess.into(),
            nu_cf: f.map(|f| Num(f.nu)),
            cf_residual: f.map(|f| Num(f.residual)),
            truncation: f.map(|f| f.truncation),
            m_even: f.map(|f| Num(f.m_even)),
            m_odd: f.map(|f| Num(f.m_odd)),
            fit_method: pt.fit.as_ref().map(|fit| match fit.method {
                FitMethod::InitialConditions => "initial-conditions",
                FitMethod::LeastSquares => "least-squares",
            }),
            fit_condition: pt.fit.as_ref().map(|fit| Num(fit.condition)),
            fit_max_error: pt.fit.as_ref().map(|fit| Num(fit.max_error)),
        },
        routes,
        cross_route_discrepancy: cross,
        discrepancies,
        projection: pt.projection.as_ref().map(|p| ProjectionJson {
            condition_d: p.condition_d.into(),
            condition_w: p.condition_w.into(),
            residual_d: p.residual_d.into(),
            residual_w: p.residual_w.into(),
        }),
        wkb: pt.wkb.as_ref().map(|w| WkbJson {
            omega: w.omega.into(),
            nu: w.nu.into(),
            nu_literal: wkb::wkb_nu_literal(&w.params).into(),
            warnings: w.warnings.clone(),
        }),
        notes: pt.notes.clone(),
    })
}

fn warnings_of(pt: &Point) -> Vec<String> {
    let mut w = pt.notes.clone();
    if let Some(s) = &pt.wkb {
        w.extend(s.warnings.iter().cloned());
    }
    w
}

/// Full pipeline: `solution.csv`, `spectrum.json` and `report.json`.
pub fn cmd_run(cfg: &RunConfig) -> Result<Artifacts> {
    let pt = compute_point(cfg, cfg.reduced()?)?;
    let out = &cfg.out;
    let files = vec![out.join("solution.csv"), out.join("spectrum.json"), out.join("report.json")];
    solution_csv(&pt).write(&files[0])?;
    write_json(&files[1], &SpectrumJson::from(&pt.set))?;
    write_json(&files[2], &report(&pt)?)?;
    Ok(Artifacts {
        files,
        warnings: warnings_of(&pt),
    })
}

/// `spectrum.json` only.
pub fn cmd_spectrum(cfg: &RunConfig) -> Result<Artifacts> {
    let pt = compute_point(cfg, cfg.reduced()?)?;
    let path = cfg.out.join("spectrum.json");
    write_json(&path, &SpectrumJson::from(&pt.set))?;
    Ok(Artifacts {
        files: vec![path],
        warnings: warnings_of(&pt),
    })
}

#[derive(Serialize)]
struct FitJson {
    period: Num,
    offset: Num,
    max_residual: Num,
}

impl From<SawtoothFit> for FitJson {
    fn from(f: SawtoothFit) -> Self {
        Self {
            period: f.period.into(),
            offset: f.offset.into(),
            max_residual: f.max_residual.into(),
        }
    }
}

#[derive(Serialize)]
struct ScanJson {
    alpha: Num,
    epsilon0: Num,
    expected_period: Num,
    samples: usize,
    exact: Option<FitJson>,
    wkb: Option<FitJson>,
    sawtooth: Option<FitJson>,
}

/// Exact, WKB and sawtooth exponents over an ε range at fixed α.
pub fn cmd_scan_floquet(cfg: &RunConfig) -> Result<Artifacts> {
    let (alpha, eps) = cfg.scan()?;
    let control = cfg.step_control();
    let rows: Vec<[f64; 4]> = eps
        .par_iter()
        .map(|&e| -> Result<[f64; 4]> {
            let p = ReducedParams::from_alpha(alpha, e).map_err(|err| CliError::config("eps_range", err.to_string()))?;
            let grid = ode::integrate_uv(&p, &control).context(&format!("integration at ε = {e}"))?;
            let nu = floquet::nu_from_monodromy(&grid).context("monodromy")?.nu;
            Ok([e, nu, wkb::wkb_nu(&p), wkb::sawtooth_nu(e, alpha)])
        })
        .collect::<Result<_>>()?;
    let mut csv = Csv::new(&["epsilon", "nu_exact", "nu_wkb", "nu_sawtooth"]);
    for r in &rows {
        csv.row(r);
    }
    let column = |k: usize| rows.iter().map(|r| r[k]).collect::<Vec<f64>>();
    let fit = |k: usize| wkb::fit_sawtooth(&eps, &column(k)).ok().map(FitJson::from);
    let e0 = epsilon_zero(alpha);
    let summary = ScanJson {
        alpha: alpha.into(),
        epsilon0: e0.into(),
        expected_period: (2.0 * e0).into(),
        samples: rows.len(),
        exact: fit(1),
        wkb: fit(2),
        sawtooth: fit(3),
    };
    let files = vec![cfg.out.join("scan_floquet.csv"), cfg.out.join("scan_floquet.json")];
    csv.write(&files[0])?;
    write_json(&files[1], &summary)?;
    Ok(Artifacts {
        files,
        warnings: Vec::new(),
    })
}

#[derive(Serialize, Clone)]
struct ComparePoint {
    epsilon: Num,
    max_u: Num,
    mean_u: Num,
    max_v: Num,
    mean_v: Num,
    max_d: Num,
    mean_d: Num,
    max_w: Num,
    mean_w: Num,
    nu_exact: Num,
    nu_wkb: Num,
    nu_error: Num,
    omega: Num,
    warnings: Vec<String>,
}

#[derive(Serialize)]
struct Ratio {
    from: Num,
    to: Num,
    u: Num,
    v: Num,
    d: Num,
    w: Num,
}

#[derive(Serialize)]
struct CompareJson {
    alpha: Num,
    points: Vec<ComparePoint>,
    doubling_ratios: Vec<Ratio>,
}

fn compare_point(alpha: f64, eps: f64, control: &StepControl) -> Result<(ComparePoint, Vec<[f64; 6]>)> {
    let p = ReducedParams::from_alpha(alpha, eps).map_err(|e| CliError::config("epsilon", e.to_string()))?;
    let grid = ode::solve(&p, control, TAU).context(&format!("integration at ε = {eps}"))?;
    let series = ode::dipole_inversion(&grid);
    let nu = floquet::nu_from_monodromy(&grid).context("monodromy")?.nu;
    let sol = WkbSolution::new(p);
    let mut rows = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let x = grid.x[i];
        let (u, v) = sol.uv(x);
        rows.push([
            eps,
            x,
            (u - grid.u[i]).norm(),
            (v - grid.v[i]).norm(),
            (sol.dipole(x) - series.d[i]).abs(),
            (sol.inversion(x) - series.w[i]).abs(),
        ]);
    }
    let stat = |k: usize| {
        let max = rows.iter().map(|r| r[k]).fold(0.0, f64::max);
        let mean = rows.iter().map(|r| r[k]).sum::<f64>() / rows.len() as f64;
        (Num(max), Num(mean))
    };
    let ((max_u, mean_u), (max_v, mean_v), (max_d, mean_d), (max_w, mean_w)) = (stat(2), stat(3), stat(4), stat(5));
    let point = ComparePoint {
        epsilon: eps.into(),
        max_u,
        mean_u,
        max_v,
        mean_v,
        max_d,
        mean_d,
        max_w,
        mean_w,
        nu_exact: nu.into(),
        nu_wkb: sol.nu.into(),
        nu_error: (sol.nu - nu).abs().into(),
        omega: sol.omega.into(),
        warnings: sol.warnings.clone(),
    };
    Ok((point, rows))
}

/// Pointwise and summary errors of the WKB solution against the ODE.
pub fn cmd_wkb_compare(cfg: &RunConfig) -> Result<Artifacts> {
    let (alpha, eps) = match (cfg.eps_range, cfg.params) {
        (Some(_), _) => cfg.scan()?,
        (None, Some(_)) => {
            let p = cfg.reduced()?;
            (p.alpha, vec![p.epsilon])
        }
        (None, None) => return Err(CliError::config("epsilon", "give epsilon or eps_range")),
    };
    let control = cfg.step_control();
    let results: Vec<(ComparePoint, Vec<[f64; 6]>)> = eps
        .par_iter()
        .map(|&e| compare_point(alpha, e, &control))
        .collect::<Result<_>>()?;
    let mut csv = Csv::new(&["epsilon", "x", "err_u", "err_v", "err_D", "err_W"]);
    for (_, rows) in &results {
        for r in rows {
            csv.row(r);
        }
    }
    let points: Vec<ComparePoint> = results.into_iter().map(|(p, _)| p).collect();
    let mut doubling_ratios = Vec::new();
    for a in &points {
        for b in &points {
            if (b.epsilon.0 - 2.0 * a.epsilon.0).abs() <= 1e-9 * b.epsilon.0 {
                doubling_ratios.push(Ratio {
                    from: a.epsilon,
                    to: b.epsilon,
                    u: Num(b.max_u.0 / a.max_u.0),
                    v: Num(b.max_v.0 / a.max_v.0),
                    d: Num(b.max_d.0 / a.max_d.0),
                    w: Num(b.max_w.0 / a.max_w.0),
                });
            }
        }
    }
    let warnings = points.iter().flat_map(|p| p.warnings.iter().cloned()).collect();
    let summary = CompareJson {
        alpha: alpha.into(),
        points,
        doubling_ratios,
    };
    let files = vec![cfg.out.join("wkb_compare.csv"), cfg.out.join("wkb_compare.json")];
    csv.write(&files[0])?;
    write_json(&files[1], &summary)?;
    Ok(Artifacts { files, warnings })
}

#[derive(Serialize)]
struct Check {
    name: &'static str,
    value: Num,
    limit: Num,
    pass: bool,
}

#[derive(Serialize)]
struct ValidationJson {
    params: ParamsJson,
    passed: bool,
    checks: Vec<Check>,
}

/// Invariant and cross-route checks at one point; `validation.json` is
/// written either way, and a failed check returns an error.
pub fn cmd_validate(cfg: &RunConfig) -> Result<Artifacts> {
    let pt = compute_point(cfg, cfg.reduced()?)?;
    let b = bloch(&pt)?;
    let mut checks = Vec::new();
    let mut check = |name: &'static str, value: f64, limit: f64| {
        checks.push(Check {
            name,
            value: value.into(),
            limit: limit.into(),
            pass: value <= limit,
        })
    };
    check("first_integral", pt.grid.report.first_integral, 1e-9);
    check("derivative_relations", pt.grid.report.derivative_relations, 1e-8);
    check("monodromy_identity", monodromy_identity(&pt)?, 1e-9);
    check("bloch_dipole", b.dipole, 1e-6);
    check("bloch_inversion", b.inversion, 1e-6);
    check("bloch_invariant", b.invariant, 1e-6);
    if let Some(f) = pt.floquet.as_ref().filter(|_| pt.params.gamma > 0.0) {
        check("nu_routes", (f.nu - pt.monodromy.nu).abs(), 1e-6);
        check("recurrence_residual", f.residual, 1e-10);
    }
    if let Some(fit) = &pt.fit {
        check("superposition_fit", fit.max_error, 1e-6);
    }
    let rep = report(&pt)?;
    if let Some(c) = rep.cross_route_discrepancy {
        check("cross_route", c.0, 1e-4);
    }
    for r in &rep.routes {
        if r.route != "wkb" {
            if let Some(s) = r.sum_rule_residual {
                check("sum_rule", s.0, 1e-6);
            }
        }
    }
    let passed = checks.iter().all(|c| c.pass);
    let path = cfg.out.join("validation.json");
    write_json(
        &path,
        &ValidationJson {
            params: (&pt.params).into(),
            passed,
            checks,
        },
    )?;
    if !passed {
        return Err(CliError::Validation(format!("see {}", path.display())));
    }
    Ok(Artifacts {
        files: vec![path],
        warnings: warnings_of(&pt),
    })
}
