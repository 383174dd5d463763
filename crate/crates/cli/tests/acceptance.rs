//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use twolevel_cli::config::RunConfig;
use twolevel_cli::cmd_run;
use twolevel_core::floquet::{nu_from_monodromy, solve_recurrence};
use twolevel_core::ode::{self, bloch_residuals, dipole_inversion, integrate_direct, integrate_uv};
use twolevel_core::params::epsilon_zero;
use twolevel_core::spectrum::{
    amps_by_projection, dipole_amps_cf, inversion_amps, reconstruct, sum_rule_residual, truncate, LineClass,
    LineTable, ProjectionOptions, Route,
};
use twolevel_core::wkb::{fit_sawtooth, sign_rule, wkb_d0_closed, wkb_dipole_amps, wkb_nu, WkbSolution};
use twolevel_core::{ReducedParams, StepControl};

const GRID: [f64; 4] = [0.5, 1.0, 2.0, 5.0];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn grid_points() -> impl Iterator<Item = (f64, f64)> {
    GRID.iter().flat_map(|&g| GRID.iter().map(move |&e| (g, e)))
}

fn full_period(g: f64, e: f64) -> ode::SolutionGrid {
    ode::solve(&ReducedParams::new(g, e).unwrap(), &StepControl::default(), TAU).unwrap()
}

fn c1_epsilon_zero() -> Outcome {
    let t = Instant::now();
    let e0 = epsilon_zero(1.0);
    let dt = t.elapsed();
    let err = (e0 - 0.596086).abs();
    outcome(err <= 1e-5 && dt < Duration::from_millis(1), format!("epsilon_zero(1) = {e0:.9}, |err| = {err:.1e}, {dt:?}"))
}

fn c2_first_integral() -> Outcome {
    let t = Instant::now();
    let (mut fi, mut dr) = (0.0f64, 0.0f64);
    for (g, e) in grid_points() {
        let r = full_period(g, e).report;
        fi = fi.max(r.first_integral);
        dr = dr.max(r.derivative_relations);
    }
    let dt = t.elapsed();
    outcome(
        fi <= 1e-9 && dr <= 1e-8 && dt < Duration::from_secs(10),
        format!("first integral {fi:.1e} (≤ 1e-9), derivative relations {dr:.1e} (≤ 1e-8), {dt:.2?}"),
    )
}

fn c3_monodromy_identity() -> Outcome {
    let c = StepControl::default();
    let mut worst = 0.0f64;
    for (g, e) in grid_points() {
        let quarter = integrate_uv(&ReducedParams::new(g, e).unwrap(), &c).unwrap();
        let q = c.nodes_per_period / 4;
        let s = e * (quarter.u[q] * quarter.v[q].conj()).re;
        let direct = integrate_direct(g, e, c.nodes_per_period, &c).unwrap();
        worst = worst.max((direct.u[c.nodes_per_period].re - (1.0 - 2.0 * s * s)).abs());
    }
    outcome(worst <= 1e-9, format!("max |Re u(2π) − (1 − 2s²)| = {worst:.1e} (≤ 1e-9)"))
}

fn c4_routes() -> Outcome {
    let c = StepControl::default();
    let mut worst = 0.0f64;
    for (g, e) in grid_points() {
        let p = ReducedParams::new(g, e).unwrap();
        let nu = nu_from_monodromy(&integrate_uv(&p, &c).unwrap()).unwrap().nu;
        let f = solve_recurrence(&p, nu, None).unwrap();
        worst = worst.max((f.nu - nu).abs());
    }
    let trivial: Vec<(f64, f64, f64)> = [(1.0, 0.5), (0.5, 0.25), (2.0, 0.0)]
        .iter()
        .map(|&(e, want)| {
            let p = ReducedParams::new(0.0, e).unwrap();
            (e, want, nu_from_monodromy(&integrate_uv(&p, &c).unwrap()).unwrap().nu)
        })
        .collect();
    let exact = trivial.iter().all(|&(_, want, got)| got == want);
    let shown: Vec<String> = trivial.iter().map(|(e, _, got)| format!("ν(0,{e}) = {got}")).collect();
    outcome(worst <= 1e-6 && exact, format!("max |ν_mono − ν_cf| = {worst:.1e} (≤ 1e-6); {}", shown.join(", ")))
}

fn c5_spectrum() -> Outcome {
    let t = Instant::now();
    let mut details = Vec::new();
    let mut pass = true;
    for (g, e) in [(1.0, 1.0), (2.0, 1.3)] {
        let p = ReducedParams::new(g, e).unwrap();
        let grid = ode::solve(&p, &StepControl::default(), 64.0 * TAU).unwrap();
        let series = dipole_inversion(&grid);
        let nu = nu_from_monodromy(&grid).unwrap().nu;
        let f = solve_recurrence(&p, nu, None).unwrap();
        let dipole = dipole_amps_cf(&f, 25).unwrap();
        let mut cf = inversion_amps(&dipole, f.nu, &p, 24).unwrap();
        cf.extend(truncate(&dipole, 24));
        let proj = amps_by_projection(&series, nu, &ProjectionOptions::default()).unwrap();
        let tp = LineTable::from_lines(&proj.lines);
        let (mut gap, mut scale) = (0.0f64, 0.0f64);
        for l in cf.iter().filter(|l| l.class.is_dipole()) {
            if let Some(v) = tp.get(l.class, l.j) {
                gap = gap.max((v - l.amplitude).abs());
                scale = scale.max(l.amplitude.abs());
            }
        }
        let rel = gap / scale;
        let n = series.nodes_per_period + 1;
        let (d, w) = reconstruct(&truncate(&cf, 16), &series.x[..n]);
        let err_d = d.iter().zip(&series.d).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let err_w = w.iter().zip(&series.w).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let sum_cf = sum_rule_residual(&cf, Route::Cf).unwrap();
        let sum_pr = sum_rule_residual(&proj.lines, Route::Projection).unwrap();
        pass &= rel <= 1e-4 && err_d <= 1e-3 && err_w <= 1e-3 && sum_cf <= 1e-6 && sum_pr <= 1e-6;
        details.push(format!(
            "(γ={g}, ε={e}) cf/projection rel {rel:.1e}, recon D {err_d:.1e} W {err_w:.1e}, sum rule cf {sum_cf:.1e} proj {sum_pr:.1e}"
        ));
    }
    let dt = t.elapsed();
    pass &= dt < Duration::from_secs(30);
    outcome(pass, format!("{}; {dt:.2?}", details.join("; ")))
}

fn c6_bloch() -> Outcome {
    let mut worst = 0.0f64;
    for (g, e) in grid_points() {
        let r = bloch_residuals(&dipole_inversion(&full_period(g, e))).unwrap();
        worst = worst.max(r.dipole).max(r.inversion).max(r.invariant);
    }
    outcome(worst <= 1e-6, format!("max Bloch residual {worst:.1e} (≤ 1e-6)"))
}

fn c7_wkb_ladder() -> Outcome {
    let t = Instant::now();
    let c = StepControl::default();
    let mut d_err = Vec::new();
    for eps in [10.0, 20.0, 40.0] {
        let p = ReducedParams::from_alpha(1.0, eps).unwrap();
        let grid = ode::solve(&p, &c, TAU).unwrap();
        let s = dipole_inversion(&grid);
        let sol = WkbSolution::new(p);
        let err = grid.x.iter().zip(&s.d).map(|(&x, &d)| (sol.dipole(x) - d).abs()).fold(0.0, f64::max);
        d_err.push(err);
    }
    let ratios = [d_err[1] / d_err[0], d_err[2] / d_err[1]];
    let mut nu_err = 0.0f64;
    for eps in [10.0, 15.0, 20.0, 30.0, 40.0] {
        let p = ReducedParams::from_alpha(1.0, eps).unwrap();
        let nu = nu_from_monodromy(&integrate_uv(&p, &c).unwrap()).unwrap().nu;
        nu_err = nu_err.max((wkb_nu(&p) - nu).abs());
    }
    let dt = t.elapsed();
    let pass = d_err.iter().all(|e| e.is_finite())
        && d_err[0] < 0.1
        && ratios.iter().all(|&r| r < 0.7)
        && nu_err <= 0.01
        && dt < Duration::from_secs(60);
    outcome(
        pass,
        format!(
            "max|D_wkb − D| = {:.4} / {:.4} / {:.4} at ε = 10/20/40, ratios {:.2}, {:.2}; max|Δν| = {nu_err:.1e}; {dt:.2?}",
            d_err[0], d_err[1], d_err[2], ratios[0], ratios[1]
        ),
    )
}

fn c8_sawtooth() -> Outcome {
    let c = StepControl::default();
    let eps: Vec<f64> = (0..=250).map(|i| 10.0 + 0.01 * i as f64).collect();
    let nu: Vec<f64> = eps
        .iter()
        .map(|&e| {
            let p = ReducedParams::from_alpha(1.0, e).unwrap();
            nu_from_monodromy(&integrate_uv(&p, &c).unwrap()).unwrap().nu
        })
        .collect();
    let want = 2.0 * epsilon_zero(1.0);
    match fit_sawtooth(&eps, &nu) {
        Ok(fit) => outcome(
            (fit.period - want).abs() <= 1e-2 && fit.max_residual <= 0.02,
            format!(
                "period {:.6} vs 2ε₀ = {want:.6} (|Δ| = {:.1e}), fit residual {:.1e} (≤ 0.02)",
                fit.period,
                (fit.period - want).abs(),
                fit.max_residual
            ),
        ),
        Err(e) => outcome(false, format!("fit failed: {e}")),
    }
}

fn c9_first_harmonic() -> Outcome {
    let p = ReducedParams::from_alpha(1.0, 20.0).unwrap();
    let quad = wkb_dipole_amps(&p, 0).unwrap()[0].amplitude;
    let closed = wkb_d0_closed(1.0);
    let err = (quad - closed).abs();
    outcome(err <= 1e-6, format!("quadrature D₀ = {quad:.12}, closed form {closed:.12}, |Δ| = {err:.1e}"))
}

fn c10_plateau() -> Outcome {
    let p = ReducedParams::from_alpha(1.0, 20.0).unwrap();
    let sol = WkbSolution::new(p);
    let lines = wkb_dipole_amps(&p, 40).unwrap();
    let t = LineTable::from_lines(&lines);
    let branch = match sign_rule(sol.omega, sol.nu) {
        Ok(s) if s > 0.0 => LineClass::HyperRamanDown,
        Ok(_) => LineClass::HyperRamanUp,
        Err(e) => return outcome(false, format!("sign rule: {e}")),
    };
    let d0 = t.get(LineClass::OddHarmonic, 0).unwrap().abs();
    let threshold = 0.1 * d0;
    let band = twolevel_core::spectrum::band(&lines, branch, threshold);
    let target = sol.omega + sol.nu;
    let odd: Vec<f64> = (0..=5).map(|j| t.get(LineClass::OddHarmonic, j).unwrap().abs()).collect();
    let monotone = odd.windows(2).all(|w| w[1] <= 1.1 * w[0]);
    let Some(b) = band else {
        return outcome(false, format!("no {} line reaches {threshold:.4}", branch.label()));
    };
    let edge_ok = (b.upper_edge as f64 - target).abs() <= 2.0;
    let missing: Vec<usize> = (b.lower_edge..=b.upper_edge).filter(|j| !b.indices.contains(j)).collect();
    outcome(
        b.contiguous && edge_ok && monotone,
        format!(
            "{} band j = {}..{} (missing {:?}, contiguous {}), upper edge {} vs Ω+ν = {target:.3} (within 2: {edge_ok}); odd |D_j|, j ≤ 5 = {:.4?} (monotone: {monotone})",
            branch.label(),
            b.lower_edge,
            b.upper_edge,
            missing,
            b.contiguous,
            b.upper_edge,
            odd
        ),
    )
}

fn c11_determinism() -> Outcome {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        let mut map = BTreeMap::new();
        for (k, v) in [("gamma", "1"), ("epsilon", "1"), ("routes", "cf,quadrature,projection,wkb")] {
            map.insert(k.to_string(), v.to_string());
        }
        map.insert("out".into(), d.path().display().to_string());
        if let Err(e) = RunConfig::from_pairs(&map).and_then(|cfg| cmd_run(&cfg)) {
            return outcome(false, format!("cmd_run failed: {e}"));
        }
    }
    let mut same = Vec::new();
    for f in ["solution.csv", "spectrum.json", "report.json"] {
        let a = std::fs::read(dirs[0].path().join(f)).unwrap();
        let b = std::fs::read(dirs[1].path().join(f)).unwrap();
        same.push((f, a == b, a.len()));
    }
    let pass = same.iter().all(|s| s.1);
    let shown: Vec<String> = same.iter().map(|(f, eq, n)| format!("{f} {} ({n} B)", if *eq { "identical" } else { "DIFFERS" })).collect();
    outcome(pass, shown.join(", "))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("epsilon_zero reproduction", c1_epsilon_zero),
        ("first-integral suite", c2_first_integral),
        ("monodromy identity", c3_monodromy_identity),
        ("Floquet route agreement", c4_routes),
        ("spectrum cross-route", c5_spectrum),
        ("Bloch-system residuals", c6_bloch),
        ("WKB accuracy ladder", c7_wkb_ladder),
        ("sawtooth law", c8_sawtooth),
        ("WKB first-harmonic amplitude", c9_first_harmonic),
        ("plateau property", c10_plateau),
        ("determinism", c11_determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!("{} {:>2} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
