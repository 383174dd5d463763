mod common;

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use common::{ellip_e_oracle, ellip_f_oracle, simpson};
use twolevel_core::C64 as Complex64;
use proptest::prelude::*;
use twolevel_core::floquet::nu_from_monodromy;
use twolevel_core::ode::{self, dipole_inversion, integrate_uv};
use twolevel_core::params::{epsilon_zero, select_epsilon};
use twolevel_core::spectrum::{amps_by_quadrature, LineClass, LineTable};
use twolevel_core::wkb::*;
use twolevel_core::{Error, ReducedParams, StepControl};

fn params(alpha: f64, eps: f64) -> ReducedParams {
    ReducedParams::from_alpha(alpha, eps).unwrap()
}

fn exact_nu(p: &ReducedParams) -> f64 {
    nu_from_monodromy(&integrate_uv(p, &StepControl::default()).unwrap()).unwrap().nu
}

#[test]
fn free_limit() {
    let p = params(0.0, 3.0);
    assert!((wkb_omega(&p) - 1.5).abs() < 1e-14);
    for x in [0.0, 0.3, 1.7, 4.0] {
        assert!((wkb_phase(x, &p) - Complex64::from_polar(1.0, 1.5 * x)).norm() < 1e-13);
        let (u, v) = wkb_uv(x, &p);
        assert!((u.re - (1.5 * x).cos()).abs() < 1e-13 && u.im.abs() < 1e-13);
        assert!((v.re - (1.5 * x).sin() / 1.5).abs() < 1e-13 && v.im.abs() < 1e-13);
        assert_eq!(wkb_delta1(x, 0.0), 0.0);
        assert_eq!(wkb_pi1(x, 0.0), -1.0);
        assert_eq!(wkb_delta2(x, &p), 0.0);
    }
    assert!((wkb_nu(&params(0.0, 1.0)) - 0.5).abs() < 1e-14);
}

#[test]
fn initial_values() {
    let p = params(1.0, 20.0);
    assert_eq!(wkb_phase(0.0, &p), Complex64::new(1.0, 0.0));
    let (f1, f2) = wkb_f(0.0, &p);
    assert!((f1 - 1.0).norm() < 1e-14 && (f2 - 1.0).norm() < 1e-14);
    let (u, v) = wkb_uv(0.0, &p);
    assert!(v.norm() < 1e-15);
    assert!((u - 1.0).norm() < 1.0 / 400.0);
}

#[test]
fn phase_and_omega_against_elliptic_oracle() {
    let p = params(1.0, 20.0);
    let (e, k) = (ellip_e_oracle(FRAC_PI_2, 0.8), ellip_f_oracle(FRAC_PI_2, 0.8));
    let l = 5f64.sqrt();
    let half = 10.0 * l * e + (9.0 * e - k) / (240.0 * l);
    assert!((0.5 * phase_angle(FRAC_PI_2, &p) - half).abs() < 1e-10);
    let omega = (20.0 * l * e + (9.0 * e - k) / (120.0 * l)) / PI;
    assert!((wkb_omega(&p) - omega).abs() < 1e-10);
    let x = 2.4;
    let (ex, fx) = (ellip_e_oracle(x, 0.8), ellip_f_oracle(x, 0.8));
    let theta = 20.0 * l * ex + (9.0 * ex - fx) / (120.0 * l);
    assert!((phase_angle(x, &p) - theta).abs() < 1e-10);
}

#[test]
fn omega_winds_once_per_two_epsilon_zero() {
    let e0 = epsilon_zero(1.0);
    for eps in [10.0, 20.0, 40.0] {
        let d = wkb_omega(&params(1.0, eps + 2.0 * e0)) - wkb_omega(&params(1.0, eps));
        // The 1/ε term shifts the winding by O(ε⁻²).
        assert!((d - 1.0).abs() < 0.5 / (eps * eps), "ε={eps}: {d}");
    }
}

#[test]
fn sawtooth_extremes() {
    let e0 = epsilon_zero(1.0);
    // The 1/ε correction moves the exact extremes away from ε₀, 2ε₀ at small
    // ε; far up the ladder they are where the leading-order law puts them.
    assert!((wkb_nu(&params(1.0, 21.0 * e0)) - 0.5).abs() < 0.02);
    assert!(wkb_nu(&params(1.0, 20.0 * e0)) < 0.02);
    assert!((sawtooth_nu(e0, 1.0) - 0.5).abs() < 1e-12);
    assert!(sawtooth_nu(2.0 * e0, 1.0) < 1e-12);
    // Rising slope 1/(2ε₀).
    let h = 1e-3;
    let slope = (sawtooth_nu(0.5 * e0 + h, 1.0) - sawtooth_nu(0.5 * e0 - h, 1.0)) / (2.0 * h);
    assert!((slope - 1.0 / (2.0 * e0)).abs() < 1e-9);
    // Free atom: period 2.
    for eps in [0.3, 1.1, 4.7] {
        assert!((sawtooth_nu(eps, 0.0) - sawtooth_nu(eps + 2.0, 0.0)).abs() < 1e-12);
    }
}

#[test]
fn sawtooth_tracks_wkb_nu() {
    let mut worst = 0.0f64;
    let mut eps = 10.0;
    while eps <= 14.0 {
        worst = worst.max((sawtooth_nu(eps, 1.0) - wkb_nu(&params(1.0, eps))).abs());
        eps += 0.005;
    }
    assert!(worst <= 0.02, "{worst}");
}

#[test]
fn sawtooth_fit_recovers_period() {
    let e0 = epsilon_zero(1.0);
    let eps: Vec<f64> = (0..=250).map(|i| 10.0 + 0.01 * i as f64).collect();
    let nu = wkb_sawtooth(&eps, 1.0);
    let fit = fit_sawtooth(&eps, &nu).unwrap();
    assert!((fit.period - 2.0 * e0).abs() < 1e-9 && fit.max_residual < 1e-9);
    let nu: Vec<f64> = eps.iter().map(|&e| wkb_nu(&params(1.0, e))).collect();
    let fit = fit_sawtooth(&eps, &nu).unwrap();
    assert!((fit.period - 2.0 * e0).abs() < 1e-2, "{fit:?}");
}

#[test]
fn exponent_matches_exact() {
    for alpha in [0.5, 1.0, 2.0] {
        for eps in [10.0, 15.0, 20.0, 30.0] {
            let p = params(alpha, eps);
            let (w, x) = (wkb_nu(&p), exact_nu(&p));
            assert!((w - x).abs() <= 0.01, "α={alpha} ε={eps}: {w} vs {x}");
        }
    }
}

#[test]
fn literal_exponent_reading_is_not_the_exponent() {
    let p = params(1.0, 15.0);
    let x = exact_nu(&p);
    assert!((wkb_nu(&p) - x).abs() <= 0.01);
    assert!((wkb_nu_literal(&p) - x).abs() > 0.01 || wkb_nu_literal(&p) > 0.5);
}

struct Ladder {
    u: f64,
    d: f64,
    w: f64,
    invariant: f64,
}

fn ladder(eps: f64) -> Ladder {
    let p = params(1.0, eps);
    let c = StepControl { nodes_per_period: 4096, ..StepControl::default() };
    let grid = ode::solve(&p, &c, TAU).unwrap();
    let s = dipole_inversion(&grid);
    let sol = WkbSolution::new(p);
    let mut r = Ladder { u: 0.0, d: 0.0, w: 0.0, invariant: 0.0 };
    for i in 0..grid.len() {
        let x = grid.x[i];
        let (u, v) = sol.uv(x);
        r.u = r.u.max((u - grid.u[i]).norm());
        r.d = r.d.max((wkb_delta1(x, 1.0) + wkb_delta2(x, &p) - s.d[i]).abs());
        r.w = r.w.max((wkb_pi1(x, 1.0) + wkb_pi2(x, &p) - s.w[i]).abs());
        r.invariant = r.invariant.max((u.norm_sqr() + 0.25 * eps * eps * v.norm_sqr() - 1.0).abs());
    }
    r
}

#[test]
fn accuracy_ladder() {
    let rungs: Vec<Ladder> = [10.0, 20.0, 40.0].iter().map(|&e| ladder(e)).collect();
    assert!(rungs[0].d < 0.1);
    assert!(rungs[1].u <= 0.05 && rungs[1].d <= 0.05);
    for k in 1..3 {
        assert!(rungs[k].d < 0.7 * rungs[k - 1].d, "D ratio at rung {k}");
        assert!(rungs[k].u < 0.7 * rungs[k - 1].u, "u ratio at rung {k}");
    }
    for (r, eps) in rungs.iter().zip([10.0, 20.0, 40.0]) {
        assert!(r.invariant <= 1.0 / (eps * eps), "ε={eps}: {}", r.invariant);
        assert!(r.w.is_finite());
    }
}

#[test]
fn split_values() {
    assert!((wkb_delta1(0.0, 1.0) + 0.4).abs() < 1e-15);
    assert!((wkb_pi1(0.0, 1.0) + 0.2).abs() < 1e-15);
    for a in [0.3, 1.0, 2.5] {
        assert!(wkb_delta1(FRAC_PI_2, a).abs() < 1e-15);
    }
    let p = params(1.0, 20.0);
    assert!((wkb_delta2(0.0, &p) - 0.4).abs() < 1e-15);
}

#[test]
fn shifted_part_periodic_at_quarter_exponent() {
    let p = params(1.0, select_epsilon(10.25, 1.0).unwrap());
    assert!((wkb_nu(&p) - 0.25).abs() < 1e-9);
    for i in 0..50 {
        let x = 0.13 * i as f64;
        assert!((wkb_delta2(x + 2.0 * TAU, &p) - wkb_delta2(x, &p)).abs() < 1e-9);
        assert!((wkb_pi2(x + 2.0 * TAU, &p) - wkb_pi2(x, &p)).abs() < 1e-9);
    }
    // Not 2π-periodic.
    let gap = (0..50).map(|i| (wkb_delta2(0.13 * i as f64 + TAU, &p) - wkb_delta2(0.13 * i as f64, &p)).abs()).fold(0.0, f64::max);
    assert!(gap > 0.1);
}

#[test]
fn first_harmonic_closed_form() {
    let closed = wkb_d0_closed(1.0);
    assert!((closed + 0.4628536790935601).abs() < 1e-12);
    let (e, k) = (ellip_e_oracle(FRAC_PI_2, 0.8), ellip_f_oracle(FRAC_PI_2, 0.8));
    assert!((closed + 2.0 / PI * (e - k / 5.0)).abs() < 1e-10);
    let oracle = 4.0 / PI * simpson(&|x: f64| wkb_delta1(x, 1.0) * x.cos(), 0.0, FRAC_PI_2, 1e-13);
    assert!((closed - oracle).abs() < 1e-6);
    let lines = wkb_dipole_amps(&params(1.0, 20.0), 4).unwrap();
    assert!((lines[0].amplitude - closed).abs() < 1e-6);
    assert_eq!(lines[0].class, LineClass::OddHarmonic);
}

#[test]
fn first_even_harmonic() {
    let k = ellip_f_oracle(FRAC_PI_2, 0.8);
    let oracle = -2.0 / (PI * 5f64.sqrt()) * simpson(&|x: f64| 1.0 / (1.0 + 4.0 * x.cos().powi(2)).sqrt(), 0.0, FRAC_PI_2, 1e-13);
    assert!((oracle + 2.0 * k / (5.0 * PI)).abs() < 1e-10);
    let lines = wkb_inversion_amps(&params(1.0, 20.0), 2).unwrap();
    let w0 = LineTable::from_lines(&lines).get(LineClass::EvenHarmonic, 0).unwrap();
    assert!((w0 - oracle).abs() < 1e-8);
    assert!((w0 + 0.28739).abs() < 1e-5);
    let free = wkb_inversion_amps(&params(0.0, 20.0), 3).unwrap();
    for l in &free {
        let want = if (l.class, l.j) == (LineClass::EvenHarmonic, 0) { -1.0 } else { 0.0 };
        assert!((l.amplitude - want).abs() < 1e-10, "{l:?}");
    }
}

#[test]
fn closed_amplitudes_match_generic_quadrature() {
    let p = params(1.0, 20.0);
    let sol = WkbSolution::new(p);
    let generic = LineTable::from_lines(&amps_by_quadrature(&sol, sol.nu, 24).unwrap()).clone();
    let mut lines = wkb_dipole_amps(&p, 24).unwrap();
    lines.extend(wkb_inversion_amps(&p, 24).unwrap());
    for l in &lines {
        let g = generic.get(l.class, l.j).unwrap();
        assert!((g - l.amplitude).abs() < 1e-8, "{l:?} vs {g}");
    }
}

#[test]
fn small_coupling_silences_lines() {
    let p = params(1e-7, 20.5);
    let mut lines = wkb_dipole_amps(&p, 6).unwrap();
    lines.extend(wkb_inversion_amps(&p, 6).unwrap());
    for l in &lines {
        if (l.class, l.j) != (LineClass::EvenHarmonic, 0) {
            assert!(l.amplitude.abs() < 1e-6, "{l:?}");
        }
    }
}

#[test]
fn sign_rule_and_integrality() {
    assert_eq!(sign_rule(3.2, 0.2).unwrap(), -1.0);
    assert_eq!(sign_rule(3.8, 0.2).unwrap(), 1.0);
    assert!(matches!(sign_rule(3.3, 0.2), Err(Error::Integrality { .. })));
    assert!(matches!(sign_rule(3.0, 0.0), Err(Error::Integrality { .. })));
}

#[test]
fn validity_warning() {
    assert!(!WkbSolution::new(params(1.0, 5.0)).warnings.is_empty());
    assert!(!WkbSolution::new(params(1.0, 2.0)).warnings.is_empty());
    assert!(WkbSolution::new(params(1.0, 20.0)).warnings.is_empty());
}

#[test]
fn hierarchy() {
    let free = wkb_hierarchy_check(&params(0.0, 20.0), 1).unwrap();
    assert!(free.eikonal < 1e-14 && free.leading_phase < 1e-10);
    assert!(free.amplitude.unwrap() < 1e-12 && free.correction_secular.unwrap() < 1e-12);
    let r = wkb_hierarchy_check(&params(1.0, 20.0), 1).unwrap();
    assert!(r.eikonal < 1e-13);
    assert!(r.leading_phase < 1e-10);
    assert!(r.amplitude.unwrap() < 1e-10);
    assert!(r.correction_secular.unwrap() < 1e-10, "{r:?}");
    assert!(wkb_hierarchy_check(&params(1.0, 20.0), 2).is_err());
    assert!(wkb_hierarchy_check(&params(1.0, 20.0), 0).unwrap().amplitude.is_none());
}

proptest! {
    #[test]
    fn initial_condition_identities(alpha in 0.0f64..5.0, eps in 5.0f64..100.0) {
        let p = params(alpha, eps);
        prop_assert!((wkb_delta1(0.0, alpha) + wkb_delta2(0.0, &p)).abs() < 1e-14);
        prop_assert!((wkb_pi1(0.0, alpha) + wkb_pi2(0.0, &p) + 1.0).abs() < 1e-14);
    }

    #[test]
    fn periodic_parts(alpha in 0.0f64..5.0, x in -10.0f64..10.0) {
        prop_assert!((wkb_delta1(x + TAU, alpha) - wkb_delta1(x, alpha)).abs() < 1e-13);
        prop_assert!((wkb_pi1(x + PI, alpha) - wkb_pi1(x, alpha)).abs() < 1e-13);
    }

    #[test]
    fn exponent_range(alpha in 0.0f64..5.0, eps in 0.5f64..200.0) {
        let nu = wkb_nu(&params(alpha, eps));
        prop_assert!((0.0..=0.5).contains(&nu));
        let p = params(alpha, eps);
        prop_assert!(sign_rule(wkb_omega(&p), nu).is_ok() || nu < 1e-6 || nu > 0.5 - 1e-6);
    }
}
