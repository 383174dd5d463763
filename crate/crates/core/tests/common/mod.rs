#![allow(dead_code)]

/// Adaptive Simpson quadrature, kept separate from the library's
/// Gauss–Kronrod rule so that it can serve as an oracle.
pub fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 40)
}

pub fn ellip_e_oracle(x: f64, m: f64) -> f64 {
    simpson(&|t: f64| (1.0 - m * t.sin().powi(2)).sqrt(), 0.0, x, 1e-14)
}

pub fn ellip_f_oracle(x: f64, m: f64) -> f64 {
    simpson(&|t: f64| 1.0 / (1.0 - m * t.sin().powi(2)).sqrt(), 0.0, x, 1e-14)
}

/// `J₀(x)` by its power series.
pub fn bessel_j0(x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..60 {
        term *= q / (k as f64 * k as f64);
        sum += term;
    }
    sum
}

pub const GRID: [f64; 4] = [0.5, 1.0, 2.0, 5.0];
