//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

/// Adaptive Simpson quadrature with Richardson correction.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// Area of `{a < x₁ < b, 0 < x₂ < x₁^γ}` as an iterated integral.
pub fn strip_area(gamma: f64, a: f64, b: f64) -> f64 {
    let inner = |x1: f64| adaptive_simpson(&|_x2| 1.0, 0.0, x1.powf(gamma), 1e-15);
    adaptive_simpson(&inner, a, b, 1e-14 * (b - a) * b.powf(gamma))
}

/// `A_N` by plain double loops over the raw terms.
pub fn brute_force_a(u: &[f64], v: &[f64], p: f64) -> (f64, usize) {
    let q = p / (p - 1.0);
    let n = u.len();
    let mut best = (f64::NEG_INFINITY, 0);
    for k in 1..=n {
        let tail: f64 = u[k - 1..].iter().sum();
        let head: f64 = v[..k].iter().map(|x| x.powf(1.0 - q)).sum();
        let val = tail.powf(1.0 / p) * head.powf(1.0 / q);
        if val > best.0 {
            best = (val, k);
        }
    }
    best
}

/// `‖Ta‖_{p,u} / ‖a‖_{p,v}` straight from the definition.
pub fn brute_force_ratio(u: &[f64], v: &[f64], a: &[f64], p: f64) -> f64 {
    let mut s = 0.0;
    let mut num = 0.0;
    for (ai, ui) in a.iter().zip(u) {
        s += ai;
        num += ui * s.abs().powf(p);
    }
    let den: f64 = a.iter().zip(v).map(|(ai, vi)| vi * ai.abs().powf(p)).sum();
    (num / den).powf(1.0 / p)
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}
