//! Independent numerical oracles shared by the integration tests. Nothing here
//! calls into the crate's own quadrature.

#![allow(dead_code)]

/// Adaptive Simpson rule with Richardson correction, applied on `pieces`
/// equal sub-intervals.
pub fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, pieces: usize) -> f64 {
    let h = (b - a) / pieces as f64;
    (0..pieces)
        .map(|i| {
            let lo = a + h * i as f64;
            let hi = if i + 1 == pieces { b } else { lo + h };
            let (fa, fm, fb) = (f(lo), f(0.5 * (lo + hi)), f(hi));
            let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
            recurse(f, lo, hi, fa, fm, fb, whole, tol / pieces as f64, 40)
        })
        .sum()
}

#[allow(clippy::too_many_arguments)]
fn recurse(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    // Stop at the tolerance, or once the difference is round-off.
    if depth == 0 || delta.abs() <= 15.0 * tol || delta.abs() <= 1e-15 * (left + right).abs() {
        return left + right + delta / 15.0;
    }
    recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// First-order perturbation `g₁` for `φ = cos τ`, written out directly.
pub fn g1(eps: f64, beta: f64, omega: f64, theta: f64, v: f64, tau: f64) -> f64 {
    (2.0 * eps * tau.sin() - beta * omega) * v + eps * omega * omega * tau.cos() * theta.sin()
}

/// `K(k)` from its defining integral.
pub fn complete_k(k: f64) -> f64 {
    simpson(
        &|t: f64| 1.0 / (1.0 - (k * t.sin()).powi(2)).sqrt(),
        0.0,
        std::f64::consts::FRAC_PI_2,
        1e-13,
        64,
    )
}

/// `E(k)` from its defining integral.
pub fn complete_e(k: f64) -> f64 {
    simpson(
        &|t: f64| (1.0 - (k * t.sin()).powi(2)).sqrt(),
        0.0,
        std::f64::consts::FRAC_PI_2,
        1e-13,
        64,
    )
}

/// Verdict line printed by the acceptance runner.
pub fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}
