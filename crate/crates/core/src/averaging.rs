//! First-order averaging for fast rotations at small `ω`.
//!
//! At `ω = 0` the sector velocity `s = (1+εφ)²θ̇` is conserved and
//! `θ = sΦ(τ) + ϑ` with `Φ(τ) = ∫₀^τ dη/(1+εφ(η))²`. Averaging the slow drift
//! of `(s, ϑ)` over the resonance period `2πrq` gives
//!
//! ```text
//! s' = ω·F(s),   F(s) = −(β/ω)s − A(s) cos ϑ − B(s) sin ϑ,
//! A(s) = ⟨(1+εφ) sin(sΦ)⟩,   B(s) = ⟨(1+εφ) cos(sΦ)⟩,
//! ```
//!
//! whose steady states sit at `s₀ = (r/q)·2π/Φ(2π)` on two phase branches.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::elliptic::gcd;
use crate::error::{Error, Result};
use crate::model::{Excitation, Params, State};
use crate::quadrature::GaussLegendre;
use crate::sweep::{BoundaryCurve, BoundaryKind};

/// Panels per excitation period used by [`compute_phi`] by default.
pub const DEFAULT_PANELS: usize = 128;
/// Nodes of the Gauss–Legendre rule applied on every panel.
const NODES: usize = 16;
/// `|F′(s₀)|` below this is reported as [`Stability::Marginal`].
pub const MARGINAL_BAND: f64 = 1e-10;

/// `Φ` tabulated at panel edges on `[0, 2π]`; values in between are exact
/// Gauss–Legendre integrals from the nearest edge to the left.
#[derive(Debug, Clone)]
pub struct PhiTable {
    eps: f64,
    excitation: Excitation,
    rule: GaussLegendre,
    width: f64,
    cumulative: Vec<f64>,
}

impl PhiTable {
    fn integrand(&self, tau: f64) -> f64 {
        let l = 1.0 + self.eps * self.excitation.phi(tau);
        1.0 / (l * l)
    }

    pub fn panels(&self) -> usize {
        self.cumulative.len() - 1
    }

    /// `Φ(2π)`.
    pub fn period_increment(&self) -> f64 {
        self.cumulative[self.panels()]
    }

    /// Panel edges `τⱼ` and `Φ(τⱼ)` on `[0, 2π]`.
    pub fn samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.cumulative
            .iter()
            .enumerate()
            .map(|(j, &phi)| (self.width * j as f64, phi))
    }

    /// `Φ(τ)` for any real `τ`, using `Φ(τ + 2π) = Φ(τ) + Φ(2π)`.
    pub fn eval(&self, tau: f64) -> f64 {
        let periods = (tau / (2.0 * PI)).floor();
        let local = tau - 2.0 * PI * periods;
        let j = ((local / self.width) as usize).min(self.panels() - 1);
        let edge = self.width * j as f64;
        periods * self.period_increment()
            + self.cumulative[j]
            + self.rule.integrate(|t| self.integrand(t), edge, local)
    }

    /// `Φ′(τ) = 1/(1+εφ(τ))²`.
    pub fn derivative(&self, tau: f64) -> f64 {
        self.integrand(tau)
    }

    /// Mean of `f(1+εφ(τ), Φ(τ))` over `[0, 2π·periods]`.
    fn mean(&self, periods: u32, f: impl Fn(f64, f64) -> f64) -> f64 {
        let inc = self.period_increment();
        let mut total = 0.0;
        for m in 0..periods {
            for j in 0..self.panels() {
                let edge = self.width * j as f64;
                let base = m as f64 * inc + self.cumulative[j];
                for (t, w) in self.rule.mapped(edge, edge + self.width) {
                    let phi = base + self.rule.integrate(|x| self.integrand(x), edge, t);
                    let l = 1.0 + self.eps * self.excitation.phi(t);
                    total += w * f(l, phi);
                }
            }
        }
        total / (2.0 * PI * periods as f64)
    }
}

/// Tabulates `Φ` with `panels` Gauss–Legendre panels per excitation period.
pub fn compute_phi(p: &Params, panels: usize) -> Result<PhiTable> {
    p.validate()?;
    if panels == 0 {
        return Err(Error::domain("Phi table needs at least one panel"));
    }
    let mut table = PhiTable {
        eps: p.eps,
        excitation: p.excitation.clone(),
        rule: GaussLegendre::new(NODES),
        width: 2.0 * PI / panels as f64,
        cumulative: vec![0.0; panels + 1],
    };
    for j in 0..panels {
        let a = table.width * j as f64;
        let b = if j + 1 == panels {
            2.0 * PI
        } else {
            a + table.width
        };
        let piece = table.rule.integrate(|t| table.integrand(t), a, b);
        if !(piece > 0.0 && piece.is_finite()) {
            return Err(Error::domain("1 + eps*phi must stay positive"));
        }
        table.cumulative[j + 1] = table.cumulative[j] + piece;
    }
    Ok(table)
}

fn check_resonance(r: u32, q: u32) -> Result<()> {
    if r == 0 || q == 0 {
        return Err(Error::domain("resonance indices must be natural numbers"));
    }
    if gcd(r, q) != 1 {
        return Err(Error::domain(format!("{r}:{q} is not in lowest terms")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stability {
    Stable,
    Unstable,
    /// `|F′(s₀)|` within [`MARGINAL_BAND`] of zero.
    Marginal,
}

impl Stability {
    fn from_slope(f_prime: f64) -> Self {
        if f_prime.abs() < MARGINAL_BAND {
            Self::Marginal
        } else if f_prime < 0.0 {
            Self::Stable
        } else {
            Self::Unstable
        }
    }

    pub fn is_stable(self) -> bool {
        self == Self::Stable
    }
}

impl std::fmt::Display for Stability {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Stable => "stable",
            Self::Unstable => "unstable",
            Self::Marginal => "marginal",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BranchSign {
    Plus,
    Minus,
}

/// One steady phase `ϑ₀ ∈ [0, 2π)` and its stability slope `F′(s₀)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub theta0: f64,
    pub f_prime: f64,
    pub stability: Stability,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AveragedRotation {
    pub r: u32,
    pub q: u32,
    pub eps: f64,
    pub beta_over_omega: f64,
    pub s0: f64,
    pub a: f64,
    pub b: f64,
    pub a_prime: f64,
    pub b_prime: f64,
    /// Minimal `ω/β` for existence, `s₀/√(A²+B²)`.
    pub threshold_omega_over_beta: f64,
    pub exists: bool,
    pub plus: Option<Branch>,
    pub minus: Option<Branch>,
}

impl AveragedRotation {
    pub fn branch(&self, sign: BranchSign) -> Option<&Branch> {
        match sign {
            BranchSign::Plus => self.plus.as_ref(),
            BranchSign::Minus => self.minus.as_ref(),
        }
    }

    /// `A cos ϑ₀ + B sin ϑ₀ + (β/ω)s₀`, zero on both branches.
    pub fn residual(&self, theta0: f64) -> f64 {
        self.a * theta0.cos() + self.b * theta0.sin() + self.beta_over_omega * self.s0
    }
}

/// Averaging quantities for one parameter set, with `Φ` tabulated once.
#[derive(Debug, Clone)]
pub struct Averager {
    params: Params,
    phi: PhiTable,
}

impl Averager {
    pub fn new(p: &Params) -> Result<Self> {
        Self::with_panels(p, DEFAULT_PANELS)
    }

    pub fn with_panels(p: &Params, panels: usize) -> Result<Self> {
        Ok(Self {
            params: p.clone(),
            phi: compute_phi(p, panels)?,
        })
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn phi(&self) -> &PhiTable {
        &self.phi
    }

    /// `s₀ = (r/q)·2π/Φ(2π)`.
    pub fn steady_sector_velocity(&self, r: u32, q: u32) -> Result<f64> {
        check_resonance(r, q)?;
        Ok(r as f64 / q as f64 * 2.0 * PI / self.phi.period_increment())
    }

    /// `(A(s), B(s))` averaged over `[0, 2πrq]`.
    pub fn ab_integrals(&self, s: f64, r: u32, q: u32) -> Result<(f64, f64)> {
        check_resonance(r, q)?;
        let periods = r * q;
        Ok((
            self.phi.mean(periods, |l, phi| l * (s * phi).sin()),
            self.phi.mean(periods, |l, phi| l * (s * phi).cos()),
        ))
    }

    /// `(A′(s), B′(s))`.
    pub fn ab_derivatives(&self, s: f64, r: u32, q: u32) -> Result<(f64, f64)> {
        check_resonance(r, q)?;
        let periods = r * q;
        Ok((
            self.phi.mean(periods, |l, phi| l * phi * (s * phi).cos()),
            -self.phi.mean(periods, |l, phi| l * phi * (s * phi).sin()),
        ))
    }

    /// Steady rotation `r:q` of the averaged equations and the stability of
    /// both phase branches.
    pub fn solve_branches(&self, r: u32, q: u32) -> Result<AveragedRotation> {
        let p = &self.params;
        if p.omega <= 0.0 {
            return Err(Error::domain("averaging needs omega > 0"));
        }
        let s0 = self.steady_sector_velocity(r, q)?;
        let (a, b) = self.ab_integrals(s0, r, q)?;
        let (a_prime, b_prime) = self.ab_derivatives(s0, r, q)?;
        let radius = a.hypot(b);
        // Both integrals are means of O(1) quantities; below this they are
        // cancellation noise.
        if radius < 1e-13 {
            return Err(Error::Degenerate(format!(
                "A = B = 0 for {r}:{q} at eps = {}; no steady rotation",
                p.eps
            )));
        }
        let x = p.beta_over_omega();
        let ratio = s0 * x / radius;
        let exists = ratio <= 1.0;
        let mut rot = AveragedRotation {
            r,
            q,
            eps: p.eps,
            beta_over_omega: x,
            s0,
            a,
            b,
            a_prime,
            b_prime,
            threshold_omega_over_beta: s0 / radius,
            exists,
            plus: None,
            minus: None,
        };
        if exists {
            let sign_b = if b >= 0.0 { 1.0 } else { -1.0 };
            let theta_star = sign_b * (a / radius).clamp(-1.0, 1.0).acos();
            let spread = ratio.acos();
            let branch = |theta: f64| {
                let theta0 = theta.rem_euclid(2.0 * PI);
                let f_prime = -x - a_prime * theta0.cos() - b_prime * theta0.sin();
                Branch {
                    theta0,
                    f_prime,
                    stability: Stability::from_slope(f_prime),
                }
            };
            rot.plus = Some(branch(theta_star + PI + spread));
            rot.minus = Some(branch(theta_star + PI - spread));
        }
        Ok(rot)
    }

    /// First-order rotation `θ = s₀Φ(τ) + ϑ₀` on the chosen branch.
    pub fn approximate_rotation_solution(
        &self,
        rot: &AveragedRotation,
        sign: BranchSign,
    ) -> Result<ApproxRotation> {
        let branch = rot
            .branch(sign)
            .ok_or_else(|| Error::domain("the averaged rotation does not exist"))?;
        Ok(ApproxRotation {
            s0: rot.s0,
            theta0: branch.theta0,
            phi: self.phi.clone(),
        })
    }

    /// Smallest `ω/β` at which the plus branch is stable, scanning `β/ω`
    /// downwards from the existence boundary. `None` if it is never stable.
    pub fn stability_threshold(&self, r: u32, q: u32) -> Result<Option<f64>> {
        let s0 = self.steady_sector_velocity(r, q)?;
        let (a, b) = self.ab_integrals(s0, r, q)?;
        let (ap, bp) = self.ab_derivatives(s0, r, q)?;
        let radius = a.hypot(b);
        if radius < 1e-13 {
            return Ok(None);
        }
        let theta_star = b.atan2(a);
        let x_max = radius / s0;
        let slope = |x: f64| {
            let theta = theta_star + PI + (s0 * x / radius).min(1.0).acos();
            -x - ap * theta.cos() - bp * theta.sin()
        };
        if slope(x_max) < 0.0 {
            return Ok(Some(1.0 / x_max));
        }
        const SCAN: usize = 400;
        let mut hi = x_max;
        for i in (0..SCAN).rev() {
            let lo = x_max * i as f64 / SCAN as f64;
            if slope(lo) < 0.0 {
                let (mut stable, mut unstable) = (lo, hi);
                for _ in 0..60 {
                    let mid = 0.5 * (stable + unstable);
                    if slope(mid) < 0.0 {
                        stable = mid;
                    } else {
                        unstable = mid;
                    }
                }
                return Ok(Some(1.0 / stable));
            }
            hi = lo;
        }
        Ok(None)
    }
}

/// `θ(τ) = s₀Φ(τ) + ϑ₀`.
#[derive(Debug, Clone)]
pub struct ApproxRotation {
    pub s0: f64,
    pub theta0: f64,
    phi: PhiTable,
}

impl ApproxRotation {
    pub fn theta(&self, tau: f64) -> f64 {
        self.s0 * self.phi.eval(tau) + self.theta0
    }

    /// `θ̇ = s₀/(1+εφ)²`.
    pub fn velocity(&self, tau: f64) -> f64 {
        self.s0 * self.phi.derivative(tau)
    }

    /// State on the approximation at time `tau`, for seeding simulations.
    pub fn state(&self, tau: f64) -> State {
        State::new(self.theta(tau), self.velocity(tau), tau)
    }
}

pub fn steady_sector_velocity(p: &Params, r: u32, q: u32) -> Result<f64> {
    Averager::new(p)?.steady_sector_velocity(r, q)
}

pub fn ab_integrals(p: &Params, s: f64, r: u32, q: u32) -> Result<(f64, f64)> {
    Averager::new(p)?.ab_integrals(s, r, q)
}

pub fn ab_derivatives(p: &Params, s: f64, r: u32, q: u32) -> Result<(f64, f64)> {
    Averager::new(p)?.ab_derivatives(s, r, q)
}

pub fn solve_branches(p: &Params, r: u32, q: u32) -> Result<AveragedRotation> {
    Averager::new(p)?.solve_branches(r, q)
}

/// Stability of the (plus, minus) branches; `None` if the rotation does not
/// exist.
pub fn stability(rot: &AveragedRotation) -> Option<(Stability, Stability)> {
    Some((rot.plus?.stability, rot.minus?.stability))
}

/// Minimal `ω/β` versus `ε` for the `r:q` rotation with `φ = cos τ`.
/// Grid points where `A = B = 0` (no rotation at any damping) are omitted.
pub fn existence_boundary(r: u32, q: u32, eps_grid: &[f64]) -> Result<BoundaryCurve> {
    existence_boundary_for(&Excitation::cosine(), r, q, eps_grid)
}

pub fn existence_boundary_for(
    excitation: &Excitation,
    r: u32,
    q: u32,
    eps_grid: &[f64],
) -> Result<BoundaryCurve> {
    check_resonance(r, q)?;
    let mut points = Vec::with_capacity(eps_grid.len());
    for &eps in eps_grid {
        // β/ω = 0 so the rotation exists whenever it is not degenerate.
        let p = Params::with_excitation(eps, 0.0, 1.0, excitation.clone())?;
        match Averager::new(&p)?.solve_branches(r, q) {
            Ok(rot) if rot.threshold_omega_over_beta.is_finite() => {
                points.push((eps, rot.threshold_omega_over_beta))
            }
            Ok(_) | Err(Error::Degenerate(_)) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(BoundaryCurve::new(BoundaryKind::Averaging { r, q }, points))
}

/// Writes one row per rotation with the columns
/// `eps,r,q,s0,threshold_omega_over_beta,theta_plus,theta_minus,stable_plus,stable_minus`.
/// Branch columns are empty when the rotation does not exist.
pub fn write_branch_csv(mut out: impl Write, rows: &[AveragedRotation]) -> std::io::Result<()> {
    writeln!(
        out,
        "eps,r,q,s0,threshold_omega_over_beta,theta_plus,theta_minus,stable_plus,stable_minus"
    )?;
    let opt = |b: Option<Branch>, f: fn(&Branch) -> String| b.as_ref().map(f).unwrap_or_default();
    for rot in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            rot.eps,
            rot.r,
            rot.q,
            rot.s0,
            rot.threshold_omega_over_beta,
            opt(rot.plus, |b| b.theta0.to_string()),
            opt(rot.minus, |b| b.theta0.to_string()),
            opt(rot.plus, |b| b.stability.to_string()),
            opt(rot.minus, |b| b.stability.to_string()),
        )?;
    }
    Ok(())
}

pub fn save_branch_csv(path: &Path, rows: &[AveragedRotation]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_branch_csv(std::io::BufWriter::new(file), rows).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature;

    fn averager(eps: f64, beta: f64, omega: f64) -> Averager {
        Averager::new(&Params::new(eps, beta, omega).unwrap()).unwrap()
    }

    #[test]
    fn phi_is_identity_without_modulation() {
        let av = averager(0.0, 0.0, 1.0);
        for tau in [0.0, 0.3, 2.0 * PI, 7.5, -3.0] {
            assert!((av.phi().eval(tau) - tau).abs() < 1e-13, "{tau}");
        }
    }

    #[test]
    fn phi_matches_adaptive_quadrature() {
        let av = averager(0.3, 0.0, 1.0);
        let f = |t: f64| (1.0 + 0.3 * t.cos()).powi(-2);
        let oracle = quadrature::adaptive(f, 0.0, 2.0 * PI, 1e-15, 1e-15, 4000).value;
        assert!((av.phi().period_increment() - oracle).abs() < 1e-12);
        assert!(av.phi().period_increment() > 2.0 * PI);
        let mid = quadrature::adaptive(f, 0.0, 1.234, 1e-15, 1e-15, 4000).value;
        assert!((av.phi().eval(1.234) - mid).abs() < 1e-12);
        let inc = av.phi().period_increment();
        assert!((av.phi().eval(1.234 + 4.0 * PI) - mid - 2.0 * inc).abs() < 1e-11);
        let mut prev = -1.0;
        for (_, phi) in av.phi().samples() {
            assert!(phi > prev);
            prev = phi;
        }
    }

    #[test]
    fn sector_velocity_resonance_identity() {
        let av = averager(0.3, 0.0, 1.0);
        for (r, q) in [(1, 1), (2, 1), (3, 2)] {
            let s0 = av.steady_sector_velocity(r, q).unwrap();
            let lhs = s0 * q as f64 * av.phi().period_increment();
            assert!((lhs - 2.0 * PI * r as f64).abs() < 1e-12);
        }
        assert!(av.steady_sector_velocity(1, 1).unwrap() < 1.0);
        assert!(
            (averager(0.0, 0.0, 1.0)
                .steady_sector_velocity(1, 3)
                .unwrap()
                - 1.0 / 3.0)
                .abs()
                < 1e-14
        );
        assert!(av.steady_sector_velocity(2, 4).is_err());
    }

    #[test]
    fn ab_trivial_values() {
        let av = averager(0.0, 0.0, 1.0);
        let (a, b) = av.ab_integrals(1.0, 1, 1).unwrap();
        assert!(a.abs() < 1e-14 && b.abs() < 1e-14);
        let (ap, bp) = av.ab_derivatives(1.0, 1, 1).unwrap();
        assert!(ap.abs() < 1e-13 && (bp - 1.0).abs() < 1e-13);
        let av = averager(0.3, 0.0, 1.0);
        let (a, b) = av.ab_integrals(0.0, 1, 1).unwrap();
        assert_eq!(a, 0.0);
        assert!((b - 1.0).abs() < 1e-14);
        assert_eq!(av.ab_derivatives(0.0, 1, 1).unwrap().1, 0.0);
    }

    #[test]
    fn ab_match_quadrature() {
        let av = averager(0.3, 0.0, 1.0);
        let s0 = av.steady_sector_velocity(1, 1).unwrap();
        let (a, b) = av.ab_integrals(s0, 1, 1).unwrap();
        // Independent route: Φ from the adaptive rule at every node.
        let phi = |t: f64| quadrature::integrate(|x| (1.0 + 0.3 * x.cos()).powi(-2), 0.0, t);
        let mean = |trig: fn(f64) -> f64| {
            quadrature::adaptive(
                |t| (1.0 + 0.3 * t.cos()) * trig(s0 * phi(t)),
                0.0,
                2.0 * PI,
                1e-14,
                1e-13,
                400,
            )
            .value
                / (2.0 * PI)
        };
        assert!((a - mean(f64::sin)).abs() < 1e-10);
        assert!((b - mean(f64::cos)).abs() < 1e-10);
        // Values cross-checked against an independent script.
        assert!((s0 - 0.86808).abs() < 1e-5);
        assert!((b - 0.43498).abs() < 1e-5);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let h = 1e-5;
        for &(eps, s) in &[(0.3, 0.86), (0.1, 1.7), (0.45, 0.4)] {
            let av = averager(eps, 0.0, 1.0);
            let (ap, bp) = av.ab_derivatives(s, 1, 1).unwrap();
            let (a1, b1) = av.ab_integrals(s + h, 1, 1).unwrap();
            let (a0, b0) = av.ab_integrals(s - h, 1, 1).unwrap();
            assert!((ap - (a1 - a0) / (2.0 * h)).abs() < 1e-8);
            assert!((bp - (b1 - b0) / (2.0 * h)).abs() < 1e-8);
        }
    }

    #[test]
    fn derivatives_match_richardson_differences_over_longer_windows() {
        // Φ grows with r, so the O(h²) term of a plain central difference
        // exceeds 1e-8 here; the fourth-order stencil does not.
        let h = 1e-4;
        let av = averager(0.45, 0.0, 1.0);
        for (r, q) in [(2, 1), (3, 1), (1, 2)] {
            let s = 0.8;
            let (ap, bp) = av.ab_derivatives(s, r, q).unwrap();
            let at = |k: f64| av.ab_integrals(s + k * h, r, q).unwrap();
            let (p1, m1, p2, m2) = (at(1.0), at(-1.0), at(2.0), at(-2.0));
            let d = |f: fn(&(f64, f64)) -> f64| {
                (8.0 * (f(&p1) - f(&m1)) - (f(&p2) - f(&m2))) / (12.0 * h)
            };
            assert!((ap - d(|x| x.0)).abs() < 1e-8, "{r}:{q}");
            assert!((bp - d(|x| x.1)).abs() < 1e-8, "{r}:{q}");
        }
    }

    #[test]
    fn branches_satisfy_steady_state() {
        let rot = averager(0.3, 0.05, 0.1).solve_branches(1, 1).unwrap();
        assert!(rot.exists);
        for b in [rot.plus.unwrap(), rot.minus.unwrap()] {
            assert!(rot.residual(b.theta0).abs() < 1e-10);
            assert!((0.0..2.0 * PI).contains(&b.theta0));
        }
    }

    #[test]
    fn undamped_branches_are_symmetric() {
        let rot = averager(0.3, 0.0, 0.1).solve_branches(1, 1).unwrap();
        let star = rot.b.atan2(rot.a);
        let (p, m) = (rot.plus.unwrap().theta0, rot.minus.unwrap().theta0);
        let d = |x: f64| (x - star - PI).rem_euclid(2.0 * PI);
        assert!((d(p) - PI / 2.0).abs() < 1e-12);
        assert!((d(m) - 1.5 * PI).abs() < 1e-12);
    }

    #[test]
    fn existence_threshold_is_sharp() {
        let thr = averager(0.3, 0.0, 1.0)
            .solve_branches(1, 1)
            .unwrap()
            .threshold_omega_over_beta;
        assert!((thr - 1.9957).abs() < 1e-4);
        let beta = 0.01;
        let above = averager(0.3, beta, beta * thr * (1.0 + 1e-6))
            .solve_branches(1, 1)
            .unwrap();
        let below = averager(0.3, beta, beta * thr * (1.0 - 1e-6))
            .solve_branches(1, 1)
            .unwrap();
        assert!(above.exists && !below.exists);
        assert!(below.plus.is_none());
        let at = above.plus.unwrap().theta0 - above.minus.unwrap().theta0;
        assert!(at.abs() < 1e-2);
    }

    #[test]
    fn only_plus_branch_can_be_stable() {
        for eps in [0.1, 0.2, 0.3, 0.4] {
            for ratio in [3.0, 5.0, 10.0, 20.0, 50.0] {
                let rot = averager(eps, 0.002, 0.002 * ratio)
                    .solve_branches(1, 1)
                    .unwrap();
                if rot.exists {
                    assert!(
                        !rot.minus.unwrap().stability.is_stable(),
                        "eps {eps} ratio {ratio}"
                    );
                }
            }
        }
        let rot = averager(0.3, 0.0025, 0.05).solve_branches(1, 1).unwrap();
        assert_eq!(
            stability(&rot),
            Some((Stability::Stable, Stability::Unstable))
        );
    }

    #[test]
    fn degenerate_without_modulation() {
        assert!(matches!(
            averager(0.0, 0.05, 0.1).solve_branches(1, 1),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn boundary_is_finite_and_grows_as_eps_vanishes() {
        for r in 1..=3 {
            let curve = existence_boundary(r, 1, &[0.05, 0.2, 0.5]).unwrap();
            assert_eq!(curve.points.len(), 3);
            assert!(curve.points.iter().all(|&(_, y)| y.is_finite() && y > 0.0));
        }
        let c = existence_boundary(1, 1, &[0.0, 0.001, 0.01, 0.1]).unwrap();
        assert_eq!(c.points.len(), 3);
        assert!(c.points[0].1 > c.points[1].1 && c.points[1].1 > c.points[2].1);
    }

    #[test]
    fn approximate_solution_resonance() {
        let av = averager(0.3, 0.0025, 0.05);
        let rot = av.solve_branches(1, 1).unwrap();
        let approx = av
            .approximate_rotation_solution(&rot, BranchSign::Plus)
            .unwrap();
        for tau in [0.0, 0.7, 3.0] {
            assert!((approx.theta(tau + 2.0 * PI) - approx.theta(tau) - 2.0 * PI).abs() < 1e-12);
        }
        let flat = averager(0.0, 0.0, 0.05);
        let approx = flat
            .approximate_rotation_solution(
                &AveragedRotation {
                    plus: Some(Branch {
                        theta0: 0.5,
                        f_prime: -1.0,
                        stability: Stability::Stable,
                    }),
                    s0: 1.0,
                    ..rot.clone()
                },
                BranchSign::Plus,
            )
            .unwrap();
        assert!((approx.theta(2.0) - 2.5).abs() < 1e-13);
    }

    #[test]
    fn stability_threshold_not_below_existence() {
        let av = averager(0.3, 0.0, 1.0);
        let rot = av.solve_branches(1, 1).unwrap();
        let stab = av.stability_threshold(1, 1).unwrap().unwrap();
        assert!(stab >= rot.threshold_omega_over_beta * (1.0 - 1e-12));
    }

    #[test]
    fn branch_csv_layout() {
        let rot = averager(0.3, 0.0025, 0.05).solve_branches(1, 1).unwrap();
        let mut buf = Vec::new();
        write_branch_csv(&mut buf, &[rot]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[1].ends_with("stable,unstable"));
    }
}
