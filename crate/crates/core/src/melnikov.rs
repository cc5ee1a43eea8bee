//! Melnikov distances for the homoclinic loop and for the resonant
//! oscillatory and rotational orbits of the unforced pendulum.
//!
//! Each distance is the integral of `v·g₁` along an unperturbed orbit and has
//! the form `M(τ₀) = a·sin τ₀ + b` with `a ∝ ε` and `b ∝ β`, so it changes
//! sign exactly when `ε/β` exceeds `|b/β| / |a/ε|`. Closed forms exist for the
//! homoclinic orbit, the `1:q` oscillations with even `q` and the `q:1`
//! rotations; any other resonance is available through [`melnikov_by_quadrature`].
//!
//! Sign convention: `M` is `∫ v g₁ dτ` evaluated along the orbit, so damping
//! always contributes a negative offset.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::elliptic::{self, gcd, Modulus, RotationModulus};
use crate::error::{Error, Result};
use crate::model::g1;
use crate::quadrature;

/// Half-width of the homoclinic integration window in units of `ω(τ−τ₀)`;
/// `sech²(40) ≈ 7e-35`.
pub const HOMOCLINIC_CUTOFF: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrbitKind {
    Oscillatory,
    Rotational,
}

/// Resonant orbit family: `p:q` oscillations or `r:q` rotations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResonanceSpec {
    pub kind: OrbitKind,
    /// `p` for oscillations, `r` for rotations.
    pub first: u32,
    pub q: u32,
}

impl ResonanceSpec {
    pub fn new(kind: OrbitKind, first: u32, q: u32) -> Result<Self> {
        if first == 0 || q == 0 {
            return Err(Error::domain("resonance indices must be natural numbers"));
        }
        if gcd(first, q) != 1 {
            return Err(Error::domain(format!("{first}:{q} is not in lowest terms")));
        }
        Ok(Self { kind, first, q })
    }

    /// Whether the closed-form distance applies (`1:q` with even `q` for
    /// oscillations, `1:q` rotations).
    pub fn has_closed_form(&self) -> bool {
        match self.kind {
            OrbitKind::Oscillatory => self.first == 1 && self.q.is_multiple_of(2),
            OrbitKind::Rotational => self.first == 1,
        }
    }
}

/// `M(τ₀) = amplitude·sin τ₀ + offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MelnikovResult {
    pub amplitude: f64,
    pub offset: f64,
    pub sign_changing: bool,
    /// Critical `ε/β`: the distance changes sign iff `ε/β` exceeds it.
    pub threshold_ratio: f64,
}

impl MelnikovResult {
    /// Builds the result from per-unit coefficients `amplitude = ε·a`,
    /// `offset = β·b`.
    fn from_units(eps: f64, beta: f64, amp_per_eps: f64, offset_per_beta: f64) -> Self {
        let amplitude = eps * amp_per_eps;
        let offset = beta * offset_per_beta;
        Self {
            amplitude,
            offset,
            sign_changing: amplitude.abs() > offset.abs(),
            threshold_ratio: offset_per_beta.abs() / amp_per_eps.abs(),
        }
    }

    pub fn at(&self, tau0: f64) -> f64 {
        self.amplitude * tau0.sin() + self.offset
    }
}

fn check_omega(omega: f64) -> Result<()> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::domain(format!("omega = {omega} must be positive")));
    }
    Ok(())
}

/// An orbit of the unforced undamped pendulum, `τ ↦ (θ, v)`.
pub trait UnperturbedOrbit {
    fn state(&self, tau: f64) -> (f64, f64);
}

/// Separatrix through the saddle `(±π, 0)`; `θ(τ₀) = 0`.
#[derive(Debug, Clone, Copy)]
pub struct SeparatrixOrbit {
    pub omega: f64,
    pub tau0: f64,
    /// Upper branch `v > 0`; the lower branch is its mirror image.
    pub upper: bool,
}

pub fn separatrix_orbit(omega: f64, tau0: f64, upper: bool) -> Result<SeparatrixOrbit> {
    check_omega(omega)?;
    Ok(SeparatrixOrbit { omega, tau0, upper })
}

impl UnperturbedOrbit for SeparatrixOrbit {
    fn state(&self, tau: f64) -> (f64, f64) {
        let u = self.omega * (tau - self.tau0);
        // sin(θ/2) = tanh u, cos(θ/2) = sech u ⇒ θ = 2 atan(sinh u).
        let theta = 2.0 * u.sinh().atan();
        let v = 2.0 * self.omega / u.cosh();
        if self.upper {
            (theta, v)
        } else {
            (-theta, -v)
        }
    }
}

/// Libration with modulus `k = sin(A/2)`; `θ(τ₀) = 0`, `v(τ₀) = 2ωk`.
#[derive(Debug, Clone, Copy)]
pub struct OscillatoryOrbit {
    pub omega: f64,
    pub modulus: Modulus,
    pub tau0: f64,
}

pub fn oscillatory_orbit(omega: f64, modulus: Modulus, tau0: f64) -> Result<OscillatoryOrbit> {
    check_omega(omega)?;
    if !(modulus.k() > 0.0 && modulus.kc() > 0.0) {
        return Err(Error::domain(format!(
            "oscillatory orbit needs 0 < k < 1, got k = {}",
            modulus.k()
        )));
    }
    Ok(OscillatoryOrbit {
        omega,
        modulus,
        tau0,
    })
}

impl OscillatoryOrbit {
    pub fn period(&self) -> f64 {
        4.0 * self.modulus.ellip_k() / self.omega
    }
}

impl UnperturbedOrbit for OscillatoryOrbit {
    fn state(&self, tau: f64) -> (f64, f64) {
        let j = self.modulus.sn_cn_dn(self.omega * (tau - self.tau0));
        let k = self.modulus.k();
        // dn > 0, so atan2 keeps θ continuous in (−π, π).
        let theta = 2.0 * (k * j.sn).atan2(j.dn);
        (theta, 2.0 * self.omega * k * j.cn)
    }
}

/// Counterclockwise rotation with energy parameter `k > 1`.
#[derive(Debug, Clone, Copy)]
pub struct RotationalOrbit {
    pub omega: f64,
    pub modulus: RotationModulus,
    pub tau0: f64,
}

pub fn rotational_orbit(
    omega: f64,
    modulus: RotationModulus,
    tau0: f64,
) -> Result<RotationalOrbit> {
    check_omega(omega)?;
    Ok(RotationalOrbit {
        omega,
        modulus,
        tau0,
    })
}

impl RotationalOrbit {
    pub fn period(&self) -> f64 {
        self.modulus.period(self.omega)
    }
}

impl UnperturbedOrbit for RotationalOrbit {
    fn state(&self, tau: f64) -> (f64, f64) {
        let m = self.modulus.reciprocal();
        // ωk = ω/m.
        let omega_k = self.omega / m.k();
        let j = m.sn_cn_dn(omega_k * (tau - self.tau0));
        (2.0 * j.am, 2.0 * omega_k * j.dn)
    }
}

/// Homoclinic distance `6πε sin τ₀ / sinh(π/2ω) − 8βω²` as coefficients.
pub fn homoclinic_coefficients(eps: f64, beta: f64, omega: f64) -> Result<MelnikovResult> {
    check_omega(omega)?;
    let amp = 6.0 * PI / (PI / (2.0 * omega)).sinh();
    Ok(MelnikovResult::from_units(
        eps,
        beta,
        amp,
        -8.0 * omega * omega,
    ))
}

pub fn homoclinic_melnikov(eps: f64, beta: f64, omega: f64, tau0: f64) -> Result<f64> {
    Ok(homoclinic_coefficients(eps, beta, omega)?.at(tau0))
}

/// Critical `ε/β = (4ω²/3π)·sinh(π/2ω)` for transverse homoclinic crossings.
pub fn homoclinic_threshold(omega: f64) -> Result<f64> {
    check_omega(omega)?;
    Ok(4.0 * omega * omega / (3.0 * PI) * (PI / (2.0 * omega)).sinh())
}

fn oscillatory_modulus(omega: f64, q: u32) -> Result<Modulus> {
    if !q.is_multiple_of(2) {
        return Err(Error::domain(format!(
            "closed-form oscillatory distance needs even q, got {q}"
        )));
    }
    elliptic::solve_oscillatory_modulus(omega, 1, q)?.ok_or(Error::NoResonance {
        kind: "oscillatory",
        first: 1,
        q,
        omega,
    })
}

/// Distance for the `1:q` oscillation (even `q`):
/// `M = 4ω²(3πε sin τ₀ / (ω² sinh(K(k')/ω)) − 4β(E(k) − k'²K(k)))`.
pub fn osc_coefficients(eps: f64, beta: f64, omega: f64, q: u32) -> Result<MelnikovResult> {
    check_omega(omega)?;
    let m = oscillatory_modulus(omega, q)?;
    let k_prime = m.complement().ellip_k();
    let amp = 12.0 * PI / (k_prime / omega).sinh();
    let offset = -16.0 * omega * omega * m.e_minus_kc2_k();
    Ok(MelnikovResult::from_units(eps, beta, amp, offset))
}

pub fn subharmonic_osc_melnikov(eps: f64, beta: f64, omega: f64, q: u32, tau0: f64) -> Result<f64> {
    Ok(osc_coefficients(eps, beta, omega, q)?.at(tau0))
}

/// Critical `ε/β` for `1:q` oscillations; `None` when the resonance does not
/// exist (`ωq < 1`).
pub fn osc_threshold(omega: f64, q: u32) -> Result<Option<f64>> {
    check_omega(omega)?;
    let m = match oscillatory_modulus(omega, q) {
        Ok(m) if m.k() > 0.0 => m,
        Ok(_) | Err(Error::NoResonance { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    let k_prime = m.complement().ellip_k();
    Ok(Some(
        4.0 * omega * omega / (3.0 * PI) * m.e_minus_kc2_k() * (k_prime / omega).sinh(),
    ))
}

/// Distance for the `q:1` rotation (one turn per `q` excitation periods):
/// `M = 2ω²(3πε sin τ₀ / (ω² sinh(K'/(ωk))) − 4βk E(1/k))`, `K' = K(√(1−1/k²))`.
pub fn rot_coefficients(eps: f64, beta: f64, omega: f64, q: u32) -> Result<MelnikovResult> {
    check_omega(omega)?;
    let rm = elliptic::solve_rotational_modulus(omega, 1, q)?;
    let m = rm.reciprocal();
    let k = rm.k();
    let k_prime = m.complement().ellip_k();
    let amp = 6.0 * PI / (k_prime / (omega * k)).sinh();
    let offset = -8.0 * omega * omega * k * m.ellip_e();
    Ok(MelnikovResult::from_units(eps, beta, amp, offset))
}

pub fn subharmonic_rot_melnikov(eps: f64, beta: f64, omega: f64, q: u32, tau0: f64) -> Result<f64> {
    Ok(rot_coefficients(eps, beta, omega, q)?.at(tau0))
}

/// Critical `ε/β = (4ω²k/3π) E(1/k) sinh(K'/(ωk))` for `q:1` rotations.
pub fn rot_threshold(omega: f64, q: u32) -> Result<f64> {
    check_omega(omega)?;
    let rm = elliptic::solve_rotational_modulus(omega, 1, q)?;
    let m = rm.reciprocal();
    let k = rm.k();
    let k_prime = m.complement().ellip_k();
    Ok(4.0 * omega * omega * k / (3.0 * PI) * m.ellip_e() * (k_prime / (omega * k)).sinh())
}

/// `∫ v g₁ dτ` along `orbit` over `[a, b]` by adaptive quadrature.
pub fn melnikov_by_quadrature(
    orbit: &impl UnperturbedOrbit,
    eps: f64,
    beta: f64,
    omega: f64,
    a: f64,
    b: f64,
) -> f64 {
    let f = |tau: f64| {
        let (theta, v) = orbit.state(tau);
        v * g1(eps, beta, omega, theta, v, tau)
    };
    split_quadrature(f, a, b)
}

/// Adaptive quadrature over `[a, b]` split into unit-length-ish pieces so
/// that sharp pulses near the separatrix are resolved.
fn split_quadrature(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let pieces = ((b - a) / 2.0).ceil().max(1.0) as usize;
    let h = (b - a) / pieces as f64;
    (0..pieces)
        .map(|i| {
            let lo = a + h * i as f64;
            let hi = if i + 1 == pieces { b } else { lo + h };
            quadrature::adaptive(&f, lo, hi, 1e-16, 1e-14, 2000).value
        })
        .sum()
}

/// Homoclinic distance by quadrature along the upper separatrix, truncated at
/// `|ω(τ−τ₀)| = 40`.
pub fn homoclinic_by_quadrature(eps: f64, beta: f64, omega: f64, tau0: f64) -> Result<f64> {
    let orbit = separatrix_orbit(omega, tau0, true)?;
    let half = HOMOCLINIC_CUTOFF / omega;
    Ok(
        melnikov_by_quadrature(&orbit, eps, beta, omega, tau0 - half, tau0)
            + melnikov_by_quadrature(&orbit, eps, beta, omega, tau0, tau0 + half),
    )
}

/// Distance for any resonance by quadrature over `[0, 2πq]` along the
/// resonant orbit through `θ(τ₀) = 0`.
pub fn subharmonic_by_quadrature(
    eps: f64,
    beta: f64,
    omega: f64,
    spec: ResonanceSpec,
    tau0: f64,
) -> Result<f64> {
    let end = 2.0 * PI * spec.q as f64;
    match spec.kind {
        OrbitKind::Oscillatory => {
            let m = elliptic::solve_oscillatory_modulus(omega, spec.first, spec.q)?.ok_or(
                Error::NoResonance {
                    kind: "oscillatory",
                    first: spec.first,
                    q: spec.q,
                    omega,
                },
            )?;
            let orbit = oscillatory_orbit(omega, m, tau0)?;
            Ok(melnikov_by_quadrature(&orbit, eps, beta, omega, 0.0, end))
        }
        OrbitKind::Rotational => {
            let m = elliptic::solve_rotational_modulus(omega, spec.first, spec.q)?;
            let orbit = rotational_orbit(omega, m, tau0)?;
            Ok(melnikov_by_quadrature(&orbit, eps, beta, omega, 0.0, end))
        }
    }
}

/// The three integrals the distance splits into. Along the separatrix
/// `M = 8εω²I₁ − 4βω³I₂ + 4εω³I₃`; along oscillations and rotations the same
/// split holds with Jacobi-function integrands and powers of `k` in front.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MelnikovIntegrals {
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
}

/// `I₁ = ∫ sin τ sech²`, `I₂ = ∫ sech²`, `I₃ = ∫ cos τ sinh/cosh³` with
/// argument `ω(τ−τ₀)`, over the truncated real line.
pub fn homoclinic_integrals(omega: f64, tau0: f64) -> Result<MelnikovIntegrals> {
    check_omega(omega)?;
    let half = HOMOCLINIC_CUTOFF / omega;
    let (a, b) = (tau0 - half, tau0 + half);
    let sech2 = |t: f64| 1.0 / (omega * (t - tau0)).cosh().powi(2);
    let both = |f: &dyn Fn(f64) -> f64| split_quadrature(f, a, tau0) + split_quadrature(f, tau0, b);
    Ok(MelnikovIntegrals {
        i1: both(&|t| t.sin() * sech2(t)),
        i2: both(&|t| sech2(t)),
        i3: both(&|t| {
            let u = omega * (t - tau0);
            t.cos() * u.sinh() / u.cosh().powi(3)
        }),
    })
}

/// `I₁ = ∫ sin τ cn²`, `I₂ = ∫ cn²`, `I₃ = ∫ cos τ sn cn dn` over `[0, 2πq]`
/// along the `p:q` oscillation.
pub fn oscillatory_integrals(omega: f64, p: u32, q: u32, tau0: f64) -> Result<MelnikovIntegrals> {
    check_omega(omega)?;
    ResonanceSpec::new(OrbitKind::Oscillatory, p, q)?;
    let m = elliptic::solve_oscillatory_modulus(omega, p, q)?.ok_or(Error::NoResonance {
        kind: "oscillatory",
        first: p,
        q,
        omega,
    })?;
    let end = 2.0 * PI * q as f64;
    let jac = |t: f64| m.sn_cn_dn(omega * (t - tau0));
    Ok(MelnikovIntegrals {
        i1: split_quadrature(|t| t.sin() * jac(t).cn.powi(2), 0.0, end),
        i2: split_quadrature(|t| jac(t).cn.powi(2), 0.0, end),
        i3: split_quadrature(
            |t| {
                let j = jac(t);
                t.cos() * j.sn * j.cn * j.dn
            },
            0.0,
            end,
        ),
    })
}

/// `I₁ = ∫ sin τ dn²`, `I₂ = ∫ dn²`, `I₃ = ∫ cos τ sn cn dn` over `[0, 2πq]`
/// along the `r:q` rotation, Jacobi functions of modulus `1/k`.
pub fn rotational_integrals(omega: f64, r: u32, q: u32, tau0: f64) -> Result<MelnikovIntegrals> {
    check_omega(omega)?;
    ResonanceSpec::new(OrbitKind::Rotational, r, q)?;
    let rm = elliptic::solve_rotational_modulus(omega, r, q)?;
    let m = rm.reciprocal();
    let omega_k = omega / m.k();
    let end = 2.0 * PI * q as f64;
    let jac = |t: f64| m.sn_cn_dn(omega_k * (t - tau0));
    Ok(MelnikovIntegrals {
        i1: split_quadrature(|t| t.sin() * jac(t).dn.powi(2), 0.0, end),
        i2: split_quadrature(|t| jac(t).dn.powi(2), 0.0, end),
        i3: split_quadrature(
            |t| {
                let j = jac(t);
                t.cos() * j.sn * j.cn * j.dn
            },
            0.0,
            end,
        ),
    })
}
