//! Complete elliptic integrals, Jacobi elliptic functions and the inverse
//! problems that pick the modulus of a resonant orbit.
//!
//! Everything is computed from the arithmetic–geometric mean of `1` and the
//! complementary modulus `k'`. Carrying `k'` explicitly (rather than
//! recomputing it from `k`) keeps orbits close to the separatrix accurate:
//! for `k' = 1e-20` the modulus `k` rounds to `1` but `K(k) ≈ 46.7` is
//! still computed to full precision.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};

const AGM_MAX_ITER: usize = 64;

/// Elliptic modulus `k ∈ [0, 1]` together with its complement `k' = √(1−k²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Modulus {
    k: f64,
    kc: f64,
}

impl Modulus {
    pub fn new(k: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&k) {
            return Err(Error::domain(format!("modulus k = {k} outside [0, 1]")));
        }
        Ok(Self {
            k,
            kc: ((1.0 - k) * (1.0 + k)).sqrt(),
        })
    }

    /// Builds the modulus from its complement, which is the accurate
    /// parametrisation near `k = 1`.
    pub fn from_complement(kc: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&kc) {
            return Err(Error::domain(format!(
                "complementary modulus k' = {kc} outside [0, 1]"
            )));
        }
        Ok(Self {
            k: ((1.0 - kc) * (1.0 + kc)).sqrt(),
            kc,
        })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn kc(&self) -> f64 {
        self.kc
    }

    /// The complementary modulus as a modulus in its own right.
    pub fn complement(&self) -> Modulus {
        Modulus {
            k: self.kc,
            kc: self.k,
        }
    }

    /// `K(k)`; infinite at `k = 1`.
    pub fn ellip_k(&self) -> f64 {
        if self.kc == 0.0 {
            return f64::INFINITY;
        }
        agm(self.k, self.kc).0
    }

    pub fn ellip_e(&self) -> f64 {
        if self.kc == 0.0 {
            return 1.0;
        }
        agm(self.k, self.kc).1
    }

    /// `E(k) − k'²K(k)`, the combination appearing in the oscillatory
    /// Melnikov distance.
    pub fn e_minus_kc2_k(&self) -> f64 {
        if self.kc == 0.0 {
            return 1.0;
        }
        let (big_k, big_e) = agm(self.k, self.kc);
        big_e - self.kc * self.kc * big_k
    }

    pub fn am(&self, u: f64) -> f64 {
        amplitude(u, self.k, self.kc)
    }

    pub fn sn_cn_dn(&self, u: f64) -> JacobiFns {
        let am = self.am(u);
        let (sn, cn) = am.sin_cos();
        // cn² + k'²sn² equals 1 − k²sn² without the cancellation near k = 1.
        let dn = (cn * cn + self.kc * self.kc * sn * sn).sqrt();
        JacobiFns { sn, cn, dn, am }
    }
}

/// Values of the Jacobi functions at one argument.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobiFns {
    pub sn: f64,
    pub cn: f64,
    pub dn: f64,
    pub am: f64,
}

/// Returns `(K, E)` from the AGM of `1` and `kc`.
fn agm(k: f64, kc: f64) -> (f64, f64) {
    let mut a = 1.0_f64;
    let mut b = kc;
    let mut c = k;
    let mut weight = 0.5;
    let mut sum = weight * c * c;
    for _ in 0..AGM_MAX_ITER {
        if c <= 1e-17 * a {
            break;
        }
        let a_next = 0.5 * (a + b);
        // c_{n+1} = (a_n − b_n)/2 = c_n²/(4a_{n+1}), free of cancellation.
        c = c * c / (4.0 * a_next);
        b = (a * b).sqrt();
        a = a_next;
        weight *= 2.0;
        sum += weight * c * c;
    }
    let big_k = PI / (2.0 * a);
    (big_k, big_k * (1.0 - sum))
}

/// Jacobi amplitude by the descending AGM phase recursion.
fn amplitude(u: f64, k: f64, kc: f64) -> f64 {
    if k == 0.0 {
        return u;
    }
    let mut a = vec![1.0_f64];
    let mut c = vec![k];
    let mut b = kc;
    for _ in 0..AGM_MAX_ITER {
        let (an, cn) = (*a.last().unwrap(), *c.last().unwrap());
        if cn <= 1e-17 * an {
            break;
        }
        let a_next = 0.5 * (an + b);
        let c_next = cn * cn / (4.0 * a_next);
        b = (an * b).sqrt();
        a.push(a_next);
        c.push(c_next);
    }
    let n = a.len() - 1;
    let mut phi = (1u64 << n) as f64 * a[n] * u;
    for j in (1..=n).rev() {
        phi = 0.5 * (phi + (c[j] / a[j] * phi.sin()).asin());
    }
    phi
}

fn check_direct(k: f64) -> Result<Modulus> {
    if !(0.0..1.0).contains(&k) {
        return Err(Error::domain(format!("modulus k = {k} outside [0, 1)")));
    }
    Modulus::new(k)
}

/// Complete elliptic integral of the first kind.
pub fn ellip_k(k: f64) -> Result<f64> {
    Ok(check_direct(k)?.ellip_k())
}

/// Complete elliptic integral of the second kind, `k ∈ [0, 1]`.
pub fn ellip_e(k: f64) -> Result<f64> {
    Ok(Modulus::new(k)?.ellip_e())
}

/// Jacobi amplitude `am(u, k)`, continuous and quasi-periodic in `u`.
pub fn jacobi_am(u: f64, k: f64) -> Result<f64> {
    if !u.is_finite() {
        return Err(Error::domain(format!("argument u = {u} not finite")));
    }
    Ok(check_direct(k)?.am(u))
}

pub fn jacobi_sn_cn_dn(u: f64, k: f64) -> Result<JacobiFns> {
    if !u.is_finite() {
        return Err(Error::domain(format!("argument u = {u} not finite")));
    }
    Ok(check_direct(k)?.sn_cn_dn(u))
}

/// Solves an equation `f(x) = 0` for a function monotone on `[lo, hi]` with a
/// sign change, by bisection interleaved with Illinois-modified secant steps.
pub(crate) fn solve_bracketed(
    f: impl Fn(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    f_tol: f64,
) -> Result<f64> {
    let mut f_lo = f(lo);
    let mut f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::NoConvergence("root bracketing"));
    }
    let mut side = 0i8;
    for iter in 0..400 {
        let x = if iter % 4 == 3 {
            0.5 * (lo + hi)
        } else {
            let s = hi - f_hi * (hi - lo) / (f_hi - f_lo);
            if s > lo.min(hi) && s < lo.max(hi) {
                s
            } else {
                0.5 * (lo + hi)
            }
        };
        let fx = f(x);
        if fx.abs() <= f_tol || (hi - lo).abs() <= 4.0 * f64::EPSILON * x.abs().max(1e-300) {
            return Ok(x);
        }
        if fx.signum() == f_hi.signum() {
            hi = x;
            f_hi = fx;
            if side == 1 {
                f_lo *= 0.5;
            }
            side = 1;
        } else {
            lo = x;
            f_lo = fx;
            if side == -1 {
                f_hi *= 0.5;
            }
            side = -1;
        }
    }
    Err(Error::NoConvergence("bracketed root solve"))
}

fn check_resonance(omega: f64, first: u32, q: u32) -> Result<()> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::domain(format!("omega = {omega} must be positive")));
    }
    if first == 0 || q == 0 {
        return Err(Error::domain("resonance indices must be natural numbers"));
    }
    if gcd(first, q) != 1 {
        return Err(Error::domain(format!(
            "resonance {first}:{q} is not in lowest terms"
        )));
    }
    Ok(())
}

pub(crate) fn gcd(mut a: u32, mut b: u32) -> u32 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Modulus of the oscillatory orbit with `p` oscillations per `q` excitation
/// periods: `4K(k)p/ω = 2πq`. `None` when `ωq/p < 1`.
pub fn solve_oscillatory_modulus(omega: f64, p: u32, q: u32) -> Result<Option<Modulus>> {
    check_resonance(omega, p, q)?;
    let target = PI * omega * q as f64 / (2.0 * p as f64);
    let rel = (target - FRAC_PI_2) / FRAC_PI_2;
    if rel < -4.0 * f64::EPSILON {
        return Ok(None);
    }
    if rel <= 4.0 * f64::EPSILON {
        return Ok(Some(Modulus::new(0.0)?));
    }
    if target > 700.0 {
        return Err(Error::domain(format!(
            "oscillatory resonance 1:{q} at omega = {omega} is too close to the separatrix"
        )));
    }
    // Search in t = ln k'; K(e^t) decreases from ∞ to π/2 on (−∞, 0].
    let big_k = |t: f64| Modulus::from_complement(t.exp()).map_or(f64::NAN, |m| m.ellip_k());
    let t = solve_bracketed(|t| big_k(t) - target, -(target + 2.0), 0.0, 1e-13 * target)?;
    Ok(Some(Modulus::from_complement(t.exp())?))
}

/// Energy parameter `k > 1` of a rotational orbit, stored through the
/// reciprocal modulus `1/k < 1` and its complement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationModulus {
    reciprocal: Modulus,
}

impl RotationModulus {
    pub fn new(k: f64) -> Result<Self> {
        if !(k > 1.0 && k.is_finite()) {
            return Err(Error::domain(format!(
                "rotational modulus k = {k} must exceed 1"
            )));
        }
        Ok(Self {
            reciprocal: Modulus::new(1.0 / k)?,
        })
    }

    pub fn from_reciprocal(reciprocal: Modulus) -> Result<Self> {
        if reciprocal.k() <= 0.0 || reciprocal.kc() <= 0.0 {
            return Err(Error::domain("reciprocal modulus must lie in (0, 1)"));
        }
        Ok(Self { reciprocal })
    }

    /// `k > 1`.
    pub fn k(&self) -> f64 {
        1.0 / self.reciprocal.k()
    }

    /// The modulus `1/k` used to evaluate the Jacobi functions.
    pub fn reciprocal(&self) -> Modulus {
        self.reciprocal
    }

    /// Period of the rotation, `2K(1/k)/(ωk)`.
    pub fn period(&self, omega: f64) -> f64 {
        2.0 * self.reciprocal.ellip_k() * self.reciprocal.k() / omega
    }
}

/// Modulus `k > 1` of the rotation with `r` turns per `q` excitation periods:
/// `2K(1/k)r/(ωk) = 2πq`. A root exists for every positive `ω`.
pub fn solve_rotational_modulus(omega: f64, r: u32, q: u32) -> Result<RotationModulus> {
    check_resonance(omega, r, q)?;
    // With m = 1/k the condition reads m·K(m) = πqω/r; m·K(m) increases from 0 to ∞.
    let target = PI * q as f64 * omega / r as f64;
    let g = |m: Modulus| m.k() * m.ellip_k() - target;
    const SPLIT: f64 = 0.9;
    let reciprocal = if g(Modulus::new(SPLIT)?) >= 0.0 {
        let m = solve_bracketed(
            |m| Modulus::new(m).map_or(f64::NAN, g),
            0.0,
            SPLIT,
            1e-13 * target,
        )?;
        Modulus::new(m)?
    } else {
        if target > 700.0 {
            return Err(Error::domain(format!(
                "rotational resonance {r}:{q} at omega = {omega} is too close to the separatrix"
            )));
        }
        let t_split = Modulus::new(SPLIT)?.kc().ln();
        let t = solve_bracketed(
            |t| Modulus::from_complement(t.exp()).map_or(f64::NAN, g),
            -(target + 2.0),
            t_split,
            1e-13 * target,
        )?;
        Modulus::from_complement(t.exp())?
    };
    if reciprocal.k() <= 0.0 {
        return Err(Error::NoConvergence("rotational modulus"));
    }
    RotationModulus::from_reciprocal(reciprocal)
}
