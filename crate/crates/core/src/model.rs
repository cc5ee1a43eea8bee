//! Equations of motion of the pendulum with periodically varying length.
//!
//! The length is `l = l0 (1 + ε φ(τ))` with `φ` a zero-mean `2π`-periodic
//! trigonometric polynomial. Three equivalent forms are provided: the angle
//! form `(θ, v = dθ/dτ)`, the sector-velocity form `(θ, s = (1+εφ)² v)`, and
//! the unperturbed Hamiltonian `H = v²/2 − ω² cos θ`.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::config::KeyValues;
use crate::error::{Error, Result};

/// One term `a cos(nτ) + b sin(nτ)` of the excitation law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Harmonic {
    pub n: u32,
    pub cos: f64,
    pub sin: f64,
}

/// Zero-mean `2π`-periodic excitation `φ(τ)` as a finite Fourier series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Excitation {
    harmonics: Vec<Harmonic>,
}

impl Default for Excitation {
    fn default() -> Self {
        Self::cosine()
    }
}

impl Excitation {
    /// `φ(τ) = cos τ`.
    pub fn cosine() -> Self {
        Self {
            harmonics: vec![Harmonic {
                n: 1,
                cos: 1.0,
                sin: 0.0,
            }],
        }
    }

    pub fn new(harmonics: Vec<Harmonic>) -> Result<Self> {
        if harmonics.is_empty() {
            return Err(Error::domain("excitation needs at least one harmonic"));
        }
        for h in &harmonics {
            if h.n == 0 {
                return Err(Error::domain(
                    "excitation must have zero mean (harmonic index 0 not allowed)",
                ));
            }
            if !(h.cos.is_finite() && h.sin.is_finite()) {
                return Err(Error::domain("excitation coefficients must be finite"));
            }
        }
        Ok(Self { harmonics })
    }

    pub fn harmonics(&self) -> &[Harmonic] {
        &self.harmonics
    }

    pub fn is_cosine(&self) -> bool {
        *self == Self::cosine()
    }

    /// `(φ(τ), φ̇(τ))`.
    #[inline]
    pub fn eval(&self, tau: f64) -> (f64, f64) {
        let mut phi = 0.0;
        let mut dphi = 0.0;
        for h in &self.harmonics {
            let n = h.n as f64;
            let (s, c) = (n * tau).sin_cos();
            phi += h.cos * c + h.sin * s;
            dphi += n * (h.sin * c - h.cos * s);
        }
        (phi, dphi)
    }

    pub fn phi(&self, tau: f64) -> f64 {
        self.eval(tau).0
    }

    pub fn phi_dot(&self, tau: f64) -> f64 {
        self.eval(tau).1
    }

    /// Upper bound on `max |φ|`, exact for a single harmonic.
    pub fn max_abs_bound(&self) -> f64 {
        self.harmonics.iter().map(|h| h.cos.hypot(h.sin)).sum()
    }
}

impl fmt::Display for Excitation {
    /// `n:cos:sin` terms separated by commas, e.g. `1:1:0` for `cos τ`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, h) in self.harmonics.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}:{}:{}", h.n, h.cos, h.sin)?;
        }
        Ok(())
    }
}

impl std::str::FromStr for Excitation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let harmonics = s
            .split(',')
            .map(|term| {
                let parts: Vec<&str> = term.trim().split(':').collect();
                if parts.len() != 3 {
                    return Err(Error::Parse(format!(
                        "excitation term `{term}` is not of the form n:cos:sin"
                    )));
                }
                let bad =
                    |what: &str| Error::Parse(format!("excitation term `{term}`: bad {what}"));
                Ok(Harmonic {
                    n: parts[0].trim().parse().map_err(|_| bad("index"))?,
                    cos: parts[1]
                        .trim()
                        .parse()
                        .map_err(|_| bad("cosine coefficient"))?,
                    sin: parts[2]
                        .trim()
                        .parse()
                        .map_err(|_| bad("sine coefficient"))?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Excitation::new(harmonics)
    }
}

/// Physical parameters of the swing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionalParams {
    /// Point mass.
    pub m: f64,
    /// Mean length.
    pub l0: f64,
    /// Amplitude of the length variation.
    pub a: f64,
    /// Excitation angular frequency.
    pub big_omega: f64,
    /// Linear damping coefficient.
    pub gamma: f64,
    /// Gravitational acceleration.
    pub g: f64,
}

/// Maps physical parameters to `(ε, β, ω)` with `φ = cos τ`.
pub fn nondimensionalize(d: &DimensionalParams) -> Result<Params> {
    let positive = [("m", d.m), ("l0", d.l0), ("Omega", d.big_omega), ("g", d.g)];
    for (name, v) in positive {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::domain(format!("{name} = {v} must be positive")));
        }
    }
    if !(d.a >= 0.0 && d.gamma >= 0.0) {
        return Err(Error::domain("a and gamma must be non-negative"));
    }
    if d.a >= d.l0 {
        return Err(Error::domain(format!(
            "amplitude a = {} must be below the mean length l0 = {}",
            d.a, d.l0
        )));
    }
    let natural = (d.g / d.l0).sqrt();
    Params::new(d.a / d.l0, d.gamma / (d.m * natural), natural / d.big_omega)
}

/// Nondimensional parameters `(ε, β, ω)` and the excitation law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub eps: f64,
    pub beta: f64,
    pub omega: f64,
    #[serde(default)]
    pub excitation: Excitation,
}

impl Params {
    /// Parameters with the default excitation `φ = cos τ`.
    ///
    /// `ω = 0` is accepted: it is the infinitely fast excitation limit in
    /// which the sector velocity is conserved.
    pub fn new(eps: f64, beta: f64, omega: f64) -> Result<Self> {
        Self::with_excitation(eps, beta, omega, Excitation::cosine())
    }

    pub fn with_excitation(
        eps: f64,
        beta: f64,
        omega: f64,
        excitation: Excitation,
    ) -> Result<Self> {
        let p = Self {
            eps,
            beta,
            omega,
            excitation,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return Err(Error::domain(format!("eps = {} must be >= 0", self.eps)));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::domain(format!("beta = {} must be >= 0", self.beta)));
        }
        if !(self.omega >= 0.0 && self.omega.is_finite()) {
            return Err(Error::domain(format!(
                "omega = {} must be >= 0",
                self.omega
            )));
        }
        if self.eps * self.excitation.max_abs_bound() >= 1.0 {
            return Err(Error::domain(format!(
                "eps * max|phi| = {} must stay below 1 so the length remains positive",
                self.eps * self.excitation.max_abs_bound()
            )));
        }
        Ok(())
    }

    /// `β/ω`, the damping parameter of the averaged equations.
    pub fn beta_over_omega(&self) -> f64 {
        self.beta / self.omega
    }

    /// `(1 + εφ(τ), εφ̇(τ))`.
    #[inline]
    pub fn length(&self, tau: f64) -> (f64, f64) {
        let (phi, dphi) = self.excitation.eval(tau);
        (1.0 + self.eps * phi, self.eps * dphi)
    }

    pub fn to_key_values(&self) -> KeyValues {
        let mut kv = KeyValues::default();
        kv.insert("eps", self.eps.to_string());
        kv.insert("beta", self.beta.to_string());
        kv.insert("omega", self.omega.to_string());
        kv.insert("excitation", self.excitation.to_string());
        kv
    }

    pub fn from_key_values(kv: &KeyValues) -> Result<Self> {
        let need = |key: &str| -> Result<f64> {
            kv.parsed::<f64>(key)?
                .ok_or_else(|| Error::Parse(format!("missing key `{key}`")))
        };
        let excitation = match kv.get("excitation") {
            Some(s) => s.parse()?,
            None => Excitation::cosine(),
        };
        Self::with_excitation(need("eps")?, need("beta")?, need("omega")?, excitation)
    }

    /// One-line `key=value` rendering used in file headers.
    pub fn header(&self) -> String {
        format!(
            "eps={} beta={} omega={} excitation={}",
            self.eps, self.beta, self.omega, self.excitation
        )
    }
}

/// Point `(θ, v, τ)` of the angle form; `θ` is unwrapped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub theta: f64,
    pub v: f64,
    pub tau: f64,
}

impl State {
    pub fn new(theta: f64, v: f64, tau: f64) -> Self {
        Self { theta, v, tau }
    }

    pub fn to_momentum(&self, p: &Params) -> MomentumState {
        let (l, _) = p.length(self.tau);
        MomentumState {
            theta: self.theta,
            s: l * l * self.v,
            tau: self.tau,
        }
    }

    /// Mirror image `(−θ, −v)` at the same time.
    pub fn mirrored(&self) -> Self {
        Self::new(-self.theta, -self.v, self.tau)
    }
}

/// Point `(θ, s, τ)` of the sector-velocity form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentumState {
    pub theta: f64,
    pub s: f64,
    pub tau: f64,
}

impl MomentumState {
    pub fn to_angle(&self, p: &Params) -> State {
        let (l, _) = p.length(self.tau);
        State::new(self.theta, self.s / (l * l), self.tau)
    }
}

#[inline]
fn positive_length(p: &Params, tau: f64) -> Result<(f64, f64)> {
    let (l, dl) = p.length(tau);
    if l <= 0.0 {
        return Err(Error::domain(format!(
            "1 + eps*phi = {l} is not positive at tau = {tau}"
        )));
    }
    Ok((l, dl))
}

/// Right-hand side of the angle form:
/// `θ̇ = v`, `v̇ = −(2εφ̇/(1+εφ) + βω) v − ω² sin θ/(1+εφ)`.
#[inline]
pub fn rhs_angle(state: &State, p: &Params) -> Result<(f64, f64)> {
    let (l, dl) = positive_length(p, state.tau)?;
    let dv =
        -(2.0 * dl / l + p.beta * p.omega) * state.v - p.omega * p.omega * state.theta.sin() / l;
    Ok((state.v, dv))
}

/// Right-hand side of the sector-velocity form:
/// `θ̇ = s/(1+εφ)²`, `ṡ = ω² f` with `f = −(β/ω)s − (1+εφ) sin θ`.
pub fn rhs_momentum(state: &MomentumState, p: &Params) -> Result<(f64, f64)> {
    let (l, _) = positive_length(p, state.tau)?;
    // ω²·(β/ω)s is written as βω·s so that ω = 0 needs no special case.
    let ds = -p.beta * p.omega * state.s - p.omega * p.omega * l * state.theta.sin();
    Ok((state.s / (l * l), ds))
}

/// Hamiltonian of the unforced undamped pendulum.
pub fn hamiltonian(state: &State, p: &Params) -> f64 {
    0.5 * state.v * state.v - p.omega * p.omega * state.theta.cos()
}

/// First-order perturbation `g₁ = (2ε sin τ − βω)v + εω² cos τ sin θ` of the
/// Hamiltonian system. Only defined for `φ = cos τ`.
pub fn perturbation_g1(state: &State, p: &Params) -> Result<f64> {
    if !p.excitation.is_cosine() {
        return Err(Error::domain(
            "the perturbation g1 is only defined for the cosine excitation",
        ));
    }
    Ok(g1(p.eps, p.beta, p.omega, state.theta, state.v, state.tau))
}

#[inline]
pub(crate) fn g1(eps: f64, beta: f64, omega: f64, theta: f64, v: f64, tau: f64) -> f64 {
    let (s, c) = tau.sin_cos();
    (2.0 * eps * s - beta * omega) * v + eps * omega * omega * c * theta.sin()
}

/// Wraps an angle into `(−π, π]`; for plotting only.
pub fn wrap_angle(theta: f64) -> f64 {
    let w = theta.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn nondimensional_substitution() {
        let d = DimensionalParams {
            m: 1.0,
            l0: 1.0,
            a: 0.1,
            big_omega: 2.0,
            gamma: 0.05,
            g: 1.0,
        };
        let p = nondimensionalize(&d).unwrap();
        assert!((p.eps - 0.1).abs() < 1e-15);
        assert!((p.omega - 0.5).abs() < 1e-15);
        assert!((p.beta - 0.05).abs() < 1e-15);

        let d0 = DimensionalParams { a: 0.0, ..d };
        assert_eq!(nondimensionalize(&d0).unwrap().eps, 0.0);

        let resonant = DimensionalParams {
            l0: 2.0,
            big_omega: 3.0,
            g: 18.0,
            ..d
        };
        assert!((nondimensionalize(&resonant).unwrap().omega - 1.0).abs() < 1e-15);
    }

    #[test]
    fn nondimensionalize_rejects_bad_input() {
        let d = DimensionalParams {
            m: 1.0,
            l0: 1.0,
            a: 1.0,
            big_omega: 2.0,
            gamma: 0.05,
            g: 1.0,
        };
        assert!(nondimensionalize(&d).is_err());
        assert!(nondimensionalize(&DimensionalParams {
            a: 0.1,
            m: 0.0,
            ..d
        })
        .is_err());
        assert!(nondimensionalize(&DimensionalParams {
            a: 0.1,
            gamma: -1.0,
            ..d
        })
        .is_err());
    }

    #[test]
    fn unperturbed_and_equilibria() {
        let p = Params::new(0.0, 0.0, 0.7).unwrap();
        let (_, dv) = rhs_angle(&State::new(0.4, 1.3, 2.0), &p).unwrap();
        assert!((dv + 0.49 * 0.4f64.sin()).abs() < 1e-15);

        let p = Params::new(0.3, 0.05, 0.7).unwrap();
        for tau in [0.0, 1.0, 4.0] {
            assert_eq!(
                rhs_angle(&State::new(0.0, 0.0, tau), &p).unwrap(),
                (0.0, 0.0)
            );
        }
        let p = Params::new(0.0, 0.05, 0.7).unwrap();
        let (d, dv) = rhs_angle(&State::new(PI, 0.0, 0.3), &p).unwrap();
        assert_eq!(d, 0.0);
        assert!(dv.abs() < 1e-15);
    }

    #[test]
    fn momentum_form_at_zero_omega_conserves_s() {
        let p = Params::new(0.4, 0.2, 0.0).unwrap();
        let (_, ds) = rhs_momentum(
            &MomentumState {
                theta: 1.0,
                s: 2.0,
                tau: 0.3,
            },
            &p,
        )
        .unwrap();
        assert_eq!(ds, 0.0);
        let (dt, ds) = rhs_momentum(
            &MomentumState {
                theta: 0.0,
                s: 0.0,
                tau: 0.3,
            },
            &p,
        )
        .unwrap();
        assert_eq!((dt, ds), (0.0, 0.0));
    }

    #[test]
    fn hamiltonian_levels() {
        let p = Params::new(0.0, 0.0, 0.8).unwrap();
        assert!((hamiltonian(&State::new(0.0, 0.0, 0.0), &p) + 0.64).abs() < 1e-15);
        assert!((hamiltonian(&State::new(PI, 0.0, 0.0), &p) - 0.64).abs() < 1e-15);
    }

    #[test]
    fn g1_substitution() {
        let p = Params::new(0.1, 0.05, 0.8).unwrap();
        let g = perturbation_g1(&State::new(PI / 2.0, 1.0, PI / 2.0), &p).unwrap();
        assert!((g - 0.16).abs() < 1e-15);
        let p0 = Params::new(0.0, 0.0, 0.8).unwrap();
        assert_eq!(
            perturbation_g1(&State::new(1.0, 2.0, 3.0), &p0).unwrap(),
            0.0
        );
        assert_eq!(
            perturbation_g1(&State::new(0.0, 0.0, 3.0), &p).unwrap(),
            0.0
        );
        let other = Excitation::new(vec![Harmonic {
            n: 2,
            cos: 1.0,
            sin: 0.0,
        }])
        .unwrap();
        let p2 = Params::with_excitation(0.1, 0.05, 0.8, other).unwrap();
        assert!(perturbation_g1(&State::new(0.0, 0.0, 0.0), &p2).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(Params::new(1.0, 0.0, 1.0).is_err());
        assert!(Params::new(-0.1, 0.0, 1.0).is_err());
        assert!(Params::new(0.1, -0.1, 1.0).is_err());
        assert!(Params::new(0.1, 0.1, f64::NAN).is_err());
        assert!("0:1:0".parse::<Excitation>().is_err());
    }

    #[test]
    fn negative_length_is_a_domain_error() {
        let p = Params {
            eps: 1.5,
            beta: 0.0,
            omega: 1.0,
            excitation: Excitation::cosine(),
        };
        assert!(rhs_angle(&State::new(0.0, 0.0, PI), &p).is_err());
    }

    #[test]
    fn key_value_round_trip() {
        let ex: Excitation = "1:1:0, 2:0.1:-0.2".parse().unwrap();
        let p = Params::with_excitation(0.2, 0.05, 0.8, ex).unwrap();
        let back = Params::from_key_values(&KeyValues::parse(&p.to_key_values().render()).unwrap())
            .unwrap();
        assert_eq!(p, back);
        let defaulted =
            Params::from_key_values(&KeyValues::parse("eps=0.1\nbeta=0\nomega=1").unwrap())
                .unwrap();
        assert!(defaulted.excitation.is_cosine());
        assert!(Params::from_key_values(&KeyValues::parse("eps=0.1").unwrap()).is_err());
    }

    #[test]
    fn excitation_derivative_is_exact() {
        let ex: Excitation = "1:0.7:0.2,3:-0.1:0.05".parse().unwrap();
        for tau in [0.0, 0.9, 2.5, 5.1] {
            let h = 1e-6;
            let fd = (ex.phi(tau + h) - ex.phi(tau - h)) / (2.0 * h);
            assert!((fd - ex.phi_dot(tau)).abs() < 1e-9);
            assert!((ex.phi(tau + 2.0 * PI) - ex.phi(tau)).abs() < 1e-14);
        }
    }

    #[test]
    fn wrap_angle_range() {
        assert_eq!(wrap_angle(PI), PI);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-15);
        assert!((wrap_angle(7.0) - (7.0 - 2.0 * PI)).abs() < 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn angle_and_momentum_forms_agree(
            theta in -10.0..10.0f64,
            v in -5.0..5.0f64,
            tau in 0.0..50.0f64,
            eps in 0.0..0.9f64,
            beta in 0.0..1.0f64,
            omega in 0.0..3.0f64,
        ) {
            let p = Params::new(eps, beta, omega).unwrap();
            let st = State::new(theta, v, tau);
            let (dtheta, dv) = rhs_angle(&st, &p).unwrap();
            let ms = st.to_momentum(&p);
            let (dtheta_m, ds) = rhs_momentum(&ms, &p).unwrap();
            // s = L²v ⇒ ṡ = 2LL̇v + L²v̇.
            let (l, dl) = p.length(tau);
            let ds_from_angle = 2.0 * l * dl * v + l * l * dv;
            prop_assert!((dtheta - dtheta_m).abs() <= 1e-12 * (1.0 + dtheta.abs()));
            prop_assert!((ds - ds_from_angle).abs() <= 1e-12 * (1.0 + ds.abs()));
        }
    }
}
