//! Long-run regime classification from Poincaré samples taken once per
//! excitation period.
//!
//! After a transient, a window of section points `P₀ … P_N` is searched for
//! the smallest `q ≤ q_max` such that every point returns to the matching
//! point of the first `q` after an integer number of windings:
//! `‖P_n − P_{n mod q} − (2πr·⌊n/q⌋, 0)‖ < match_tol`. Comparing against the
//! start of the window (rather than just `P_{n−q}`) rejects slow drifts such as
//! a spiral into the hanging equilibrium. If nothing matches the window slides
//! forward, up to `max_periods`; what is still unmatched then is chaotic.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{IntegratorConfig, PoincareSampler, SectionPoint, Trajectory};
use crate::model::{Params, State};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegimeKind {
    Equilibrium,
    Oscillation,
    Rotation,
    /// Periodic with net winding but `v` changing sign along the orbit.
    RotationOscillation,
    Chaotic,
    Undecided,
}

impl RegimeKind {
    pub const ALL: [RegimeKind; 6] = [
        Self::Equilibrium,
        Self::Oscillation,
        Self::Rotation,
        Self::RotationOscillation,
        Self::Chaotic,
        Self::Undecided,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Equilibrium => "equilibrium",
            Self::Oscillation => "oscillation",
            Self::Rotation => "rotation",
            Self::RotationOscillation => "rotation-oscillation",
            Self::Chaotic => "chaotic",
            Self::Undecided => "undecided",
        }
    }
}

impl fmt::Display for RegimeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for RegimeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown regime `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeLabel {
    pub kind: RegimeKind,
    /// Net windings per `q` periods (signed; 0 for oscillations).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<u32>,
    /// Last Poincaré point examined; absent when integration failed at once.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_state: Option<State>,
    /// Excitation periods integrated.
    pub periods: u64,
}

impl RegimeLabel {
    fn bare(kind: RegimeKind, periods: u64, last: Option<&SectionPoint>) -> Self {
        Self {
            kind,
            r: None,
            q: None,
            final_state: last.map(|p| State::new(p.theta, p.v, p.tau)),
            periods,
        }
    }

    pub fn is_rotation(&self) -> bool {
        self.kind == RegimeKind::Rotation
    }

    /// Mirror image under `(θ, v) → (−θ, −v)`.
    pub fn mirrored(&self) -> Self {
        Self {
            r: self.r.map(|r| -r),
            final_state: self.final_state.map(|s| s.mirrored()),
            ..*self
        }
    }
}

impl fmt::Display for RegimeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.r, self.q) {
            (Some(r), Some(q)) if self.kind != RegimeKind::Oscillation => {
                write!(f, "{} {r}:{q}", self.kind)
            }
            (_, Some(q)) => write!(f, "{} q={q}", self.kind),
            _ => write!(f, "{}", self.kind),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    pub transient_periods: u64,
    pub sample_periods: u64,
    pub q_max: u32,
    pub match_tol: f64,
    /// Total horizon; the sample window slides forward until a period is
    /// found or this many periods have been integrated.
    pub max_periods: u64,
    pub integrator: IntegratorConfig,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            transient_periods: 300,
            sample_periods: 200,
            q_max: 8,
            match_tol: 1e-4,
            max_periods: 2000,
            integrator: IntegratorConfig::sweep(),
        }
    }
}

impl ClassifierConfig {
    pub fn validate(&self) -> Result<()> {
        if self.q_max == 0 {
            return Err(Error::domain("q_max must be at least 1"));
        }
        if self.sample_periods <= 2 * self.q_max as u64 {
            return Err(Error::domain(format!(
                "sample_periods = {} must exceed 2*q_max = {}",
                self.sample_periods,
                2 * self.q_max
            )));
        }
        if !(self.match_tol > 0.0 && self.match_tol.is_finite()) {
            return Err(Error::domain("match_tol must be positive"));
        }
        if self.max_periods < self.transient_periods + self.sample_periods {
            return Err(Error::domain(
                "max_periods must cover transient_periods + sample_periods",
            ));
        }
        self.integrator.validate()
    }
}

/// Outcome of matching a window against period `q`.
#[derive(Debug, Clone, Copy)]
struct Match {
    q: u32,
    r: i64,
    /// Largest mismatch over the window.
    error: f64,
}

fn match_period(window: &[SectionPoint], q: u32) -> Option<Match> {
    let q_len = q as usize;
    if window.len() < 2 * q_len + 1 {
        return None;
    }
    let r = ((window[q_len].theta - window[0].theta) / (2.0 * PI)).round() as i64;
    let mut error: f64 = 0.0;
    for (n, p) in window.iter().enumerate().skip(q_len) {
        let base = &window[n % q_len];
        let turns = (n / q_len) as f64 * r as f64;
        let dtheta = p.theta - base.theta - 2.0 * PI * turns;
        error = error.max(dtheta.hypot(p.v - base.v));
    }
    Some(Match { q, r, error })
}

fn is_equilibrium(window: &[SectionPoint], tol: f64) -> bool {
    window.iter().all(|p| {
        let m = (p.theta / (2.0 * PI)).round();
        (p.theta - 2.0 * PI * m).abs() < tol && p.v_min.abs() < tol && p.v_max.abs() < tol
    })
}

enum Verdict {
    Decided(RegimeLabel),
    /// Best mismatch across `q` and whether it was marginal.
    Open {
        marginal: bool,
    },
}

fn judge(window: &[SectionPoint], cfg: &ClassifierConfig, periods: u64) -> Verdict {
    let last = window.last();
    // The first point's v-range belongs to the period before the window.
    if is_equilibrium(&window[1..], cfg.match_tol) {
        return Verdict::Decided(RegimeLabel::bare(RegimeKind::Equilibrium, periods, last));
    }
    let mut best = f64::INFINITY;
    for q in 1..=cfg.q_max {
        let Some(m) = match_period(window, q) else {
            continue;
        };
        if m.error < cfg.match_tol {
            let crosses_zero = window[1..].iter().any(|p| p.v_min < 0.0)
                && window[1..].iter().any(|p| p.v_max > 0.0);
            let kind = match (m.r, crosses_zero) {
                (0, _) => RegimeKind::Oscillation,
                (_, false) => RegimeKind::Rotation,
                (_, true) => RegimeKind::RotationOscillation,
            };
            return Verdict::Decided(RegimeLabel {
                kind,
                r: Some(m.r),
                q: Some(m.q),
                ..RegimeLabel::bare(kind, periods, last)
            });
        }
        best = best.min(m.error);
    }
    Verdict::Open {
        marginal: best < 10.0 * cfg.match_tol,
    }
}

/// Classifies the long-run regime reached from `init`. Integration failures
/// yield [`RegimeKind::Undecided`], never an error; only invalid inputs do.
pub fn classify(init: State, p: &Params, cfg: &ClassifierConfig) -> Result<RegimeLabel> {
    cfg.validate()?;
    p.validate()?;
    let mut sampler = PoincareSampler::new(init, p, &cfg.integrator)?;
    let undecided = |periods, last: Option<&SectionPoint>| {
        RegimeLabel::bare(RegimeKind::Undecided, periods, last)
    };
    let mut window = match sampler.advance(cfg.transient_periods) {
        Ok(points) => points.last().copied().into_iter().collect::<Vec<_>>(),
        Err(_) => return Ok(undecided(sampler.periods(), None)),
    };
    if window.is_empty() {
        window.push(SectionPoint {
            tau: init.tau,
            theta: init.theta,
            v: init.v,
            v_min: init.v,
            v_max: init.v,
        });
    }
    let size = cfg.sample_periods as usize + 1;
    loop {
        let need = (size - window.len()) as u64;
        match sampler.advance(need) {
            Ok(points) => window.extend(points),
            Err(_) => return Ok(undecided(sampler.periods(), window.last())),
        }
        let periods = sampler.periods();
        let marginal = match judge(&window, cfg, periods) {
            Verdict::Decided(label) => return Ok(label),
            Verdict::Open { marginal } => marginal,
        };
        if periods >= cfg.max_periods {
            let kind = if marginal {
                RegimeKind::Undecided
            } else {
                RegimeKind::Chaotic
            };
            return Ok(RegimeLabel::bare(kind, periods, window.last()));
        }
        // Slide forward, never past the horizon.
        let step = (cfg.sample_periods).min(cfg.max_periods - periods) as usize;
        window.drain(..step);
    }
}

/// Net windings per `q` periods along a sequence of section points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "status")]
pub enum Winding {
    Consistent {
        r: i64,
        q: u32,
    },
    /// `round((θ_{n+q} − θ_n)/2π)` takes more than one value.
    Inconsistent {
        min: i64,
        max: i64,
    },
}

pub fn winding_of_sections(points: &[SectionPoint], q: u32) -> Result<Winding> {
    let q_len = q as usize;
    if q == 0 || points.len() < q_len + 1 {
        return Err(Error::domain(format!(
            "winding number over {q} periods needs at least {} section points",
            q_len + 1
        )));
    }
    let (mut min, mut max) = (i64::MAX, i64::MIN);
    for (a, b) in points.iter().zip(&points[q_len..]) {
        let r = ((b.theta - a.theta) / (2.0 * PI)).round() as i64;
        min = min.min(r);
        max = max.max(r);
    }
    Ok(if min == max {
        Winding::Consistent { r: min, q }
    } else {
        Winding::Inconsistent { min, max }
    })
}

/// Winding number of a trajectory's section points over `q` periods.
pub fn winding_number(traj: &Trajectory, q: u32) -> Result<Winding> {
    winding_of_sections(&traj.sections, q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::poincare_map;

    fn point(theta: f64, v: f64) -> SectionPoint {
        SectionPoint {
            tau: 0.0,
            theta,
            v,
            v_min: v,
            v_max: v,
        }
    }

    #[test]
    fn damped_unforced_pendulum_rests() {
        let p = Params::new(0.0, 0.05, 1.0).unwrap();
        let label = classify(State::new(0.5, 0.0, 0.0), &p, &ClassifierConfig::default()).unwrap();
        assert_eq!(label.kind, RegimeKind::Equilibrium);
        assert_eq!(label.to_string(), "equilibrium");
    }

    #[test]
    fn period_matching_on_synthetic_windows() {
        let cfg = ClassifierConfig::default();
        // Period-2 oscillation.
        let w: Vec<_> = (0..201)
            .map(|n| point(if n % 2 == 0 { 0.3 } else { -0.3 }, 0.1))
            .collect();
        let Verdict::Decided(l) = judge(&w, &cfg, 500) else {
            panic!()
        };
        assert_eq!(
            (l.kind, l.q, l.r),
            (RegimeKind::Oscillation, Some(2), Some(0))
        );
        // 1:1 rotation with positive velocity.
        let w: Vec<_> = (0..201)
            .map(|n| point(0.2 + 2.0 * PI * n as f64, 1.0))
            .collect();
        let Verdict::Decided(l) = judge(&w, &cfg, 500) else {
            panic!()
        };
        assert_eq!((l.kind, l.q, l.r), (RegimeKind::Rotation, Some(1), Some(1)));
        assert_eq!(l.to_string(), "rotation 1:1");
        // Same winding with velocity reversals.
        let w: Vec<_> = (0..201)
            .map(|n| SectionPoint {
                v_min: -0.1,
                ..point(0.2 + 2.0 * PI * n as f64, 1.0)
            })
            .collect();
        let Verdict::Decided(l) = judge(&w, &cfg, 500) else {
            panic!()
        };
        assert_eq!(l.kind, RegimeKind::RotationOscillation);
        // Slow drift is not periodic, even though consecutive points match.
        let w: Vec<_> = (0..201).map(|n| point(1e-5 * n as f64, 0.0)).collect();
        assert!(matches!(
            judge(&w, &cfg, 500),
            Verdict::Open { marginal: false }
        ));
    }

    #[test]
    fn mirrored_start_mirrors_label() {
        let p = Params::new(0.0, 0.0, 1.0).unwrap();
        let cfg = ClassifierConfig {
            transient_periods: 1,
            sample_periods: 20,
            q_max: 2,
            max_periods: 21,
            ..ClassifierConfig::default()
        };
        // Undamped rotation: never periodic at the excitation period.
        let init = State::new(0.0, 2.5, 0.0);
        let a = classify(init, &p, &cfg).unwrap();
        let b = classify(init.mirrored(), &p, &cfg).unwrap();
        assert_eq!(b, a.mirrored());
    }

    #[test]
    fn winding_numbers() {
        let rot: Vec<_> = (0..10)
            .map(|n| point(2.0 * 2.0 * PI * n as f64 + 0.1, 2.0))
            .collect();
        assert_eq!(
            winding_of_sections(&rot, 1).unwrap(),
            Winding::Consistent { r: 2, q: 1 }
        );
        let osc: Vec<_> = (0..10)
            .map(|n| point(0.3 * (n as f64).cos(), 0.0))
            .collect();
        assert_eq!(
            winding_of_sections(&osc, 1).unwrap(),
            Winding::Consistent { r: 0, q: 1 }
        );
        let mixed = vec![point(0.0, 0.0), point(2.0 * PI, 0.0), point(2.0 * PI, 0.0)];
        assert_eq!(
            winding_of_sections(&mixed, 1).unwrap(),
            Winding::Inconsistent { min: 0, max: 1 }
        );
        assert!(winding_of_sections(&mixed, 3).is_err());
    }

    #[test]
    fn winding_of_integrated_rotation() {
        let p = Params::new(0.0, 0.0, 0.5).unwrap();
        let pts = poincare_map(
            State::new(0.0, 3.0, 0.0),
            &p,
            5,
            &IntegratorConfig::analysis(),
        )
        .unwrap();
        // Free rotation at v ≈ 3: roughly 3 turns per excitation period.
        assert!(matches!(
            winding_of_sections(&pts, 1).unwrap(),
            Winding::Consistent { r: 3, .. }
        ));
    }

    #[test]
    fn config_validation() {
        assert!(ClassifierConfig {
            sample_periods: 16,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(ClassifierConfig {
            match_tol: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(ClassifierConfig {
            max_periods: 10,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(ClassifierConfig::default().validate().is_ok());
    }

    #[test]
    fn blowup_is_undecided() {
        let p = Params::new(0.0, 0.0, 1.0).unwrap();
        let label = classify(State::new(0.0, 2e3, 0.0), &p, &ClassifierConfig::default()).unwrap();
        assert_eq!(label.kind, RegimeKind::Undecided);
    }

    #[test]
    fn label_json_round_trip() {
        let l = RegimeLabel {
            kind: RegimeKind::Rotation,
            r: Some(-1),
            q: Some(1),
            final_state: Some(State::new(1.0, -2.0, 3.0)),
            periods: 500,
        };
        let text = serde_json::to_string(&l).unwrap();
        assert!(text.contains("\"kind\":\"rotation\""));
        assert_eq!(serde_json::from_str::<RegimeLabel>(&text).unwrap(), l);
        assert_eq!(
            "rotation-oscillation".parse::<RegimeKind>().unwrap(),
            RegimeKind::RotationOscillation
        );
    }
}
