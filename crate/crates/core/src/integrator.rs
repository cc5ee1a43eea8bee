//! Adaptive Dormand–Prince 5(4) integration with step endpoints forced onto
//! the Poincaré section times `τ₀ + 2πn`.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{self, MomentumState, Params, State};

/// `|v|` above which a trajectory is considered to have blown up.
pub const BLOWUP_VELOCITY: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub initial_step: f64,
}

impl IntegratorConfig {
    /// Relative tolerance `1e-10` (absolute `1e-12`), for analysis and validation runs.
    pub fn analysis() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step: PI / 4.0,
            initial_step: 1e-3,
        }
    }

    /// Relative tolerance `1e-8`, for parameter sweeps.
    pub fn sweep() -> Self {
        Self::analysis().with_tolerance(1e-8)
    }

    /// Sets the relative tolerance to `tol` and the absolute one to `tol/100`.
    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.rel_tol = tol;
        self.abs_tol = tol * 1e-2;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, tol) in [("rel_tol", self.rel_tol), ("abs_tol", self.abs_tol)] {
            if !(tol > 0.0 && tol <= 1e-2) {
                return Err(Error::domain(format!(
                    "{name} = {tol} must lie in (0, 1e-2]"
                )));
            }
        }
        if !(self.max_step > 0.0 && self.max_step <= PI / 4.0) {
            return Err(Error::domain(format!(
                "max_step = {} must lie in (0, pi/4]",
                self.max_step
            )));
        }
        if !(self.initial_step > 0.0 && self.initial_step.is_finite()) {
            return Err(Error::domain("initial_step must be positive"));
        }
        Ok(())
    }
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self::analysis()
    }
}

/// First-order system `ẏ = f(t, y)`.
pub trait OdeSystem<const N: usize> {
    fn eval(&self, t: f64, y: &[f64; N]) -> Result<[f64; N]>;

    /// Components that are angles; their error weight ignores how many turns
    /// have accumulated.
    fn is_angle(&self, _component: usize) -> bool {
        false
    }
}

/// Angle form of the pendulum, state `[θ, v]`.
pub struct AngleSystem<'a>(pub &'a Params);

impl OdeSystem<2> for AngleSystem<'_> {
    #[inline]
    fn eval(&self, t: f64, y: &[f64; 2]) -> Result<[f64; 2]> {
        let (a, b) = model::rhs_angle(&State::new(y[0], y[1], t), self.0)?;
        Ok([a, b])
    }

    fn is_angle(&self, component: usize) -> bool {
        component == 0
    }
}

/// Sector-velocity form, state `[θ, s]`.
pub struct MomentumSystem<'a>(pub &'a Params);

impl OdeSystem<2> for MomentumSystem<'_> {
    fn eval(&self, t: f64, y: &[f64; 2]) -> Result<[f64; 2]> {
        let (a, b) = model::rhs_momentum(
            &MomentumState {
                theta: y[0],
                s: y[1],
                tau: t,
            },
            self.0,
        )?;
        Ok([a, b])
    }

    fn is_angle(&self, component: usize) -> bool {
        component == 0
    }
}

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
// Difference between the 5th and embedded 4th order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 10.0;
// PI controller exponents (Gustafsson): α = 1/5 − 0.75β, β = 0.08.
const PI_BETA: f64 = 0.08;
const PI_ALPHA: f64 = 0.2 - 0.75 * PI_BETA;

/// Stepper that keeps its step size across calls to [`Dopri5::advance_to`].
pub struct Dopri5<'s, S, const N: usize> {
    system: &'s S,
    cfg: IntegratorConfig,
    t: f64,
    y: [f64; N],
    k1: [f64; N],
    h: f64,
    err_prev: f64,
    pub accepted: u64,
    pub rejected: u64,
}

impl<'s, S: OdeSystem<N>, const N: usize> Dopri5<'s, S, N> {
    pub fn new(system: &'s S, t0: f64, y0: [f64; N], cfg: IntegratorConfig) -> Result<Self> {
        cfg.validate()?;
        let k1 = system.eval(t0, &y0)?;
        Ok(Self {
            system,
            cfg,
            t: t0,
            y: y0,
            k1,
            h: cfg.initial_step.min(cfg.max_step),
            err_prev: 1e-4,
            accepted: 0,
            rejected: 0,
        })
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn state(&self) -> [f64; N] {
        self.y
    }

    fn weight(&self, i: usize, old: f64, new: f64) -> f64 {
        let mut mag = old.abs().max(new.abs());
        if self.system.is_angle(i) {
            mag = mag.min(PI);
        }
        self.cfg.abs_tol + self.cfg.rel_tol * mag
    }

    /// Attempts a step of size `h`; returns the new state, derivative at the
    /// new point and the scaled error norm.
    fn try_step(&self, h: f64) -> Result<([f64; N], [f64; N], f64)> {
        let (t, y, k1) = (self.t, &self.y, &self.k1);
        let stage = |coeffs: &[(f64, &[f64; N])]| {
            let mut out = *y;
            for (c, k) in coeffs {
                for i in 0..N {
                    out[i] += h * c * k[i];
                }
            }
            out
        };
        let f = |dt: f64, yy: &[f64; N]| self.system.eval(t + dt, yy);
        let k2 = f(C2 * h, &stage(&[(A21, k1)]))?;
        let k3 = f(C3 * h, &stage(&[(A31, k1), (A32, &k2)]))?;
        let k4 = f(C4 * h, &stage(&[(A41, k1), (A42, &k2), (A43, &k3)]))?;
        let k5 = f(
            C5 * h,
            &stage(&[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        )?;
        let k6 = f(
            h,
            &stage(&[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
        )?;
        let y_new = stage(&[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let k7 = f(h, &y_new)?;
        // Max norm: every component must meet its own tolerance.
        let mut err: f64 = 0.0;
        for i in 0..N {
            let e =
                h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            err = err.max((e / self.weight(i, y[i], y_new[i])).abs());
        }
        Ok((y_new, k7, err))
    }

    /// Integrates to exactly `t_end`, calling `on_step(t, y)` after every
    /// accepted step (the last call has `t == t_end`).
    pub fn advance_to(
        &mut self,
        t_end: f64,
        mut on_step: impl FnMut(f64, &[f64; N]) -> Result<()>,
    ) -> Result<()> {
        if t_end <= self.t {
            if t_end == self.t {
                return Ok(());
            }
            return Err(Error::domain(format!(
                "cannot integrate backwards from {} to {t_end}",
                self.t
            )));
        }
        while self.t < t_end {
            let remaining = t_end - self.t;
            let mut h = self.h.min(self.cfg.max_step);
            let last = h >= remaining * (1.0 - 1e-12);
            if last {
                h = remaining;
            } else if h > 0.5 * remaining {
                // Split the remainder evenly instead of leaving a sliver.
                h = 0.5 * remaining;
            }
            if h <= 1e-14 * self.t.abs().max(1.0) {
                return Err(Error::StepUnderflow {
                    tau: self.t,
                    step: h,
                });
            }
            let (y_new, k_new, err) = self.try_step(h)?;
            if err <= 1.0 && err.is_finite() {
                let factor = if err == 0.0 {
                    MAX_FACTOR
                } else {
                    (SAFETY * err.powf(-PI_ALPHA) * self.err_prev.powf(PI_BETA))
                        .clamp(MIN_FACTOR, MAX_FACTOR)
                };
                self.err_prev = err.max(1e-4);
                self.t = if last { t_end } else { self.t + h };
                self.y = y_new;
                self.k1 = k_new;
                self.accepted += 1;
                // A forced short final step says nothing about the natural size.
                if !last || factor < 1.0 {
                    self.h = h * factor;
                }
                on_step(self.t, &self.y)?;
            } else {
                self.rejected += 1;
                let factor = if err.is_finite() {
                    (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, 1.0)
                } else {
                    MIN_FACTOR
                };
                self.h = h * factor;
            }
        }
        Ok(())
    }
}

/// Sample `(τ, θ, v)` of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub tau: f64,
    pub theta: f64,
    pub v: f64,
}

/// Poincaré section point with the range of `v` seen since the previous one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectionPoint {
    pub tau: f64,
    pub theta: f64,
    pub v: f64,
    pub v_min: f64,
    pub v_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub params: Params,
    pub init: State,
    pub config: IntegratorConfig,
    /// Samples at `τ₀ + 2πn`, starting with the initial state.
    pub sections: Vec<SectionPoint>,
    /// Every accepted step endpoint, starting with the initial state.
    pub dense: Vec<Sample>,
}

impl Trajectory {
    pub fn final_state(&self) -> State {
        let last = self
            .dense
            .last()
            .expect("trajectory has at least one sample");
        State::new(last.theta, last.v, last.tau)
    }

    /// Writes `tau,theta,v` rows, preceded by a `#` line with the parameters.
    pub fn write_csv(&self, mut out: impl Write, sections_only: bool) -> std::io::Result<()> {
        writeln!(out, "# {}", self.params.header())?;
        writeln!(out, "tau,theta,v")?;
        if sections_only {
            for s in &self.sections {
                writeln!(out, "{},{},{}", s.tau, s.theta, s.v)?;
            }
        } else {
            for s in &self.dense {
                writeln!(out, "{},{},{}", s.tau, s.theta, s.v)?;
            }
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path, sections_only: bool) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file), sections_only)
            .map_err(|e| Error::io(path, e))
    }
}

fn check_state(t: f64, y: &[f64; 2]) -> Result<()> {
    if y[1].is_nan() || y[1].abs() > BLOWUP_VELOCITY || !y[0].is_finite() {
        return Err(Error::Blowup { tau: t, v: y[1] });
    }
    Ok(())
}

/// Section time `τ₀ + 2πn`.
#[inline]
pub fn section_time(tau0: f64, n: u64) -> f64 {
    tau0 + 2.0 * PI * n as f64
}

/// Integrates the angle form from `init` to `up_to`, recording every step
/// and every section time `init.tau + 2πn ≤ up_to`.
pub fn integrate(
    init: State,
    p: &Params,
    up_to: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    p.validate()?;
    if up_to.is_nan() || up_to <= init.tau {
        return Err(Error::domain(format!(
            "end time {up_to} must exceed the initial time {}",
            init.tau
        )));
    }
    let system = AngleSystem(p);
    let mut stepper = Dopri5::new(&system, init.tau, [init.theta, init.v], *cfg)?;
    let first = SectionPoint {
        tau: init.tau,
        theta: init.theta,
        v: init.v,
        v_min: init.v,
        v_max: init.v,
    };
    let mut sections = vec![first];
    let mut dense = vec![Sample {
        tau: init.tau,
        theta: init.theta,
        v: init.v,
    }];
    let (mut v_min, mut v_max) = (init.v, init.v);
    let mut n = 1u64;
    loop {
        let target = section_time(init.tau, n).min(up_to);
        stepper.advance_to(target, |t, y| {
            check_state(t, y)?;
            dense.push(Sample {
                tau: t,
                theta: y[0],
                v: y[1],
            });
            v_min = v_min.min(y[1]);
            v_max = v_max.max(y[1]);
            Ok(())
        })?;
        if target == section_time(init.tau, n) {
            let y = stepper.state();
            sections.push(SectionPoint {
                tau: target,
                theta: y[0],
                v: y[1],
                v_min,
                v_max,
            });
            v_min = y[1];
            v_max = y[1];
        }
        if target >= up_to {
            break;
        }
        n += 1;
    }
    Ok(Trajectory {
        params: p.clone(),
        init,
        config: *cfg,
        sections,
        dense,
    })
}

/// Incremental Poincaré sampler: continues one integration section by section.
pub struct PoincareSampler<'p> {
    system: AngleSystem<'p>,
    tau0: f64,
    n: u64,
    state: [f64; 2],
    h: Option<f64>,
    cfg: IntegratorConfig,
}

impl<'p> PoincareSampler<'p> {
    pub fn new(init: State, p: &'p Params, cfg: &IntegratorConfig) -> Result<Self> {
        p.validate()?;
        cfg.validate()?;
        Ok(Self {
            system: AngleSystem(p),
            tau0: init.tau,
            n: 0,
            state: [init.theta, init.v],
            h: None,
            cfg: *cfg,
        })
    }

    /// Number of sections passed so far.
    pub fn periods(&self) -> u64 {
        self.n
    }

    /// Advances `count` excitation periods, returning the section point of
    /// each.
    pub fn advance(&mut self, count: u64) -> Result<Vec<SectionPoint>> {
        let mut cfg = self.cfg;
        if let Some(h) = self.h {
            cfg.initial_step = h;
        }
        let mut stepper = Dopri5::new(
            &self.system,
            section_time(self.tau0, self.n),
            self.state,
            cfg,
        )?;
        let mut out = Vec::with_capacity(count as usize);
        for _ in 0..count {
            let (mut v_min, mut v_max) = (stepper.state()[1], stepper.state()[1]);
            let target = section_time(self.tau0, self.n + 1);
            stepper.advance_to(target, |t, y| {
                check_state(t, y)?;
                v_min = v_min.min(y[1]);
                v_max = v_max.max(y[1]);
                Ok(())
            })?;
            self.n += 1;
            let y = stepper.state();
            out.push(SectionPoint {
                tau: target,
                theta: y[0],
                v: y[1],
                v_min,
                v_max,
            });
        }
        self.state = stepper.state();
        self.h = Some(stepper.h.min(self.cfg.max_step));
        Ok(out)
    }
}

/// The `n_periods + 1` section points at `τ₀ + 2πn`, `n = 0..=n_periods`.
pub fn poincare_map(
    init: State,
    p: &Params,
    n_periods: u64,
    cfg: &IntegratorConfig,
) -> Result<Vec<SectionPoint>> {
    let mut sampler = PoincareSampler::new(init, p, cfg)?;
    let mut points = vec![SectionPoint {
        tau: init.tau,
        theta: init.theta,
        v: init.v,
        v_min: init.v,
        v_max: init.v,
    }];
    points.extend(sampler.advance(n_periods)?);
    Ok(points)
}
