//! Dynamics of a pendulum whose length varies periodically in time.
//!
//! The crate covers the analytical side (Melnikov bifurcation boundaries for
//! homoclinic, subharmonic oscillatory and subharmonic rotational orbits,
//! first-order averaging for superharmonic rotations) and the numerical side
//! (adaptive integration, Poincaré sampling, regime classification and
//! parameter-plane sweeps) so the two can be compared cell by cell.
//!
//! Everything is written in nondimensional time `τ = Ωt` with the three
//! parameters `ε` (relative amplitude), `β` (damping) and `ω` (ratio of the
//! natural frequency to the excitation frequency).

pub mod averaging;
pub mod classify;
pub mod config;
pub mod elliptic;
pub mod error;
pub mod integrator;
pub mod melnikov;
pub mod model;
pub mod quadrature;
pub mod sweep;

pub use error::{Error, Result};
pub use model::{Excitation, Params, State};
