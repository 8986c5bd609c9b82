//! Model predictive path integral (MPPI) control with interchangeable
//! control-trajectory sampling strategies.
//!
//! The crate is organised bottom-up:
//!
//! * [`trajectory`]: dense control trajectories, actuator bounds, horizon shifting
//!   and smoothness diagnostics.
//! * [`samplers`]: the four perturbation strategies (independent Gaussian, natural
//!   cubic spline knots, Bézier control points, linear-interpolation waypoints).
//! * [`mppi`]: rollout costing, importance weights, the nominal update and the
//!   receding-horizon control step.
//! * [`dynamics`]: planar point-mass environments for flat ground, stairs and a
//!   large box obstacle.
//! * [`bench`]: multi-trial experiments, aggregation and CSV output.

pub mod bench;
pub mod dynamics;
mod error;
pub mod mppi;
pub mod samplers;
pub mod trajectory;

pub use error::{Error, Result};
