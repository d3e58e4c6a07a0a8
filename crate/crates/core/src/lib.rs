//! Deterministic slotted-time MPLS network simulator and fractal-traffic
//! toolkit.
//!
//! The crate is organized around one pipeline:
//!
//! 1. [`traffic`] synthesizes traces with controlled fractal properties
//!    (exact fractional Gaussian noise, heavy-tailed on-off superposition,
//!    conservative binomial cascades).
//! 2. [`fractal`] estimates the Hurst exponent and the coefficient of
//!    variation of a traffic window — the two inputs of the cost update.
//! 3. [`net`] models the network: edge/core routers, directed links with
//!    capacity and base cost, service classes with QoS bounds, and traffic
//!    channels with hop-constrained admissible path sets.
//! 4. [`routing`] recalculates path costs from fractal estimates through a
//!    four-branch piecewise rule and assigns channel demands to paths with a
//!    deterministic min-cost greedy heuristic.
//! 5. [`sim`] drives the slot loop: fluid queueing with finite buffers and
//!    strict class priority, loss/delay measurement, periodic estimation and
//!    cost-update epochs, and a static-vs-adaptive comparison harness.
//!
//! Everything is deterministic for a fixed seed: no global RNG state, no
//! wall-clock input, ordered containers throughout.

pub mod error;
pub mod fractal;
pub mod net;
mod rng;
pub mod routing;
pub mod scenario;
pub mod sim;
pub mod trace;
pub mod traffic;

pub use error::{
    EstimError, GenError, NetError, RoutingError, ScenarioError, SimError, TraceError,
};
pub use fractal::{EstimatorConfig, FractalEstimate, HurstMethod};
pub use trace::TraceSeries;
