//! Synthetic traffic generators with controlled fractal properties.
//!
//! Three constructions cover the model families used throughout the
//! self-similar traffic literature:
//!
//! - [`gen_fgn`]: exact fractional Gaussian noise via circulant embedding,
//!   shifted/scaled to a target mean and standard deviation (monofractal,
//!   tunable Hurst exponent);
//! - [`gen_onoff`]: a superposition of alternating on-off renewal sources
//!   with Pareto sojourn times, whose heavy tails induce long-range
//!   dependence with H = (3 - alpha) / 2;
//! - [`gen_cascade`]: a conservative binomial cascade, the simplest
//!   multifractal measure, producing bursty traces with a large coefficient
//!   of variation for small mass fractions.
//!
//! All generators are pure functions of their parameters: the same seed
//! produces a bit-identical trace.

mod cascade;
mod fgn;
mod onoff;

pub use cascade::{gen_cascade, CascadeParams};
pub use fgn::{fgn_acf, gen_fgn, FgnParams};
pub use onoff::{gen_onoff, OnOffParams};
