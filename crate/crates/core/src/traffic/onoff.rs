//! Superposition of alternating on-off renewal sources with Pareto sojourns.
//!
//! Sojourn durations with tail index 1 < alpha < 2 have finite mean and
//! infinite variance; the superposed rate process is long-range dependent
//! with H = (3 - alpha) / 2.

use rand::Rng;

use crate::error::GenError;
use crate::rng::{derive_seed, rng_from_seed};
use crate::trace::TraceSeries;

#[derive(Debug, Clone, Copy)]
pub struct OnOffParams {
    /// Number of independent on-off sources.
    pub n_sources: usize,
    /// Pareto tail index of on/off sojourn durations, in (1, 2).
    pub pareto_shape: f64,
    /// Minimum sojourn duration in slots.
    pub min_sojourn: u64,
    /// Emission rate of one active source (units/slot).
    pub peak_rate: f64,
    /// Trace length in slots.
    pub n: usize,
    pub seed: u64,
}

impl OnOffParams {
    pub fn validate(&self) -> Result<(), GenError> {
        if self.n_sources == 0 {
            return Err(GenError::InvalidParam("n_sources must be >= 1".into()));
        }
        if !(self.pareto_shape.is_finite() && self.pareto_shape > 1.0 && self.pareto_shape < 2.0) {
            return Err(GenError::InvalidParam(format!(
                "pareto shape must be in (1, 2) for the heavy-tailed regime, got {}",
                self.pareto_shape
            )));
        }
        if self.min_sojourn == 0 {
            return Err(GenError::InvalidParam(
                "min_sojourn must be >= 1 slot".into(),
            ));
        }
        if !(self.peak_rate.is_finite() && self.peak_rate > 0.0) {
            return Err(GenError::InvalidParam(format!(
                "peak_rate must be positive, got {}",
                self.peak_rate
            )));
        }
        if self.n == 0 {
            return Err(GenError::InvalidParam("n must be >= 1".into()));
        }
        Ok(())
    }
}

/// Superpose the sources; the value at slot t is `peak_rate` times the count
/// of active sources. Each source gets a sub-stream derived from the master
/// seed, so the trace is deterministic per seed.
pub fn gen_onoff(params: &OnOffParams) -> Result<TraceSeries, GenError> {
    params.validate()?;
    let mut active_counts = vec![0u32; params.n];
    for source in 0..params.n_sources {
        let mut rng = rng_from_seed(derive_seed(params.seed, source as u64));
        let mut on = rng.gen_bool(0.5);
        let mut t = 0usize;
        while t < params.n {
            // Inverse-CDF Pareto sample, rounded up to whole slots.
            let u: f64 = rng.gen();
            let raw = params.min_sojourn as f64 * (1.0 - u).powf(-1.0 / params.pareto_shape);
            let dur = raw.ceil().min(params.n as f64) as usize;
            let end = (t + dur.max(1)).min(params.n);
            if on {
                for c in &mut active_counts[t..end] {
                    *c += 1;
                }
            }
            t = end;
            on = !on;
        }
    }
    let values = active_counts
        .into_iter()
        .map(|c| c as f64 * params.peak_rate)
        .collect();
    Ok(TraceSeries::new(1.0, values).expect("counts are valid"))
}
