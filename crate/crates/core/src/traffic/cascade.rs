//! Conservative binomial cascade.
//!
//! Start with the whole mass on one interval; at each level split every
//! interval's mass into fractions (p, 1-p) handed to its halves in random
//! order (one random bit per split). Mass is conserved exactly at every
//! level, and the leaf measure is multifractal: smaller p concentrates mass
//! and raises the coefficient of variation.

use rand::Rng;

use crate::error::GenError;
use crate::rng::rng_from_seed;
use crate::trace::TraceSeries;

#[derive(Debug, Clone, Copy)]
pub struct CascadeParams {
    /// Cascade levels; the trace has 2^depth slots.
    pub depth: u32,
    /// Mass fraction assigned to one half, in (0, 0.5].
    pub multiplier_low: f64,
    /// Total mass of the trace (sum of all leaf values).
    pub total_mass: f64,
    pub seed: u64,
}

impl CascadeParams {
    pub fn validate(&self) -> Result<(), GenError> {
        if self.depth == 0 || self.depth > 26 {
            return Err(GenError::InvalidParam(format!(
                "depth must be in 1..=26, got {}",
                self.depth
            )));
        }
        if !(self.multiplier_low.is_finite()
            && self.multiplier_low > 0.0
            && self.multiplier_low <= 0.5)
        {
            return Err(GenError::InvalidParam(format!(
                "multiplier_low must be in (0, 0.5], got {}",
                self.multiplier_low
            )));
        }
        if !(self.total_mass.is_finite() && self.total_mass > 0.0) {
            return Err(GenError::InvalidParam(format!(
                "total_mass must be positive, got {}",
                self.total_mass
            )));
        }
        Ok(())
    }
}

pub fn gen_cascade(params: &CascadeParams) -> Result<TraceSeries, GenError> {
    params.validate()?;
    let mut rng = rng_from_seed(params.seed);
    let p = params.multiplier_low;
    let mut masses = vec![params.total_mass];
    for _ in 0..params.depth {
        let mut next = Vec::with_capacity(masses.len() * 2);
        for m in &masses {
            let (a, b) = if rng.gen_bool(0.5) {
                (p, 1.0 - p)
            } else {
                (1.0 - p, p)
            };
            next.push(m * a);
            next.push(m * b);
        }
        masses = next;
    }
    Ok(TraceSeries::new(1.0, masses).expect("masses are valid"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn even_split_is_uniform() {
        let t = gen_cascade(&CascadeParams {
            depth: 3,
            multiplier_low: 0.5,
            total_mass: 8.0,
            seed: 1,
        })
        .unwrap();
        assert_eq!(t.len(), 8);
        assert!(t.values().iter().all(|v| (*v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn mass_is_conserved() {
        let total = 1234.5;
        let t = gen_cascade(&CascadeParams {
            depth: 10,
            multiplier_low: 0.3,
            total_mass: total,
            seed: 5,
        })
        .unwrap();
        let sum: f64 = t.values().iter().sum();
        assert!(((sum - total) / total).abs() < 1e-9);
    }

    #[test]
    fn smaller_low_fraction_is_burstier() {
        let sv = |p: f64| {
            let t = gen_cascade(&CascadeParams {
                depth: 14,
                multiplier_low: p,
                total_mass: 16384.0,
                seed: 7,
            })
            .unwrap();
            t.std_pop() / t.mean()
        };
        assert!(sv(0.3) > sv(0.45));
    }

    #[test]
    fn deterministic_per_seed() {
        let p = CascadeParams {
            depth: 8,
            multiplier_low: 0.4,
            total_mass: 100.0,
            seed: 42,
        };
        assert_eq!(
            gen_cascade(&p).unwrap().values(),
            gen_cascade(&p).unwrap().values()
        );
    }
}
