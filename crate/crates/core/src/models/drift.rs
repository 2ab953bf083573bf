use std::f64::consts::PI;

use crate::domain::{State, StateDist};
use crate::error::{Error, Result};
use crate::model::PredictionModel;

/// Independent bits with `Pr[θ_t = 1] = |sin(π/6 + tπ/φ)|`, rounds 1-indexed.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicDrift {
    phi: f64,
}

impl PeriodicDrift {
    pub fn new(phi: f64) -> Result<Self> {
        if !(phi.is_finite() && phi > 0.0) {
            return Err(Error::InvalidParameter(format!("period {phi} must be positive")));
        }
        Ok(Self { phi })
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn prob_at(&self, t: usize) -> f64 {
        // Reduce the angle to [0, π) in units of π so multiples of π give exactly 0.
        let turns = (1.0 / 6.0 + t as f64 / self.phi).rem_euclid(1.0);
        (PI * turns).sin().abs().min(1.0)
    }
}

impl PredictionModel for PeriodicDrift {
    fn num_states(&self) -> usize {
        2
    }

    fn predict(&self, prefix: &[State]) -> Result<StateDist> {
        let p = self.prob_at(prefix.len() + 1);
        Ok(StateDist::from_vec_unchecked(vec![1.0 - p, p]))
    }
}
