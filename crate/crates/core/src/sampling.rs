//! Seeded sampling and likelihood evaluation.
//!
//! All randomness comes from ChaCha8 (`rand_chacha`), a published
//! counter-based generator. A run seed selects the key and each trial gets
//! its own 64-bit stream, so trial `k` of seed `s` produces the same draws
//! on every platform regardless of scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::domain::{StateAlphabet, StateDist, StateSeq};
use crate::error::{Error, Result};
use crate::model::PredictionModel;

pub type SimRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngSeed(pub u64);

impl RngSeed {
    pub fn rng(self) -> SimRng {
        ChaCha8Rng::seed_from_u64(self.0)
    }

    /// Independent stream for one trial of a run.
    pub fn stream(self, trial: u64) -> SimRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.0);
        rng.set_stream(trial);
        rng
    }
}

/// Inverse-CDF draw from a categorical distribution.
pub fn sample_categorical(dist: &[f64], rng: &mut SimRng) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &p) in dist.iter().enumerate() {
        if p > 0.0 {
            last_positive = i;
            acc += p;
            if u < acc {
                return i;
            }
        }
    }
    last_positive
}

/// Autoregressively samples `θ^T` with `θ_t ~ model(θ^{t-1})`.
pub fn sample_sequence(model: &dyn PredictionModel, horizon: usize, seed: RngSeed) -> Result<StateSeq> {
    sample_with(model, horizon, &mut seed.rng())
}

pub fn sample_with(model: &dyn PredictionModel, horizon: usize, rng: &mut SimRng) -> Result<StateSeq> {
    if let Some(h) = model.horizon() {
        if horizon > h {
            return Err(Error::Horizon { len: horizon, horizon: h });
        }
    }
    let mut cursor = model.cursor();
    for _ in 0..horizon {
        let dist = cursor.predict()?;
        let s = sample_categorical(&dist, rng);
        cursor.push(s)?;
    }
    StateSeq::new(cursor.prefix().to_vec(), StateAlphabet::new(model.num_states())?, horizon)
}

/// `Σ_t ln M(θ_t | θ^{t-1})`; `-∞` when some step has zero mass.
pub fn log_likelihood(model: &dyn PredictionModel, seq: &[usize]) -> Result<f64> {
    if let Some(h) = model.horizon() {
        if seq.len() > h {
            return Err(Error::Horizon { len: seq.len(), horizon: h });
        }
    }
    let mut cursor = model.cursor();
    let mut ll = 0.0;
    for &s in seq {
        let dist: StateDist = cursor.predict()?;
        if s >= dist.len() {
            return Err(Error::StateOutOfRange { state: s, size: dist.len() });
        }
        ll += dist[s].ln();
        cursor.push(s)?;
    }
    Ok(ll)
}
