use crate::domain::{State, StateDist};
use crate::error::{Error, Result};
use crate::model::PredictionModel;

/// Independent bits whose success probability follows a step schedule.
///
/// Each schedule entry is `(first round, Pr[θ_t = 1])` with 1-indexed rounds.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseBernoulli {
    schedule: Vec<(usize, f64)>,
}

impl PiecewiseBernoulli {
    pub fn new(schedule: Vec<(usize, f64)>) -> Result<Self> {
        match schedule.first() {
            Some(&(1, _)) => {}
            _ => return Err(Error::InvalidParameter("schedule must start at round 1".into())),
        }
        for w in schedule.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::InvalidParameter("schedule rounds must increase".into()));
            }
        }
        if let Some(&(_, p)) = schedule.iter().find(|(_, p)| !(*p > 0.0 && *p < 1.0)) {
            return Err(Error::InvalidParameter(format!("probability {p} not in (0, 1)")));
        }
        Ok(Self { schedule })
    }

    /// Constant `Pr[θ_t = 1] = p` for every round.
    pub fn constant(p: f64) -> Result<Self> {
        Self::new(vec![(1, p)])
    }

    /// Ber(1/3) for the first half of `horizon` rounds, Ber(2/3) after.
    pub fn third_to_two_thirds(horizon: usize) -> Self {
        Self { schedule: vec![(1, 1.0 / 3.0), (horizon / 2 + 1, 2.0 / 3.0)] }
    }

    pub fn schedule(&self) -> &[(usize, f64)] {
        &self.schedule
    }

    /// `Pr[θ_t = 1]` at 1-indexed round `t`.
    pub fn prob_at(&self, t: usize) -> f64 {
        let idx = self.schedule.partition_point(|&(start, _)| start <= t);
        self.schedule[idx.saturating_sub(1)].1
    }
}

impl PredictionModel for PiecewiseBernoulli {
    fn num_states(&self) -> usize {
        2
    }

    fn predict(&self, prefix: &[State]) -> Result<StateDist> {
        let p = self.prob_at(prefix.len() + 1);
        Ok(StateDist::from_vec_unchecked(vec![1.0 - p, p]))
    }
}
