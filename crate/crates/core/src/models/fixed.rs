use crate::domain::{State, StateDist};
use crate::error::Result;
use crate::model::{Context, PredictionModel};

/// Predicts the same distribution after every prefix.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedModel {
    dist: StateDist,
}

impl FixedModel {
    pub fn new(dist: StateDist) -> Self {
        Self { dist }
    }

    pub fn point(n: usize, state: State) -> Self {
        Self::new(StateDist::point(n, state))
    }

    pub fn dist(&self) -> &StateDist {
        &self.dist
    }
}

impl PredictionModel for FixedModel {
    fn num_states(&self) -> usize {
        self.dist.len()
    }

    fn context(&self) -> Context {
        Context::Bounded(0)
    }

    fn predict(&self, _prefix: &[State]) -> Result<StateDist> {
        Ok(self.dist.clone())
    }
}
