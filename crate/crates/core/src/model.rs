//! The next-token prediction interface.
//!
//! A [`PredictionModel`] maps a prefix of states to a distribution over the
//! next state and must be a pure function of that prefix. Rolling a model
//! forward along one growing sequence goes through a [`Cursor`]; the default
//! cursor re-evaluates `predict` on the whole prefix, while models with
//! cheaper incremental state (count caches, regret ledgers) override it.

use std::fmt;
use std::sync::Arc;

use crate::domain::{State, StateDist};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Context {
    Unbounded,
    /// Predictions on prefixes of length `>= w` depend only on the last `w` states.
    Bounded(usize),
}

pub trait PredictionModel: Send + Sync + fmt::Debug {
    fn num_states(&self) -> usize;

    /// Largest sequence length the model is defined for; `None` means unlimited.
    fn horizon(&self) -> Option<usize> {
        None
    }

    fn context(&self) -> Context {
        Context::Unbounded
    }

    fn predict(&self, prefix: &[State]) -> Result<StateDist>;

    fn cursor(&self) -> Box<dyn Cursor + '_> {
        Box::new(PrefixCursor::new(self))
    }
}

/// Incremental evaluation of a model along one sequence.
pub trait Cursor {
    fn prefix(&self) -> &[State];

    /// Prediction for the next state given the current prefix.
    fn predict(&mut self) -> Result<StateDist>;

    fn push(&mut self, state: State) -> Result<()>;

    /// Round at which a switching model left its base model, if it did so
    /// on the current prefix.
    fn switch_time(&self) -> Option<usize> {
        None
    }
}

/// Cursor that re-evaluates the model on the full prefix at every step.
pub struct PrefixCursor<'a, M: ?Sized> {
    model: &'a M,
    prefix: Vec<State>,
}

impl<'a, M: PredictionModel + ?Sized> PrefixCursor<'a, M> {
    pub fn new(model: &'a M) -> Self {
        Self { model, prefix: Vec::new() }
    }
}

impl<M: PredictionModel + ?Sized> Cursor for PrefixCursor<'_, M> {
    fn prefix(&self) -> &[State] {
        &self.prefix
    }

    fn predict(&mut self) -> Result<StateDist> {
        self.model.predict(&self.prefix)
    }

    fn push(&mut self, state: State) -> Result<()> {
        check_state(state, self.model.num_states())?;
        self.prefix.push(state);
        Ok(())
    }
}

pub(crate) fn check_state(state: State, size: usize) -> Result<()> {
    if state >= size {
        return Err(Error::StateOutOfRange { state, size });
    }
    Ok(())
}

/// Errors when a prefix is too long for a model to predict after it.
pub(crate) fn check_prefix(len: usize, horizon: Option<usize>) -> Result<()> {
    match horizon {
        Some(h) if len >= h => Err(Error::Horizon { len, horizon: h }),
        _ => Ok(()),
    }
}

impl<M: PredictionModel + ?Sized> PredictionModel for Arc<M> {
    fn num_states(&self) -> usize {
        (**self).num_states()
    }

    fn horizon(&self) -> Option<usize> {
        (**self).horizon()
    }

    fn context(&self) -> Context {
        (**self).context()
    }

    fn predict(&self, prefix: &[State]) -> Result<StateDist> {
        (**self).predict(prefix)
    }

    fn cursor(&self) -> Box<dyn Cursor + '_> {
        (**self).cursor()
    }
}

pub type SharedModel = Arc<dyn PredictionModel>;
