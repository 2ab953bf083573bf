use crate::domain::{State, StateDist};
use crate::error::{Error, Result};
use crate::model::{Context, PredictionModel, SharedModel};

/// Truncates every prefix to its last `w` states before delegating.
#[derive(Debug, Clone)]
pub struct Windowed {
    inner: SharedModel,
    window: usize,
}

impl Windowed {
    pub fn new(inner: SharedModel, window: usize) -> Result<Self> {
        if window == 0 {
            return Err(Error::InvalidParameter("window must be at least 1".into()));
        }
        Ok(Self { inner, window })
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn inner(&self) -> &SharedModel {
        &self.inner
    }
}

impl PredictionModel for Windowed {
    fn num_states(&self) -> usize {
        self.inner.num_states()
    }

    fn horizon(&self) -> Option<usize> {
        self.inner.horizon()
    }

    fn context(&self) -> Context {
        match self.inner.context() {
            Context::Bounded(w) if w < self.window => Context::Bounded(w),
            _ => Context::Bounded(self.window),
        }
    }

    fn predict(&self, prefix: &[State]) -> Result<StateDist> {
        let start = prefix.len().saturating_sub(self.window);
        self.inner.predict(&prefix[start..])
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::models::{PiecewiseBernoulli, PolyaUrn};

    #[test]
    fn short_prefix_passes_through() {
        let polya: SharedModel = Arc::new(PolyaUrn::binary());
        let w = Windowed::new(polya.clone(), 4).unwrap();
        assert_eq!(w.predict(&[1, 0, 1]).unwrap(), polya.predict(&[1, 0, 1]).unwrap());
    }

    #[test]
    fn truncates_to_suffix() {
        let w = Windowed::new(Arc::new(PolyaUrn::binary()), 2).unwrap();
        assert_eq!(w.predict(&[0, 0, 0, 1, 1]).unwrap()[1], 0.75);
        assert_eq!(w.context(), Context::Bounded(2));
    }

    #[test]
    fn full_window_is_identity() {
        let polya: SharedModel = Arc::new(PolyaUrn::binary());
        let w = Windowed::new(polya.clone(), 10).unwrap();
        let seq = [0, 1, 1, 0, 0, 0, 1, 1, 0, 1];
        for t in 0..=seq.len() {
            assert_eq!(w.predict(&seq[..t]).unwrap(), polya.predict(&seq[..t]).unwrap());
        }
        assert!(Windowed::new(Arc::new(PiecewiseBernoulli::constant(0.5).unwrap()), 0).is_err());
    }
}
