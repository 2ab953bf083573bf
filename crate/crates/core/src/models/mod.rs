//! Reference next-token models: the Polya urn, piecewise Bernoulli sources,
//! de Bruijn Markov chains, periodically drifting environments, i.i.d.
//! forecasters, and the bounded-window wrapper.

mod bernoulli;
mod debruijn;
mod drift;
mod fixed;
mod polya;
mod windowed;

pub use bernoulli::PiecewiseBernoulli;
pub use debruijn::{debruijn_build, DeBruijnModel, DeBruijnSeq, MAX_DEBRUIJN_ORDER};
pub use drift::PeriodicDrift;
pub use fixed::FixedModel;
pub use polya::{polya_from_counts, PolyaUrn};
pub use windowed::Windowed;
