//! Dense-index domain types shared by every module.
//!
//! States and actions are plain `usize` indices. Probability vectors are
//! validated on construction: entries must be finite and non-negative, and
//! their sum must be within `SUM_TOL` of one. A sum that drifted by less than
//! `RENORM_TOL` is silently renormalized; anything larger is rejected.

use std::fmt;
use std::ops::Deref;

use crate::error::{Error, Result};

pub type State = usize;
pub type Action = usize;

pub const SUM_TOL: f64 = 1e-12;
pub const RENORM_TOL: f64 = 1e-9;

/// Checks the simplex invariant, renormalizing small drift in place.
pub fn validate_simplex(probs: &mut [f64]) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::InvalidDistribution("empty vector".into()));
    }
    let mut sum = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        if !p.is_finite() || p < 0.0 {
            return Err(Error::InvalidDistribution(format!("entry {i} is {p}")));
        }
        sum += p;
    }
    let drift = (sum - 1.0).abs();
    if drift <= SUM_TOL {
        Ok(())
    } else if drift <= RENORM_TOL {
        probs.iter_mut().for_each(|p| *p /= sum);
        Ok(())
    } else {
        Err(Error::InvalidDistribution(format!("entries sum to {sum}")))
    }
}

macro_rules! simplex_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name(Vec<f64>);

        impl $name {
            pub fn new(mut probs: Vec<f64>) -> Result<Self> {
                validate_simplex(&mut probs)?;
                Ok(Self(probs))
            }

            /// Hot-path constructor for vectors that are correct by construction.
            /// The shared validator still runs in debug builds.
            pub(crate) fn from_vec_unchecked(probs: Vec<f64>) -> Self {
                #[cfg(debug_assertions)]
                {
                    let mut check = probs.clone();
                    if let Err(e) = validate_simplex(&mut check) {
                        panic!("{}: {e}", stringify!($name));
                    }
                }
                Self(probs)
            }

            pub fn uniform(n: usize) -> Self {
                Self(vec![1.0 / n as f64; n])
            }

            pub fn point(n: usize, index: usize) -> Self {
                let mut v = vec![0.0; n];
                v[index] = 1.0;
                Self(v)
            }

            pub fn probs(&self) -> &[f64] {
                &self.0
            }

            pub fn into_vec(self) -> Vec<f64> {
                self.0
            }

            /// Half the L1 distance between two vectors of equal length.
            pub fn tv(&self, other: &Self) -> f64 {
                0.5 * self
                    .0
                    .iter()
                    .zip(&other.0)
                    .map(|(a, b)| (a - b).abs())
                    .sum::<f64>()
            }
        }

        impl Deref for $name {
            type Target = [f64];
            fn deref(&self) -> &[f64] {
                &self.0
            }
        }
    };
}

simplex_type!(
    /// Distribution over the next state, `M(· | prefix)`.
    StateDist
);

simplex_type!(
    /// Distribution over actions played in one round.
    MixedAction
);

impl StateDist {
    /// Binary distribution with mass `p1` on state 1.
    pub fn bernoulli(p1: f64) -> Result<Self> {
        Self::new(vec![1.0 - p1, p1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StateAlphabet(usize);

impl StateAlphabet {
    pub const BINARY: StateAlphabet = StateAlphabet(2);

    pub fn new(size: usize) -> Result<Self> {
        if size < 2 {
            return Err(Error::InvalidParameter(format!("alphabet size {size} < 2")));
        }
        Ok(Self(size))
    }

    pub fn size(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ActionSet(usize);

impl ActionSet {
    pub fn new(size: usize) -> Result<Self> {
        if size < 2 {
            return Err(Error::InvalidParameter(format!("action set size {size} < 2")));
        }
        Ok(Self(size))
    }

    pub fn size(self) -> usize {
        self.0
    }
}

/// Utility table `U[action][state]` with entries in `[-1, 1]`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct UtilityMatrix {
    actions: usize,
    states: usize,
    values: Vec<f64>,
}

impl UtilityMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let actions = rows.len();
        ActionSet::new(actions)?;
        let states = rows[0].len();
        StateAlphabet::new(states)?;
        let mut values = Vec::with_capacity(actions * states);
        for (a, row) in rows.into_iter().enumerate() {
            if row.len() != states {
                return Err(Error::DimensionMismatch { expected: states, got: row.len() });
            }
            for (s, v) in row.into_iter().enumerate() {
                if !v.is_finite() || !(-1.0..=1.0).contains(&v) {
                    return Err(Error::UtilityOutOfRange { action: a, state: s, value: v });
                }
                values.push(v);
            }
        }
        Ok(Self { actions, states, values })
    }

    /// `U(a, θ) = 1{a = θ}` on `n` actions and `n` states.
    pub fn matching(n: usize) -> Self {
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            values[i * n + i] = 1.0;
        }
        Self { actions: n, states: n, values }
    }

    pub fn num_actions(&self) -> usize {
        self.actions
    }

    pub fn num_states(&self) -> usize {
        self.states
    }

    #[inline]
    pub fn get(&self, action: Action, state: State) -> f64 {
        self.values[action * self.states + state]
    }

    pub fn row(&self, action: Action) -> &[f64] {
        &self.values[action * self.states..(action + 1) * self.states]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.states)
    }

    /// Adds `c` to every entry without range checks. Used by shift-invariance tests.
    pub fn shifted_unchecked(&self, c: f64) -> Self {
        Self { actions: self.actions, states: self.states, values: self.values.iter().map(|v| v + c).collect() }
    }

    /// Returns a copy whose row `i` is row `perm[i]` of `self`.
    pub fn permute_rows(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.actions {
            return Err(Error::DimensionMismatch { expected: self.actions, got: perm.len() });
        }
        let rows = perm.iter().map(|&p| self.row(p).to_vec()).collect();
        Self::new(rows)
    }

    pub fn is_matching(&self) -> bool {
        *self == Self::matching(self.actions) && self.actions == self.states
    }
}

impl fmt::Display for UtilityMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_matching() {
            return write!(f, "match");
        }
        write!(f, "[")?;
        for (a, row) in self.rows().enumerate() {
            if a > 0 {
                write!(f, ";")?;
            }
            for (s, v) in row.iter().enumerate() {
                if s > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{v}")?;
            }
        }
        write!(f, "]")
    }
}

/// A validated state sequence `θ^t` with its horizon `T`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateSeq {
    states: Vec<State>,
    horizon: usize,
}

impl StateSeq {
    pub fn new(states: Vec<State>, alphabet: StateAlphabet, horizon: usize) -> Result<Self> {
        if states.len() > horizon {
            return Err(Error::Horizon { len: states.len(), horizon });
        }
        if let Some(&s) = states.iter().find(|&&s| s >= alphabet.size()) {
            return Err(Error::StateOutOfRange { state: s, size: alphabet.size() });
        }
        Ok(Self { states, horizon })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn into_vec(self) -> Vec<State> {
        self.states
    }

    /// Renders a binary sequence as a string of '0'/'1' characters.
    pub fn to_bit_string(states: &[State]) -> String {
        states.iter().map(|&s| if s == 0 { '0' } else { '1' }).collect()
    }
}

impl Deref for StateSeq {
    type Target = [State];
    fn deref(&self) -> &[State] {
        &self.states
    }
}
