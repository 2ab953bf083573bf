//! Bounded-context robustification by averaging restarted copies.
//!
//! Given an `L`-bounded base model and a longer window `L' = L + Δ`, every
//! offset `m = L+1..L'` of the trailing window starts a fresh copy of the
//! unbounded robustifier with horizon `Δ`. The copies' softmax actions are
//! averaged, and the returned prediction is the (binary) state distribution
//! whose softmax reproduces that average.

use std::collections::VecDeque;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};

use crate::adversary::{run_trials_with, AdversaryKind, RegretStats, Response};
use crate::decision::{action_utilities, inverse_qbr_binary, qbr_from_utilities, Temperature};
use crate::domain::{MixedAction, State, StateDist, UtilityMatrix};
use crate::error::{Error, Result};
use crate::model::{check_prefix, check_state, Context, Cursor, PredictionModel, PrefixCursor, SharedModel};
use crate::models::polya_from_counts;
use crate::robustify::{RobustModel, SwitchScan};
use crate::sampling::RngSeed;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContextMode {
    /// Each copy evaluates the base model on the copy's own suffix only.
    SuffixOnly,
    /// Each copy evaluates the base model on the `L` real states preceding
    /// every position, while its ledger and urn cover only its suffix.
    FullContext,
}

/// One evaluation of the bounded robust model, with diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundedPrediction {
    pub dist: StateDist,
    /// The averaged softmax action the output was inverted from.
    pub target: Option<MixedAction>,
    pub clamped: bool,
    /// `|QBR(dist) − target|` on the action-1 coordinate.
    pub round_trip_error: f64,
    pub switched_copies: usize,
    /// Prefix shorter than `L'`, answered by the unbounded robustifier.
    pub fallback: bool,
}

#[derive(Debug, Clone)]
pub struct BoundedRobustModel {
    base: SharedModel,
    u: UtilityMatrix,
    base_window: usize,
    window: usize,
    alpha: f64,
    mode: ContextMode,
    horizon: usize,
    fallback: RobustModel,
    eta: Temperature,
}

impl BoundedRobustModel {
    pub fn new(
        base: SharedModel,
        u: UtilityMatrix,
        base_window: usize,
        window: usize,
        alpha: f64,
        mode: ContextMode,
        horizon: usize,
    ) -> Result<Self> {
        if u.num_actions() != 2 || u.num_states() != 2 {
            return Err(Error::Unsupported("bounded robustification needs binary actions and states".into()));
        }
        if window <= base_window {
            return Err(Error::InvalidParameter(format!("L' = {window} must exceed L = {base_window}")));
        }
        match base.context() {
            Context::Bounded(w) if w <= base_window => {}
            other => {
                return Err(Error::InvalidParameter(format!(
                    "base model context {other:?} is not bounded by L = {base_window}"
                )))
            }
        }
        let fallback = RobustModel::new(base.clone(), u.clone(), horizon, alpha)?;
        let eta = Temperature::auto(window - base_window);
        Ok(Self { base, u, base_window, window, alpha, mode, horizon, fallback, eta })
    }

    pub fn delta(&self) -> usize {
        self.window - self.base_window
    }

    pub fn eta(&self) -> Temperature {
        self.eta
    }

    pub fn mode(&self) -> ContextMode {
        self.mode
    }

    pub fn utility(&self) -> &UtilityMatrix {
        &self.u
    }

    fn qbr(&self, mu: &[f64]) -> MixedAction {
        qbr_from_utilities(&action_utilities(&self.u, mu), self.eta)
    }

    pub fn predict_detailed(&self, prefix: &[State]) -> Result<BoundedPrediction> {
        check_prefix(prefix.len(), Some(self.horizon))?;
        for &s in prefix {
            check_state(s, 2)?;
        }
        if prefix.len() < self.window {
            return Ok(BoundedPrediction {
                dist: self.fallback.predict(prefix)?,
                target: None,
                clamped: false,
                round_trip_error: 0.0,
                switched_copies: 0,
                fallback: true,
            });
        }
        let w = &prefix[prefix.len() - self.window..];
        let (l, lp, delta) = (self.base_window, self.window, self.delta());

        // Full-context base predictions before window positions L+1..=L' (0-based p = L..L'),
        // plus the prediction after the whole window.
        let shared: Option<(Vec<MixedAction>, StateDist)> = match self.mode {
            ContextMode::FullContext => {
                let mut actions = Vec::with_capacity(delta);
                for p in l..lp {
                    actions.push(self.qbr(&self.base.predict(&w[p - l..p])?));
                }
                Some((actions, self.base.predict(&w[lp - l..])?))
            }
            ContextMode::SuffixOnly => None,
        };

        let mut mus = Vec::with_capacity(delta);
        for m in l..lp {
            let suffix = &w[m..];
            let mut scan = SwitchScan::new(&self.u, delta, self.alpha);
            for (j, &s) in suffix.iter().enumerate() {
                match &shared {
                    Some((actions, _)) => scan.observe_action(&actions[m - l + j], s)?,
                    None => scan.observe(&self.base.predict(&suffix[..j])?, s)?,
                }
                if scan.switched().is_some() {
                    break;
                }
            }
            mus.push(if scan.switched().is_some() {
                let mut counts = [0u64; 2];
                suffix.iter().for_each(|&s| counts[s] += 1);
                (polya_from_counts(&counts), true)
            } else {
                match &shared {
                    Some((_, last)) => (last.clone(), false),
                    None => (self.base.predict(suffix)?, false),
                }
            });
        }
        self.combine(mus)
    }

    /// Averages the copies' softmax actions and inverts the average.
    fn combine(&self, mus: impl IntoIterator<Item = (StateDist, bool)>) -> Result<BoundedPrediction> {
        let mut avg = [0.0f64; 2];
        let mut switched_copies = 0;
        let mut n = 0usize;
        for (mu, switched) in mus {
            switched_copies += switched as usize;
            let pi = self.qbr(&mu);
            avg[0] += pi[0];
            avg[1] += pi[1];
            n += 1;
        }
        let target = MixedAction::new(vec![avg[0] / n as f64, avg[1] / n as f64])?;
        let inv = inverse_qbr_binary(&self.u, &target, self.eta)?;
        let back = self.qbr(&inv.dist);
        Ok(BoundedPrediction {
            round_trip_error: (back[1] - target[1]).abs(),
            dist: inv.dist,
            target: Some(target),
            clamped: inv.clamped,
            switched_copies,
            fallback: false,
        })
    }

    /// Regret of the softmax policy at `η = 1/√Δ` against an adversary,
    /// with inverse-softmax diagnostics over every evaluated context.
    pub fn restart_regret_eval(
        &self,
        adversary: &AdversaryKind,
        horizon: usize,
        trials: usize,
        seed: RngSeed,
    ) -> Result<RestartEval> {
        if horizon < self.window {
            return Err(Error::InvalidParameter(format!("horizon {horizon} shorter than L' = {}", self.window)));
        }
        if horizon > self.horizon {
            return Err(Error::Horizon { len: horizon, horizon: self.horizon });
        }
        let diag = Diagnostics::default();
        let runs = run_trials_with(adversary, &self.u, Response::Quantal(self.eta), horizon, trials, seed, |_| {
            let cursor: Box<dyn Cursor + '_> =
                Box::new(Tracked { model: self, prefix: Vec::new(), inner: BoundedCursor::new(self), diag: &diag });
            Ok(cursor)
        })?;
        Ok(RestartEval {
            stats: RegretStats::from_runs(&runs),
            contexts: diag.contexts.load(Ordering::Relaxed),
            clamped: diag.clamped.load(Ordering::Relaxed),
            max_round_trip: f64::from_bits(diag.max_round_trip.load(Ordering::Relaxed)),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RestartEval {
    pub stats: RegretStats,
    /// Non-fallback predictions made across all trials.
    pub contexts: usize,
    pub clamped: usize,
    /// Largest round-trip error among unclamped contexts.
    pub max_round_trip: f64,
}

#[derive(Default)]
struct Diagnostics {
    contexts: AtomicUsize,
    clamped: AtomicUsize,
    // bit pattern of a non-negative f64, whose order matches the integer order
    max_round_trip: AtomicU64,
}

struct Tracked<'a> {
    model: &'a BoundedRobustModel,
    prefix: Vec<State>,
    inner: BoundedCursor<'a>,
    diag: &'a Diagnostics,
}

impl Cursor for Tracked<'_> {
    fn prefix(&self) -> &[State] {
        &self.prefix
    }

    fn predict(&mut self) -> Result<StateDist> {
        let d = match self.model.mode {
            ContextMode::FullContext => self.inner.predict_detailed()?,
            ContextMode::SuffixOnly => self.model.predict_detailed(&self.prefix)?,
        };
        if !d.fallback {
            self.diag.contexts.fetch_add(1, Ordering::Relaxed);
            if d.clamped {
                self.diag.clamped.fetch_add(1, Ordering::Relaxed);
            } else {
                self.diag.max_round_trip.fetch_max(d.round_trip_error.to_bits(), Ordering::Relaxed);
            }
        }
        Ok(d.dist)
    }

    fn push(&mut self, state: State) -> Result<()> {
        if self.model.mode == ContextMode::FullContext {
            self.inner.push(state)?;
        }
        self.prefix.push(state);
        Ok(())
    }
}

impl PredictionModel for BoundedRobustModel {
    fn num_states(&self) -> usize {
        2
    }

    fn horizon(&self) -> Option<usize> {
        Some(self.horizon)
    }

    fn context(&self) -> Context {
        Context::Bounded(self.window)
    }

    fn predict(&self, prefix: &[State]) -> Result<StateDist> {
        Ok(self.predict_detailed(prefix)?.dist)
    }

    fn cursor(&self) -> Box<dyn Cursor + '_> {
        match self.mode {
            ContextMode::FullContext => Box::new(BoundedCursor::new(self)),
            ContextMode::SuffixOnly => Box::new(PrefixCursor::new(self)),
        }
    }
}

struct RestartCopy<'a> {
    start: usize,
    scan: SwitchScan<'a>,
    counts: [u64; 2],
}

/// Full-context restart copies carried along one sequence. A copy started
/// at position `a` lives for `Δ` rounds, so each step costs `O(Δ)` ledger
/// updates instead of the `O(Δ²)` of a fresh evaluation. Results agree with
/// `predict` bit for bit.
pub struct BoundedCursor<'a> {
    model: &'a BoundedRobustModel,
    fallback: Option<Box<dyn Cursor + 'a>>,
    copies: VecDeque<RestartCopy<'a>>,
    prefix: Vec<State>,
    pending: Option<StateDist>,
}

impl<'a> BoundedCursor<'a> {
    fn new(model: &'a BoundedRobustModel) -> Self {
        Self {
            model,
            fallback: Some(model.fallback.cursor()),
            copies: VecDeque::with_capacity(model.delta() + 1),
            prefix: Vec::new(),
            pending: None,
        }
    }

    /// Base prediction from the `L` states before the current position.
    fn base_here(&mut self) -> Result<StateDist> {
        if self.pending.is_none() {
            let n = self.prefix.len();
            self.pending = Some(self.model.base.predict(&self.prefix[n - self.model.base_window..])?);
        }
        Ok(self.pending.clone().expect("just set"))
    }

    pub fn predict_detailed(&mut self) -> Result<BoundedPrediction> {
        check_prefix(self.prefix.len(), Some(self.model.horizon))?;
        if let Some(fb) = self.fallback.as_mut() {
            return Ok(BoundedPrediction {
                dist: fb.predict()?,
                target: None,
                clamped: false,
                round_trip_error: 0.0,
                switched_copies: 0,
                fallback: true,
            });
        }
        let base = self.base_here()?;
        let mus: Vec<(StateDist, bool)> = self
            .copies
            .iter()
            .map(|c| match c.scan.switched() {
                Some(_) => (polya_from_counts(&c.counts), true),
                None => (base.clone(), false),
            })
            .collect();
        self.model.combine(mus)
    }
}

impl Cursor for BoundedCursor<'_> {
    fn prefix(&self) -> &[State] {
        &self.prefix
    }

    fn predict(&mut self) -> Result<StateDist> {
        Ok(self.predict_detailed()?.dist)
    }

    fn push(&mut self, state: State) -> Result<()> {
        check_state(state, 2)?;
        let n = self.prefix.len();
        let (l, delta) = (self.model.base_window, self.model.delta());
        if n >= l {
            let pi = self.model.qbr(&self.base_here()?);
            self.copies.push_back(RestartCopy {
                start: n,
                scan: SwitchScan::new(&self.model.u, delta, self.model.alpha),
                counts: [0; 2],
            });
            for c in self.copies.iter_mut() {
                c.scan.observe_action(&pi, state)?;
                c.counts[state] += 1;
            }
            while self.copies.front().is_some_and(|c| c.start + delta <= n) {
                self.copies.pop_front();
            }
        }
        if let Some(fb) = self.fallback.as_mut() {
            if n + 1 >= self.model.window {
                self.fallback = None;
            } else {
                fb.push(state)?;
            }
        }
        self.pending = None;
        self.prefix.push(state);
        Ok(())
    }
}
