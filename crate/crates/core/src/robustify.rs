//! Unbounded-context robustification.
//!
//! The robust model replays the prefix, tracking the regret of the softmax
//! policy that trusts the base model against the regret of the softmax
//! policy that trusts the Polya urn. Once the first exceeds the second by
//! more than [`switch_threshold`], the model answers with the urn for every
//! longer prefix of that sequence.

use crate::decision::{action_utilities, qbr_from_utilities, Temperature};
use crate::domain::{State, StateDist, UtilityMatrix};
use crate::error::{Error, Result};
use crate::model::{check_prefix, check_state, Cursor, PredictionModel, SharedModel};
use crate::models::polya_from_counts;
use crate::regret::{switch_threshold, RegretLedger};

/// Where (if anywhere) the switch condition first held along a sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchReport {
    pub tau: Option<usize>,
    /// `Regret_τ − Regret_Hedge,τ` at the switch.
    pub gap: Option<f64>,
}

/// Streaming evaluation of the switch condition. Feed it the base model's
/// prediction before each state and the state itself.
#[derive(Debug, Clone)]
pub(crate) struct SwitchScan<'a> {
    ledger: RegretLedger<'a>,
    u: &'a UtilityMatrix,
    eta: Temperature,
    horizon: usize,
    alpha: f64,
    switched: Option<(usize, f64)>,
}

impl<'a> SwitchScan<'a> {
    pub(crate) fn new(u: &'a UtilityMatrix, horizon: usize, alpha: f64) -> Self {
        let eta = Temperature::auto(horizon);
        Self { ledger: RegretLedger::new(u, eta), u, eta, horizon, alpha, switched: None }
    }

    pub(crate) fn switched(&self) -> Option<(usize, f64)> {
        self.switched
    }

    /// Same as [`observe`](Self::observe) with the base model's softmax action precomputed.
    pub(crate) fn observe_action(&mut self, pi_model: &[f64], state: State) -> Result<()> {
        if self.switched.is_some() {
            return Ok(());
        }
        self.ledger.update(pi_model, state)?;
        let s = self.ledger.rounds();
        let (regret, hedge) = self.ledger.regrets();
        let threshold = switch_threshold(self.horizon, s, self.u.num_actions(), self.alpha);
        if regret >= hedge + threshold {
            self.switched = Some((s, regret - hedge));
        }
        Ok(())
    }

    pub(crate) fn observe(&mut self, base: &StateDist, state: State) -> Result<()> {
        if self.switched.is_some() {
            return Ok(());
        }
        let pi = qbr_from_utilities(&action_utilities(self.u, base), self.eta);
        self.observe_action(&pi, state)
    }
}

#[derive(Debug, Clone)]
pub struct RobustModel {
    base: SharedModel,
    u: UtilityMatrix,
    horizon: usize,
    alpha: f64,
}

impl RobustModel {
    pub fn new(base: SharedModel, u: UtilityMatrix, horizon: usize, alpha: f64) -> Result<Self> {
        if base.num_states() != u.num_states() {
            return Err(Error::DimensionMismatch { expected: u.num_states(), got: base.num_states() });
        }
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidParameter(format!("alpha {alpha} must be positive")));
        }
        if horizon < 1 {
            return Err(Error::InvalidParameter("horizon must be positive".into()));
        }
        if let Some(h) = base.horizon() {
            if h < horizon {
                return Err(Error::Horizon { len: horizon, horizon: h });
            }
        }
        Ok(Self { base, u, horizon, alpha })
    }

    pub fn base(&self) -> &SharedModel {
        &self.base
    }

    pub fn utility(&self) -> &UtilityMatrix {
        &self.u
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// First round at which the switch condition holds along `seq`.
    pub fn switch_time(&self, seq: &[State]) -> Result<SwitchReport> {
        if seq.len() > self.horizon {
            return Err(Error::Horizon { len: seq.len(), horizon: self.horizon });
        }
        let scan_len = seq.len().min(self.horizon - 1);
        let scan = self.scan(&seq[..scan_len])?;
        Ok(match scan.switched() {
            Some((tau, gap)) => SwitchReport { tau: Some(tau), gap: Some(gap) },
            None => SwitchReport { tau: None, gap: None },
        })
    }

    fn scan(&self, prefix: &[State]) -> Result<SwitchScan<'_>> {
        let mut scan = SwitchScan::new(&self.u, self.horizon, self.alpha);
        let mut base = self.base.cursor();
        for &s in prefix {
            let d = base.predict()?;
            scan.observe(&d, s)?;
            if scan.switched().is_some() {
                break;
            }
            base.push(s)?;
        }
        Ok(scan)
    }
}

impl PredictionModel for RobustModel {
    fn num_states(&self) -> usize {
        self.u.num_states()
    }

    fn horizon(&self) -> Option<usize> {
        Some(self.horizon)
    }

    /// Rescans the whole prefix; [`cursor`](PredictionModel::cursor) is the
    /// incremental equivalent and agrees bit for bit.
    fn predict(&self, prefix: &[State]) -> Result<StateDist> {
        check_prefix(prefix.len(), Some(self.horizon))?;
        for &s in prefix {
            check_state(s, self.u.num_states())?;
        }
        if self.scan(prefix)?.switched().is_some() {
            let mut counts = vec![0u64; self.u.num_states()];
            prefix.iter().for_each(|&s| counts[s] += 1);
            return Ok(polya_from_counts(&counts));
        }
        self.base.predict(prefix)
    }

    fn cursor(&self) -> Box<dyn Cursor + '_> {
        Box::new(RobustCursor {
            model: self,
            base: self.base.cursor(),
            scan: SwitchScan::new(&self.u, self.horizon, self.alpha),
            counts: vec![0; self.u.num_states()],
            prefix: Vec::new(),
            pending: None,
        })
    }
}

struct RobustCursor<'a> {
    model: &'a RobustModel,
    base: Box<dyn Cursor + 'a>,
    scan: SwitchScan<'a>,
    counts: Vec<u64>,
    prefix: Vec<State>,
    pending: Option<StateDist>,
}

impl Cursor for RobustCursor<'_> {
    fn prefix(&self) -> &[State] {
        &self.prefix
    }

    fn predict(&mut self) -> Result<StateDist> {
        check_prefix(self.prefix.len(), Some(self.model.horizon))?;
        if self.scan.switched().is_some() {
            return Ok(polya_from_counts(&self.counts));
        }
        if self.pending.is_none() {
            self.pending = Some(self.base.predict()?);
        }
        Ok(self.pending.clone().expect("just set"))
    }

    fn push(&mut self, state: State) -> Result<()> {
        check_state(state, self.counts.len())?;
        // Rounds at or past the horizon never influence a prediction.
        if self.scan.switched().is_none() && self.prefix.len() + 1 < self.model.horizon {
            let d = match self.pending.take() {
                Some(d) => d,
                None => self.base.predict()?,
            };
            self.scan.observe(&d, state)?;
            self.base.push(state)?;
        }
        self.pending = None;
        self.counts[state] += 1;
        self.prefix.push(state);
        Ok(())
    }

    fn switch_time(&self) -> Option<usize> {
        self.scan.switched().map(|(tau, _)| tau)
    }
}
