//! Environments that choose states in response to the played mixed action,
//! the interaction loop, and the bounded-context impossibility harness.

use rayon::prelude::*;

use crate::decision::{action_utilities, argmax_first, qbr_from_utilities, utility_against, Temperature};
use crate::domain::{MixedAction, State, UtilityMatrix};
use crate::error::{Error, Result};
use crate::metrics::{mean_ci95, tv_exact, tv_mc, TvEstimate};
use crate::model::{Context, Cursor, PredictionModel, SharedModel};
use crate::models::DeBruijnModel;
use crate::regret::{external_regret, PolicyTrace};
use crate::sampling::{sample_categorical, RngSeed, SimRng};

/// Chooses `θ_t` after seeing the decision maker's mixed action `π_t`.
pub trait Adversary {
    fn next_state(&mut self, pi: &MixedAction, history: &[State], rng: &mut SimRng) -> Result<State>;
}

/// State minimizing `U(π, θ)`, lowest index on ties.
pub fn flip_adversary(pi: &[f64], u: &UtilityMatrix) -> State {
    let mut best = 0;
    let mut best_u = utility_against(u, pi, 0);
    for s in 1..u.num_states() {
        let v = utility_against(u, pi, s);
        if v < best_u {
            best = s;
            best_u = v;
        }
    }
    best
}

#[derive(Debug, Clone)]
pub struct FlipAdversary {
    u: UtilityMatrix,
}

impl FlipAdversary {
    pub fn new(u: UtilityMatrix) -> Self {
        Self { u }
    }
}

impl Adversary for FlipAdversary {
    fn next_state(&mut self, pi: &MixedAction, _: &[State], _: &mut SimRng) -> Result<State> {
        Ok(flip_adversary(pi, &self.u))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ConstAdversary(pub State);

impl Adversary for ConstAdversary {
    fn next_state(&mut self, _: &MixedAction, _: &[State], _: &mut SimRng) -> Result<State> {
        Ok(self.0)
    }
}

/// Oblivious environment drawing each state from a model conditioned on
/// the history.
pub struct EnvAdversary<'a> {
    cursor: Box<dyn Cursor + 'a>,
}

impl<'a> EnvAdversary<'a> {
    pub fn new(model: &'a dyn PredictionModel) -> Self {
        Self { cursor: model.cursor() }
    }
}

impl Adversary for EnvAdversary<'_> {
    fn next_state(&mut self, _: &MixedAction, history: &[State], rng: &mut SimRng) -> Result<State> {
        let seen = self.cursor.prefix().len();
        if history.len() < seen || history[..seen] != *self.cursor.prefix() {
            return Err(Error::Internal("environment history diverged".into()));
        }
        for &s in &history[seen..] {
            self.cursor.push(s)?;
        }
        Ok(sample_categorical(&self.cursor.predict()?, rng))
    }
}

#[derive(Debug, Clone)]
pub enum AdversaryKind {
    Flip,
    Const(State),
    Env(SharedModel),
}

impl AdversaryKind {
    pub fn instantiate<'a>(&'a self, u: &UtilityMatrix) -> Box<dyn Adversary + 'a> {
        match self {
            AdversaryKind::Flip => Box::new(FlipAdversary::new(u.clone())),
            AdversaryKind::Const(s) => Box::new(ConstAdversary(*s)),
            AdversaryKind::Env(m) => Box::new(EnvAdversary::new(m.as_ref())),
        }
    }
}

/// How the decision maker turns a prediction into a mixed action.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Response {
    Quantal(Temperature),
    /// Point mass on the best response, lowest index on ties.
    Best,
}

impl Response {
    pub fn act(&self, u: &UtilityMatrix, mu: &[f64]) -> MixedAction {
        let utils = action_utilities(u, mu);
        match self {
            Response::Quantal(eta) => qbr_from_utilities(&utils, *eta),
            Response::Best => MixedAction::point(u.num_actions(), argmax_first(&utils)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Interaction {
    pub trace: PolicyTrace,
    pub states: Vec<State>,
    pub regret: f64,
    pub switch_time: Option<usize>,
}

/// Plays `T` rounds of the model's response against the adversary.
pub fn run_interaction(
    model: &dyn PredictionModel,
    adversary: &mut dyn Adversary,
    u: &UtilityMatrix,
    response: Response,
    horizon: usize,
    seed: RngSeed,
) -> Result<Interaction> {
    run_interaction_with(model.cursor().as_mut(), adversary, u, response, horizon, &mut seed.rng())
}

pub fn run_interaction_with(
    cursor: &mut dyn Cursor,
    adversary: &mut dyn Adversary,
    u: &UtilityMatrix,
    response: Response,
    horizon: usize,
    rng: &mut SimRng,
) -> Result<Interaction> {
    if horizon == 0 {
        return Err(Error::Empty);
    }
    let mut trace = Vec::with_capacity(horizon);
    let mut states = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let mu = cursor.predict()?;
        if mu.len() != u.num_states() {
            return Err(Error::DimensionMismatch { expected: u.num_states(), got: mu.len() });
        }
        let pi = response.act(u, &mu);
        let s = adversary.next_state(&pi, &states, rng)?;
        cursor.push(s)?;
        trace.push(pi);
        states.push(s);
    }
    let regret = external_regret(&trace, &states, u)?;
    Ok(Interaction { trace: PolicyTrace(trace), states, regret, switch_time: cursor.switch_time() })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialResult {
    pub trial: usize,
    pub regret: f64,
    pub switch_time: Option<usize>,
}

/// Independent interactions on streams `0..trials` of `seed`, in trial order.
pub fn run_trials(
    model: &dyn PredictionModel,
    adversary: &AdversaryKind,
    u: &UtilityMatrix,
    response: Response,
    horizon: usize,
    trials: usize,
    seed: RngSeed,
) -> Result<Vec<TrialResult>> {
    run_trials_with(adversary, u, response, horizon, trials, seed, |_| Ok(model.cursor()))
}

/// [`run_trials`] with a caller-supplied cursor per trial.
pub fn run_trials_with<'m, F>(
    adversary: &AdversaryKind,
    u: &UtilityMatrix,
    response: Response,
    horizon: usize,
    trials: usize,
    seed: RngSeed,
    make_cursor: F,
) -> Result<Vec<TrialResult>>
where
    F: Fn(usize) -> Result<Box<dyn Cursor + 'm>> + Sync,
{
    (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut cursor = make_cursor(trial)?;
            let mut adv = adversary.instantiate(u);
            let mut rng = seed.stream(trial as u64);
            let run = run_interaction_with(cursor.as_mut(), adv.as_mut(), u, response, horizon, &mut rng)?;
            Ok(TrialResult { trial, regret: run.regret, switch_time: run.switch_time })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegretStats {
    pub trials: usize,
    pub mean: f64,
    /// Half-width of the normal 95% interval.
    pub ci95: f64,
    pub min: f64,
    pub max: f64,
    pub switched: usize,
}

impl RegretStats {
    pub fn from_runs(runs: &[TrialResult]) -> Self {
        let regrets: Vec<f64> = runs.iter().map(|r| r.regret).collect();
        let (mean, ci95) = mean_ci95(&regrets);
        Self {
            trials: runs.len(),
            mean,
            ci95,
            min: regrets.iter().cloned().fold(f64::INFINITY, f64::min),
            max: regrets.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            switched: runs.iter().filter(|r| r.switch_time.is_some()).count(),
        }
    }
}

/// Horizons up to this length get exact TV in the impossibility harness.
pub const IMPOSSIBILITY_EXACT_MAX: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct ImpossibilityReport {
    /// `d_TV(D(M₀), D(candidate))`.
    pub tv: TvEstimate,
    /// Mean regret of the candidate's softmax policy on sequences from `D(M₁)`.
    pub regret_vs_m1: f64,
    pub regret_ci95: f64,
}

impl ImpossibilityReport {
    pub fn sum(&self) -> f64 {
        self.tv.value + self.regret_vs_m1
    }
}

/// Pits an `L`-bounded candidate against the de Bruijn pair of order `L`
/// at `T = 2L`: it must either be far from `M₀` or suffer regret on `M₁`.
pub fn impossibility_harness(
    candidate: &dyn PredictionModel,
    window: usize,
    trials: usize,
    seed: RngSeed,
) -> Result<ImpossibilityReport> {
    if candidate.num_states() != 2 {
        return Err(Error::Unsupported("the de Bruijn pair is binary".into()));
    }
    match candidate.context() {
        Context::Bounded(w) if w <= window => {}
        other => return Err(Error::InvalidParameter(format!("candidate context {other:?} exceeds L = {window}"))),
    }
    let horizon = 2 * window;
    let (m0, m1) = DeBruijnModel::pair(window, 0.0)?;
    let tv = if horizon <= IMPOSSIBILITY_EXACT_MAX {
        tv_exact(&m0, candidate, horizon)?
    } else {
        tv_mc(&m0, candidate, horizon, trials, seed)?
    };
    let u = UtilityMatrix::matching(2);
    let env = AdversaryKind::Env(std::sync::Arc::new(m1));
    let runs = run_trials(candidate, &env, &u, Response::Quantal(Temperature::auto(window)), horizon, trials, seed)?;
    let stats = RegretStats::from_runs(&runs);
    Ok(ImpossibilityReport { tv, regret_vs_m1: stats.mean, regret_ci95: stats.ci95 })
}
