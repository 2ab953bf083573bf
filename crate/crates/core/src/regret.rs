//! External regret and the incremental two-policy ledger.
//!
//! Prefix regrets are normalized by the prefix length `s`, and the regret of
//! an empty prefix is 0.

use crate::decision::{action_utilities, qbr_from_utilities, utility_against, Temperature};
use crate::domain::{MixedAction, State, UtilityMatrix};
use crate::error::{Error, Result};
use crate::model::check_state;
use crate::models::polya_from_counts;

/// The mixed actions `π_1..π_t` played along a sequence.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PolicyTrace(pub Vec<MixedAction>);

impl PolicyTrace {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// `max_a (1/t) Σ_s [U(a, θ_s) − U(π_s, θ_s)]` computed from scratch.
pub fn external_regret(trace: &[MixedAction], states: &[State], u: &UtilityMatrix) -> Result<f64> {
    if trace.len() != states.len() {
        return Err(Error::DimensionMismatch { expected: states.len(), got: trace.len() });
    }
    if states.is_empty() {
        return Err(Error::Empty);
    }
    let mut played = 0.0;
    let mut fixed = vec![0.0; u.num_actions()];
    for (pi, &s) in trace.iter().zip(states) {
        check_state(s, u.num_states())?;
        played += utility_against(u, pi, s);
        for (a, f) in fixed.iter_mut().enumerate() {
            *f += u.get(a, s);
        }
    }
    let best = fixed.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok((best - played) / states.len() as f64)
}

/// `(ln|A|)/√T + √(8(1+α) ln T / s)`: the gap at which the model's prefix
/// regret is declared out of distribution.
pub fn switch_threshold(horizon: usize, s: usize, num_actions: usize, alpha: f64) -> f64 {
    let t = horizon as f64;
    (num_actions as f64).ln() / t.sqrt() + (8.0 * (1.0 + alpha) * t.ln() / s as f64).sqrt()
}

/// Running totals for the model policy and the urn-softmax (Hedge) policy.
#[derive(Debug, Clone)]
pub struct RegretLedger<'a> {
    u: &'a UtilityMatrix,
    eta: Temperature,
    fixed: Vec<f64>,
    model_total: f64,
    hedge_total: f64,
    counts: Vec<u64>,
    rounds: usize,
    scratch: Vec<f64>,
}

impl<'a> RegretLedger<'a> {
    pub fn new(u: &'a UtilityMatrix, eta: Temperature) -> Self {
        Self {
            u,
            eta,
            fixed: vec![0.0; u.num_actions()],
            model_total: 0.0,
            hedge_total: 0.0,
            counts: vec![0; u.num_states()],
            rounds: 0,
            scratch: vec![0.0; u.num_actions()],
        }
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Urn-softmax action for the next round.
    pub fn hedge_action(&self) -> MixedAction {
        let urn = polya_from_counts(&self.counts);
        qbr_from_utilities(&action_utilities(self.u, &urn), self.eta)
    }

    /// Records one round in which the model policy played `pi_model` and the
    /// state turned out to be `state`.
    pub fn update(&mut self, pi_model: &[f64], state: State) -> Result<()> {
        check_state(state, self.counts.len())?;
        if pi_model.len() != self.fixed.len() {
            return Err(Error::DimensionMismatch { expected: self.fixed.len(), got: pi_model.len() });
        }
        self.hedge_total += self.hedge_utility(state);
        for (a, f) in self.fixed.iter_mut().enumerate() {
            *f += self.u.get(a, state);
        }
        self.model_total += utility_against(self.u, pi_model, state);
        self.counts[state] += 1;
        self.rounds += 1;
        Ok(())
    }

    /// `U(hedge_action(), state)` without allocating; this runs once per
    /// round of every scan.
    fn hedge_utility(&mut self, state: State) -> f64 {
        let denom = (self.counts.len() as u64 + self.rounds as u64) as f64;
        let mut max = f64::NEG_INFINITY;
        for (a, x) in self.scratch.iter_mut().enumerate() {
            *x = self.u.row(a).iter().zip(&self.counts).map(|(v, &c)| v * ((1 + c) as f64 / denom)).sum();
            max = max.max(*x);
        }
        let (mut z, mut acc) = (0.0, 0.0);
        for (a, &x) in self.scratch.iter().enumerate() {
            let w = ((x - max) / self.eta.value()).exp();
            z += w;
            acc += w * self.u.get(a, state);
        }
        acc / z
    }

    fn best_fixed(&self) -> f64 {
        self.fixed.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn model_regret(&self) -> f64 {
        if self.rounds == 0 {
            return 0.0;
        }
        (self.best_fixed() - self.model_total) / self.rounds as f64
    }

    pub fn hedge_regret(&self) -> f64 {
        if self.rounds == 0 {
            return 0.0;
        }
        (self.best_fixed() - self.hedge_total) / self.rounds as f64
    }

    /// `(Regret_s, Regret_Hedge,s)`.
    pub fn regrets(&self) -> (f64, f64) {
        (self.model_regret(), self.hedge_regret())
    }
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};

    use super::*;
    use crate::decision::quantal_best_response;
    use crate::domain::StateDist;

    fn m2() -> UtilityMatrix {
        UtilityMatrix::matching(2)
    }

    #[test]
    fn external_regret_examples() {
        let u = m2();
        let states = [1, 1, 0];
        let uniform = vec![MixedAction::uniform(2); 3];
        assert!((external_regret(&uniform, &states, &u).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        let oracle: Vec<_> = states.iter().map(|&s| MixedAction::point(2, s)).collect();
        assert!((external_regret(&oracle, &states, &u).unwrap() + 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(external_regret(&[MixedAction::point(2, 1)], &[1], &u).unwrap(), 0.0);
        assert_eq!(external_regret(&[], &[], &u), Err(Error::Empty));
    }

    #[test]
    fn threshold_examples() {
        assert!((switch_threshold(100, 25, 2, 1.0) - 1.786089).abs() < 5e-6);
        assert!((switch_threshold(10_000, 10_000, 2, 1.0) - 0.1283255).abs() < 5e-6);
        let mut last = 0.0;
        for alpha in [1.0, 10.0, 1e3, 1e6] {
            let v = switch_threshold(1024, 512, 2, alpha);
            assert!(v > last);
            last = v;
        }
    }

    #[test]
    fn empty_ledger_is_zero() {
        let u = m2();
        let l = RegretLedger::new(&u, Temperature::auto(16));
        assert_eq!(l.regrets(), (0.0, 0.0));
    }

    #[test]
    fn single_step() {
        let u = m2();
        let eta = Temperature::auto(16);
        let mut l = RegretLedger::new(&u, eta);
        l.update(&[0.0, 1.0], 1).unwrap();
        let hedge = quantal_best_response(&u, &StateDist::uniform(2), eta).unwrap();
        assert_eq!(l.model_regret(), 0.0);
        assert!((l.hedge_regret() - (1.0 - hedge[1])).abs() < 1e-15);
    }

    /// Incremental totals agree with from-scratch regret on every prefix.
    #[test]
    fn ledger_matches_from_scratch() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let na = rng.gen_range(2..4);
            let ns = rng.gen_range(2..4);
            let rows = (0..na).map(|_| (0..ns).map(|_| rng.gen_range(-1.0..=1.0)).collect()).collect();
            let u = UtilityMatrix::new(rows).unwrap();
            let eta = Temperature::auto(200);
            let mut ledger = RegretLedger::new(&u, eta);
            let mut trace = Vec::new();
            let mut hedge = Vec::new();
            let mut states = Vec::new();
            for _ in 0..200 {
                let mut w: Vec<f64> = (0..na).map(|_| rng.gen::<f64>()).collect();
                let z: f64 = w.iter().sum();
                w.iter_mut().for_each(|x| *x /= z);
                let pi = MixedAction::new(w).unwrap();
                let s = rng.gen_range(0..ns);
                hedge.push(ledger.hedge_action());
                ledger.update(&pi, s).unwrap();
                trace.push(pi);
                states.push(s);
                let (r, rh) = ledger.regrets();
                assert!((r - external_regret(&trace, &states, &u).unwrap()).abs() <= 1e-12);
                assert!((rh - external_regret(&hedge, &states, &u).unwrap()).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn regret_invariant_under_action_relabeling() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let u = UtilityMatrix::new(vec![vec![0.2, -0.4], vec![0.9, 0.1], vec![-1.0, 0.6]]).unwrap();
        let perm = [2, 0, 1];
        let up = u.permute_rows(&perm).unwrap();
        let mut trace = Vec::new();
        let mut permuted = Vec::new();
        let mut states = Vec::new();
        for _ in 0..50 {
            let w: Vec<f64> = (0..3).map(|_| rng.gen::<f64>() + 0.01).collect();
            let z: f64 = w.iter().sum();
            let pi: Vec<f64> = w.iter().map(|x| x / z).collect();
            let pp: Vec<f64> = perm.iter().map(|&p| pi[p]).collect();
            trace.push(MixedAction::new(pi).unwrap());
            permuted.push(MixedAction::new(pp).unwrap());
            states.push(rng.gen_range(0..2));
        }
        let a = external_regret(&trace, &states, &u).unwrap();
        let b = external_regret(&permuted, &states, &up).unwrap();
        assert!((a - b).abs() < 1e-12);
    }
}
