//! The V-shaped switching battery behind `vswitch-eval`.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lowregret::adversary::{run_trials, RegretStats};
use lowregret::models::{FixedModel, PiecewiseBernoulli};
use lowregret::{
    AdversaryKind, PredictionModel, Response, RngSeed, SharedModel, StateDist, Temperature, UtilityMatrix,
    VScoreParams, VSwitchModel,
};

use crate::commands::fmt6;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Round at which the switch fires when a constant 2/3 forecaster meets an
/// all-zeros sequence, `None` if it never does.
pub fn miscalibrated_switch(horizon: usize) -> Result<Option<usize>> {
    let base: SharedModel = Arc::new(FixedModel::new(StateDist::bernoulli(2.0 / 3.0)?));
    let m = VSwitchModel::new(base, VScoreParams::auto(horizon, 1.0)?, horizon)?;
    Ok(m.switch_time(&vec![0; horizon])?)
}

/// Fraction of draws from the half-and-half Bernoulli source on which the
/// switch fires, with constant `c`.
pub fn in_distribution_switch_rate(horizon: usize, c: f64, trials: usize, seed: u64) -> Result<(f64, VScoreParams)> {
    let base: SharedModel = Arc::new(PiecewiseBernoulli::third_to_two_thirds(horizon));
    let params = VScoreParams::auto(horizon, 1.0)?.with_c(c)?;
    let m = VSwitchModel::new(base.clone(), params, horizon)?;
    let u = UtilityMatrix::matching(2);
    let runs = run_trials(&m, &AdversaryKind::Env(base), &u, Response::Best, horizon, trials, RngSeed(seed))?;
    let switched = runs.iter().filter(|r| r.switch_time.is_some()).count();
    Ok((switched as f64 / trials as f64, params))
}

/// Binary utilities with entries uniform in `[−1, 1]`.
pub fn random_utilities(count: usize, seed: u64) -> Vec<UtilityMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let rows = (0..2).map(|_| (0..2).map(|_| rng.gen_range(-1.0..=1.0)).collect()).collect();
            UtilityMatrix::new(rows).expect("entries in range")
        })
        .collect()
}

/// Regret of a softmax decision maker with utility `u` who follows the
/// switching forecaster, against the flip adversary for `u`.
pub fn downstream_regret(u: &UtilityMatrix, horizon: usize) -> Result<RegretStats> {
    let base: SharedModel = Arc::new(PiecewiseBernoulli::third_to_two_thirds(horizon));
    let m = VSwitchModel::new(base, VScoreParams::auto(horizon, 1.0)?, horizon)?;
    debug_assert_eq!(m.num_states(), 2);
    let runs =
        run_trials(&m, &AdversaryKind::Flip, u, Response::Quantal(Temperature::auto(horizon)), horizon, 1, RngSeed(0))?;
    Ok(RegretStats::from_runs(&runs))
}

pub const DOWNSTREAM_BOUND: f64 = 0.15;
pub const IN_DISTRIBUTION_SLACK: f64 = 0.02;

pub fn run(horizon: usize, trials: usize, seed: u64) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let tau = miscalibrated_switch(horizon)?;
    checks.push(Check {
        name: "switch_on_miscalibrated".into(),
        value: tau.map_or(f64::NAN, |t| t as f64),
        bound: horizon as f64,
        pass: tau.is_some(),
    });
    let (rate, params) = in_distribution_switch_rate(horizon, 2.0, trials, seed)?;
    let bound = params.delta + IN_DISTRIBUTION_SLACK;
    checks.push(Check { name: "in_distribution_switch_rate".into(), value: rate, bound, pass: rate <= bound });
    let horizons = [horizon / 4, horizon / 2, horizon];
    for (i, u) in random_utilities(5, seed).iter().enumerate() {
        let regrets: Vec<f64> =
            horizons.iter().map(|&t| downstream_regret(u, t).map(|s| s.mean)).collect::<Result<_>>()?;
        let last = *regrets.last().expect("three horizons");
        checks.push(Check {
            name: format!("downstream_regret_u{i}"),
            value: last,
            bound: DOWNSTREAM_BOUND,
            pass: last <= DOWNSTREAM_BOUND,
        });
        checks.push(Check {
            name: format!("downstream_decreasing_u{i}"),
            value: regrets[0] - last,
            bound: 0.0,
            pass: regrets.windows(2).all(|w| w[1] < w[0]),
        });
    }
    Ok(checks)
}

pub fn to_csv(checks: &[Check]) -> String {
    let mut s = String::from("check,value,bound,pass\n");
    for c in checks {
        s.push_str(&format!("{},{},{},{}\n", c.name, fmt6(c.value), fmt6(c.bound), c.pass as u8));
    }
    s
}
