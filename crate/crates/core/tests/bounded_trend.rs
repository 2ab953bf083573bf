use std::sync::Arc;

use lowregret::adversary::{run_trials, RegretStats};
use lowregret::models::DeBruijnModel;
use lowregret::{
    AdversaryKind, BoundedRobustModel, ContextMode, Response, RngSeed, SharedModel, Temperature, UtilityMatrix,
};

const T: usize = 1024;
const L: usize = 8;

fn base() -> SharedModel {
    Arc::new(DeBruijnModel::new(L, false, 0.0).unwrap())
}

fn worst_case(delta: usize) -> f64 {
    let m = BoundedRobustModel::new(base(), UtilityMatrix::matching(2), L, L + delta, 1.0, ContextMode::FullContext, T)
        .unwrap();
    [AdversaryKind::Flip, AdversaryKind::Const(0)]
        .iter()
        .map(|adv| m.restart_regret_eval(adv, T, 2, RngSeed(0)).unwrap().stats.mean)
        .fold(f64::NEG_INFINITY, f64::max)
}

#[test]
fn longer_recall_does_not_hurt() {
    let w: Vec<f64> = [64, 128, 256].iter().map(|&d| worst_case(d)).collect();
    assert!(w.windows(2).all(|p| p[1] <= p[0]), "{w:?}");
    assert!(w[2] < w[0], "{w:?}");
}

#[test]
fn plain_window_is_exploited() {
    let u = UtilityMatrix::matching(2);
    let runs = run_trials(
        base().as_ref(),
        &AdversaryKind::Flip,
        &u,
        Response::Quantal(Temperature::auto(T)),
        T,
        1,
        RngSeed(0),
    )
    .unwrap();
    let r = RegretStats::from_runs(&runs).mean;
    assert!(r >= 0.2, "{r}");
}

#[test]
fn suffix_mode_is_also_bounded() {
    let m = BoundedRobustModel::new(base(), UtilityMatrix::matching(2), L, L + 64, 1.0, ContextMode::SuffixOnly, T)
        .unwrap();
    let ev = m.restart_regret_eval(&AdversaryKind::Const(0), T, 1, RngSeed(0)).unwrap();
    assert!(ev.stats.mean <= 1.0 + 1e-12);
    assert!(ev.max_round_trip <= 1e-9);
}
