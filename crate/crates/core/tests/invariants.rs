use std::sync::Arc;

use proptest::prelude::*;

use lowregret::adversary::{run_trials, RegretStats};
use lowregret::decision::{inverse_qbr_binary, quantal_best_response};
use lowregret::metrics::tv_next_token;
use lowregret::models::{DeBruijnModel, FixedModel, PeriodicDrift, PiecewiseBernoulli, PolyaUrn, Windowed};
use lowregret::regret::{external_regret, RegretLedger};
use lowregret::sampling::log_likelihood;
use lowregret::{
    AdversaryKind, BoundedRobustModel, Context, ContextMode, MixedAction, PredictionModel, Response, RngSeed,
    RobustModel, SharedModel, StateDist, Temperature, UtilityMatrix,
};

fn bits(x: usize, t: usize) -> Vec<usize> {
    (0..t).map(|k| (x >> k) & 1).collect()
}

fn binary_models(t: usize) -> Vec<SharedModel> {
    let base: SharedModel = Arc::new(PiecewiseBernoulli::third_to_two_thirds(t));
    vec![
        Arc::new(PolyaUrn::binary()),
        base.clone(),
        Arc::new(PeriodicDrift::new(0.7).unwrap()),
        Arc::new(DeBruijnModel::new(3, true, 1e-6).unwrap()),
        Arc::new(Windowed::new(Arc::new(PolyaUrn::binary()), 3).unwrap()),
        Arc::new(RobustModel::new(base, UtilityMatrix::matching(2), t, 0.1).unwrap()),
    ]
}

#[test]
fn sequence_probabilities_sum_to_one() {
    for t in [1, 4, 10] {
        for m in binary_models(t) {
            let total: f64 = (0..1usize << t).map(|x| log_likelihood(m.as_ref(), &bits(x, t)).unwrap().exp()).sum();
            assert!((total - 1.0).abs() < 1e-10, "{m:?} at T={t}: {total}");
        }
    }
}

#[test]
fn urn_softmax_meets_hedge_bound() {
    let u = UtilityMatrix::matching(2);
    for t in [256usize, 1024, 4096] {
        let bound = 3.0 * ((t as f64).ln() + 2f64.ln()) / (t as f64).sqrt();
        for adv in [AdversaryKind::Flip, AdversaryKind::Const(0)] {
            let runs =
                run_trials(&PolyaUrn::binary(), &adv, &u, Response::Quantal(Temperature::auto(t)), t, 1, RngSeed(0))
                    .unwrap();
            let r = RegretStats::from_runs(&runs).mean;
            assert!(r <= bound, "T={t} {adv:?}: {r} > {bound}");
        }
    }
}

fn utility_strategy(actions: usize, states: usize) -> impl Strategy<Value = UtilityMatrix> {
    prop::collection::vec(prop::collection::vec(-1.0f64..=1.0, states), actions)
        .prop_map(|rows| UtilityMatrix::new(rows).unwrap())
}

fn bounded_model(kind: u8, w: usize) -> SharedModel {
    match kind {
        0 => Arc::new(Windowed::new(Arc::new(PolyaUrn::binary()), w).unwrap()),
        1 => Arc::new(DeBruijnModel::new(w, false, 0.01).unwrap()),
        _ => {
            let base = Arc::new(Windowed::new(Arc::new(PolyaUrn::binary()), 2).unwrap());
            Arc::new(
                BoundedRobustModel::new(base, UtilityMatrix::matching(2), 2, w, 1.0, ContextMode::FullContext, 64)
                    .unwrap(),
            )
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bounded_models_read_only_their_window(
        kind in 0u8..3,
        w in 3usize..6,
        seq in prop::collection::vec(0usize..2, 6..40),
    ) {
        let m = bounded_model(kind, w);
        let Context::Bounded(window) = m.context() else { panic!("bounded model expected") };
        prop_assert_eq!(window, w);
        let full = m.predict(&seq).unwrap();
        let suffix = m.predict(&seq[seq.len() - w..]).unwrap();
        prop_assert_eq!(full.probs(), suffix.probs());
    }

    #[test]
    fn inverse_qbr_round_trips(u in utility_strategy(2, 2), q in 0.0f64..=1.0, eta in 0.05f64..3.0) {
        let eta = Temperature::new(eta).unwrap();
        let mu = StateDist::bernoulli(q).unwrap();
        let pi = quantal_best_response(&u, &mu, eta).unwrap();
        prop_assume!(pi[0] > 1e-12 && pi[1] > 1e-12);
        let back = inverse_qbr_binary(&u, &pi, eta);
        // A utility whose gap does not depend on the state makes every belief equivalent.
        prop_assume!(back.is_ok());
        let back = back.unwrap();
        prop_assert!(!back.clamped);
        let again = quantal_best_response(&u, &back.dist, eta).unwrap();
        prop_assert!((again[0] - pi[0]).abs() <= 1e-9);
    }

    #[test]
    fn ledger_matches_every_prefix(
        u in utility_strategy(3, 2),
        steps in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0, 0usize..2), 1..200),
    ) {
        let mut ledger = RegretLedger::new(&u, Temperature::auto(200));
        let mut trace = Vec::new();
        let mut states = Vec::new();
        for (a, b, s) in steps {
            let raw = [a + 1e-3, b + 1e-3, 1.0];
            let z: f64 = raw.iter().sum();
            let pi = MixedAction::new(raw.iter().map(|x| x / z).collect()).unwrap();
            ledger.update(pi.probs(), s).unwrap();
            trace.push(pi);
            states.push(s);
            let scratch = external_regret(&trace, &states, &u).unwrap();
            prop_assert!((ledger.model_regret() - scratch).abs() <= 1e-12);
        }
    }

    #[test]
    fn robust_switch_is_one_way(seq in prop::collection::vec(0usize..2, 1..256)) {
        let base: SharedModel = Arc::new(FixedModel::new(StateDist::bernoulli(0.9).unwrap()));
        let m = RobustModel::new(base, UtilityMatrix::matching(2), 256, 0.05).unwrap();
        let mut cursor = m.cursor();
        let mut first = None;
        for &s in &seq {
            let p = cursor.predict().unwrap();
            let fresh = m.predict(cursor.prefix()).unwrap();
            prop_assert_eq!(p.probs(), fresh.probs());
            cursor.push(s).unwrap();
            match (first, cursor.switch_time()) {
                (None, now) => first = now,
                (Some(tau), now) => prop_assert_eq!(Some(tau), now),
            }
        }
    }

    #[test]
    fn next_token_tv_is_symmetric(phi in 0.0f64..6.0, p in 0.05f64..0.95) {
        let a = PeriodicDrift::new(phi).unwrap();
        let b = FixedModel::new(StateDist::bernoulli(p).unwrap());
        let reference = PolyaUrn::binary();
        let ab = tv_next_token(&a, &b, &reference, 16, 32, RngSeed(3)).unwrap().value;
        let ba = tv_next_token(&b, &a, &reference, 16, 32, RngSeed(3)).unwrap().value;
        prop_assert!((ab - ba).abs() < 1e-15);
        prop_assert!((0.0..=1.0).contains(&ab));
    }
}
