//! Best response, quantal (softmax) best response, and its inverse for
//! binary decision problems.

use crate::domain::{Action, MixedAction, StateDist, UtilityMatrix};
use crate::error::{Error, Result};

/// Smallest temperature accepted; below this the softmax is a point mass in
/// all but name and the log-domain arithmetic stops being meaningful.
pub const MIN_TEMPERATURE: f64 = 1e-12;

/// Softmax temperature `η > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Temperature(f64);

impl Temperature {
    pub fn new(eta: f64) -> Result<Self> {
        if !(eta.is_finite() && eta >= MIN_TEMPERATURE) {
            return Err(Error::InvalidParameter(format!(
                "temperature {eta} must be finite and at least {MIN_TEMPERATURE}"
            )));
        }
        Ok(Self(eta))
    }

    /// `η = 1/√T`.
    pub fn auto(horizon: usize) -> Self {
        Self(1.0 / (horizon.max(1) as f64).sqrt())
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

fn check_dims(u: &UtilityMatrix, actions: Option<usize>, states: usize) -> Result<()> {
    if states != u.num_states() {
        return Err(Error::DimensionMismatch { expected: u.num_states(), got: states });
    }
    if let Some(a) = actions {
        if a != u.num_actions() {
            return Err(Error::DimensionMismatch { expected: u.num_actions(), got: a });
        }
    }
    Ok(())
}

/// `U(a, μ)` for every action `a`.
pub fn action_utilities(u: &UtilityMatrix, mu: &[f64]) -> Vec<f64> {
    u.rows().map(|row| row.iter().zip(mu).map(|(x, p)| x * p).sum()).collect()
}

pub fn expected_utility(u: &UtilityMatrix, pi: &MixedAction, mu: &StateDist) -> Result<f64> {
    check_dims(u, Some(pi.len()), mu.len())?;
    Ok(action_utilities(u, mu).iter().zip(pi.iter()).map(|(x, p)| x * p).sum())
}

/// `U(π, θ)` for a single realized state.
#[inline]
pub fn utility_against(u: &UtilityMatrix, pi: &[f64], state: usize) -> f64 {
    pi.iter().enumerate().map(|(a, p)| p * u.get(a, state)).sum()
}

/// Argmax of expected utility; ties go to the lowest action index.
pub fn best_response(u: &UtilityMatrix, mu: &StateDist) -> Result<Action> {
    check_dims(u, None, mu.len())?;
    Ok(argmax_first(&action_utilities(u, mu)))
}

pub(crate) fn argmax_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Softmax of `u_a / η`, computed after subtracting the maximum utility.
pub fn quantal_best_response(u: &UtilityMatrix, mu: &StateDist, eta: Temperature) -> Result<MixedAction> {
    check_dims(u, None, mu.len())?;
    Ok(qbr_from_utilities(&action_utilities(u, mu), eta))
}

pub(crate) fn qbr_from_utilities(utils: &[f64], eta: Temperature) -> MixedAction {
    let max = utils.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut w: Vec<f64> = utils.iter().map(|x| ((x - max) / eta.0).exp()).collect();
    let z: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= z);
    MixedAction::from_vec_unchecked(w)
}

/// Result of inverting the binary QBR.
#[derive(Debug, Clone, PartialEq)]
pub struct InverseQbr {
    pub dist: StateDist,
    /// The exact solution fell outside `[0, 1]` by more than the tolerance.
    pub clamped: bool,
}

pub const CLAMP_TOL: f64 = 1e-9;

/// Finds `μ = (1 - q, q)` with `QBR(μ, η) = target` for two actions and two states.
///
/// The utility gap `u₁(q) - u₀(q)` is affine in `q`, so the softmax condition
/// `u₁ - u₀ = η ln(target₁ / target₀)` is a scalar linear equation.
pub fn inverse_qbr_binary(u: &UtilityMatrix, target: &MixedAction, eta: Temperature) -> Result<InverseQbr> {
    if u.num_actions() != 2 || u.num_states() != 2 || target.len() != 2 {
        return Err(Error::Unsupported("inverse QBR needs two actions and two states".into()));
    }
    if !(target[0] > 0.0 && target[1] > 0.0) {
        return Err(Error::Unattainable(format!("target {:?} is not interior", target.probs())));
    }
    let required = eta.0 * (target[1] / target[0]).ln();
    let gap_at_0 = u.get(1, 0) - u.get(0, 0);
    let gap_at_1 = u.get(1, 1) - u.get(0, 1);
    let slope = gap_at_1 - gap_at_0;
    if slope == 0.0 {
        if (gap_at_0 - required).abs() <= CLAMP_TOL {
            return Ok(InverseQbr { dist: StateDist::uniform(2), clamped: false });
        }
        return Err(Error::Unattainable(format!("utility gap is constant {gap_at_0}, target needs {required}")));
    }
    let q = (required - gap_at_0) / slope;
    let clamped = !(-CLAMP_TOL..=1.0 + CLAMP_TOL).contains(&q);
    let q = q.clamp(0.0, 1.0);
    Ok(InverseQbr { dist: StateDist::from_vec_unchecked(vec![1.0 - q, q]), clamped })
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    use super::*;

    fn m2() -> UtilityMatrix {
        UtilityMatrix::matching(2)
    }

    fn eta(x: f64) -> Temperature {
        Temperature::new(x).unwrap()
    }

    #[test]
    fn expected_utility_examples() {
        let u = m2();
        let mu = StateDist::new(vec![0.3, 0.7]).unwrap();
        assert_eq!(expected_utility(&u, &MixedAction::uniform(2), &mu).unwrap(), 0.5);
        assert_eq!(expected_utility(&u, &MixedAction::point(2, 1), &mu).unwrap(), 0.7);
        let c = UtilityMatrix::new(vec![vec![0.25; 2]; 2]).unwrap();
        assert!((expected_utility(&c, &MixedAction::point(2, 0), &mu).unwrap() - 0.25).abs() < 1e-15);
        let mu3 = StateDist::uniform(3);
        assert!(expected_utility(&u, &MixedAction::uniform(2), &mu3).is_err());
    }

    #[test]
    fn best_response_examples() {
        let u = m2();
        assert_eq!(best_response(&u, &StateDist::new(vec![0.3, 0.7]).unwrap()).unwrap(), 1);
        assert_eq!(best_response(&u, &StateDist::uniform(2)).unwrap(), 0);
    }

    #[test]
    fn qbr_examples() {
        let u = m2();
        let mu = StateDist::new(vec![0.3, 0.7]).unwrap();
        let hot = quantal_best_response(&u, &mu, eta(1e9)).unwrap();
        assert!((hot[0] - 0.5).abs() < 1e-6);
        let one = quantal_best_response(&u, &mu, eta(1.0)).unwrap();
        assert!((one[1] - 1.0 / (1.0 + (-0.4f64).exp())).abs() < 1e-15);
        assert!((one[1] - 0.598688).abs() < 1e-6);
        let cold = quantal_best_response(&u, &mu, eta(1e-9)).unwrap();
        assert!(cold[1] >= 1.0 - 1e-12);
        assert!(Temperature::new(1e-13).is_err());
        assert!(Temperature::new(0.0).is_err());
    }

    #[test]
    fn inverse_examples() {
        let u = m2();
        let r = inverse_qbr_binary(&u, &MixedAction::uniform(2), eta(0.3)).unwrap();
        assert_eq!(r.dist.probs(), &[0.5, 0.5]);
        assert!(!r.clamped);

        let target = MixedAction::new(vec![0.25, 0.75]).unwrap();
        let r = inverse_qbr_binary(&u, &target, eta(0.5)).unwrap();
        assert!((r.dist[1] - (1.0 + 0.5 * 3f64.ln()) / 2.0).abs() < 1e-15);
        assert!((r.dist[1] - 0.774653).abs() < 1e-6);

        let target = MixedAction::new(vec![0.01, 0.99]).unwrap();
        let r = inverse_qbr_binary(&u, &target, eta(1.0)).unwrap();
        assert_eq!(r.dist[1], 1.0);
        assert!(r.clamped);
    }

    #[test]
    fn inverse_degenerate_utility() {
        let u = UtilityMatrix::new(vec![vec![0.0, 0.5], vec![0.5, 1.0]]).unwrap();
        let target = MixedAction::new(vec![0.3, 0.7]).unwrap();
        assert!(matches!(inverse_qbr_binary(&u, &target, eta(1.0)), Err(Error::Unattainable(_))));
        let u3 = UtilityMatrix::matching(3);
        assert!(matches!(inverse_qbr_binary(&u3, &MixedAction::uniform(3), eta(1.0)), Err(Error::Unsupported(_))));
    }

    fn random_instance(rng: &mut rand_chacha::ChaCha8Rng) -> (UtilityMatrix, StateDist) {
        let na = rng.gen_range(2..6);
        let ns = rng.gen_range(2..6);
        let rows = (0..na).map(|_| (0..ns).map(|_| rng.gen_range(-1.0..=1.0)).collect()).collect();
        let mut mu: Vec<f64> = (0..ns).map(|_| rng.gen::<f64>()).collect();
        let z: f64 = mu.iter().sum();
        mu.iter_mut().for_each(|x| *x /= z);
        (UtilityMatrix::new(rows).unwrap(), StateDist::new(mu).unwrap())
    }

    /// BR(μ) − QBR(μ, η) in expected utility is at most η ln|A|.
    #[test]
    fn br_qbr_gap_bound() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10_000 {
            let (u, mu) = random_instance(&mut rng);
            let e = eta(10f64.powf(rng.gen_range(-4.0..1.0)));
            let a = best_response(&u, &mu).unwrap();
            let br = expected_utility(&u, &MixedAction::point(u.num_actions(), a), &mu).unwrap();
            let q = expected_utility(&u, &quantal_best_response(&u, &mu, e).unwrap(), &mu).unwrap();
            assert!(br - q <= e.value() * (u.num_actions() as f64).ln() + 1e-12);
        }
    }

    #[test]
    fn best_response_is_brute_force_argmax_and_permutes() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..500 {
            let (u, mu) = random_instance(&mut rng);
            let n = u.num_actions();
            let brute =
                (0..n).map(|a| expected_utility(&u, &MixedAction::point(n, a), &mu).unwrap()).collect::<Vec<_>>();
            let a = best_response(&u, &mu).unwrap();
            assert!(brute.iter().all(|&v| v <= brute[a]));
            let mut perm: Vec<usize> = (0..n).collect();
            perm.rotate_left(1);
            let up = u.permute_rows(&perm).unwrap();
            let b = best_response(&up, &mu).unwrap();
            assert_eq!(perm[b], a);
        }
    }

    proptest! {
        #[test]
        fn qbr_shift_invariant(
            vals in proptest::collection::vec(-0.5f64..0.5, 6),
            p in 0.0f64..1.0,
            c in -0.5f64..0.5,
            e in 0.01f64..5.0,
        ) {
            let u = UtilityMatrix::new(vec![vals[0..2].to_vec(), vals[2..4].to_vec(), vals[4..6].to_vec()]).unwrap();
            let mu = StateDist::new(vec![1.0 - p, p]).unwrap();
            let a = quantal_best_response(&u, &mu, eta(e)).unwrap();
            let b = quantal_best_response(&u.shifted_unchecked(c), &mu, eta(e)).unwrap();
            for (x, y) in a.iter().zip(b.iter()) {
                prop_assert!((x - y).abs() <= 1e-12);
            }
        }

        #[test]
        fn inverse_round_trip(
            vals in proptest::collection::vec(-1.0f64..1.0, 4),
            p in 0.0f64..1.0,
            e in 0.05f64..3.0,
        ) {
            let u = UtilityMatrix::new(vec![vals[0..2].to_vec(), vals[2..4].to_vec()]).unwrap();
            prop_assume!(((vals[3] - vals[1]) - (vals[2] - vals[0])).abs() > 1e-3);
            let mu = StateDist::new(vec![1.0 - p, p]).unwrap();
            let target = quantal_best_response(&u, &mu, eta(e)).unwrap();
            let inv = inverse_qbr_binary(&u, &target, eta(e)).unwrap();
            prop_assert!(!inv.clamped);
            let back = quantal_best_response(&u, &inv.dist, eta(e)).unwrap();
            prop_assert!((back[1] - target[1]).abs() <= 1e-9);
        }
    }
}
