//! Distances between the sequence distributions induced by two models.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{Cursor, PredictionModel};
use crate::sampling::{sample_categorical, RngSeed};

/// Largest number of leaves exact enumeration will visit.
pub const TV_EXACT_BUDGET: f64 = (1u64 << 24) as f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TvMethod {
    Exact,
    MonteCarlo,
}

impl std::fmt::Display for TvMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TvMethod::Exact => "exact",
            TvMethod::MonteCarlo => "monte-carlo",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TvEstimate {
    pub value: f64,
    /// Half-width of the 95% interval; 0 for exact values.
    pub ci: f64,
    pub method: TvMethod,
}

/// Sample mean and `1.96·sd/√n` (sd with the `n−1` denominator).
pub fn mean_ci95(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, 1.96 * (var / n as f64).sqrt())
}

fn check_pair(p: &dyn PredictionModel, q: &dyn PredictionModel, horizon: usize) -> Result<()> {
    if p.num_states() != q.num_states() {
        return Err(Error::DimensionMismatch { expected: p.num_states(), got: q.num_states() });
    }
    for h in [p.horizon(), q.horizon()].into_iter().flatten() {
        if horizon > h {
            return Err(Error::Horizon { len: horizon, horizon: h });
        }
    }
    Ok(())
}

/// `½ Σ_x |P(x) − Q(x)|` over all length-`T` sequences.
///
/// Walks the prefix tree once with both log-masses; when one side's mass
/// vanishes, the other side's whole subtree mass is added at once.
pub fn tv_exact(p: &dyn PredictionModel, q: &dyn PredictionModel, horizon: usize) -> Result<TvEstimate> {
    check_pair(p, q, horizon)?;
    let leaves = (p.num_states() as f64).powi(horizon as i32);
    if leaves > TV_EXACT_BUDGET {
        return Err(Error::Budget { leaves, budget: TV_EXACT_BUDGET });
    }
    let mut prefix = Vec::with_capacity(horizon);
    let total = tv_walk(p, q, horizon, &mut prefix, 0.0, 0.0)?;
    Ok(TvEstimate { value: (0.5 * total).clamp(0.0, 1.0), ci: 0.0, method: TvMethod::Exact })
}

fn tv_walk(
    p: &dyn PredictionModel,
    q: &dyn PredictionModel,
    horizon: usize,
    prefix: &mut Vec<usize>,
    lp: f64,
    lq: f64,
) -> Result<f64> {
    if lp == f64::NEG_INFINITY {
        return Ok(lq.exp());
    }
    if lq == f64::NEG_INFINITY {
        return Ok(lp.exp());
    }
    if prefix.len() == horizon {
        return Ok((lp.exp() - lq.exp()).abs());
    }
    let dp = p.predict(prefix)?;
    let dq = q.predict(prefix)?;
    let mut acc = 0.0;
    for s in 0..dp.len() {
        if dp[s] == 0.0 && dq[s] == 0.0 {
            continue;
        }
        prefix.push(s);
        acc += tv_walk(p, q, horizon, prefix, lp + dp[s].ln(), lq + dq[s].ln())?;
        prefix.pop();
    }
    Ok(acc)
}

/// Unbiased estimate `E_{x~P}[(1 − Q(x)/P(x))₊]` from `n` draws of `P`.
pub fn tv_mc(
    p: &dyn PredictionModel,
    q: &dyn PredictionModel,
    horizon: usize,
    n: usize,
    seed: RngSeed,
) -> Result<TvEstimate> {
    check_pair(p, q, horizon)?;
    if n == 0 {
        return Err(Error::Empty);
    }
    let terms: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed.stream(i as u64);
            let (mut cp, mut cq) = (p.cursor(), q.cursor());
            let (mut lp, mut lq) = (0.0, 0.0);
            for _ in 0..horizon {
                let dp = cp.predict()?;
                let dq = cq.predict()?;
                let s = sample_categorical(&dp, &mut rng);
                lp += dp[s].ln();
                lq += dq[s].ln();
                cp.push(s)?;
                cq.push(s)?;
            }
            if lp == f64::NEG_INFINITY {
                return Err(Error::Internal("sampled a sequence of zero probability".into()));
            }
            Ok((1.0 - (lq - lp).exp()).max(0.0))
        })
        .collect::<Result<_>>()?;
    let (value, ci) = mean_ci95(&terms);
    Ok(TvEstimate { value, ci, method: TvMethod::MonteCarlo })
}

/// Mean over reference draws of the per-step prediction TV, averaged over
/// the `T` prefixes of lengths `0..T`.
pub fn tv_next_token(
    m1: &dyn PredictionModel,
    m2: &dyn PredictionModel,
    reference: &dyn PredictionModel,
    horizon: usize,
    n: usize,
    seed: RngSeed,
) -> Result<TvEstimate> {
    check_pair(m1, m2, horizon)?;
    check_pair(m1, reference, horizon)?;
    if n == 0 || horizon == 0 {
        return Err(Error::Empty);
    }
    let terms: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed.stream(i as u64);
            let mut cursors: [Box<dyn Cursor + '_>; 3] = [m1.cursor(), m2.cursor(), reference.cursor()];
            let mut acc = 0.0;
            for _ in 0..horizon {
                let a = cursors[0].predict()?;
                let b = cursors[1].predict()?;
                acc += a.tv(&b);
                let s = sample_categorical(&cursors[2].predict()?, &mut rng);
                for c in cursors.iter_mut() {
                    c.push(s)?;
                }
            }
            Ok(acc / horizon as f64)
        })
        .collect::<Result<_>>()?;
    let (value, ci) = mean_ci95(&terms);
    Ok(TvEstimate { value, ci, method: TvMethod::MonteCarlo })
}
