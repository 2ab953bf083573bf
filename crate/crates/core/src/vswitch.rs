//! Utility-agnostic robustification for binary states.
//!
//! Every proper loss on binary outcomes is (up to affine terms) a mixture of
//! the V-shaped losses `ℓ_v`, so a forecaster with small regret under every
//! `ℓ_v` on a fine grid of `v` has small regret for any decision maker that
//! best-responds to it. The switch model monitors the worst grid regret of
//! its base forecaster and falls back to the urn once that exceeds a
//! concentration threshold.

use crate::domain::{State, StateDist};
use crate::error::{Error, Result};
use crate::model::{check_prefix, check_state, Cursor, PredictionModel, SharedModel};
use crate::models::polya_from_counts;

/// `ℓ_v(p, y)`: `(−v, 1−v)` below the kink, `(v, v−1)` above it, `0` at it.
pub fn v_score(v: f64, p: f64, y: State) -> f64 {
    let y = y as f64;
    if p < v {
        y - v
    } else if p > v {
        v - y
    } else {
        0.0
    }
}

fn check_outcomes(forecasts: &[f64], outcomes: &[State]) -> Result<()> {
    if forecasts.len() != outcomes.len() {
        return Err(Error::DimensionMismatch { expected: forecasts.len(), got: outcomes.len() });
    }
    if forecasts.is_empty() {
        return Err(Error::Empty);
    }
    for &y in outcomes {
        check_state(y, 2)?;
    }
    Ok(())
}

/// Mean `ℓ_v` loss of the forecasts minus that of the best constant forecast,
/// which is `−|q̂ − v|` for empirical outcome mean `q̂`.
pub fn v_regret(v: f64, forecasts: &[f64], outcomes: &[State]) -> Result<f64> {
    check_outcomes(forecasts, outcomes)?;
    let t = forecasts.len() as f64;
    let loss: f64 = forecasts.iter().zip(outcomes).map(|(&p, &y)| v_score(v, p, y)).sum();
    let q_hat = outcomes.iter().sum::<usize>() as f64 / t;
    Ok(loss / t + (q_hat - v).abs())
}

/// `V_ε = {kε : k = 0..⌊1/ε⌋}`.
pub fn grid(eps: f64) -> Vec<f64> {
    let n = (1.0 / eps + 1e-9).floor() as usize;
    (0..=n).map(|k| k as f64 * eps).collect()
}

/// Largest grid regret. Sorting the forecasts makes each grid point O(1).
pub fn v_gap(forecasts: &[f64], outcomes: &[State], eps: f64) -> Result<f64> {
    check_outcomes(forecasts, outcomes)?;
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidParameter(format!("grid step {eps} outside (0, 1]")));
    }
    let mut pairs: Vec<(f64, f64)> = forecasts.iter().zip(outcomes).map(|(&p, &y)| (p, y as f64)).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let t = pairs.len();
    // prefix sums of outcomes over the sorted forecasts
    let mut ysum = Vec::with_capacity(t + 1);
    ysum.push(0.0);
    for &(_, y) in &pairs {
        ysum.push(ysum.last().unwrap() + y);
    }
    let total_y = ysum[t];
    let q_hat = total_y / t as f64;
    let (mut below, mut upto) = (0usize, 0usize);
    let mut best = f64::NEG_INFINITY;
    for v in grid(eps) {
        while below < t && pairs[below].0 < v {
            below += 1;
        }
        upto = upto.max(below);
        while upto < t && pairs[upto].0 <= v {
            upto += 1;
        }
        let (n_lo, y_lo) = (below as f64, ysum[below]);
        let (n_hi, y_hi) = ((t - upto) as f64, total_y - ysum[upto]);
        let loss = (y_lo - v * n_lo) + (v * n_hi - y_hi);
        best = best.max(loss / t as f64 + (q_hat - v).abs());
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VScoreParams {
    pub eps: f64,
    pub delta: f64,
    pub c: f64,
    /// Bound on `|ℓ_v|`; always 1 for the V-shaped family.
    pub b: f64,
}

impl VScoreParams {
    pub fn new(eps: f64, delta: f64, c: f64) -> Result<Self> {
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(Error::InvalidParameter(format!("grid step {eps} outside (0, 1]")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidParameter(format!("confidence {delta} outside (0, 1)")));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidParameter(format!("constant c = {c} must be positive")));
        }
        Ok(Self { eps, delta, c, b: 1.0 })
    }

    /// `ε = 1/T`, `δ = T^{−(1+α)}`, `c = 1`.
    pub fn auto(horizon: usize, alpha: f64) -> Result<Self> {
        let t = horizon.max(2) as f64;
        Self::new(1.0 / t, t.powf(-(1.0 + alpha)), 1.0)
    }

    pub fn with_c(self, c: f64) -> Result<Self> {
        Self::new(self.eps, self.delta, c)
    }

    pub fn grid_size(&self) -> usize {
        (1.0 / self.eps + 1e-9).floor() as usize + 1
    }
}

/// `b(t) = c·B·√(ln(N t²/δ)/t)`.
pub fn v_threshold(t: usize, params: &VScoreParams) -> f64 {
    let t = t as f64;
    let n = params.grid_size() as f64;
    params.c * params.b * ((n * t * t / params.delta).ln() / t).sqrt()
}

/// Forecasters with at most this many distinct values use the sparse path.
const SPARSE_LIMIT: usize = 16;

/// Incremental [`v_gap`] along a growing sequence.
///
/// Between consecutive distinct forecasts (and `q̂`) the grid regret is
/// affine in `v`, so only grid points next to those breakpoints can attain
/// the maximum. While few distinct forecasts have been seen the tracker
/// keeps per-forecast counts and evaluates just those candidates; past
/// that it switches to dense per-grid running sums.
#[derive(Debug, Clone)]
pub struct VGapTracker {
    eps: f64,
    last: usize,
    /// Distinct forecasts with (count, ones), sorted by forecast.
    sparse: Vec<(f64, usize, usize)>,
    dense: Option<Vec<f64>>,
    ones: usize,
    rounds: usize,
}

impl VGapTracker {
    pub fn new(eps: f64) -> Self {
        let last = (1.0 / eps + 1e-9).floor() as usize;
        Self { eps, last, sparse: Vec::new(), dense: None, ones: 0, rounds: 0 }
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    fn v(&self, k: usize) -> f64 {
        k as f64 * self.eps
    }

    fn add_dense(&self, sums: &mut [f64], p: f64, count: usize, ones: usize) {
        let (n, y) = (count as f64, ones as f64);
        for (k, s) in sums.iter_mut().enumerate() {
            let v = self.v(k);
            if v < p {
                *s += v * n - y;
            } else if v > p {
                *s += y - v * n;
            }
        }
    }

    pub fn update(&mut self, p: f64, y: State) {
        self.ones += y;
        self.rounds += 1;
        if let Some(mut sums) = self.dense.take() {
            self.add_dense(&mut sums, p, 1, y);
            self.dense = Some(sums);
            return;
        }
        match self.sparse.binary_search_by(|e| e.0.total_cmp(&p)) {
            Ok(i) => {
                self.sparse[i].1 += 1;
                self.sparse[i].2 += y;
            }
            Err(i) => self.sparse.insert(i, (p, 1, y)),
        }
        if self.sparse.len() > SPARSE_LIMIT {
            let mut sums = vec![0.0; self.last + 1];
            for &(p, n, o) in &self.sparse {
                self.add_dense(&mut sums, p, n, o);
            }
            self.sparse.clear();
            self.dense = Some(sums);
        }
    }

    fn sparse_sum(&self, v: f64) -> f64 {
        self.sparse
            .iter()
            .map(|&(p, n, o)| {
                if p < v {
                    o as f64 - v * n as f64
                } else if p > v {
                    v * n as f64 - o as f64
                } else {
                    0.0
                }
            })
            .sum()
    }

    /// Grid indices adjacent to `b`, from one below to one above.
    fn around(&self, b: f64, out: &mut Vec<usize>) {
        let mut k = ((b / self.eps).floor().max(0.0) as usize).min(self.last);
        while k > 0 && self.v(k) > b {
            k -= 1;
        }
        while k < self.last && self.v(k + 1) <= b {
            k += 1;
        }
        out.extend([k.saturating_sub(1), k, (k + 1).min(self.last)]);
    }

    /// Same value as [`v_gap`] on the observed rounds; 0 before any round.
    pub fn gap(&self) -> f64 {
        if self.rounds == 0 {
            return 0.0;
        }
        let t = self.rounds as f64;
        let q_hat = self.ones as f64 / t;
        let score = |k: usize, s: f64| s / t + (q_hat - self.v(k)).abs();
        if let Some(sums) = &self.dense {
            return sums.iter().enumerate().map(|(k, &s)| score(k, s)).fold(f64::NEG_INFINITY, f64::max);
        }
        let mut cand = vec![0, self.last];
        self.around(q_hat, &mut cand);
        for &(p, _, _) in &self.sparse {
            self.around(p, &mut cand);
        }
        cand.into_iter().map(|k| score(k, self.sparse_sum(self.v(k)))).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Base forecaster until its grid regret first exceeds the threshold,
/// urn afterwards.
#[derive(Debug, Clone)]
pub struct VSwitchModel {
    base: SharedModel,
    params: VScoreParams,
    horizon: usize,
}

impl VSwitchModel {
    pub fn new(base: SharedModel, params: VScoreParams, horizon: usize) -> Result<Self> {
        if base.num_states() != 2 {
            return Err(Error::Unsupported("V-shaped switching needs binary states".into()));
        }
        if let Some(h) = base.horizon() {
            if h < horizon {
                return Err(Error::Horizon { len: horizon, horizon: h });
            }
        }
        Ok(Self { base, params, horizon })
    }

    pub fn params(&self) -> &VScoreParams {
        &self.params
    }

    pub fn base(&self) -> &SharedModel {
        &self.base
    }

    /// Number of observed rounds at which the gap first exceeded the
    /// threshold; the urn answers every prefix at least that long.
    pub fn switch_time(&self, seq: &[State]) -> Result<Option<usize>> {
        let mut cursor = VSwitchCursor::new(self);
        for &s in seq.iter().take(self.horizon.saturating_sub(1)) {
            cursor.push(s)?;
            if cursor.switched.is_some() {
                break;
            }
        }
        Ok(cursor.switched)
    }
}

impl PredictionModel for VSwitchModel {
    fn num_states(&self) -> usize {
        2
    }

    fn horizon(&self) -> Option<usize> {
        Some(self.horizon)
    }

    fn predict(&self, prefix: &[State]) -> Result<StateDist> {
        check_prefix(prefix.len(), Some(self.horizon))?;
        let mut cursor = VSwitchCursor::new(self);
        for &s in prefix {
            cursor.push(s)?;
        }
        cursor.predict()
    }

    fn cursor(&self) -> Box<dyn Cursor + '_> {
        Box::new(VSwitchCursor::new(self))
    }
}

struct VSwitchCursor<'a> {
    model: &'a VSwitchModel,
    base: Box<dyn Cursor + 'a>,
    pending: Option<StateDist>,
    tracker: VGapTracker,
    counts: [u64; 2],
    prefix: Vec<State>,
    switched: Option<usize>,
}

impl<'a> VSwitchCursor<'a> {
    fn new(model: &'a VSwitchModel) -> Self {
        Self {
            model,
            base: model.base.cursor(),
            pending: None,
            tracker: VGapTracker::new(model.params.eps),
            counts: [0; 2],
            prefix: Vec::new(),
            switched: None,
        }
    }

    fn base_prediction(&mut self) -> Result<StateDist> {
        if self.pending.is_none() {
            self.pending = Some(self.base.predict()?);
        }
        Ok(self.pending.clone().unwrap())
    }
}

impl Cursor for VSwitchCursor<'_> {
    fn prefix(&self) -> &[State] {
        &self.prefix
    }

    fn predict(&mut self) -> Result<StateDist> {
        check_prefix(self.prefix.len(), Some(self.model.horizon))?;
        if self.switched.is_some() {
            return Ok(polya_from_counts(&self.counts));
        }
        self.base_prediction()
    }

    fn push(&mut self, state: State) -> Result<()> {
        check_state(state, 2)?;
        if self.switched.is_none() && self.prefix.len() + 1 < self.model.horizon {
            let p = self.base_prediction()?[1];
            self.tracker.update(p, state);
            self.base.push(state)?;
            self.pending = None;
            let t = self.tracker.rounds();
            if self.tracker.gap() > v_threshold(t, &self.model.params) {
                self.switched = Some(t);
            }
        }
        self.counts[state] += 1;
        self.prefix.push(state);
        Ok(())
    }

    fn switch_time(&self) -> Option<usize> {
        self.switched
    }
}
