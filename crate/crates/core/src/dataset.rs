//! Training-corpus generation with loss masks.
//!
//! The corpus mixes plain draws from the base model with urn draws on
//! which the base model's softmax policy performs badly. For an urn draw the
//! loss mask starts at the first round where that policy's prefix regret
//! exceeds `α_mask/√t`; draws without such a round are discarded.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decision::{action_utilities, qbr_from_utilities, Temperature};
use crate::domain::{State, StateDist, StateSeq, UtilityMatrix};
use crate::error::{Error, Result};
use crate::model::PredictionModel;
use crate::models::PolyaUrn;
use crate::regret::RegretLedger;
use crate::sampling::{sample_with, RngSeed};

/// Urn draws use streams starting here so they never overlap base draws.
pub const POLYA_STREAM_OFFSET: u64 = 1 << 32;

pub const MASK_HISTOGRAM_BINS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Base,
    Polya,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusRecord {
    pub seq: Vec<State>,
    pub mask_from: Option<usize>,
    pub source: Source,
}

#[derive(Serialize, Deserialize)]
struct RecordLine {
    seq: String,
    mask_from: Option<usize>,
    source: Source,
}

impl CorpusRecord {
    /// One JSON object with keys in the order `seq`, `mask_from`, `source`.
    pub fn to_json_line(&self) -> String {
        let line =
            RecordLine { seq: StateSeq::to_bit_string(&self.seq), mask_from: self.mask_from, source: self.source };
        serde_json::to_string(&line).expect("plain record serializes")
    }

    pub fn from_json_line(line: &str) -> Result<Self> {
        let r: RecordLine =
            serde_json::from_str(line).map_err(|e| Error::InvalidParameter(format!("bad corpus line: {e}")))?;
        let seq = r
            .seq
            .chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(Error::InvalidParameter(format!("bad state character {other:?}"))),
            })
            .collect::<Result<_>>()?;
        Ok(Self { seq, mask_from: r.mask_from, source: r.source })
    }
}

/// First `t` at which the prefix regret of `QBR(base, 1/√T)` exceeds
/// `α_mask/√t`.
pub fn first_violation(
    base: &dyn PredictionModel,
    u: &UtilityMatrix,
    alpha_mask: f64,
    horizon: usize,
    seq: &[State],
) -> Result<Option<usize>> {
    let eta = Temperature::auto(horizon);
    let mut ledger = RegretLedger::new(u, eta);
    let mut cursor = base.cursor();
    for (i, &s) in seq.iter().enumerate() {
        let mu: StateDist = cursor.predict()?;
        let pi = qbr_from_utilities(&action_utilities(u, &mu), eta);
        ledger.update(&pi, s)?;
        cursor.push(s)?;
        let t = i + 1;
        if ledger.model_regret() > alpha_mask / (t as f64).sqrt() {
            return Ok(Some(t));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolyaMode {
    /// Keep drawing until `target` records are kept or `max_draws` is spent.
    Quota { target: usize, max_draws: usize },
    /// Draw exactly `pool` sequences and keep whichever qualify.
    FixedPool { pool: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorpusConfig {
    pub alpha_mask: f64,
    pub n_base: usize,
    pub polya: PolyaMode,
    pub horizon: usize,
    pub seed: RngSeed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusStats {
    pub base: usize,
    pub draws: usize,
    pub kept: usize,
    /// Quota records not produced before the draw budget ran out.
    pub shortfall: usize,
    /// `mask_from` counts over equal-width bins of `1..=T`.
    pub mask_histogram: [usize; MASK_HISTOGRAM_BINS],
}

impl CorpusStats {
    pub fn kept_fraction(&self) -> f64 {
        if self.draws == 0 {
            0.0
        } else {
            self.kept as f64 / self.draws as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub records: Vec<CorpusRecord>,
    pub stats: CorpusStats,
}

const DRAW_BATCH: usize = 256;

pub fn generate_corpus(base: &dyn PredictionModel, u: &UtilityMatrix, cfg: &CorpusConfig) -> Result<Corpus> {
    if cfg.alpha_mask.is_nan() || cfg.alpha_mask <= 0.0 {
        return Err(Error::InvalidParameter(format!("alpha_mask {} must be positive", cfg.alpha_mask)));
    }
    if cfg.horizon == 0 {
        return Err(Error::InvalidParameter("horizon must be positive".into()));
    }
    if base.num_states() != u.num_states() {
        return Err(Error::DimensionMismatch { expected: u.num_states(), got: base.num_states() });
    }
    let t = cfg.horizon;
    let mut records: Vec<CorpusRecord> = (0..cfg.n_base)
        .into_par_iter()
        .map(|i| {
            let seq = sample_with(base, t, &mut cfg.seed.stream(i as u64))?;
            Ok(CorpusRecord { seq: seq.into_vec(), mask_from: None, source: Source::Base })
        })
        .collect::<Result<_>>()?;

    let urn = PolyaUrn::new(crate::domain::StateAlphabet::new(base.num_states())?);
    let draw = |i: usize| -> Result<Option<CorpusRecord>> {
        let seq = sample_with(&urn, t, &mut cfg.seed.stream(POLYA_STREAM_OFFSET + i as u64))?.into_vec();
        Ok(first_violation(base, u, cfg.alpha_mask, t, &seq)?.map(|m| CorpusRecord {
            seq,
            mask_from: Some(m),
            source: Source::Polya,
        }))
    };
    let (target, max_draws) = match cfg.polya {
        PolyaMode::Quota { target, max_draws } => (target, max_draws),
        PolyaMode::FixedPool { pool } => (usize::MAX, pool),
    };
    let mut draws = 0;
    let mut kept = Vec::new();
    while kept.len() < target && draws < max_draws {
        let end = (draws + DRAW_BATCH).min(max_draws);
        let batch: Vec<Option<CorpusRecord>> = (draws..end).into_par_iter().map(draw).collect::<Result<_>>()?;
        for r in batch {
            draws += 1;
            if let Some(r) = r {
                kept.push(r);
                if kept.len() == target {
                    break;
                }
            }
        }
    }
    let mut mask_histogram = [0; MASK_HISTOGRAM_BINS];
    for r in &kept {
        let m = r.mask_from.expect("kept records carry a mask");
        mask_histogram[((m - 1) * MASK_HISTOGRAM_BINS / t).min(MASK_HISTOGRAM_BINS - 1)] += 1;
    }
    let stats = CorpusStats {
        base: records.len(),
        draws,
        kept: kept.len(),
        shortfall: if target == usize::MAX { 0 } else { target - kept.len() },
        mask_histogram,
    };
    records.extend(kept);
    Ok(Corpus { records, stats })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decision::quantal_best_response;
    use crate::domain::MixedAction;
    use crate::models::PiecewiseBernoulli;
    use crate::regret::external_regret;

    fn from_scratch_violation(
        base: &dyn PredictionModel,
        u: &UtilityMatrix,
        a: f64,
        horizon: usize,
        seq: &[State],
    ) -> Option<usize> {
        let eta = Temperature::auto(horizon);
        let trace: Vec<MixedAction> =
            (0..seq.len()).map(|i| quantal_best_response(u, &base.predict(&seq[..i]).unwrap(), eta).unwrap()).collect();
        (1..=seq.len()).find(|&t| external_regret(&trace[..t], &seq[..t], u).unwrap() > a / (t as f64).sqrt())
    }

    #[test]
    fn json_line_format() {
        let r = CorpusRecord { seq: vec![0, 1, 1], mask_from: None, source: Source::Base };
        assert_eq!(r.to_json_line(), r#"{"seq":"011","mask_from":null,"source":"base"}"#);
        let p = CorpusRecord { seq: vec![1, 0], mask_from: Some(2), source: Source::Polya };
        assert_eq!(p.to_json_line(), r#"{"seq":"10","mask_from":2,"source":"polya"}"#);
        assert_eq!(CorpusRecord::from_json_line(&p.to_json_line()).unwrap(), p);
    }

    #[test]
    fn unreachable_mask_keeps_nothing() {
        let t = 128;
        let base = PiecewiseBernoulli::third_to_two_thirds(t);
        let u = UtilityMatrix::matching(2);
        let cfg = CorpusConfig {
            alpha_mask: 1e3,
            n_base: 5,
            polya: PolyaMode::Quota { target: 10, max_draws: 300 },
            horizon: t,
            seed: RngSeed(1),
        };
        let c = generate_corpus(&base, &u, &cfg).unwrap();
        assert_eq!((c.stats.kept, c.stats.draws, c.stats.shortfall), (0, 300, 10));
        assert_eq!(c.records.len(), 5);
    }

    #[test]
    fn kept_records_reverify() {
        let t = 128;
        let base = PiecewiseBernoulli::third_to_two_thirds(t);
        let u = UtilityMatrix::matching(2);
        let cfg = CorpusConfig {
            alpha_mask: 1.5,
            n_base: 3,
            polya: PolyaMode::FixedPool { pool: 200 },
            horizon: t,
            seed: RngSeed(7),
        };
        let c = generate_corpus(&base, &u, &cfg).unwrap();
        assert!(c.stats.kept > 0);
        assert_eq!(c.records.len(), 3 + c.stats.kept);
        for r in c.records.iter().filter(|r| r.source == Source::Polya) {
            assert_eq!(r.mask_from, from_scratch_violation(&base, &u, 1.5, t, &r.seq));
        }
        assert_eq!(c, generate_corpus(&base, &u, &cfg).unwrap());
    }
}
