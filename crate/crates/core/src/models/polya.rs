use crate::domain::{State, StateAlphabet, StateDist};
use crate::error::Result;
use crate::model::{check_state, Cursor, PredictionModel};

/// Laplace-smoothed empirical frequency: `(1 + n_θ) / (|Θ| + t - 1)`.
#[derive(Debug, Clone)]
pub struct PolyaUrn {
    alphabet: StateAlphabet,
}

impl PolyaUrn {
    pub fn new(alphabet: StateAlphabet) -> Self {
        Self { alphabet }
    }

    pub fn binary() -> Self {
        Self::new(StateAlphabet::BINARY)
    }
}

/// Urn prediction from per-state counts of a prefix of length `sum(counts)`.
pub fn polya_from_counts(counts: &[u64]) -> StateDist {
    let total: u64 = counts.iter().sum();
    let denom = (counts.len() as u64 + total) as f64;
    StateDist::from_vec_unchecked(counts.iter().map(|&c| (1 + c) as f64 / denom).collect())
}

impl PredictionModel for PolyaUrn {
    fn num_states(&self) -> usize {
        self.alphabet.size()
    }

    fn predict(&self, prefix: &[State]) -> Result<StateDist> {
        let mut counts = vec![0u64; self.alphabet.size()];
        for &s in prefix {
            check_state(s, counts.len())?;
            counts[s] += 1;
        }
        Ok(polya_from_counts(&counts))
    }

    fn cursor(&self) -> Box<dyn Cursor + '_> {
        Box::new(PolyaCursor { counts: vec![0; self.alphabet.size()], prefix: Vec::new() })
    }
}

struct PolyaCursor {
    counts: Vec<u64>,
    prefix: Vec<State>,
}

impl Cursor for PolyaCursor {
    fn prefix(&self) -> &[State] {
        &self.prefix
    }

    fn predict(&mut self) -> Result<StateDist> {
        Ok(polya_from_counts(&self.counts))
    }

    fn push(&mut self, state: State) -> Result<()> {
        check_state(state, self.counts.len())?;
        self.counts[state] += 1;
        self.prefix.push(state);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_prefix_is_uniform() {
        let d = PolyaUrn::binary().predict(&[]).unwrap();
        assert_eq!(d.probs(), &[0.5, 0.5]);
    }

    #[test]
    fn counts_prefix() {
        let m = PolyaUrn::binary();
        assert_eq!(m.predict(&[1, 0, 1]).unwrap()[1], 3.0 / 5.0);
        assert_eq!(m.predict(&[0; 8]).unwrap()[0], 9.0 / 10.0);
        assert!(m.predict(&[0, 2]).is_err());
    }

    #[test]
    fn exact_rationals_up_to_100() {
        // Denominator |Θ| + t - 1, numerators from integer counts.
        let m = PolyaUrn::new(StateAlphabet::new(3).unwrap());
        let mut prefix = Vec::new();
        for t in 1..=100usize {
            let d = m.predict(&prefix).unwrap();
            for s in 0..3 {
                let n = prefix.iter().filter(|&&x| x == s).count();
                assert_eq!(d[s], (1 + n) as f64 / (3 + t - 1) as f64);
            }
            prefix.push((t * 7 + t / 3) % 3);
        }
    }

    #[test]
    fn cursor_matches_predict() {
        let m = PolyaUrn::binary();
        let seq = [0, 1, 1, 0, 1, 1, 1];
        let mut c = m.cursor();
        for (i, &s) in seq.iter().enumerate() {
            assert_eq!(c.predict().unwrap(), m.predict(&seq[..i]).unwrap());
            c.push(s).unwrap();
        }
    }
}
