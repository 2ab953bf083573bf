use std::sync::Arc;

use crate::domain::{State, StateDist};
use crate::error::{Error, Result};
use crate::model::{Context, PredictionModel};

pub const MAX_DEBRUIJN_ORDER: usize = 24;

/// A binary de Bruijn cycle of order `L` and its successor table.
///
/// Windows are encoded as integers with the oldest bit most significant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeBruijnSeq {
    order: usize,
    cycle: Vec<u8>,
    successor: Vec<u8>,
}

impl DeBruijnSeq {
    pub fn order(&self) -> usize {
        self.order
    }

    /// The cyclic string, `2^L` bits long.
    pub fn cycle(&self) -> &[u8] {
        &self.cycle
    }

    /// Bit following `window` on the cycle.
    pub fn successor(&self, window: usize) -> u8 {
        self.successor[window]
    }

    pub fn window_index(window: &[State]) -> usize {
        window.iter().fold(0, |acc, &b| (acc << 1) | (b & 1))
    }
}

/// Builds an order-`L` binary de Bruijn cycle as an Eulerian circuit of the
/// de Bruijn graph on `(L-1)`-bit vertices (Hierholzer, iterative).
///
/// Edges leave each vertex in bit order 0 then 1, starting from the
/// all-zeros vertex, so the result is fully deterministic.
pub fn debruijn_build(order: usize) -> Result<DeBruijnSeq> {
    if !(1..=MAX_DEBRUIJN_ORDER).contains(&order) {
        return Err(Error::InvalidParameter(format!("de Bruijn order {order} outside 1..={MAX_DEBRUIJN_ORDER}")));
    }
    let n_edges = 1usize << order;
    let vertex_mask = (1usize << (order - 1)) - 1;
    let mut next_bit = vec![0u8; 1usize << (order - 1)];

    // (vertex, bit of the edge used to reach it); the root has no edge.
    let mut stack: Vec<(usize, u8)> = vec![(0, u8::MAX)];
    let mut circuit: Vec<u8> = Vec::with_capacity(n_edges);
    while let Some(&(v, _)) = stack.last() {
        let b = next_bit[v];
        if b < 2 {
            next_bit[v] += 1;
            let w = ((v << 1) | b as usize) & vertex_mask;
            stack.push((w, b));
        } else {
            let (_, bit) = stack.pop().expect("non-empty");
            if bit != u8::MAX {
                circuit.push(bit);
            }
        }
    }
    circuit.reverse();
    debug_assert_eq!(circuit.len(), n_edges);

    let mut successor = vec![0u8; n_edges];
    let mask = n_edges - 1;
    let mut window = 0usize;
    for &b in circuit.iter().take(order) {
        window = (window << 1) | b as usize;
    }
    for i in 0..n_edges {
        let next = circuit[(i + order) % n_edges];
        successor[window] = next;
        window = ((window << 1) | next as usize) & mask;
    }
    Ok(DeBruijnSeq { order, cycle: circuit, successor })
}

/// Order-`L` Markov chain that follows a de Bruijn cycle (or its complement
/// when `flip` is set) after `L` uniformly random seed bits.
#[derive(Debug, Clone)]
pub struct DeBruijnModel {
    seq: Arc<DeBruijnSeq>,
    flip: bool,
    eps: f64,
}

impl DeBruijnModel {
    pub fn new(order: usize, flip: bool, eps: f64) -> Result<Self> {
        Self::from_seq(Arc::new(debruijn_build(order)?), flip, eps)
    }

    pub fn from_seq(seq: Arc<DeBruijnSeq>, flip: bool, eps: f64) -> Result<Self> {
        if !(0.0..0.25).contains(&eps) {
            return Err(Error::InvalidParameter(format!("leak {eps} outside [0, 1/4)")));
        }
        Ok(Self { seq, flip, eps })
    }

    /// The pair `(M₀, M₁)` sharing one cycle.
    pub fn pair(order: usize, eps: f64) -> Result<(Self, Self)> {
        let seq = Arc::new(debruijn_build(order)?);
        Ok((Self::from_seq(seq.clone(), false, eps)?, Self::from_seq(seq, true, eps)?))
    }

    pub fn order(&self) -> usize {
        self.seq.order
    }

    pub fn flip(&self) -> bool {
        self.flip
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Deterministic next bit after a full window.
    pub fn next_bit(&self, window: &[State]) -> State {
        let b = self.seq.successor(DeBruijnSeq::window_index(window)) as State;
        if self.flip {
            1 - b
        } else {
            b
        }
    }
}

impl PredictionModel for DeBruijnModel {
    fn num_states(&self) -> usize {
        2
    }

    fn context(&self) -> Context {
        Context::Bounded(self.seq.order)
    }

    fn predict(&self, prefix: &[State]) -> Result<StateDist> {
        let order = self.seq.order;
        if prefix.len() < order {
            return Ok(StateDist::uniform(2));
        }
        let next = self.next_bit(&prefix[prefix.len() - order..]);
        let mut probs = vec![self.eps; 2];
        probs[next] = 1.0 - self.eps;
        Ok(StateDist::from_vec_unchecked(probs))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn windows_once(seq: &DeBruijnSeq) -> bool {
        let n = seq.cycle().len();
        let l = seq.order();
        let mut seen = vec![false; n];
        for i in 0..n {
            let w: Vec<usize> = (0..l).map(|j| seq.cycle()[(i + j) % n] as usize).collect();
            let idx = DeBruijnSeq::window_index(&w);
            if seen[idx] {
                return false;
            }
            seen[idx] = true;
            if seq.successor(idx) != seq.cycle()[(i + l) % n] {
                return false;
            }
        }
        seen.iter().all(|&s| s)
    }

    #[test]
    fn order_one_is_01() {
        let s = debruijn_build(1).unwrap();
        assert_eq!(s.cycle(), &[0, 1]);
        assert_eq!(s.successor(0), 1);
        assert_eq!(s.successor(1), 0);
    }

    #[test]
    fn order_two_is_rotation_of_0011() {
        let s = debruijn_build(2).unwrap();
        let c: String = s.cycle().iter().map(|b| b.to_string()).collect();
        let doubled = format!("{c}{c}");
        assert!(doubled.contains("0011"), "{c}");
        assert!(windows_once(&s));
    }

    #[test]
    fn windows_unique_up_to_16() {
        for l in 1..=16 {
            let s = debruijn_build(l).unwrap();
            assert_eq!(s.cycle().len(), 1 << l);
            assert!(windows_once(&s), "order {l}");
        }
    }

    #[test]
    fn order_range_checked() {
        assert!(debruijn_build(0).is_err());
        assert!(debruijn_build(25).is_err());
    }

    #[test]
    fn predictions() {
        let (m0, m1) = DeBruijnModel::pair(3, 0.0).unwrap();
        assert_eq!(m0.predict(&[1, 0]).unwrap().probs(), &[0.5, 0.5]);
        for w in 0..8usize {
            let prefix = [1, 1, (w >> 2) & 1, (w >> 1) & 1, w & 1];
            let p0 = m0.predict(&prefix).unwrap();
            let p1 = m1.predict(&prefix).unwrap();
            assert_eq!(p0[0], p1[1]);
            assert_eq!(p0[1], p1[0]);
            let succ = m0.next_bit(&prefix[2..]);
            assert_eq!(p0[succ], 1.0);
        }
        let leaky = DeBruijnModel::new(3, false, 1e-6).unwrap();
        let d = leaky.predict(&[0, 0, 0]).unwrap();
        assert!(d.iter().all(|&p| p > 0.0));
        assert!(DeBruijnModel::new(3, false, 0.3).is_err());
    }

    /// With no leak the window θ^{t-L+1..t} is uniform for every t ≥ L:
    /// every seed window is equally likely and the continuation is
    /// deterministic, so each L-bit word must appear exactly once across seeds.
    #[test]
    fn stationary_window_marginal() {
        for l in 1..=4usize {
            for flip in [false, true] {
                let m = DeBruijnModel::new(l, flip, 0.0).unwrap();
                let horizon = 12;
                let mut seqs = Vec::new();
                for seed in 0..(1usize << l) {
                    let mut s: Vec<usize> = (0..l).map(|j| (seed >> (l - 1 - j)) & 1).collect();
                    while s.len() < horizon {
                        let d = m.predict(&s).unwrap();
                        s.push(if d[1] == 1.0 { 1 } else { 0 });
                    }
                    seqs.push(s);
                }
                for t in l..=horizon {
                    let mut hits = vec![0; 1 << l];
                    for s in &seqs {
                        hits[DeBruijnSeq::window_index(&s[t - l..t])] += 1;
                    }
                    assert!(hits.iter().all(|&h| h == 1), "L={l} t={t} flip={flip}");
                }
            }
        }
    }
}
