//! Error fractions computed from measurement outcomes, in batch or chunk by
//! chunk as they would arrive from the acquisition hardware.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::shots::{Mode, ShotStream};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostSample {
    pub epsilon: f64,
    /// Number of counted events; `epsilon = errors / n_shots`.
    pub errors: u64,
    pub n_shots: u64,
    pub n_cliffords: usize,
    pub mode: Mode,
}

/// Fraction of shots reading 1 after a net-identity sequence.
pub fn epsilon_conventional(stream: &ShotStream) -> Result<CostSample> {
    expect_mode(stream, Mode::Conventional)?;
    let mut acc = CostAccumulator::new(Mode::Conventional, stream.n_cliffords);
    acc.push(0, &stream.bits)?;
    acc.finish()
}

/// Fraction of consecutive outcome pairs that fail to alternate. The first
/// shot has no predecessor but still counts in the divisor.
pub fn epsilon_restless(stream: &ShotStream) -> Result<CostSample> {
    expect_mode(stream, Mode::Restless)?;
    let mut acc = CostAccumulator::new(Mode::Restless, stream.n_cliffords);
    acc.push(0, &stream.bits)?;
    acc.finish()
}

/// Dispatches on the stream's mode.
pub fn epsilon(stream: &ShotStream) -> Result<CostSample> {
    match stream.mode {
        Mode::Conventional => epsilon_conventional(stream),
        Mode::Restless => epsilon_restless(stream),
    }
}

fn expect_mode(stream: &ShotStream, mode: Mode) -> Result<()> {
    if stream.mode != mode {
        return Err(Error::ModeMismatch(format!("expected a {mode} stream, got {}", stream.mode)));
    }
    Ok(())
}

/// One numbered piece of a stream.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Chunk {
    pub seq: u64,
    pub bits: Vec<bool>,
}

/// Folds chunks in order and returns the same value as the batch functions.
pub fn epsilon_streaming<I>(mode: Mode, n_cliffords: usize, chunks: I) -> Result<CostSample>
where
    I: IntoIterator<Item = Chunk>,
{
    let mut acc = CostAccumulator::new(mode, n_cliffords);
    for c in chunks {
        acc.push(c.seq, &c.bits)?;
    }
    acc.finish()
}

/// Running counts for one stream. Keeps the first and last bit so adjacent
/// pieces can be merged.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CostAccumulator {
    mode: Mode,
    n_cliffords: usize,
    next_seq: u64,
    first: Option<bool>,
    last: Option<bool>,
    errors: u64,
    n: u64,
}

impl CostAccumulator {
    pub fn new(mode: Mode, n_cliffords: usize) -> Self {
        CostAccumulator {
            mode,
            n_cliffords,
            next_seq: 0,
            first: None,
            last: None,
            errors: 0,
            n: 0,
        }
    }

    /// Chunks must carry consecutive sequence numbers starting at 0.
    pub fn push(&mut self, seq: u64, bits: &[bool]) -> Result<()> {
        if seq != self.next_seq {
            return Err(Error::OutOfOrder {
                expected: self.next_seq,
                got: seq,
            });
        }
        self.next_seq += 1;
        for &b in bits {
            let hit = match self.mode {
                Mode::Conventional => b,
                Mode::Restless => self.last == Some(b),
            };
            self.errors += u64::from(hit);
            self.last = Some(b);
        }
        if self.first.is_none() {
            self.first = bits.first().copied();
        }
        self.n += bits.len() as u64;
        Ok(())
    }

    pub fn n_shots(&self) -> u64 {
        self.n
    }

    /// Appends `later`, which must cover the shots directly after this one.
    /// The boundary pair is counted here.
    pub fn merge(mut self, later: CostAccumulator) -> Result<Self> {
        if self.mode != later.mode || self.n_cliffords != later.n_cliffords {
            return Err(Error::ModeMismatch("cannot merge accumulators of different streams".into()));
        }
        if self.mode == Mode::Restless {
            if let (Some(a), Some(b)) = (self.last, later.first) {
                self.errors += u64::from(a == b);
            }
        }
        self.errors += later.errors;
        self.n += later.n;
        self.first = self.first.or(later.first);
        self.last = later.last.or(self.last);
        self.next_seq += later.next_seq;
        Ok(self)
    }

    pub fn finish(&self) -> Result<CostSample> {
        let min = match self.mode {
            Mode::Conventional => 1,
            Mode::Restless => 2,
        };
        if self.n < min {
            return Err(Error::invalid(
                "bits",
                format!("{} cost needs at least {min} shots, got {}", self.mode, self.n),
            ));
        }
        Ok(CostSample {
            epsilon: self.errors as f64 / self.n as f64,
            errors: self.errors,
            n_shots: self.n,
            n_cliffords: self.n_cliffords,
            mode: self.mode,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn stream(bits: &[u8], mode: Mode) -> ShotStream {
        ShotStream {
            bits: bits.iter().map(|&b| b == 1).collect(),
            mode,
            n_cliffords: 1,
            seed: 0,
        }
    }

    #[test]
    fn conventional_counts_ones() {
        let e = |b: &[u8]| epsilon_conventional(&stream(b, Mode::Conventional)).unwrap().epsilon;
        assert_eq!(e(&[0, 0, 0, 0]), 0.0);
        assert_eq!(e(&[1, 1, 1, 1]), 1.0);
        assert_eq!(e(&[0, 1, 0, 1]), 0.5);
    }

    #[test]
    fn restless_counts_repeats_over_n() {
        let e = |b: &[u8]| epsilon_restless(&stream(b, Mode::Restless)).unwrap().epsilon;
        assert_eq!(e(&[0, 1, 0, 1]), 0.0);
        assert_eq!(e(&[0, 0, 0, 0]), 0.75);
        assert_eq!(e(&[0, 0, 1, 1]), 0.5);
    }

    #[test]
    fn short_and_mismatched_streams() {
        assert!(epsilon_restless(&stream(&[1], Mode::Restless)).is_err());
        assert!(epsilon_conventional(&stream(&[], Mode::Conventional)).is_err());
        assert!(matches!(
            epsilon_restless(&stream(&[0, 1], Mode::Conventional)),
            Err(Error::ModeMismatch(_))
        ));
    }

    #[test]
    fn single_bit_chunks() {
        let chunks = [0, 0, 1, 1].iter().enumerate().map(|(i, &b)| Chunk {
            seq: i as u64,
            bits: vec![b == 1],
        });
        assert_eq!(epsilon_streaming(Mode::Restless, 1, chunks).unwrap().epsilon, 0.5);
    }

    #[test]
    fn out_of_order_chunk_is_rejected() {
        let chunks = vec![
            Chunk { seq: 0, bits: vec![true] },
            Chunk { seq: 2, bits: vec![false] },
        ];
        assert!(matches!(
            epsilon_streaming(Mode::Restless, 1, chunks),
            Err(Error::OutOfOrder { expected: 1, got: 2 })
        ));
    }

    fn split_at_points(bits: &[bool], cuts: &[usize]) -> Vec<Chunk> {
        let mut cuts: Vec<usize> = cuts.iter().map(|c| c % (bits.len() + 1)).collect();
        cuts.sort_unstable();
        let mut out = Vec::new();
        let mut start = 0;
        for c in cuts.into_iter().chain([bits.len()]) {
            out.push(Chunk {
                seq: out.len() as u64,
                bits: bits[start..c].to_vec(),
            });
            start = c;
        }
        out
    }

    proptest! {
        #[test]
        fn streaming_equals_batch(bits in proptest::collection::vec(any::<bool>(), 2..200),
                                  cuts in proptest::collection::vec(any::<usize>(), 0..12),
                                  restless: bool) {
            let mode = if restless { Mode::Restless } else { Mode::Conventional };
            let s = ShotStream { bits: bits.clone(), mode, n_cliffords: 7, seed: 0 };
            let batch = epsilon(&s).unwrap();
            let streamed = epsilon_streaming(mode, 7, split_at_points(&bits, &cuts)).unwrap();
            prop_assert_eq!(batch, streamed);
        }

        #[test]
        fn merge_in_order_equals_batch(bits in proptest::collection::vec(any::<bool>(), 2..200), cut in any::<usize>()) {
            let cut = cut % (bits.len() + 1);
            let mut a = CostAccumulator::new(Mode::Restless, 1);
            a.push(0, &bits[..cut]).unwrap();
            let mut b = CostAccumulator::new(Mode::Restless, 1);
            b.push(0, &bits[cut..]).unwrap();
            let merged = a.merge(b).unwrap().finish().unwrap();
            let s = ShotStream { bits, mode: Mode::Restless, n_cliffords: 1, seed: 0 };
            prop_assert_eq!(merged, epsilon_restless(&s).unwrap());
        }

        #[test]
        fn complement_leaves_restless_cost_unchanged(bits in proptest::collection::vec(any::<bool>(), 2..300)) {
            let s = ShotStream { bits: bits.clone(), mode: Mode::Restless, n_cliffords: 1, seed: 0 };
            let c = ShotStream { bits: bits.iter().map(|b| !b).collect(), ..s.clone() };
            prop_assert_eq!(epsilon_restless(&s).unwrap().epsilon, epsilon_restless(&c).unwrap().epsilon);
        }

        #[test]
        fn restless_cost_bounded(bits in proptest::collection::vec(any::<bool>(), 2..300)) {
            let n = bits.len() as f64;
            let s = ShotStream { bits, mode: Mode::Restless, n_cliffords: 1, seed: 0 };
            prop_assert!(epsilon_restless(&s).unwrap().epsilon <= (n - 1.0) / n);
        }

        #[test]
        fn conventional_cost_ignores_order(mut bits in proptest::collection::vec(any::<bool>(), 1..100), seed: u64) {
            use rand::seq::SliceRandom;
            let before = epsilon_conventional(&ShotStream { bits: bits.clone(), mode: Mode::Conventional, n_cliffords: 1, seed: 0 }).unwrap();
            bits.shuffle(&mut crate::seeds::rng_from_seed(seed));
            let after = epsilon_conventional(&ShotStream { bits, mode: Mode::Conventional, n_cliffords: 1, seed: 0 }).unwrap();
            prop_assert_eq!(before, after);
        }
    }

    #[test]
    fn restless_cost_depends_on_order() {
        let a = epsilon_restless(&stream(&[0, 1, 0, 1], Mode::Restless)).unwrap();
        let b = epsilon_restless(&stream(&[0, 0, 1, 1], Mode::Restless)).unwrap();
        assert_ne!(a.epsilon, b.epsilon);
    }
}
