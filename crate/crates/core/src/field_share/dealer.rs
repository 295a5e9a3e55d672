//! Offline dealer producing correlated randomness.
//!
//! The dealer is a separate role from the verifier parties: it hands out
//! triples and masks before the online phase and keeps nothing afterwards.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{share_unchecked, BeaverTriple, FieldElement, RandomMask};
use crate::error::{ProtocolError, Result};

fn make_triple<R: Rng + ?Sized>(id: u64, t: usize, rng: &mut R) -> BeaverTriple {
    let a = FieldElement::random(rng);
    let b = FieldElement::random(rng);
    BeaverTriple {
        id,
        a: share_unchecked(a, t, rng),
        b: share_unchecked(b, t, rng),
        c: share_unchecked(a * b, t, rng),
    }
}

fn make_mask<R: Rng + ?Sized>(id: u64, t: usize, rng: &mut R) -> RandomMask {
    RandomMask {
        id,
        r: share_unchecked(FieldElement::random_nonzero(rng), t, rng),
    }
}

/// Generates `count_triples` triples and `count_masks` masks shared among `t`
/// parties. Ids start at zero in each pool.
pub fn dealer_generate<R: Rng + ?Sized>(
    count_triples: usize,
    count_masks: usize,
    t: usize,
    rng: &mut R,
) -> (Vec<BeaverTriple>, Vec<RandomMask>) {
    assert!(t >= super::MIN_PARTIES, "dealer needs at least two parties");
    let triples = (0..count_triples as u64).map(|id| make_triple(id, t, rng)).collect();
    let masks = (0..count_masks as u64).map(|id| make_mask(id, t, rng)).collect();
    (triples, masks)
}

/// Source of preprocessing material for a protocol run.
fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

pub trait Preprocessing {
    fn party_count(&self) -> usize;
    fn next_triple(&mut self) -> Result<BeaverTriple>;
    fn next_mask(&mut self) -> Result<RandomMask>;
}

/// Materialized pools, consumed front to back.
#[derive(Debug, Clone)]
pub struct DealerPool {
    t: usize,
    triples: VecDeque<BeaverTriple>,
    masks: VecDeque<RandomMask>,
}

impl DealerPool {
    pub fn new(t: usize, triples: Vec<BeaverTriple>, masks: Vec<RandomMask>) -> Self {
        DealerPool {
            t,
            triples: triples.into(),
            masks: masks.into(),
        }
    }

    pub fn generate<R: Rng + ?Sized>(count_triples: usize, count_masks: usize, t: usize, rng: &mut R) -> Self {
        let (triples, masks) = dealer_generate(count_triples, count_masks, t, rng);
        DealerPool::new(t, triples, masks)
    }

    pub fn remaining_triples(&self) -> usize {
        self.triples.len()
    }

    pub fn remaining_masks(&self) -> usize {
        self.masks.len()
    }
}

impl Preprocessing for DealerPool {
    fn party_count(&self) -> usize {
        self.t
    }

    fn next_triple(&mut self) -> Result<BeaverTriple> {
        self.triples
            .pop_front()
            .ok_or(ProtocolError::InsufficientPreprocessing { resource: "triple" })
    }

    fn next_mask(&mut self) -> Result<RandomMask> {
        self.masks
            .pop_front()
            .ok_or(ProtocolError::InsufficientPreprocessing { resource: "mask" })
    }
}

/// Lazily generated pools with optional capacity limits.
///
/// Equivalent to a [`DealerPool`] whose contents are produced on demand
/// from a seeded stream, which keeps memory flat for long simulated runs.
#[derive(Debug, Clone)]
pub struct DealerStream {
    t: usize,
    // Separate streams so each kind's values do not depend on how triple
    // and mask requests interleave.
    triple_rng: ChaCha8Rng,
    mask_rng: ChaCha8Rng,
    next_triple: u64,
    next_mask: u64,
    triple_limit: Option<u64>,
    mask_limit: Option<u64>,
}

impl DealerStream {
    pub fn new(t: usize, seed: u64) -> Self {
        assert!(t >= super::MIN_PARTIES, "dealer needs at least two parties");
        DealerStream {
            t,
            triple_rng: stream(seed, 0),
            mask_rng: stream(seed, 1),
            next_triple: 0,
            next_mask: 0,
            triple_limit: None,
            mask_limit: None,
        }
    }

    pub fn with_limits(mut self, triples: u64, masks: u64) -> Self {
        self.triple_limit = Some(triples);
        self.mask_limit = Some(masks);
        self
    }

    pub fn issued_triples(&self) -> u64 {
        self.next_triple
    }

    pub fn issued_masks(&self) -> u64 {
        self.next_mask
    }
}

impl Preprocessing for DealerStream {
    fn party_count(&self) -> usize {
        self.t
    }

    fn next_triple(&mut self) -> Result<BeaverTriple> {
        if self.triple_limit.is_some_and(|l| self.next_triple >= l) {
            return Err(ProtocolError::InsufficientPreprocessing { resource: "triple" });
        }
        let triple = make_triple(self.next_triple, self.t, &mut self.triple_rng);
        self.next_triple += 1;
        Ok(triple)
    }

    fn next_mask(&mut self) -> Result<RandomMask> {
        if self.mask_limit.is_some_and(|l| self.next_mask >= l) {
            return Err(ProtocolError::InsufficientPreprocessing { resource: "mask" });
        }
        let mask = make_mask(self.next_mask, self.t, &mut self.mask_rng);
        self.next_mask += 1;
        Ok(mask)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field_share::reconstruct;

    #[test]
    fn pool_exhaustion_is_reported() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut pool = DealerPool::generate(1, 0, 3, &mut rng);
        assert!(pool.next_triple().is_ok());
        assert_eq!(
            pool.next_triple().unwrap_err(),
            ProtocolError::InsufficientPreprocessing { resource: "triple" }
        );
        assert!(pool.next_mask().is_err());
    }

    #[test]
    fn stream_respects_limits_and_is_well_formed() {
        let mut s = DealerStream::new(3, 9).with_limits(50, 2);
        for _ in 0..50 {
            let t = s.next_triple().unwrap();
            assert_eq!(reconstruct(&t.c), reconstruct(&t.a) * reconstruct(&t.b));
        }
        assert!(s.next_triple().is_err());
        assert!(!reconstruct(&s.next_mask().unwrap().r).is_zero());
        s.next_mask().unwrap();
        assert!(s.next_mask().is_err());
    }

    #[test]
    fn stream_is_deterministic() {
        let mut a = DealerStream::new(3, 42);
        let mut b = DealerStream::new(3, 42);
        assert_eq!(a.next_triple().unwrap(), b.next_triple().unwrap());
        assert_eq!(a.next_mask().unwrap(), b.next_mask().unwrap());
    }
}
