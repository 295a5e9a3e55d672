//! Data-oblivious access to shared vectors.
//!
//! Node identities are one-hot vectors of public length `n`. Reading a
//! shared vector at a secret position is an inner product with the one-hot
//! selector, and writing is a component-wise blend, so every access touches
//! all `n` positions and costs a number of multiplications that depends only
//! on `n`.

use std::ops::Sub;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::engine::Engine;
use crate::error::{ProtocolError, Result};
use crate::field_share::{share_unchecked, FieldElement, OpeningKind, ShareSet};

/// Operation counts of a protocol run: the observable access pattern.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ObliviousTrace {
    pub multiplications: u64,
    pub openings: u64,
    pub messages: u64,
    pub rounds: u64,
}

impl Sub for ObliviousTrace {
    type Output = ObliviousTrace;

    fn sub(self, rhs: ObliviousTrace) -> ObliviousTrace {
        ObliviousTrace {
            multiplications: self.multiplications - rhs.multiplications,
            openings: self.openings - rhs.openings,
            messages: self.messages - rhs.messages,
            rounds: self.rounds - rhs.rounds,
        }
    }
}

/// A shared one-hot vector naming one node (or none, for the all-zero
/// "absent" encoding).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SharedOneHot<S = ShareSet> {
    pub components: Vec<S>,
}

impl<S> SharedOneHot<S> {
    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }
}

impl SharedOneHot<ShareSet> {
    /// Fresh random sharing of the unit vector at `index`.
    pub fn share<R: Rng + ?Sized>(index: usize, n: usize, t: usize, rng: &mut R) -> Result<Self> {
        if index >= n {
            return Err(ProtocolError::InvalidIndex { index, n });
        }
        if t < crate::field_share::MIN_PARTIES {
            return Err(ProtocolError::InvalidConfiguration(format!(
                "party count {t} too small"
            )));
        }
        Ok(SharedOneHot {
            components: (0..n)
                .map(|j| share_unchecked(FieldElement::from(j == index), t, rng))
                .collect(),
        })
    }

    /// Index of the single 1 after reconstruction; `None` if the vector is
    /// not a valid one-hot encoding.
    pub fn decode(&self) -> Option<usize> {
        let values: Vec<_> = self.components.iter().map(crate::field_share::reconstruct).collect();
        let ones: Vec<_> = values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v == FieldElement::ONE)
            .collect();
        let all_bits = values.iter().all(|v| v.value() <= 1);
        (all_bits && ones.len() == 1).then(|| ones[0].0)
    }

    /// Per-party view: the share each party holds of every component.
    pub fn party_view(&self, party: usize) -> SharedOneHot<FieldElement> {
        SharedOneHot {
            components: self.components.iter().map(|s| s.share_of(party)).collect(),
        }
    }
}

/// A shared 0/1 vector, such as the visited set of the loop check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SharedBitVector<S = ShareSet> {
    pub bits: Vec<S>,
}

impl<S> SharedBitVector<S> {
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(ProtocolError::InvalidOperands { expected, found })
    }
}

/// Trivial sharing of the unit vector at a public index.
pub fn onehot_of_public<E: Engine>(engine: &E, index: usize, n: usize) -> Result<SharedOneHot<E::Share>> {
    if index >= n {
        return Err(ProtocolError::InvalidIndex { index, n });
    }
    Ok(SharedOneHot {
        components: (0..n).map(|j| engine.public(FieldElement::from(j == index))).collect(),
    })
}

/// `v[index(e)]` as the inner product `<v, e>`; exactly `n` multiplications.
pub fn oblivious_read<E: Engine>(
    engine: &mut E,
    v: &SharedBitVector<E::Share>,
    e: &SharedOneHot<E::Share>,
) -> Result<E::Share> {
    check_len(v.len(), e.len())?;
    let pairs: Vec<_> = v.bits.iter().zip(&e.components).collect();
    let products = engine.mul_batch(&pairs)?;
    Ok(engine.sum(&products))
}

/// Sets `v[index(e)] <- v[index(e)] OR bit`, leaving other positions alone.
///
/// Computes `v[j] + bit*e[j] - bit*e[j]*v[j]` for every `j`: `2n`
/// multiplications in two rounds.
pub fn oblivious_conditional_write<E: Engine>(
    engine: &mut E,
    v: &SharedBitVector<E::Share>,
    e: &SharedOneHot<E::Share>,
    bit: &E::Share,
) -> Result<SharedBitVector<E::Share>> {
    check_len(v.len(), e.len())?;
    let pairs: Vec<_> = e.components.iter().map(|c| (bit, c)).collect();
    let selected = engine.mul_batch(&pairs)?;
    let pairs: Vec<_> = selected.iter().zip(&v.bits).collect();
    let overlap = engine.mul_batch(&pairs)?;
    let bits = v
        .bits
        .iter()
        .zip(selected.iter().zip(&overlap))
        .map(|(old, (sel, both))| engine.sub(&engine.add(old, sel), both))
        .collect();
    Ok(SharedBitVector { bits })
}

/// True iff at least one of the given bits is set. Opens a single masked
/// sum, so only emptiness of the frontier is revealed.
pub fn frontier_flag<E: Engine>(engine: &mut E, newly_marked: &[E::Share]) -> Result<bool> {
    let total = engine.sum(newly_marked);
    Ok(!engine.is_zero(&total, OpeningKind::Flag)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::SimEngine;
    use crate::field_share::{reconstruct, share};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bits(rng: &mut ChaCha8Rng, values: &[u64]) -> SharedBitVector {
        SharedBitVector {
            bits: values
                .iter()
                .map(|v| share(FieldElement::new(*v), 3, rng).unwrap())
                .collect(),
        }
    }

    fn open_bits(v: &SharedBitVector) -> Vec<u64> {
        v.bits.iter().map(|b| reconstruct(b).value()).collect()
    }

    #[test]
    fn onehot_public_encoding() {
        let e = SimEngine::seeded(3, 0);
        let v = onehot_of_public(&e, 0, 3).unwrap();
        assert_eq!(
            v.components.iter().map(|c| reconstruct(c).value()).collect::<Vec<_>>(),
            vec![1, 0, 0]
        );
        let v = onehot_of_public(&e, 2, 3).unwrap();
        assert_eq!(v.decode(), Some(2));
        assert_eq!(
            onehot_of_public(&e, 3, 3).unwrap_err(),
            ProtocolError::InvalidIndex { index: 3, n: 3 }
        );
    }

    #[test]
    fn onehot_random_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let n = rng.gen_range(1..40);
            let idx = rng.gen_range(0..n);
            let v = SharedOneHot::share(idx, n, 3, &mut rng).unwrap();
            assert_eq!(v.decode(), Some(idx));
        }
    }

    #[test]
    fn read_small_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut e = SimEngine::seeded(3, 1);
        let v = bits(&mut rng, &[0, 1, 0]);
        let at1 = SharedOneHot::share(1, 3, 3, &mut rng).unwrap();
        let at2 = SharedOneHot::share(2, 3, 3, &mut rng).unwrap();
        assert_eq!(
            reconstruct(&oblivious_read(&mut e, &v, &at1).unwrap()),
            FieldElement::ONE
        );
        assert_eq!(
            reconstruct(&oblivious_read(&mut e, &v, &at2).unwrap()),
            FieldElement::ZERO
        );
        assert_eq!(e.transcript().trace().multiplications, 6);
    }

    #[test]
    fn read_matches_plaintext_indexing() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut e = SimEngine::seeded(3, 2);
        for _ in 0..200 {
            let n = rng.gen_range(1..24);
            let plain: Vec<u64> = (0..n).map(|_| rng.gen_range(0..2)).collect();
            let idx = rng.gen_range(0..n);
            let v = bits(&mut rng, &plain);
            let sel = SharedOneHot::share(idx, n, 3, &mut rng).unwrap();
            let before = e.transcript().trace();
            let got = oblivious_read(&mut e, &v, &sel).unwrap();
            assert_eq!(reconstruct(&got).value(), plain[idx]);
            assert_eq!((e.transcript().trace() - before).multiplications, n as u64);
        }
    }

    #[test]
    fn read_length_mismatch() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut e = SimEngine::seeded(3, 3);
        let v = bits(&mut rng, &[0, 1]);
        let sel = SharedOneHot::share(0, 3, 3, &mut rng).unwrap();
        assert_eq!(
            oblivious_read(&mut e, &v, &sel).unwrap_err(),
            ProtocolError::InvalidOperands { expected: 2, found: 3 }
        );
    }

    #[test]
    fn conditional_write_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut e = SimEngine::seeded(3, 4);
        let one = e.public(FieldElement::ONE);
        let zero = e.zero();

        let v = bits(&mut rng, &[0, 0]);
        let at0 = SharedOneHot::share(0, 2, 3, &mut rng).unwrap();
        let w = oblivious_conditional_write(&mut e, &v, &at0, &one).unwrap();
        assert_eq!(open_bits(&w), vec![1, 0]);
        assert_eq!(e.transcript().trace().multiplications, 4);

        let w2 = oblivious_conditional_write(&mut e, &v, &at0, &zero).unwrap();
        assert_eq!(open_bits(&w2), vec![0, 0]);

        let set = bits(&mut rng, &[1, 0]);
        let w3 = oblivious_conditional_write(&mut e, &set, &at0, &one).unwrap();
        assert_eq!(open_bits(&w3), vec![1, 0]);
    }

    #[test]
    fn conditional_write_matches_plaintext_or() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut e = SimEngine::seeded(3, 6);
        for _ in 0..100 {
            let n = rng.gen_range(1..16);
            let plain: Vec<u64> = (0..n).map(|_| rng.gen_range(0..2)).collect();
            let idx = rng.gen_range(0..n);
            let b = rng.gen_range(0..2u64);
            let v = bits(&mut rng, &plain);
            let sel = SharedOneHot::share(idx, n, 3, &mut rng).unwrap();
            let bit = share(FieldElement::new(b), 3, &mut rng).unwrap();
            let w = oblivious_conditional_write(&mut e, &v, &sel, &bit).unwrap();
            let mut expect = plain.clone();
            expect[idx] |= b;
            assert_eq!(open_bits(&w), expect);
        }
    }

    #[test]
    fn frontier_flag_matches_any() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut e = SimEngine::seeded(3, 8);
        let v = bits(&mut rng, &[0, 0, 0]);
        assert!(!frontier_flag(&mut e, &v.bits).unwrap());
        let v = bits(&mut rng, &[0, 1, 0]);
        assert!(frontier_flag(&mut e, &v.bits).unwrap());
        for _ in 0..100 {
            let n = rng.gen_range(0..20);
            let plain: Vec<u64> = (0..n).map(|_| u64::from(rng.gen_bool(0.2))).collect();
            let v = bits(&mut rng, &plain);
            let before = e.transcript().trace().openings;
            assert_eq!(frontier_flag(&mut e, &v.bits).unwrap(), plain.contains(&1));
            // One masked product (two Beaver openings) plus the opened sum.
            assert_eq!(e.transcript().trace().openings - before, 3);
        }
    }
}
