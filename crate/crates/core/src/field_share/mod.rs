//! Additive secret sharing over GF(2^61 - 1).
//!
//! A secret `x` is split into `t` shares whose sum is `x`; the first `t - 1`
//! are uniform, so any proper subset is independent of the secret. Linear
//! maps are evaluated locally. Products use Beaver triples from an offline
//! dealer, and the only way a protocol learns anything about a secret is
//! [`masked_zero_test`], which opens `r * x` for a fresh nonzero `r`.

mod dealer;
mod field;
mod transcript;

use rand::Rng;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

pub use dealer::{dealer_generate, DealerPool, DealerStream, Preprocessing};
pub use field::{FieldElement, ParseFieldError, MODULUS};
pub use transcript::{Opening, OpeningKind, RoundEntry, Transcript};

use crate::error::{ProtocolError, Result};

/// Minimum party count for which sharing is defined.
pub const MIN_PARTIES: usize = 2;

/// The `t` additive shares of one secret, indexed by party.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShareSet {
    shares: SmallVec<[FieldElement; 4]>,
}

impl std::fmt::Debug for ShareSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.shares.iter()).finish()
    }
}

impl ShareSet {
    pub fn from_shares(shares: impl IntoIterator<Item = FieldElement>) -> Self {
        ShareSet {
            shares: shares.into_iter().collect(),
        }
    }

    /// Assembles a share set from per-party parts, failing if any is absent.
    pub fn from_parts(parts: &[Option<FieldElement>]) -> Result<Self> {
        parts
            .iter()
            .enumerate()
            .map(|(i, p)| p.ok_or(ProtocolError::IncompleteShares { missing: i }))
            .collect::<Result<SmallVec<_>>>()
            .map(|shares| ShareSet { shares })
    }

    /// Trivial sharing of a public constant: party 0 holds it, the rest hold 0.
    pub fn public(value: FieldElement, t: usize) -> Self {
        let mut shares = SmallVec::from_elem(FieldElement::ZERO, t);
        shares[0] = value;
        ShareSet { shares }
    }

    pub fn party_count(&self) -> usize {
        self.shares.len()
    }

    pub fn shares(&self) -> &[FieldElement] {
        &self.shares
    }

    pub fn share_of(&self, party: usize) -> FieldElement {
        self.shares[party]
    }

    fn check_width(&self, other: &ShareSet) -> Result<()> {
        if self.party_count() == other.party_count() {
            Ok(())
        } else {
            Err(ProtocolError::InvalidOperands {
                expected: self.party_count(),
                found: other.party_count(),
            })
        }
    }

    // The arithmetic helpers below assume equal widths; callers that take
    // untrusted operands go through `linear_combine`.

    #[inline]
    pub fn add(&self, other: &ShareSet) -> ShareSet {
        debug_assert_eq!(self.party_count(), other.party_count());
        ShareSet {
            shares: self.shares.iter().zip(&other.shares).map(|(a, b)| *a + *b).collect(),
        }
    }

    #[inline]
    pub fn sub(&self, other: &ShareSet) -> ShareSet {
        debug_assert_eq!(self.party_count(), other.party_count());
        ShareSet {
            shares: self.shares.iter().zip(&other.shares).map(|(a, b)| *a - *b).collect(),
        }
    }

    #[inline]
    pub fn scale(&self, c: FieldElement) -> ShareSet {
        ShareSet {
            shares: self.shares.iter().map(|a| *a * c).collect(),
        }
    }

    #[inline]
    pub fn add_public(&self, c: FieldElement) -> ShareSet {
        let mut out = self.clone();
        out.shares[0] += c;
        out
    }
}

/// Splits `secret` into `t` additive shares.
pub fn share<R: Rng + ?Sized>(secret: FieldElement, t: usize, rng: &mut R) -> Result<ShareSet> {
    if t < MIN_PARTIES {
        return Err(ProtocolError::InvalidConfiguration(format!(
            "party count {t} is below the minimum of {MIN_PARTIES}"
        )));
    }
    Ok(share_unchecked(secret, t, rng))
}

#[inline]
pub(crate) fn share_unchecked<R: Rng + ?Sized>(secret: FieldElement, t: usize, rng: &mut R) -> ShareSet {
    let mut shares: SmallVec<[FieldElement; 4]> = SmallVec::with_capacity(t);
    let mut acc = FieldElement::ZERO;
    for _ in 0..t - 1 {
        let s = FieldElement::random(rng);
        acc += s;
        shares.push(s);
    }
    shares.push(secret - acc);
    ShareSet { shares }
}

/// Recombines all shares.
#[inline]
pub fn reconstruct(s: &ShareSet) -> FieldElement {
    s.shares.iter().sum()
}

/// Computes `offset + sum(c_i * s_i)` without communication.
pub fn linear_combine(terms: &[(FieldElement, &ShareSet)], offset: FieldElement) -> Result<ShareSet> {
    let Some((_, first)) = terms.first() else {
        return Err(ProtocolError::InvalidConfiguration(
            "linear combination needs at least one term to fix the party count".into(),
        ));
    };
    let t = first.party_count();
    let mut out = ShareSet::public(offset, t);
    for (c, s) in terms {
        out.check_width(s)?;
        for (o, v) in out.shares.iter_mut().zip(&s.shares) {
            *o += *c * *v;
        }
    }
    Ok(out)
}

/// A dealer-issued multiplication triple: shares of `a`, `b` and `a * b`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BeaverTriple {
    pub id: u64,
    pub a: ShareSet,
    pub b: ShareSet,
    pub c: ShareSet,
}

/// A dealer-issued sharing of a uniform nonzero field element.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomMask {
    pub id: u64,
    pub r: ShareSet,
}

/// Multiplies two shared values with one Beaver triple in its own
/// communication round. Opens exactly `x - a` and `y - b`.
pub fn beaver_multiply(
    x: &ShareSet,
    y: &ShareSet,
    triple: &BeaverTriple,
    transcript: &mut Transcript,
) -> Result<ShareSet> {
    transcript.begin_round(OpeningKind::Beaver);
    multiply_in_round(x, y, triple, transcript)
}

/// Beaver multiplication inside a round already opened by the caller, so
/// that independent products can share one round.
pub(crate) fn multiply_in_round(
    x: &ShareSet,
    y: &ShareSet,
    triple: &BeaverTriple,
    transcript: &mut Transcript,
) -> Result<ShareSet> {
    x.check_width(y)?;
    x.check_width(&triple.a)?;
    x.check_width(&triple.b)?;
    x.check_width(&triple.c)?;
    transcript.consume_triple(triple.id)?;

    let d: FieldElement = x.shares.iter().zip(&triple.a.shares).map(|(x, a)| *x - *a).sum();
    let e: FieldElement = y.shares.iter().zip(&triple.b.shares).map(|(y, b)| *y - *b).sum();
    transcript.record_multiplication();
    transcript.record_opening(d);
    transcript.record_opening(e);

    let mut shares: SmallVec<[FieldElement; 4]> = triple
        .c
        .shares
        .iter()
        .zip(triple.a.shares.iter().zip(&triple.b.shares))
        .map(|(c, (a, b))| *c + d * *b + e * *a)
        .collect();
    shares[0] += d * e;
    Ok(ShareSet { shares })
}

/// Reveals only whether `x` is zero, by opening `r * x` for the mask `r`.
///
/// The product needs one Beaver triple, so a zero test costs two rounds and
/// three openings: the triple's masked operands and the masked product. For
/// nonzero `x` the opened product is uniform over the nonzero elements.
pub fn masked_zero_test(
    x: &ShareSet,
    mask: &RandomMask,
    triple: &BeaverTriple,
    transcript: &mut Transcript,
) -> Result<bool> {
    transcript.consume_mask(mask.id)?;
    let product = beaver_multiply(x, &mask.r, triple, transcript)?;
    transcript.begin_round(OpeningKind::ZeroTest);
    let opened = reconstruct(&product);
    transcript.record_opening(opened);
    Ok(opened.is_zero())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    fn fe(v: u64) -> FieldElement {
        FieldElement::new(v)
    }

    #[test]
    fn share_and_reconstruct_small_values() {
        let mut rng = rng();
        let s = share(fe(5), 3, &mut rng).unwrap();
        assert_eq!(s.party_count(), 3);
        assert_eq!(reconstruct(&s), fe(5));
        let z = share(FieldElement::ZERO, 3, &mut rng).unwrap();
        assert_eq!(reconstruct(&z), FieldElement::ZERO);
        let top = share(fe(MODULUS - 1), 3, &mut rng).unwrap();
        assert_eq!(reconstruct(&top).value(), (1u64 << 61) - 2);
    }

    #[test]
    fn share_rejects_single_party() {
        let err = share(fe(1), 1, &mut rng()).unwrap_err();
        assert!(matches!(err, ProtocolError::InvalidConfiguration(_)));
    }

    #[test]
    fn reconstruct_fixed_shares() {
        let s = ShareSet::from_shares([fe(1), fe(2), fe(3)]);
        assert_eq!(reconstruct(&s), fe(6));
        let w = ShareSet::from_shares([fe(MODULUS - 1), fe(1), fe(0)]);
        assert_eq!(reconstruct(&w), FieldElement::ZERO);
    }

    #[test]
    fn missing_share_is_an_error() {
        let err = ShareSet::from_parts(&[Some(fe(1)), None, Some(fe(3))]).unwrap_err();
        assert_eq!(err, ProtocolError::IncompleteShares { missing: 1 });
    }

    #[test]
    fn round_trip_many() {
        let mut rng = rng();
        for _ in 0..1000 {
            let x = FieldElement::random(&mut rng);
            let s = share(x, 3, &mut rng).unwrap();
            assert_eq!(reconstruct(&s), x);
        }
    }

    #[test]
    fn linear_combination_cases() {
        let mut rng = rng();
        let three = share(fe(3), 3, &mut rng).unwrap();
        let four = share(fe(4), 3, &mut rng).unwrap();
        let sum = linear_combine(
            &[(FieldElement::ONE, &three), (FieldElement::ONE, &four)],
            FieldElement::ZERO,
        )
        .unwrap();
        assert_eq!(reconstruct(&sum), fe(7));

        let x = share(fe(1234), 3, &mut rng).unwrap();
        let nine = linear_combine(&[(FieldElement::ZERO, &x)], fe(9)).unwrap();
        assert_eq!(reconstruct(&nine), fe(9));

        let zero = linear_combine(&[(fe(MODULUS - 1), &x), (FieldElement::ONE, &x)], FieldElement::ZERO).unwrap();
        assert_eq!(reconstruct(&zero), FieldElement::ZERO);
    }

    #[test]
    fn linear_combination_rejects_mixed_widths() {
        let mut rng = rng();
        let a = share(fe(1), 3, &mut rng).unwrap();
        let b = share(fe(1), 4, &mut rng).unwrap();
        let err = linear_combine(&[(FieldElement::ONE, &a), (FieldElement::ONE, &b)], FieldElement::ZERO).unwrap_err();
        assert_eq!(err, ProtocolError::InvalidOperands { expected: 3, found: 4 });
    }

    #[test]
    fn beaver_multiply_small_cases() {
        let mut rng = rng();
        let (triples, _) = dealer_generate(2, 0, 3, &mut rng);
        let mut tr = Transcript::recording(3);
        let x = share(fe(3), 3, &mut rng).unwrap();
        let y = share(fe(4), 3, &mut rng).unwrap();
        let z = beaver_multiply(&x, &y, &triples[0], &mut tr).unwrap();
        assert_eq!(reconstruct(&z), fe(12));

        let zero = share(FieldElement::ZERO, 3, &mut rng).unwrap();
        let any = share(FieldElement::random(&mut rng), 3, &mut rng).unwrap();
        let z = beaver_multiply(&zero, &any, &triples[1], &mut tr).unwrap();
        assert_eq!(reconstruct(&z), FieldElement::ZERO);

        let trace = tr.trace();
        assert_eq!(trace.multiplications, 2);
        assert_eq!(trace.openings, 4);
        assert_eq!(trace.rounds, 2);
        assert_eq!(tr.openings().len(), 4);
    }

    #[test]
    fn beaver_multiply_matches_plaintext_product() {
        let mut rng = rng();
        let (triples, _) = dealer_generate(500, 0, 3, &mut rng);
        let mut tr = Transcript::new(3);
        for triple in &triples {
            let a = FieldElement::random(&mut rng);
            let b = FieldElement::random(&mut rng);
            let x = share(a, 3, &mut rng).unwrap();
            let y = share(b, 3, &mut rng).unwrap();
            let z = beaver_multiply(&x, &y, triple, &mut tr).unwrap();
            assert_eq!(reconstruct(&z), a * b);
        }
    }

    #[test]
    fn triple_reuse_aborts() {
        let mut rng = rng();
        let (triples, _) = dealer_generate(1, 0, 3, &mut rng);
        let mut tr = Transcript::new(3);
        let x = share(fe(2), 3, &mut rng).unwrap();
        beaver_multiply(&x, &x, &triples[0], &mut tr).unwrap();
        let err = beaver_multiply(&x, &x, &triples[0], &mut tr).unwrap_err();
        assert_eq!(err, ProtocolError::TripleReuse { id: 0 });
    }

    #[test]
    fn zero_test_decides_zero() {
        let mut rng = rng();
        let (triples, masks) = dealer_generate(3, 3, 3, &mut rng);
        let mut tr = Transcript::recording(3);
        let zero = share(FieldElement::ZERO, 3, &mut rng).unwrap();
        assert!(masked_zero_test(&zero, &masks[0], &triples[0], &mut tr).unwrap());
        let seven = share(fe(7), 3, &mut rng).unwrap();
        assert!(!masked_zero_test(&seven, &masks[1], &triples[1], &mut tr).unwrap());

        // Final check shape of the loop test: count - n with count == n.
        let count = share(fe(6), 3, &mut rng).unwrap();
        let diff = count.add_public(-fe(6));
        assert!(masked_zero_test(&diff, &masks[2], &triples[2], &mut tr).unwrap());

        let trace = tr.trace();
        assert_eq!(trace.multiplications, 3);
        assert_eq!(trace.openings, 9);
        assert_eq!(trace.rounds, 6);
        let kinds: Vec<_> = tr.openings().iter().map(|o| o.kind).collect();
        assert_eq!(
            &kinds[..3],
            &[OpeningKind::Beaver, OpeningKind::Beaver, OpeningKind::ZeroTest]
        );
    }

    #[test]
    fn mask_reuse_aborts() {
        let mut rng = rng();
        let (triples, masks) = dealer_generate(2, 1, 3, &mut rng);
        let mut tr = Transcript::new(3);
        let x = share(fe(1), 3, &mut rng).unwrap();
        masked_zero_test(&x, &masks[0], &triples[0], &mut tr).unwrap();
        let err = masked_zero_test(&x, &masks[0], &triples[1], &mut tr).unwrap_err();
        assert_eq!(err, ProtocolError::MaskReuse { id: 0 });
    }

    #[test]
    fn dealer_output_is_well_formed() {
        let mut rng = rng();
        let (t0, m0) = dealer_generate(0, 0, 3, &mut rng);
        assert!(t0.is_empty() && m0.is_empty());

        let (triples, masks) = dealer_generate(100, 100, 3, &mut rng);
        assert_eq!(triples.len(), 100);
        for t in &triples {
            assert_eq!(reconstruct(&t.c), reconstruct(&t.a) * reconstruct(&t.b));
        }
        for m in &masks {
            assert!(!reconstruct(&m.r).is_zero());
        }
    }
}
