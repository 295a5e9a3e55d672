//! Execution back-ends for the secure checks.
//!
//! The verification algorithms are written once against [`Engine`]. The
//! [`SimEngine`] holds every party's share of every value in one process
//! and is used for tests, benchmarks and the browser demo; the per-party
//! engine in [`crate::runtime`] holds one share and talks to its peers.
//! Both open exactly the same values in the same rounds.

use crate::error::Result;
use crate::field_share::{
    multiply_in_round, reconstruct, DealerStream, FieldElement, OpeningKind, Preprocessing, ShareSet, Transcript,
};

/// Arithmetic over shared values plus the two interactive gates.
pub trait Engine {
    type Share: Clone;

    fn party_count(&self) -> usize;

    /// Sharing of a public constant.
    fn public(&self, value: FieldElement) -> Self::Share;
    fn add(&self, a: &Self::Share, b: &Self::Share) -> Self::Share;
    fn sub(&self, a: &Self::Share, b: &Self::Share) -> Self::Share;
    fn scale(&self, a: &Self::Share, c: FieldElement) -> Self::Share;
    fn add_public(&self, a: &Self::Share, c: FieldElement) -> Self::Share;

    /// Multiplies independent pairs in a single communication round.
    fn mul_batch(&mut self, pairs: &[(&Self::Share, &Self::Share)]) -> Result<Vec<Self::Share>>;

    /// Masked zero tests on independent values: one round for the masking
    /// products, one for opening them.
    fn zero_test_batch(&mut self, values: &[&Self::Share], kind: OpeningKind) -> Result<Vec<bool>>;

    fn transcript(&self) -> &Transcript;

    fn zero(&self) -> Self::Share {
        self.public(FieldElement::ZERO)
    }

    fn sum<'a, I>(&self, items: I) -> Self::Share
    where
        I: IntoIterator<Item = &'a Self::Share>,
        Self::Share: 'a,
    {
        items.into_iter().fold(self.zero(), |acc, x| self.add(&acc, x))
    }

    /// `1 - a`, for shared bits.
    fn not(&self, a: &Self::Share) -> Self::Share {
        let neg = self.scale(a, -FieldElement::ONE);
        self.add_public(&neg, FieldElement::ONE)
    }

    fn mul(&mut self, a: &Self::Share, b: &Self::Share) -> Result<Self::Share> {
        Ok(self.mul_batch(&[(a, b)])?.pop().expect("one product per pair"))
    }

    fn is_zero(&mut self, a: &Self::Share, kind: OpeningKind) -> Result<bool> {
        Ok(self.zero_test_batch(&[a], kind)?[0])
    }
}

/// All-parties-in-one-process engine over [`ShareSet`]s.
#[derive(Debug, Clone)]
pub struct SimEngine<P = DealerStream> {
    t: usize,
    pre: P,
    transcript: Transcript,
}

impl SimEngine<DealerStream> {
    /// Engine with an unbounded seeded dealer.
    pub fn seeded(t: usize, seed: u64) -> Self {
        SimEngine::new(DealerStream::new(t, seed))
    }
}

impl<P: Preprocessing> SimEngine<P> {
    pub fn new(pre: P) -> Self {
        let t = pre.party_count();
        SimEngine {
            t,
            pre,
            transcript: Transcript::new(t),
        }
    }

    /// Keeps every opened value in the transcript.
    pub fn recording(mut self) -> Self {
        self.transcript = Transcript::recording(self.t);
        self
    }

    pub fn preprocessing(&self) -> &P {
        &self.pre
    }

    pub fn into_transcript(self) -> Transcript {
        self.transcript
    }

    /// Test helper: the value behind a share set.
    pub fn reveal(&self, s: &ShareSet) -> FieldElement {
        reconstruct(s)
    }
}

impl<P: Preprocessing> Engine for SimEngine<P> {
    type Share = ShareSet;

    fn party_count(&self) -> usize {
        self.t
    }

    fn public(&self, value: FieldElement) -> ShareSet {
        ShareSet::public(value, self.t)
    }

    fn add(&self, a: &ShareSet, b: &ShareSet) -> ShareSet {
        a.add(b)
    }

    fn sub(&self, a: &ShareSet, b: &ShareSet) -> ShareSet {
        a.sub(b)
    }

    fn scale(&self, a: &ShareSet, c: FieldElement) -> ShareSet {
        a.scale(c)
    }

    fn add_public(&self, a: &ShareSet, c: FieldElement) -> ShareSet {
        a.add_public(c)
    }

    fn mul_batch(&mut self, pairs: &[(&ShareSet, &ShareSet)]) -> Result<Vec<ShareSet>> {
        if pairs.is_empty() {
            return Ok(Vec::new());
        }
        self.transcript.begin_round(OpeningKind::Beaver);
        let mut out = Vec::with_capacity(pairs.len());
        for (x, y) in pairs {
            let triple = self.pre.next_triple()?;
            out.push(multiply_in_round(x, y, &triple, &mut self.transcript)?);
        }
        Ok(out)
    }

    fn zero_test_batch(&mut self, values: &[&ShareSet], kind: OpeningKind) -> Result<Vec<bool>> {
        if values.is_empty() {
            return Ok(Vec::new());
        }
        let mut masks = Vec::with_capacity(values.len());
        for _ in values {
            let mask = self.pre.next_mask()?;
            self.transcript.consume_mask(mask.id)?;
            masks.push(mask);
        }
        let pairs: Vec<_> = values.iter().zip(&masks).map(|(x, m)| (*x, &m.r)).collect();
        let products = self.mul_batch(&pairs)?;
        self.transcript.begin_round(kind);
        Ok(products
            .iter()
            .map(|p| {
                let opened = reconstruct(p);
                self.transcript.record_opening(opened);
                opened.is_zero()
            })
            .collect())
    }

    fn transcript(&self) -> &Transcript {
        &self.transcript
    }
}
