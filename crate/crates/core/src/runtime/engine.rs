use super::dealer::PartyPreprocessing;
use super::transport::Transport;
use super::wire::{MessageKind, ProtocolMessage, SessionId};
use crate::engine::Engine;
use crate::error::{ProtocolError, Result};
use crate::field_share::{FieldElement, OpeningKind, Transcript};

/// One party's view of the protocol: it holds a single share of every
/// value and talks to its peers for each opening.
///
/// Public constants are carried by party 0 alone so that shares still sum
/// to the right value.
pub struct PartyEngine<'a> {
    party: usize,
    parties: usize,
    session: SessionId,
    round_base: u32,
    transport: &'a mut dyn Transport,
    pre: &'a mut dyn PartyPreprocessing,
    transcript: Transcript,
}

impl<'a> PartyEngine<'a> {
    /// `round_base` offsets wire round numbers so they keep increasing
    /// across queries in one session.
    pub fn new(
        session: SessionId,
        round_base: u32,
        transport: &'a mut dyn Transport,
        pre: &'a mut dyn PartyPreprocessing,
        recording: bool,
    ) -> Self {
        let parties = transport.parties();
        PartyEngine {
            party: transport.party(),
            parties,
            session,
            round_base,
            transport,
            pre,
            transcript: if recording {
                Transcript::recording(parties)
            } else {
                Transcript::new(parties)
            },
        }
    }

    pub fn party(&self) -> usize {
        self.party
    }

    pub fn into_transcript(self) -> Transcript {
        self.transcript
    }

    /// Wire round of the most recent protocol round.
    pub fn wire_round(&self) -> u32 {
        self.round_base + self.transcript.current_round()
    }

    fn peers(&self) -> impl Iterator<Item = usize> {
        let me = self.party;
        (0..self.parties).filter(move |p| *p != me)
    }

    /// Sends `payload` to every peer and returns the element-wise sum of all
    /// parties' payloads (including our own).
    pub fn exchange(&mut self, round: u32, kind: MessageKind, payload: Vec<FieldElement>) -> Result<Vec<FieldElement>> {
        let msg = ProtocolMessage::new(self.session, round, kind, payload);
        for p in self.peers() {
            self.transport
                .send(p, &msg)
                .map_err(|e| ProtocolError::Transport(e.to_string()))?;
        }
        let mut total = msg.payload;
        for p in self.peers() {
            let got = self
                .transport
                .recv(p)
                .map_err(|e| ProtocolError::Transport(e.to_string()))?;
            if got.session != self.session || got.round != round || got.kind != kind || got.payload.len() != total.len()
            {
                return Err(ProtocolError::Transport(format!(
                    "party {p} sent an out-of-step frame (round {}, kind {:?}, {} elements)",
                    got.round,
                    got.kind,
                    got.payload.len()
                )));
            }
            for (acc, x) in total.iter_mut().zip(got.payload) {
                *acc += x;
            }
        }
        Ok(total)
    }

    fn constant(&self, value: FieldElement) -> FieldElement {
        if self.party == 0 {
            value
        } else {
            FieldElement::ZERO
        }
    }
}

impl Engine for PartyEngine<'_> {
    type Share = FieldElement;

    fn party_count(&self) -> usize {
        self.parties
    }

    fn public(&self, value: FieldElement) -> FieldElement {
        self.constant(value)
    }

    fn add(&self, a: &FieldElement, b: &FieldElement) -> FieldElement {
        *a + *b
    }

    fn sub(&self, a: &FieldElement, b: &FieldElement) -> FieldElement {
        *a - *b
    }

    fn scale(&self, a: &FieldElement, c: FieldElement) -> FieldElement {
        *a * c
    }

    fn add_public(&self, a: &FieldElement, c: FieldElement) -> FieldElement {
        *a + self.constant(c)
    }

    fn mul_batch(&mut self, pairs: &[(&FieldElement, &FieldElement)]) -> Result<Vec<FieldElement>> {
        if pairs.is_empty() {
            return Ok(Vec::new());
        }
        let mut triples = Vec::with_capacity(pairs.len());
        for _ in pairs {
            triples.push(self.pre.next_triple()?);
        }
        self.transcript.begin_round(OpeningKind::Beaver);
        let round = self.wire_round();
        let masked = pairs
            .iter()
            .zip(&triples)
            .flat_map(|((x, y), tr)| [**x - tr.a, **y - tr.b])
            .collect();
        let opened = self.exchange(round, MessageKind::OpenValue, masked)?;
        let mut out = Vec::with_capacity(pairs.len());
        for (tr, de) in triples.iter().zip(opened.chunks_exact(2)) {
            let (d, e) = (de[0], de[1]);
            self.transcript.consume_triple(tr.id)?;
            self.transcript.record_multiplication();
            self.transcript.record_opening(d);
            self.transcript.record_opening(e);
            out.push(tr.c + d * tr.b + e * tr.a + self.constant(d * e));
        }
        Ok(out)
    }

    fn zero_test_batch(&mut self, values: &[&FieldElement], kind: OpeningKind) -> Result<Vec<bool>> {
        if values.is_empty() {
            return Ok(Vec::new());
        }
        let mut masks = Vec::with_capacity(values.len());
        for _ in values {
            let m = self.pre.next_mask()?;
            self.transcript.consume_mask(m.id)?;
            masks.push(m);
        }
        let pairs: Vec<_> = values.iter().zip(&masks).map(|(x, m)| (*x, &m.r)).collect();
        let products = self.mul_batch(&pairs)?;
        self.transcript.begin_round(kind);
        let round = self.wire_round();
        let wire_kind = if kind == OpeningKind::Flag {
            MessageKind::Flag
        } else {
            MessageKind::OpenValue
        };
        let opened = self.exchange(round, wire_kind, products)?;
        Ok(opened
            .into_iter()
            .map(|v| {
                self.transcript.record_opening(v);
                v.is_zero()
            })
            .collect())
    }

    fn transcript(&self) -> &Transcript {
        &self.transcript
    }
}
