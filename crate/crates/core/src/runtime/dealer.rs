//! Party-side correlated randomness.
//!
//! The dealer is an offline role: it never sees inputs, only generates
//! Beaver triples and masks and hands each party its shares of them.

use std::collections::VecDeque;
use std::sync::{Arc, Mutex};

use super::wire::{MessageKind, ProtocolMessage, SessionId};
use crate::error::ProtocolError;
use crate::field_share::{DealerStream, FieldElement, Preprocessing};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PartyTriple {
    pub id: u64,
    pub a: FieldElement,
    pub b: FieldElement,
    pub c: FieldElement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PartyMask {
    pub id: u64,
    pub r: FieldElement,
}

pub trait PartyPreprocessing: Send {
    fn next_triple(&mut self) -> Result<PartyTriple, ProtocolError>;
    fn next_mask(&mut self) -> Result<PartyMask, ProtocolError>;
    /// Triples and masks still available, or `None` if unbounded.
    fn available(&self) -> Option<(u64, u64)>;
}

impl<P: PartyPreprocessing + ?Sized> PartyPreprocessing for Box<P> {
    fn next_triple(&mut self) -> Result<PartyTriple, ProtocolError> {
        (**self).next_triple()
    }
    fn next_mask(&mut self) -> Result<PartyMask, ProtocolError> {
        (**self).next_mask()
    }
    fn available(&self) -> Option<(u64, u64)> {
        (**self).available()
    }
}

/// A finite, fully materialized pool for one party.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PartyPool {
    pub triples: VecDeque<PartyTriple>,
    pub masks: VecDeque<PartyMask>,
}

impl PartyPool {
    /// Draws `triples` and `masks` from a dealer and splits them per party.
    pub fn split<P: Preprocessing>(dealer: &mut P, triples: u64, masks: u64) -> Result<Vec<PartyPool>, ProtocolError> {
        let t = dealer.party_count();
        let mut pools = vec![PartyPool::default(); t];
        for _ in 0..triples {
            let tr = dealer.next_triple()?;
            for (p, pool) in pools.iter_mut().enumerate() {
                pool.triples.push_back(PartyTriple {
                    id: tr.id,
                    a: tr.a.share_of(p),
                    b: tr.b.share_of(p),
                    c: tr.c.share_of(p),
                });
            }
        }
        for _ in 0..masks {
            let m = dealer.next_mask()?;
            for (p, pool) in pools.iter_mut().enumerate() {
                pool.masks.push_back(PartyMask {
                    id: m.id,
                    r: m.r.share_of(p),
                });
            }
        }
        Ok(pools)
    }
}

impl PartyPreprocessing for PartyPool {
    fn next_triple(&mut self) -> Result<PartyTriple, ProtocolError> {
        self.triples
            .pop_front()
            .ok_or(ProtocolError::InsufficientPreprocessing { resource: "triple" })
    }

    fn next_mask(&mut self) -> Result<PartyMask, ProtocolError> {
        self.masks
            .pop_front()
            .ok_or(ProtocolError::InsufficientPreprocessing { resource: "mask" })
    }

    fn available(&self) -> Option<(u64, u64)> {
        Some((self.triples.len() as u64, self.masks.len() as u64))
    }
}

const TRIPLE_TAG: u64 = 0;
const MASK_TAG: u64 = 1;

struct DealerState {
    session: SessionId,
    stream: DealerStream,
    limits: Option<(u64, u64)>,
    chunk: usize,
    deliveries: u32,
    triple_frames: Vec<VecDeque<Vec<u8>>>,
    mask_frames: Vec<VecDeque<Vec<u8>>>,
}

impl DealerState {
    fn frame(&mut self, payload: Vec<FieldElement>) -> Vec<u8> {
        self.deliveries += 1;
        ProtocolMessage::new(self.session, self.deliveries, MessageKind::TripleDelivery, payload).encode()
    }

    fn deliver_triples(&mut self) -> Result<(), ProtocolError> {
        let t = self.triple_frames.len();
        let mut payloads: Vec<Vec<FieldElement>> = vec![vec![FieldElement::new(TRIPLE_TAG)]; t];
        for k in 0..self.chunk {
            let tr = match self.stream.next_triple() {
                Ok(tr) => tr,
                Err(e) if k == 0 => return Err(e),
                Err(_) => break,
            };
            for (p, out) in payloads.iter_mut().enumerate() {
                out.extend([
                    FieldElement::new(tr.id),
                    tr.a.share_of(p),
                    tr.b.share_of(p),
                    tr.c.share_of(p),
                ]);
            }
        }
        for (p, payload) in payloads.into_iter().enumerate() {
            let f = self.frame(payload);
            self.triple_frames[p].push_back(f);
        }
        Ok(())
    }

    fn deliver_masks(&mut self) -> Result<(), ProtocolError> {
        let t = self.mask_frames.len();
        let mut payloads: Vec<Vec<FieldElement>> = vec![vec![FieldElement::new(MASK_TAG)]; t];
        for k in 0..self.chunk {
            let m = match self.stream.next_mask() {
                Ok(m) => m,
                Err(e) if k == 0 => return Err(e),
                Err(_) => break,
            };
            for (p, out) in payloads.iter_mut().enumerate() {
                out.extend([FieldElement::new(m.id), m.r.share_of(p)]);
            }
        }
        for (p, payload) in payloads.into_iter().enumerate() {
            let f = self.frame(payload);
            self.mask_frames[p].push_back(f);
        }
        Ok(())
    }
}

/// An online dealer generating randomness in chunks as parties ask for it.
///
/// Every party receives its share of each chunk as a `TRIPLE_DELIVERY`
/// frame. Values match a [`DealerStream`] with the same seed, so a run
/// over this dealer opens exactly what a simulated run opens.
#[derive(Clone)]
pub struct DealerService {
    state: Arc<Mutex<DealerState>>,
    t: usize,
}

impl DealerService {
    pub const DEFAULT_CHUNK: usize = 4096;

    pub fn new(t: usize, seed: u64, session: SessionId) -> Self {
        DealerService {
            state: Arc::new(Mutex::new(DealerState {
                session,
                stream: DealerStream::new(t, seed),
                limits: None,
                chunk: Self::DEFAULT_CHUNK,
                deliveries: 0,
                triple_frames: vec![VecDeque::new(); t],
                mask_frames: vec![VecDeque::new(); t],
            })),
            t,
        }
    }

    /// Caps the total number of triples and masks the dealer will issue.
    pub fn with_limits(self, triples: u64, masks: u64) -> Self {
        {
            let mut s = self.state.lock().expect("dealer lock");
            s.stream = s.stream.clone().with_limits(triples, masks);
            s.limits = Some((triples, masks));
        }
        self
    }

    pub fn handles(&self) -> Vec<DealerHandle> {
        (0..self.t)
            .map(|party| DealerHandle {
                party,
                state: Arc::clone(&self.state),
                triples: VecDeque::new(),
                masks: VecDeque::new(),
                taken: (0, 0),
            })
            .collect()
    }
}

pub struct DealerHandle {
    party: usize,
    state: Arc<Mutex<DealerState>>,
    triples: VecDeque<PartyTriple>,
    masks: VecDeque<PartyMask>,
    taken: (u64, u64),
}

impl DealerHandle {
    fn fetch(&mut self, want_triples: bool) -> Result<(), ProtocolError> {
        let frame = {
            let mut s = self
                .state
                .lock()
                .map_err(|_| ProtocolError::Transport("dealer poisoned".into()))?;
            let queue_empty = if want_triples {
                s.triple_frames[self.party].is_empty()
            } else {
                s.mask_frames[self.party].is_empty()
            };
            if queue_empty {
                if want_triples {
                    s.deliver_triples()?;
                } else {
                    s.deliver_masks()?;
                }
            }
            let queue = if want_triples {
                &mut s.triple_frames[self.party]
            } else {
                &mut s.mask_frames[self.party]
            };
            queue.pop_front().expect("delivered")
        };
        let msg = ProtocolMessage::decode(&frame).map_err(|e| ProtocolError::Transport(e.to_string()))?;
        let (tag, body) = msg
            .payload
            .split_first()
            .ok_or_else(|| ProtocolError::Transport("empty delivery".into()))?;
        match tag.value() {
            TRIPLE_TAG => self.triples.extend(body.chunks_exact(4).map(|r| PartyTriple {
                id: r[0].value(),
                a: r[1],
                b: r[2],
                c: r[3],
            })),
            MASK_TAG => self.masks.extend(body.chunks_exact(2).map(|r| PartyMask {
                id: r[0].value(),
                r: r[1],
            })),
            other => return Err(ProtocolError::Transport(format!("unknown delivery tag {other}"))),
        }
        Ok(())
    }
}

impl PartyPreprocessing for DealerHandle {
    fn next_triple(&mut self) -> Result<PartyTriple, ProtocolError> {
        if self.triples.is_empty() {
            self.fetch(true)?;
        }
        self.taken.0 += 1;
        self.triples
            .pop_front()
            .ok_or(ProtocolError::InsufficientPreprocessing { resource: "triple" })
    }

    fn next_mask(&mut self) -> Result<PartyMask, ProtocolError> {
        if self.masks.is_empty() {
            self.fetch(false)?;
        }
        self.taken.1 += 1;
        self.masks
            .pop_front()
            .ok_or(ProtocolError::InsufficientPreprocessing { resource: "mask" })
    }

    fn available(&self) -> Option<(u64, u64)> {
        let limits = self.state.lock().ok()?.limits?;
        Some((
            limits.0.saturating_sub(self.taken.0),
            limits.1.saturating_sub(self.taken.1),
        ))
    }
}
