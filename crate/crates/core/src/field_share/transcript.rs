use serde::{Deserialize, Serialize};

use super::FieldElement;
use crate::error::{ProtocolError, Result};
use crate::oblivious::ObliviousTrace;

/// What an opened value was used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpeningKind {
    /// A masked operand `x - a` or `y - b` of a Beaver multiplication.
    Beaver,
    /// The masked product `r * x` of a zero test.
    ZeroTest,
    /// A zero test deciding whether the traversal frontier is empty.
    Flag,
}

impl OpeningKind {
    pub fn as_str(self) -> &'static str {
        match self {
            OpeningKind::Beaver => "beaver",
            OpeningKind::ZeroTest => "zero_test",
            OpeningKind::Flag => "flag",
        }
    }
}

/// One publicly opened field element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Opening {
    pub round: u32,
    pub kind: OpeningKind,
    pub value: FieldElement,
}

/// What one communication round opened.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundEntry {
    pub kind: OpeningKind,
    pub openings: u64,
}

/// Log of everything a protocol run made public.
///
/// Counters are always maintained. Individual opened values are kept only
/// when recording is enabled, since large runs open hundreds of millions of
/// values.
#[derive(Debug, Clone)]
pub struct Transcript {
    parties: usize,
    trace: ObliviousTrace,
    record: bool,
    openings: Vec<Opening>,
    round_kind: Option<OpeningKind>,
    schedule: Vec<RoundEntry>,
    last_triple: Option<u64>,
    last_mask: Option<u64>,
}

impl Transcript {
    /// Counters only.
    pub fn new(parties: usize) -> Self {
        Transcript {
            parties,
            trace: ObliviousTrace::default(),
            record: false,
            openings: Vec::new(),
            round_kind: None,
            schedule: Vec::new(),
            last_triple: None,
            last_mask: None,
        }
    }

    /// Counters plus every opened value.
    pub fn recording(parties: usize) -> Self {
        Transcript {
            record: true,
            ..Transcript::new(parties)
        }
    }

    pub fn parties(&self) -> usize {
        self.parties
    }

    pub fn trace(&self) -> ObliviousTrace {
        self.trace
    }

    pub fn openings(&self) -> &[Opening] {
        &self.openings
    }

    /// Kind and opening count of every round so far, in order. Kept even
    /// when values are not recorded.
    pub fn schedule(&self) -> &[RoundEntry] {
        &self.schedule
    }

    pub fn is_recording(&self) -> bool {
        self.record
    }

    /// Number of the current communication round (1-based; 0 before any round).
    pub fn current_round(&self) -> u32 {
        self.trace.rounds as u32
    }

    /// Starts a new communication round in which every party sends one
    /// frame to every other party.
    pub fn begin_round(&mut self, kind: OpeningKind) {
        let t = self.parties as u64;
        self.trace.rounds += 1;
        self.trace.messages += t * (t - 1);
        self.round_kind = Some(kind);
        self.schedule.push(RoundEntry { kind, openings: 0 });
    }

    pub(crate) fn record_multiplication(&mut self) {
        self.trace.multiplications += 1;
    }

    pub(crate) fn record_opening(&mut self, value: FieldElement) {
        self.trace.openings += 1;
        if let Some(last) = self.schedule.last_mut() {
            last.openings += 1;
        }
        if self.record {
            let kind = self.round_kind.unwrap_or(OpeningKind::Beaver);
            self.openings.push(Opening {
                round: self.current_round(),
                kind,
                value,
            });
        }
    }

    /// Marks a triple as consumed. Triples are issued with increasing ids
    /// and must be consumed in issue order, so any id at or below the last
    /// consumed one is a reuse.
    pub fn consume_triple(&mut self, id: u64) -> Result<()> {
        match self.last_triple {
            Some(last) if id <= last => Err(ProtocolError::TripleReuse { id }),
            _ => {
                self.last_triple = Some(id);
                Ok(())
            }
        }
    }

    pub fn consume_mask(&mut self, id: u64) -> Result<()> {
        match self.last_mask {
            Some(last) if id <= last => Err(ProtocolError::MaskReuse { id }),
            _ => {
                self.last_mask = Some(id);
                Ok(())
            }
        }
    }
}
