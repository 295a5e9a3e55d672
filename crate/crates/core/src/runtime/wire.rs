//! Length-prefixed binary frames exchanged between parties.
//!
//! ```text
//! u32 BE   length of the rest of the frame
//! [u8;16]  session id
//! u32 BE   round
//! u8       kind
//! u32 BE   payload element count
//! u64 LE * count   field elements
//! ```

use std::fmt;
use std::io::{self, Read, Write};
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::field_share::FieldElement;

const HEADER_LEN: usize = 16 + 4 + 1 + 4;
/// Frames above this size are rejected rather than allocated.
pub const MAX_FRAME_LEN: usize = 1 << 28;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WireError {
    #[error("frame truncated: need {needed} bytes, have {available}")]
    Truncated { needed: usize, available: usize },
    #[error("frame of {0} bytes exceeds the size limit")]
    Oversized(usize),
    #[error("unknown message kind {0}")]
    UnknownKind(u8),
    #[error("payload element {0} is not a canonical field element")]
    NonCanonical(u64),
    #[error("frame length {declared} does not match its contents ({actual})")]
    LengthMismatch { declared: usize, actual: usize },
    #[error("connection closed")]
    Closed,
    #[error("i/o error: {0}")]
    Io(String),
    #[error("invalid session id {0:?}")]
    InvalidSessionId(String),
}

impl From<io::Error> for WireError {
    fn from(e: io::Error) -> Self {
        match e.kind() {
            io::ErrorKind::UnexpectedEof => WireError::Closed,
            _ => WireError::Io(e.to_string()),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct SessionId(pub [u8; 16]);

impl SessionId {
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut id = [0u8; 16];
        rng.fill(&mut id);
        SessionId(id)
    }
}

impl fmt::Display for SessionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.0 {
            write!(f, "{b:02x}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for SessionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SessionId({self})")
    }
}

impl FromStr for SessionId {
    type Err = WireError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || WireError::InvalidSessionId(s.to_string());
        if s.len() != 32 || !s.is_ascii() {
            return Err(bad());
        }
        let mut id = [0u8; 16];
        for (i, b) in id.iter_mut().enumerate() {
            *b = u8::from_str_radix(&s[2 * i..2 * i + 2], 16).map_err(|_| bad())?;
        }
        Ok(SessionId(id))
    }
}

impl Serialize for SessionId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SessionId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum MessageKind {
    /// A client's shares of its forwarding table.
    ShareIngest = 1,
    /// Shares of values being opened during a multiplication or zero test.
    OpenValue = 2,
    /// Shares of a masked frontier test.
    Flag = 3,
    /// A party's final verdict, compared across parties.
    Verdict = 4,
    /// Correlated randomness from the dealer.
    TripleDelivery = 5,
}

impl TryFrom<u8> for MessageKind {
    type Error = WireError;
    fn try_from(b: u8) -> Result<Self, Self::Error> {
        Ok(match b {
            1 => MessageKind::ShareIngest,
            2 => MessageKind::OpenValue,
            3 => MessageKind::Flag,
            4 => MessageKind::Verdict,
            5 => MessageKind::TripleDelivery,
            other => return Err(WireError::UnknownKind(other)),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProtocolMessage {
    pub session: SessionId,
    pub round: u32,
    pub kind: MessageKind,
    pub payload: Vec<FieldElement>,
}

impl ProtocolMessage {
    pub fn new(session: SessionId, round: u32, kind: MessageKind, payload: Vec<FieldElement>) -> Self {
        ProtocolMessage {
            session,
            round,
            kind,
            payload,
        }
    }

    fn body_len(&self) -> usize {
        HEADER_LEN + 8 * self.payload.len()
    }

    /// The complete frame, length prefix included.
    pub fn encode(&self) -> Vec<u8> {
        let body = self.body_len();
        let mut out = Vec::with_capacity(4 + body);
        out.extend_from_slice(&(body as u32).to_be_bytes());
        out.extend_from_slice(&self.session.0);
        out.extend_from_slice(&self.round.to_be_bytes());
        out.push(self.kind as u8);
        out.extend_from_slice(&(self.payload.len() as u32).to_be_bytes());
        for x in &self.payload {
            out.extend_from_slice(&x.value().to_le_bytes());
        }
        out
    }

    /// Parses a frame body (everything after the length prefix).
    pub fn decode_body(body: &[u8]) -> Result<Self, WireError> {
        if body.len() < HEADER_LEN {
            return Err(WireError::Truncated {
                needed: HEADER_LEN,
                available: body.len(),
            });
        }
        let mut session = [0u8; 16];
        session.copy_from_slice(&body[..16]);
        let round = u32::from_be_bytes(body[16..20].try_into().expect("4 bytes"));
        let kind = MessageKind::try_from(body[20])?;
        let count = u32::from_be_bytes(body[21..25].try_into().expect("4 bytes")) as usize;
        let expected = count
            .checked_mul(8)
            .and_then(|p| p.checked_add(HEADER_LEN))
            .ok_or(WireError::Oversized(usize::MAX))?;
        if expected != body.len() {
            return Err(WireError::LengthMismatch {
                declared: expected,
                actual: body.len(),
            });
        }
        let payload = body[HEADER_LEN..]
            .chunks_exact(8)
            .map(|c| {
                let v = u64::from_le_bytes(c.try_into().expect("8 bytes"));
                FieldElement::try_from(v).map_err(|_| WireError::NonCanonical(v))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ProtocolMessage {
            session: SessionId(session),
            round,
            kind,
            payload,
        })
    }

    /// Parses one complete frame and checks it has no trailing bytes.
    pub fn decode(frame: &[u8]) -> Result<Self, WireError> {
        if frame.len() < 4 {
            return Err(WireError::Truncated {
                needed: 4,
                available: frame.len(),
            });
        }
        let declared = u32::from_be_bytes(frame[..4].try_into().expect("4 bytes")) as usize;
        if declared != frame.len() - 4 {
            return Err(WireError::LengthMismatch {
                declared,
                actual: frame.len() - 4,
            });
        }
        Self::decode_body(&frame[4..])
    }

    pub fn write_to<W: Write + ?Sized>(&self, w: &mut W) -> Result<(), WireError> {
        w.write_all(&self.encode())?;
        Ok(())
    }

    pub fn read_from<R: Read + ?Sized>(r: &mut R) -> Result<Self, WireError> {
        let mut len = [0u8; 4];
        r.read_exact(&mut len)?;
        let len = u32::from_be_bytes(len) as usize;
        if len > MAX_FRAME_LEN {
            return Err(WireError::Oversized(len));
        }
        let mut body = vec![0u8; len];
        r.read_exact(&mut body)?;
        Self::decode_body(&body)
    }
}
