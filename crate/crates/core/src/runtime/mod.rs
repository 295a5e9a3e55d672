//! Running the checks as separate parties that exchange frames.

mod dealer;
mod engine;
pub mod files;
mod session;
mod transport;
mod wire;

pub use dealer::{DealerHandle, DealerService, PartyMask, PartyPool, PartyPreprocessing, PartyTriple};
pub use engine::PartyEngine;
pub use files::{FileError, PartyShares, PublicMetadata, ShareRecord, ValueKind};
pub use session::{
    audit_transcript, run_party, AuditSpec, LeakageReport, PartyNode, PartyQuery, Query, QueryEvent, QueryOutcome,
    RuntimeError, Session, SessionConfig, VerdictRecord, MIN_SESSION_PARTIES,
};
pub use transport::{channel_mesh, tcp_mesh, ChannelTransport, TcpTransport, Transport, TransportError};
pub use wire::{MessageKind, ProtocolMessage, SessionId, WireError, MAX_FRAME_LEN};
