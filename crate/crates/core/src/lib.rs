//! Verification of inter-AS forwarding state without disclosing it.
//!
//! Each AS splits its forwarding table into additive shares held by three
//! or more non-colluding verifier parties. The parties then run fixed
//! arithmetic circuits over the shares (loop freedom, reachability,
//! waypoints, origin uniqueness, incremental updates) and open only the
//! final verdict.
//!
//! [`engine::SimEngine`] runs all parties in one process and is what the
//! tests and benchmarks use; [`runtime`] runs each party separately over
//! channels or TCP.

pub mod engine;
pub mod error;
pub mod fib;
pub mod field_share;
pub mod oblivious;
pub mod oracle;
pub mod runtime;
pub mod samples;
pub mod verifier;

pub use error::ProtocolError;
