//! Secure verification over a secret-shared forwarding table.
//!
//! Every check runs against an [`Engine`](crate::engine::Engine) and opens
//! nothing but masked zero tests on its final predicate (plus, in
//! early-exit mode, one frontier bit per traversal round).

mod budget;
mod cost;
mod loop_free;
mod origin;
mod walk;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::ProtocolError;
use crate::field_share::{FieldElement, ShareSet};
use crate::oblivious::{ObliviousTrace, SharedOneHot};

pub use budget::{BudgetDecision, PrivacyBudget, DEFAULT_WAYPOINT_BUDGET};
pub use cost::{
    apply_update_cost, incremental_cost, loop_free_cost, origin_cost, reachability_cost, waypoint_cost, Cost,
};
pub use loop_free::{is_loop_free, is_loop_free_observed, LoopOptions, ScanStrategy};
pub use origin::{check_origin_uniqueness, OriginStatus};
pub use walk::{
    apply_update, check_reachability, check_waypoint, incremental_check, incremental_check_merged, UpdateMode,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error("waypoint query rejected: privacy budget of {principal:?} for destination {destination} exhausted")]
    QueryRejected { principal: String, destination: usize },
    #[error("invalid query: {0}")]
    InvalidQuery(String),
}

/// Maximum path length followed by path walks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct HopBound(u32);

impl HopBound {
    pub const DEFAULT: HopBound = HopBound(15);

    pub fn new(value: u32) -> Result<Self, VerifyError> {
        if value == 0 {
            Err(VerifyError::InvalidQuery("hop bound must be at least 1".into()))
        } else {
            Ok(HopBound(value))
        }
    }

    pub fn get(self) -> u32 {
        self.0
    }
}

impl Default for HopBound {
    fn default() -> Self {
        HopBound::DEFAULT
    }
}

impl TryFrom<u32> for HopBound {
    type Error = VerifyError;
    fn try_from(v: u32) -> Result<Self, Self::Error> {
        HopBound::new(v)
    }
}

impl From<HopBound> for u32 {
    fn from(b: HopBound) -> u32 {
        b.0
    }
}

/// How the loop check decides when to stop traversing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Mode {
    /// Always run the full round bound; the trace depends only on sizes.
    #[default]
    #[serde(rename = "fixed-round")]
    FixedRound,
    /// Stop once a round marks nothing new; leaks the round count.
    #[serde(rename = "early-exit")]
    EarlyExit,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::FixedRound => "fixed-round",
            Mode::EarlyExit => "early-exit",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = VerifyError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fixed-round" | "fixed" => Ok(Mode::FixedRound),
            "early-exit" | "early" => Ok(Mode::EarlyExit),
            other => Err(VerifyError::InvalidQuery(format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    LoopFree,
    Reachability,
    Waypoint,
    Origin,
    Incremental,
}

impl CheckKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CheckKind::LoopFree => "loop_free",
            CheckKind::Reachability => "reachability",
            CheckKind::Waypoint => "waypoint",
            CheckKind::Origin => "origin",
            CheckKind::Incremental => "incremental",
        }
    }
}

impl fmt::Display for CheckKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CheckKind {
    type Err = VerifyError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.replace('-', "_").as_str() {
            "loop_free" => Ok(CheckKind::LoopFree),
            "reachability" => Ok(CheckKind::Reachability),
            "waypoint" => Ok(CheckKind::Waypoint),
            "origin" => Ok(CheckKind::Origin),
            "incremental" => Ok(CheckKind::Incremental),
            other => Err(VerifyError::InvalidQuery(format!("unknown check {other:?}"))),
        }
    }
}

/// Public outcome of one check plus the leakage it incurred.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub check: CheckKind,
    pub result: bool,
    pub rounds_executed: u64,
    pub trace: ObliviousTrace,
    pub mode: Mode,
}

/// One shared FIB row: one-hot source and one-hot next hop.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SharedRow<S = ShareSet> {
    pub src: SharedOneHot<S>,
    pub dst: SharedOneHot<S>,
}

/// A next-hop change in shared form; same shape as a row.
pub type SharedUpdate<S = ShareSet> = SharedRow<S>;

/// The secret-shared forwarding table. `n` and the destination position
/// are public session metadata.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SharedFib<S = ShareSet> {
    pub rows: Vec<SharedRow<S>>,
    pub n: usize,
    pub destination: usize,
}

impl<S> SharedFib<S> {
    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub(crate) fn check_shape(&self) -> Result<(), VerifyError> {
        if self.destination >= self.n {
            return Err(ProtocolError::InvalidIndex {
                index: self.destination,
                n: self.n,
            }
            .into());
        }
        for row in &self.rows {
            for v in [&row.src, &row.dst] {
                if v.len() != self.n {
                    return Err(ProtocolError::InvalidOperands {
                        expected: self.n,
                        found: v.len(),
                    }
                    .into());
                }
            }
        }
        Ok(())
    }
}

impl SharedRow<ShareSet> {
    pub fn party_view(&self, party: usize) -> SharedRow<FieldElement> {
        SharedRow {
            src: self.src.party_view(party),
            dst: self.dst.party_view(party),
        }
    }
}

impl SharedFib<ShareSet> {
    pub fn party_count(&self) -> usize {
        self.rows
            .first()
            .and_then(|r| r.src.components.first())
            .map_or(0, ShareSet::party_count)
    }

    /// The table as held by a single party.
    pub fn party_view(&self, party: usize) -> SharedFib<FieldElement> {
        SharedFib {
            rows: self.rows.iter().map(|r| r.party_view(party)).collect(),
            n: self.n,
            destination: self.destination,
        }
    }

    /// Reassembles a table from every party's view.
    pub fn from_party_views(views: &[SharedFib<FieldElement>]) -> Result<Self, ProtocolError> {
        let first = views.first().ok_or(ProtocolError::IncompleteShares { missing: 0 })?;
        for v in views {
            if v.n != first.n || v.destination != first.destination || v.rows.len() != first.rows.len() {
                return Err(ProtocolError::InvalidOperands {
                    expected: first.rows.len(),
                    found: v.rows.len(),
                });
            }
        }
        let join = |pick: &dyn Fn(&SharedFib<FieldElement>) -> &SharedOneHot<FieldElement>| SharedOneHot {
            components: (0..first.n)
                .map(|j| ShareSet::from_shares(views.iter().map(|v| pick(v).components[j])))
                .collect(),
        };
        let rows = (0..first.rows.len())
            .map(|r| SharedRow {
                src: join(&|v| &v.rows[r].src),
                dst: join(&|v| &v.rows[r].dst),
            })
            .collect();
        Ok(SharedFib {
            rows,
            n: first.n,
            destination: first.destination,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hop_bound_validation() {
        assert_eq!(HopBound::default().get(), 15);
        assert!(HopBound::new(0).is_err());
        assert_eq!(HopBound::new(3).unwrap().get(), 3);
    }

    #[test]
    fn names_round_trip() {
        for c in [
            CheckKind::LoopFree,
            CheckKind::Reachability,
            CheckKind::Waypoint,
            CheckKind::Origin,
            CheckKind::Incremental,
        ] {
            assert_eq!(c.as_str().parse::<CheckKind>().unwrap(), c);
        }
        assert_eq!("loop-free".parse::<CheckKind>().unwrap(), CheckKind::LoopFree);
        assert_eq!("early-exit".parse::<Mode>().unwrap(), Mode::EarlyExit);
        assert!("sometimes".parse::<Mode>().is_err());
    }
}
