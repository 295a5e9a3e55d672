//! Plaintext model of AS topologies and per-destination forwarding tables.

mod encode;
mod io;
mod ops;
mod topology;

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use encode::{decode_shared_fib, encode_for_sharing, share_update};
pub use io::{parse_fib, parse_updates, render_fib, render_updates, FIB_HEADER};
pub use ops::{inject_loop, prune_leaves, reverse_fib, rewrite_next_hop, subtree_of, PruneMode, PruneOutcome};
pub use topology::{build_fib, parse_topology, AsTopology};

/// An autonomous system number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Asn(pub u32);

impl fmt::Display for Asn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FromStr for Asn {
    type Err = std::num::ParseIntError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let digits = s.strip_prefix("AS").or_else(|| s.strip_prefix("as")).unwrap_or(s);
        digits.parse().map(Asn)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FibError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("destination {0} is not in the topology")]
    UnknownDestination(Asn),
    #[error("destination {0} may only carry its own loopback entry")]
    DestinationHasNextHop(Asn),
    #[error("graph too small to inject a loop: {0} non-destination nodes, need 3")]
    CannotInject(usize),
    #[error("AS {0} is not in the session index map")]
    UnmappedAsn(Asn),
    #[error("update source {0} is the destination")]
    UpdateAtDestination(Asn),
    #[error("shared table does not decode to valid one-hot rows")]
    Undecodable,
    #[error("cannot share among {0} parties")]
    InvalidPartyCount(usize),
}

/// One FIB row: `source` forwards traffic for the destination to `next_hop`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FibEntry {
    pub source: Asn,
    pub next_hop: Asn,
}

impl FibEntry {
    pub fn new(source: u32, next_hop: u32) -> Self {
        FibEntry {
            source: Asn(source),
            next_hop: Asn(next_hop),
        }
    }

    pub fn reversed(self) -> Self {
        FibEntry {
            source: self.next_hop,
            next_hop: self.source,
        }
    }

    pub fn is_loopback(self) -> bool {
        self.source == self.next_hop
    }
}

/// A next-hop change announced by one AS.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FibUpdate {
    pub source: Asn,
    pub new_next_hop: Asn,
}

impl FibUpdate {
    pub fn new(source: u32, new_next_hop: u32) -> Self {
        FibUpdate {
            source: Asn(source),
            new_next_hop: Asn(new_next_hop),
        }
    }
}

/// Public bijection between the ASNs of a session and vector positions.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(from = "Vec<Asn>", into = "Vec<Asn>")]
pub struct IndexMap {
    asns: Vec<Asn>,
    positions: HashMap<Asn, usize>,
}

impl IndexMap {
    /// Positions follow ascending ASN order.
    pub fn new(nodes: impl IntoIterator<Item = Asn>) -> Self {
        let asns: Vec<Asn> = nodes.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        let positions = asns.iter().enumerate().map(|(i, a)| (*a, i)).collect();
        IndexMap { asns, positions }
    }

    pub fn len(&self) -> usize {
        self.asns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.asns.is_empty()
    }

    pub fn index_of(&self, asn: Asn) -> Option<usize> {
        self.positions.get(&asn).copied()
    }

    pub fn require(&self, asn: Asn) -> Result<usize, FibError> {
        self.index_of(asn).ok_or(FibError::UnmappedAsn(asn))
    }

    pub fn asn_at(&self, index: usize) -> Asn {
        self.asns[index]
    }

    pub fn asns(&self) -> &[Asn] {
        &self.asns
    }
}

impl From<Vec<Asn>> for IndexMap {
    fn from(v: Vec<Asn>) -> Self {
        IndexMap::new(v)
    }
}

impl From<IndexMap> for Vec<Asn> {
    fn from(m: IndexMap) -> Self {
        m.asns
    }
}

/// The directed graph a destination's FIB induces: at most one next hop
/// per source AS.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForwardingGraph {
    destination: Asn,
    entries: Vec<FibEntry>,
    index: IndexMap,
}

impl ForwardingGraph {
    /// Builds the graph over every AS mentioned by the entries plus the
    /// destination. A repeated source keeps only its last entry, in the
    /// position of its first.
    pub fn new(destination: Asn, entries: impl IntoIterator<Item = FibEntry>) -> Result<Self, FibError> {
        Self::with_universe(destination, entries, [])
    }

    /// Like [`ForwardingGraph::new`], additionally including ASes that have
    /// no entry of their own.
    pub fn with_universe(
        destination: Asn,
        entries: impl IntoIterator<Item = FibEntry>,
        extra_nodes: impl IntoIterator<Item = Asn>,
    ) -> Result<Self, FibError> {
        let mut rows: Vec<FibEntry> = Vec::new();
        let mut at: HashMap<Asn, usize> = HashMap::new();
        for e in entries {
            if e.source == destination && !e.is_loopback() {
                return Err(FibError::DestinationHasNextHop(destination));
            }
            match at.get(&e.source) {
                Some(&i) => rows[i] = e,
                None => {
                    at.insert(e.source, rows.len());
                    rows.push(e);
                }
            }
        }
        let index = IndexMap::new(
            rows.iter()
                .flat_map(|e| [e.source, e.next_hop])
                .chain([destination])
                .chain(extra_nodes),
        );
        Ok(ForwardingGraph {
            destination,
            entries: rows,
            index,
        })
    }

    pub fn destination(&self) -> Asn {
        self.destination
    }

    pub fn destination_index(&self) -> usize {
        self.index
            .index_of(self.destination)
            .expect("destination is always mapped")
    }

    pub fn entries(&self) -> &[FibEntry] {
        &self.entries
    }

    pub fn index(&self) -> &IndexMap {
        &self.index
    }

    /// Size of the node universe.
    pub fn n(&self) -> usize {
        self.index.len()
    }

    pub fn next_hop(&self, source: Asn) -> Option<Asn> {
        self.entries.iter().find(|e| e.source == source).map(|e| e.next_hop)
    }

    /// Next-hop position for every node position, ignoring the
    /// destination's loopback.
    pub fn successor_indices(&self) -> Vec<Option<usize>> {
        let mut next = vec![None; self.n()];
        for e in &self.entries {
            if e.source == self.destination {
                continue;
            }
            let s = self.index.index_of(e.source).expect("mapped");
            next[s] = self.index.index_of(e.next_hop);
        }
        next
    }

    /// Replaces (or adds) the entry of `update.source`. The universe is
    /// unchanged when both ends are already mapped.
    pub fn apply_update(&self, update: FibUpdate) -> Result<ForwardingGraph, FibError> {
        if update.source == self.destination {
            return Err(FibError::UpdateAtDestination(update.source));
        }
        let mut entries = self.entries.clone();
        let new = FibEntry {
            source: update.source,
            next_hop: update.new_next_hop,
        };
        match entries.iter_mut().find(|e| e.source == update.source) {
            Some(e) => *e = new,
            None => entries.push(new),
        }
        ForwardingGraph::with_universe(self.destination, entries, self.index.asns().iter().copied())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn most_recent_entry_wins() {
        let g = ForwardingGraph::new(Asn(9), [FibEntry::new(1, 2), FibEntry::new(2, 9), FibEntry::new(1, 9)]).unwrap();
        assert_eq!(g.entries(), &[FibEntry::new(1, 9), FibEntry::new(2, 9)]);
        assert_eq!(g.n(), 3);
    }

    #[test]
    fn destination_may_only_loop_back() {
        assert!(ForwardingGraph::new(Asn(9), [FibEntry::new(9, 9)]).is_ok());
        assert_eq!(
            ForwardingGraph::new(Asn(9), [FibEntry::new(9, 1)]).unwrap_err(),
            FibError::DestinationHasNextHop(Asn(9))
        );
    }

    #[test]
    fn index_map_is_sorted_bijection() {
        let m = IndexMap::new([Asn(30), Asn(10), Asn(20), Asn(10)]);
        assert_eq!(m.asns(), &[Asn(10), Asn(20), Asn(30)]);
        for (i, a) in m.asns().iter().enumerate() {
            assert_eq!(m.index_of(*a), Some(i));
        }
        assert_eq!(m.require(Asn(5)).unwrap_err(), FibError::UnmappedAsn(Asn(5)));
    }

    #[test]
    fn asn_parsing_accepts_prefix() {
        assert_eq!("AS3356".parse::<Asn>().unwrap(), Asn(3356));
        assert_eq!(" 174 ".parse::<Asn>().unwrap(), Asn(174));
        assert!("x1".parse::<Asn>().is_err());
    }

    #[test]
    fn update_replaces_or_appends() {
        let g = ForwardingGraph::new(Asn(9), [FibEntry::new(1, 2), FibEntry::new(2, 9)]).unwrap();
        let u = g.apply_update(FibUpdate::new(1, 9)).unwrap();
        assert_eq!(u.next_hop(Asn(1)), Some(Asn(9)));
        assert_eq!(u.entries().len(), 2);
        let g = ForwardingGraph::with_universe(Asn(9), [FibEntry::new(2, 9)], [Asn(1)]).unwrap();
        let u = g.apply_update(FibUpdate::new(1, 2)).unwrap();
        assert_eq!(u.entries().len(), 2);
        assert_eq!(u.n(), 3);
        assert_eq!(
            g.apply_update(FibUpdate::new(9, 1)).unwrap_err(),
            FibError::UpdateAtDestination(Asn(9))
        );
    }
}
