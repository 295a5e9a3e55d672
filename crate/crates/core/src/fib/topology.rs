use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::{Asn, FibEntry, FibError, ForwardingGraph};

/// Undirected AS-level connectivity.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AsTopology {
    adjacency: BTreeMap<Asn, BTreeSet<Asn>>,
}

impl AsTopology {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_edges(edges: impl IntoIterator<Item = (u32, u32)>) -> Self {
        let mut t = AsTopology::new();
        for (a, b) in edges {
            t.add_link(Asn(a), Asn(b));
        }
        t
    }

    /// Adds an undirected link; self-pairs are ignored.
    pub fn add_link(&mut self, a: Asn, b: Asn) {
        if a == b {
            return;
        }
        self.adjacency.entry(a).or_default().insert(b);
        self.adjacency.entry(b).or_default().insert(a);
    }

    pub fn add_node(&mut self, a: Asn) {
        self.adjacency.entry(a).or_default();
    }

    pub fn nodes(&self) -> impl Iterator<Item = Asn> + '_ {
        self.adjacency.keys().copied()
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn contains(&self, a: Asn) -> bool {
        self.adjacency.contains_key(&a)
    }

    pub fn neighbors(&self, a: Asn) -> impl Iterator<Item = Asn> + '_ {
        self.adjacency.get(&a).into_iter().flatten().copied()
    }

    /// Each undirected edge once, as `(smaller, larger)`.
    pub fn edges(&self) -> Vec<(Asn, Asn)> {
        self.adjacency
            .iter()
            .flat_map(|(a, ns)| ns.iter().filter(move |b| a < *b).map(move |b| (*a, *b)))
            .collect()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.values().map(BTreeSet::len).sum::<usize>() / 2
    }
}

/// Parses whitespace-separated ASN pairs, one link per line. Blank lines and
/// lines starting with `#` are skipped.
pub fn parse_topology(text: &str) -> Result<AsTopology, FibError> {
    let mut topo = AsTopology::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let [a, b] = tokens.as_slice() else {
            return Err(FibError::Parse {
                line: line_no,
                message: format!("expected two ASNs, found {} tokens", tokens.len()),
            });
        };
        let parse = |tok: &str| {
            tok.parse::<Asn>().map_err(|_| FibError::Parse {
                line: line_no,
                message: format!("invalid ASN {tok:?}"),
            })
        };
        let (a, b) = (parse(a)?, parse(b)?);
        if a == b {
            return Err(FibError::Parse {
                line: line_no,
                message: format!("self-link on AS {a}"),
            });
        }
        topo.add_link(a, b);
    }
    Ok(topo)
}

/// Shortest-path forwarding tree toward `destination`.
///
/// Every AS in the destination's connected component forwards to a
/// neighbor one hop closer; among several such neighbors the smallest ASN
/// wins. ASes outside the component are not part of the result.
pub fn build_fib(topology: &AsTopology, destination: Asn) -> Result<ForwardingGraph, FibError> {
    if !topology.contains(destination) {
        return Err(FibError::UnknownDestination(destination));
    }
    let mut dist: BTreeMap<Asn, usize> = BTreeMap::new();
    dist.insert(destination, 0);
    let mut queue = VecDeque::from([destination]);
    while let Some(u) = queue.pop_front() {
        let du = dist[&u];
        for v in topology.neighbors(u) {
            if let std::collections::btree_map::Entry::Vacant(e) = dist.entry(v) {
                e.insert(du + 1);
                queue.push_back(v);
            }
        }
    }
    let entries: Vec<FibEntry> = dist
        .iter()
        .filter(|(a, _)| **a != destination)
        .map(|(a, d)| {
            // Neighbors iterate in ascending order, so the first closer one is the smallest.
            let parent = topology
                .neighbors(*a)
                .find(|v| dist.get(v) == Some(&(d - 1)))
                .expect("BFS parent exists");
            FibEntry {
                source: *a,
                next_hop: parent,
            }
        })
        .collect();
    ForwardingGraph::new(destination, entries)
}
