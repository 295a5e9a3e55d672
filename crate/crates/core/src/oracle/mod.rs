//! Plaintext reference checks.
//!
//! Everything here sees the whole table in the clear. The secure checks are
//! tested against these, and the six loop detectors double as a benchmark.

mod bench;
mod cycles;
mod generate;

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::fib::{Asn, FibUpdate, ForwardingGraph};
use crate::verifier::OriginStatus;

pub use bench::{render_csv, render_table, run_benchmark, BenchmarkRow};
pub use generate::{generate_instances, random_tree, Instance, InstanceSpec, Shape};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("unknown loop detection algorithm {0:?}")]
    UnknownAlgorithm(String),
    #[error("unknown graph shape {0:?}")]
    UnknownShape(String),
    #[error("repetitions must be at least 1")]
    NoRepetitions,
    #[error("invalid instance spec: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LoopAlgorithm {
    Bfs,
    Dfs,
    Topological,
    Tarjan,
    Dsu,
    Johnson,
}

impl LoopAlgorithm {
    /// In report column order.
    pub const ALL: [LoopAlgorithm; 6] = [
        LoopAlgorithm::Bfs,
        LoopAlgorithm::Dfs,
        LoopAlgorithm::Topological,
        LoopAlgorithm::Tarjan,
        LoopAlgorithm::Dsu,
        LoopAlgorithm::Johnson,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LoopAlgorithm::Bfs => "bfs",
            LoopAlgorithm::Dfs => "dfs",
            LoopAlgorithm::Topological => "topological",
            LoopAlgorithm::Tarjan => "tarjan",
            LoopAlgorithm::Dsu => "dsu",
            LoopAlgorithm::Johnson => "johnson",
        }
    }
}

impl fmt::Display for LoopAlgorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LoopAlgorithm {
    type Err = OracleError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.to_ascii_lowercase();
        LoopAlgorithm::ALL
            .into_iter()
            .find(|a| a.name() == lower || (lower == "topology" && *a == LoopAlgorithm::Topological))
            .ok_or_else(|| OracleError::UnknownAlgorithm(s.to_string()))
    }
}

/// Index-level view of a forwarding graph shared by the detectors.
struct Plain {
    n: usize,
    destination: usize,
    /// Next hop per node; the destination's loopback is dropped.
    next: Vec<Option<usize>>,
}

impl Plain {
    fn new(fib: &ForwardingGraph) -> Self {
        Plain {
            n: fib.n(),
            destination: fib.destination_index(),
            next: fib.successor_indices(),
        }
    }

    /// Every AS other than the destination has a next hop. Cycle detectors
    /// only see loops; an AS without an entry is a dead end they would miss.
    fn complete(&self) -> bool {
        self.next
            .iter()
            .enumerate()
            .all(|(v, nh)| v == self.destination || nh.is_some())
    }

    fn adjacency(&self) -> Vec<Vec<usize>> {
        self.next.iter().map(|nh| nh.iter().copied().collect()).collect()
    }

    fn children(&self) -> Vec<Vec<usize>> {
        let mut children = vec![Vec::new(); self.n];
        for (v, nh) in self.next.iter().enumerate() {
            if let Some(p) = nh {
                children[*p].push(v);
            }
        }
        children
    }

    /// Reverse BFS from the destination; `reached[v]` iff v forwards to it.
    fn reached(&self) -> Vec<bool> {
        let children = self.children();
        let mut seen = vec![false; self.n];
        seen[self.destination] = true;
        let mut frontier = VecDeque::from([self.destination]);
        while let Some(u) = frontier.pop_front() {
            for &c in &children[u] {
                if !seen[c] {
                    seen[c] = true;
                    frontier.push_back(c);
                }
            }
        }
        seen
    }

    fn bfs(&self) -> bool {
        self.reached().iter().all(|r| *r)
    }

    fn dfs(&self) -> bool {
        #[derive(Clone, Copy, PartialEq)]
        enum Color {
            White,
            Grey,
            Black,
        }
        let mut color = vec![Color::White; self.n];
        for root in 0..self.n {
            let mut trail = Vec::new();
            let mut v = Some(root);
            while let Some(u) = v {
                match color[u] {
                    Color::Grey => return false,
                    Color::Black => break,
                    Color::White => {
                        color[u] = Color::Grey;
                        trail.push(u);
                        v = self.next[u];
                    }
                }
            }
            for u in trail {
                color[u] = Color::Black;
            }
        }
        self.complete()
    }

    fn topological(&self) -> bool {
        let mut indegree = vec![0usize; self.n];
        for p in self.next.iter().flatten() {
            indegree[*p] += 1;
        }
        let mut ready: Vec<usize> = (0..self.n).filter(|v| indegree[*v] == 0).collect();
        let mut ordered = 0;
        while let Some(v) = ready.pop() {
            ordered += 1;
            if let Some(p) = self.next[v] {
                indegree[p] -= 1;
                if indegree[p] == 0 {
                    ready.push(p);
                }
            }
        }
        ordered == self.n && self.complete()
    }

    fn tarjan(&self) -> bool {
        let adj = self.adjacency();
        let cyclic = cycles::strongly_connected(&adj, &vec![true; self.n])
            .iter()
            .any(|c| c.len() > 1 || self.next[c[0]] == Some(c[0]));
        !cyclic && self.complete()
    }

    /// Undirected connectivity with exactly `n - 1` edges, i.e. a spanning tree.
    fn dsu(&self) -> bool {
        let mut parent: Vec<usize> = (0..self.n).collect();
        fn find(parent: &mut [usize], mut v: usize) -> usize {
            while parent[v] != v {
                parent[v] = parent[parent[v]];
                v = parent[v];
            }
            v
        }
        let mut edges = 0;
        let mut components = self.n;
        for (v, nh) in self.next.iter().enumerate() {
            if let Some(p) = nh {
                edges += 1;
                let (a, b) = (find(&mut parent, v), find(&mut parent, *p));
                if a != b {
                    parent[a] = b;
                    components -= 1;
                }
            }
        }
        components == 1 && edges == self.n - 1
    }

    fn johnson(&self) -> bool {
        cycles::elementary_circuits(&self.adjacency(), Some(1)).is_empty() && self.complete()
    }
}

/// Loop freedom of a forwarding graph: every AS's path ends at the
/// destination. All algorithms return the same answer.
pub fn loop_free_oracle(fib: &ForwardingGraph, algorithm: LoopAlgorithm) -> bool {
    let g = Plain::new(fib);
    match algorithm {
        LoopAlgorithm::Bfs => g.bfs(),
        LoopAlgorithm::Dfs => g.dfs(),
        LoopAlgorithm::Topological => g.topological(),
        LoopAlgorithm::Tarjan => g.tarjan(),
        LoopAlgorithm::Dsu => g.dsu(),
        LoopAlgorithm::Johnson => g.johnson(),
    }
}

/// The reference verdict: the undirected graph is a single tree.
pub fn connectivity_oracle(fib: &ForwardingGraph) -> bool {
    Plain::new(fib).dsu()
}

/// ASes whose forwarding path never reaches the destination.
pub fn unreached_set(fib: &ForwardingGraph) -> BTreeSet<Asn> {
    Plain::new(fib)
        .reached()
        .iter()
        .enumerate()
        .filter(|(_, r)| !**r)
        .map(|(v, _)| fib.index().asn_at(v))
        .collect()
}

/// Every elementary cycle, optionally capped at `limit`.
pub fn elementary_cycles(fib: &ForwardingGraph, limit: Option<usize>) -> Vec<Vec<Asn>> {
    let g = Plain::new(fib);
    cycles::elementary_circuits(&g.adjacency(), limit)
        .into_iter()
        .map(|c| c.into_iter().map(|v| fib.index().asn_at(v)).collect())
        .collect()
}

/// Longest forwarding path in hops, or `None` if some AS never arrives.
pub fn depth(fib: &ForwardingGraph) -> Option<usize> {
    let g = Plain::new(fib);
    let children = g.children();
    let mut dist = vec![usize::MAX; g.n];
    dist[g.destination] = 0;
    let mut frontier = VecDeque::from([g.destination]);
    while let Some(u) = frontier.pop_front() {
        for &c in &children[u] {
            if dist[c] == usize::MAX {
                dist[c] = dist[u] + 1;
                frontier.push_back(c);
            }
        }
    }
    dist.into_iter()
        .try_fold(0, |m, d| (d != usize::MAX).then_some(m.max(d)))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Walk {
    pub reached: bool,
    /// Starts with the source; at most `bound + 1` ASes.
    pub path: Vec<Asn>,
}

/// Follows next hops from `s` for up to `bound` hops, stopping at `d`.
pub fn walk_oracle(fib: &ForwardingGraph, s: Asn, d: Asn, bound: u32) -> Walk {
    let g = Plain::new(fib);
    let index = fib.index();
    let (Some(mut cur), Some(target)) = (index.index_of(s), index.index_of(d)) else {
        return Walk {
            reached: false,
            path: vec![s],
        };
    };
    let mut path = vec![s];
    for _ in 0..bound {
        if cur == target {
            break;
        }
        match g.next[cur] {
            Some(next) => {
                cur = next;
                path.push(index.asn_at(next));
            }
            None => break,
        }
    }
    Walk {
        reached: cur == target,
        path,
    }
}

pub fn waypoint_oracle(fib: &ForwardingGraph, s: Asn, d: Asn, w: Asn, bound: u32) -> bool {
    let walk = walk_oracle(fib, s, d, bound);
    walk.reached && walk.path.contains(&w)
}

/// Whether `update` is safe: the updating AS still arrives within `bound`
/// hops once the update is in place.
pub fn update_oracle(fib: &ForwardingGraph, update: FibUpdate, bound: u32) -> bool {
    match fib.apply_update(update) {
        Ok(next) => walk_oracle(&next, update.source, next.destination(), bound).reached,
        Err(_) => false,
    }
}

pub fn origin_oracle(fib: &ForwardingGraph, registered: Asn) -> OriginStatus {
    let origins: Vec<Asn> = fib
        .entries()
        .iter()
        .filter(|e| e.is_loopback())
        .map(|e| e.source)
        .collect();
    match origins.as_slice() {
        [] => OriginStatus::NoOrigin,
        [o] if *o == registered => OriginStatus::Authorized,
        [_] => OriginStatus::Unauthorized,
        _ => OriginStatus::MultipleOrigins,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fib::FibEntry;
    use crate::samples;

    fn all_agree(fib: &ForwardingGraph) -> bool {
        let verdicts: Vec<bool> = LoopAlgorithm::ALL.iter().map(|a| loop_free_oracle(fib, *a)).collect();
        assert!(verdicts.windows(2).all(|w| w[0] == w[1]), "{verdicts:?}");
        verdicts[0]
    }

    #[test]
    fn reference_graphs() {
        assert!(all_agree(&samples::forwarding_tree()));
        assert!(!all_agree(&samples::looped_graph()));
        assert_eq!(
            unreached_set(&samples::looped_graph()),
            BTreeSet::from([Asn(1), Asn(3), Asn(6)])
        );
        assert!(unreached_set(&samples::forwarding_tree()).is_empty());
    }

    #[test]
    fn dead_end_is_not_loop_free() {
        // No cycle, but x6 has no entry.
        let fib = ForwardingGraph::new(Asn(5), samples::reversal_table()).unwrap();
        assert!(!all_agree(&fib));
        assert_eq!(unreached_set(&fib), BTreeSet::from([Asn(3), Asn(6)]));
    }

    #[test]
    fn self_loop_off_destination() {
        let fib = ForwardingGraph::new(Asn(0), [FibEntry::new(1, 1), FibEntry::new(2, 0)]).unwrap();
        assert!(!all_agree(&fib));
        assert_eq!(elementary_cycles(&fib, None), vec![vec![Asn(1)]]);
    }

    #[test]
    fn destination_loopback_is_ignored() {
        let fib = ForwardingGraph::new(Asn(0), [FibEntry::new(0, 0), FibEntry::new(1, 0)]).unwrap();
        assert!(all_agree(&fib));
        assert!(elementary_cycles(&fib, None).is_empty());
    }

    #[test]
    fn algorithm_names() {
        for a in LoopAlgorithm::ALL {
            assert_eq!(a.name().parse::<LoopAlgorithm>().unwrap(), a);
        }
        assert_eq!("BFS".parse::<LoopAlgorithm>().unwrap(), LoopAlgorithm::Bfs);
        assert_eq!(
            "floyd".parse::<LoopAlgorithm>().unwrap_err(),
            OracleError::UnknownAlgorithm("floyd".into())
        );
    }

    #[test]
    fn walks() {
        let tree = samples::forwarding_tree();
        let w = walk_oracle(&tree, Asn(1), Asn(7), 15);
        assert!(w.reached);
        assert_eq!(w.path, vec![Asn(1), Asn(3), Asn(6), Asn(7)]);
        assert_eq!(walk_oracle(&tree, Asn(7), Asn(7), 15).path, vec![Asn(7)]);
        let looped = walk_oracle(&samples::looped_graph(), Asn(1), Asn(7), 15);
        assert!(!looped.reached);
        assert_eq!(looped.path.len(), 16);
        assert!(waypoint_oracle(&tree, Asn(1), Asn(7), Asn(6), 15));
        assert!(!waypoint_oracle(&tree, Asn(2), Asn(7), Asn(6), 15));
    }

    #[test]
    fn depths() {
        assert_eq!(depth(&samples::forwarding_tree()), Some(3));
        assert_eq!(depth(&samples::looped_graph()), None);
    }

    #[test]
    fn updates() {
        let tree = samples::forwarding_tree();
        assert!(!update_oracle(&tree, FibUpdate::new(6, 1), 15));
        assert!(update_oracle(&tree, FibUpdate::new(6, 5), 15));
    }

    #[test]
    fn origins() {
        let mut e = samples::forwarding_tree().entries().to_vec();
        assert_eq!(
            origin_oracle(&ForwardingGraph::new(Asn(7), e.clone()).unwrap(), Asn(7)),
            OriginStatus::NoOrigin
        );
        e.push(FibEntry::new(7, 7));
        let g = ForwardingGraph::new(Asn(7), e.clone()).unwrap();
        assert_eq!(origin_oracle(&g, Asn(7)), OriginStatus::Authorized);
        assert_eq!(origin_oracle(&g, Asn(3)), OriginStatus::Unauthorized);
        e[0] = FibEntry::new(1, 1);
        let g = ForwardingGraph::new(Asn(7), e).unwrap();
        assert_eq!(origin_oracle(&g, Asn(7)), OriginStatus::MultipleOrigins);
    }
}
