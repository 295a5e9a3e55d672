#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use seagull_core::engine::SimEngine;
use seagull_core::fib::{encode_for_sharing, rewrite_next_hop, subtree_of, Asn, FibEntry, FibUpdate, ForwardingGraph};
use seagull_core::oblivious::SharedOneHot;
use seagull_core::oracle::{random_tree, Shape};
use seagull_core::verifier::SharedFib;

pub const T: usize = 3;

pub fn share<R: Rng>(fib: &ForwardingGraph, rng: &mut R) -> SharedFib {
    encode_for_sharing(fib, T, rng).expect("t = 3 is valid")
}

pub fn engine(seed: u64) -> SimEngine {
    SimEngine::seeded(T, seed)
}

pub fn any_shape<R: Rng>(rng: &mut R) -> Shape {
    *[Shape::Chain, Shape::Star, Shape::CaidaLike].choose(rng).unwrap()
}

pub fn random_graph<R: Rng>(n: usize, rng: &mut R) -> ForwardingGraph {
    let shape = any_shape(rng);
    random_tree(shape, n, rng)
}

pub fn non_destination<R: Rng>(fib: &ForwardingGraph, rng: &mut R) -> Asn {
    fib.entries().choose(rng).expect("at least one row").source
}

pub fn random_update<R: Rng>(fib: &ForwardingGraph, rng: &mut R) -> FibUpdate {
    let source = non_destination(fib, rng);
    let next = *fib.index().asns().choose(rng).unwrap();
    FibUpdate {
        source,
        new_next_hop: next,
    }
}

/// Redirects `x` to a node outside its own subtree, which keeps the tree.
pub fn cross_tree_update<R: Rng>(fib: &ForwardingGraph, rng: &mut R) -> Option<FibUpdate> {
    let x = non_destination(fib, rng);
    let below = subtree_of(fib, x);
    let targets: Vec<Asn> = fib
        .index()
        .asns()
        .iter()
        .copied()
        .filter(|a| !below.contains(a))
        .collect();
    targets.choose(rng).map(|&y| FibUpdate {
        source: x,
        new_next_hop: y,
    })
}

/// Redirects `x` into its own subtree (possibly itself), closing a cycle.
pub fn own_subtree_update<R: Rng>(fib: &ForwardingGraph, rng: &mut R) -> FibUpdate {
    let x = non_destination(fib, rng);
    let below: Vec<Asn> = subtree_of(fib, x).into_iter().collect();
    FibUpdate {
        source: x,
        new_next_hop: *below.choose(rng).unwrap(),
    }
}

pub fn with_origin(fib: &ForwardingGraph, origin: Asn) -> ForwardingGraph {
    let entries = fib.entries().iter().copied().chain([FibEntry {
        source: origin,
        next_hop: origin,
    }]);
    ForwardingGraph::with_universe(fib.destination(), entries, fib.index().asns().iter().copied()).unwrap()
}

/// Adds the destination's own origin row, then optionally a second origin.
pub fn origin_case(fib: &ForwardingGraph, second: Option<Asn>) -> ForwardingGraph {
    let base = match second {
        Some(x) => rewrite_next_hop(fib, x, x).unwrap(),
        None => fib.clone(),
    };
    with_origin(&base, fib.destination())
}

pub fn registry<R: Rng>(fib: &ForwardingGraph, asn: Asn, rng: &mut R) -> SharedOneHot {
    SharedOneHot::share(fib.index().index_of(asn).unwrap(), fib.n(), T, rng).unwrap()
}

pub fn chain(hops: u32) -> ForwardingGraph {
    ForwardingGraph::new(Asn(hops), (0..hops).map(|i| FibEntry::new(i, i + 1))).unwrap()
}
