use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use rand::seq::SliceRandom;
use rand::Rng;

use super::{Asn, FibEntry, FibError, FibUpdate, ForwardingGraph};

/// Swaps source and next hop in every row, keeping row order.
pub fn reverse_fib(entries: &[FibEntry]) -> Vec<FibEntry> {
    entries.iter().map(|e| e.reversed()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PruneMode {
    /// Remove the current leaves once.
    #[default]
    SinglePass,
    /// Keep removing until no leaf remains.
    Fixpoint,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PruneOutcome {
    pub entries: Vec<FibEntry>,
    pub removed_leaves: usize,
}

/// Drops rows of a reversed table whose child never appears as a parent.
pub fn prune_leaves(reversed: &[FibEntry], mode: PruneMode) -> PruneOutcome {
    let mut entries = reversed.to_vec();
    let mut removed_leaves = 0;
    loop {
        let parents: HashSet<Asn> = entries.iter().map(|e| e.source).collect();
        let before = entries.len();
        entries.retain(|e| parents.contains(&e.next_hop));
        let removed = before - entries.len();
        removed_leaves += removed;
        if removed == 0 || mode == PruneMode::SinglePass {
            break;
        }
    }
    PruneOutcome {
        entries,
        removed_leaves,
    }
}

/// `x` together with every AS whose forwarding path runs through `x`.
pub fn subtree_of(fib: &ForwardingGraph, x: Asn) -> BTreeSet<Asn> {
    let mut children: HashMap<Asn, Vec<Asn>> = HashMap::new();
    for e in fib.entries() {
        if !e.is_loopback() {
            children.entry(e.next_hop).or_default().push(e.source);
        }
    }
    let mut seen = BTreeSet::from([x]);
    let mut queue = VecDeque::from([x]);
    while let Some(u) = queue.pop_front() {
        for c in children.get(&u).into_iter().flatten() {
            if seen.insert(*c) {
                queue.push_back(*c);
            }
        }
    }
    seen
}

/// Points `source` at `next_hop`, replacing its current entry.
pub fn rewrite_next_hop(fib: &ForwardingGraph, source: Asn, next_hop: Asn) -> Result<ForwardingGraph, FibError> {
    fib.apply_update(FibUpdate {
        source,
        new_next_hop: next_hop,
    })
}

/// Nodes on the cycle closed by `x`'s entry, found by walking from `x`'s
/// next hop back to `x`.
fn cycle_through(fib: &ForwardingGraph, x: Asn) -> BTreeSet<Asn> {
    let mut cycle = BTreeSet::from([x]);
    let mut cur = fib.next_hop(x);
    while let Some(c) = cur {
        if c == x || !cycle.insert(c) {
            break;
        }
        cur = fib.next_hop(c);
    }
    cycle
}

/// Redirects one AS into its own subtree, cutting that subtree off from the
/// destination. Returns the modified graph and the nodes of the new cycle.
///
/// When no AS has descendants (a star) the chosen AS loops back to itself.
pub fn inject_loop<R: Rng + ?Sized>(
    fib: &ForwardingGraph,
    rng: &mut R,
) -> Result<(ForwardingGraph, BTreeSet<Asn>), FibError> {
    let non_destination = fib.n() - 1;
    let sources: Vec<Asn> = fib
        .entries()
        .iter()
        .map(|e| e.source)
        .filter(|s| *s != fib.destination())
        .collect();
    if non_destination < 3 || sources.is_empty() {
        return Err(FibError::CannotInject(non_destination));
    }
    let has_children: BTreeSet<Asn> = fib
        .entries()
        .iter()
        .filter(|e| !e.is_loopback())
        .map(|e| e.next_hop)
        .collect();
    let parents: Vec<Asn> = sources.iter().copied().filter(|s| has_children.contains(s)).collect();
    let (x, u) = match parents.choose(rng) {
        Some(&x) => {
            let below: Vec<Asn> = subtree_of(fib, x).into_iter().filter(|v| *v != x).collect();
            (x, *below.choose(rng).expect("a parent has descendants"))
        }
        None => {
            let x = *sources.choose(rng).expect("nonempty");
            (x, x)
        }
    };
    let looped = rewrite_next_hop(fib, x, u)?;
    let cycle = cycle_through(&looped, x);
    Ok((looped, cycle))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn table4() -> Vec<FibEntry> {
        vec![
            FibEntry::new(1, 2),
            FibEntry::new(3, 6),
            FibEntry::new(2, 5),
            FibEntry::new(4, 5),
        ]
    }

    #[test]
    fn reversal_is_an_involution() {
        let t = table4();
        let r = reverse_fib(&t);
        assert_eq!(
            r,
            vec![
                FibEntry::new(2, 1),
                FibEntry::new(6, 3),
                FibEntry::new(5, 2),
                FibEntry::new(5, 4)
            ]
        );
        assert_eq!(reverse_fib(&r), t);
        assert!(reverse_fib(&[]).is_empty());
    }

    #[test]
    fn prune_reversed_table() {
        let out = prune_leaves(&reverse_fib(&table4()), PruneMode::SinglePass);
        assert_eq!(out.entries, vec![FibEntry::new(5, 2)]);
        assert_eq!(out.removed_leaves, 3);
        // The survivor's child 2 is now itself a leaf.
        let out = prune_leaves(&reverse_fib(&table4()), PruneMode::Fixpoint);
        assert!(out.entries.is_empty());
        assert_eq!(out.removed_leaves, 4);
    }

    #[test]
    fn star_prunes_completely() {
        let star: Vec<_> = (1..=5).map(|i| FibEntry::new(i, 100)).collect();
        let out = prune_leaves(&reverse_fib(&star), PruneMode::SinglePass);
        assert!(out.entries.is_empty());
        assert_eq!(out.removed_leaves, 5);
    }

    #[test]
    fn inject_on_chain_closes_the_whole_chain() {
        // 1 -> 2 -> 3 -> 9: only 3's subtree contains more than one other node.
        let fib =
            ForwardingGraph::new(Asn(9), [FibEntry::new(1, 2), FibEntry::new(2, 3), FibEntry::new(3, 9)]).unwrap();
        let looped = rewrite_next_hop(&fib, Asn(3), Asn(1)).unwrap();
        assert_eq!(cycle_through(&looped, Asn(3)), BTreeSet::from([Asn(1), Asn(2), Asn(3)]));
    }

    #[test]
    fn inject_on_star_self_loops() {
        let fib = ForwardingGraph::new(Asn(100), (1..=4).map(|i| FibEntry::new(i, 100))).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (looped, cycle) = inject_loop(&fib, &mut rng).unwrap();
        assert_eq!(cycle.len(), 1);
        let x = *cycle.iter().next().unwrap();
        assert_eq!(looped.next_hop(x), Some(x));
    }

    #[test]
    fn too_small_to_inject() {
        let fib = ForwardingGraph::new(Asn(9), [FibEntry::new(1, 9), FibEntry::new(2, 9)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(inject_loop(&fib, &mut rng).unwrap_err(), FibError::CannotInject(2));
    }

    #[test]
    fn subtree_membership() {
        let fib = ForwardingGraph::new(
            Asn(7),
            [
                FibEntry::new(1, 3),
                FibEntry::new(3, 6),
                FibEntry::new(2, 5),
                FibEntry::new(5, 7),
                FibEntry::new(4, 5),
                FibEntry::new(6, 7),
            ],
        )
        .unwrap();
        assert_eq!(subtree_of(&fib, Asn(6)), BTreeSet::from([Asn(1), Asn(3), Asn(6)]));
        assert_eq!(subtree_of(&fib, Asn(5)), BTreeSet::from([Asn(2), Asn(4), Asn(5)]));
    }
}
