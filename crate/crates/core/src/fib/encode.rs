use rand::seq::SliceRandom;
use rand::Rng;

use super::{Asn, FibEntry, FibError, FibUpdate, ForwardingGraph, IndexMap};
use crate::field_share::MIN_PARTIES;
use crate::oblivious::SharedOneHot;
use crate::verifier::{SharedFib, SharedRow, SharedUpdate};

fn share_pair<R: Rng + ?Sized>(src: usize, dst: usize, n: usize, t: usize, rng: &mut R) -> SharedRow {
    SharedRow {
        src: SharedOneHot::share(src, n, t, rng).expect("index checked by caller"),
        dst: SharedOneHot::share(dst, n, t, rng).expect("index checked by caller"),
    }
}

/// Shares every row as a pair of one-hot vectors over the graph's public
/// index map. Rows are shuffled first so their order carries no signal.
pub fn encode_for_sharing<R: Rng + ?Sized>(
    fib: &ForwardingGraph,
    t: usize,
    rng: &mut R,
) -> Result<SharedFib, FibError> {
    if t < MIN_PARTIES {
        return Err(FibError::InvalidPartyCount(t));
    }
    let index = fib.index();
    let mut rows = fib
        .entries()
        .iter()
        .map(|e| Ok((index.require(e.source)?, index.require(e.next_hop)?)))
        .collect::<Result<Vec<_>, FibError>>()?;
    rows.shuffle(rng);
    let n = fib.n();
    Ok(SharedFib {
        rows: rows.into_iter().map(|(s, d)| share_pair(s, d, n, t, rng)).collect(),
        n,
        destination: fib.destination_index(),
    })
}

/// Shares an update against an existing session's index map.
pub fn share_update<R: Rng + ?Sized>(
    update: FibUpdate,
    index: &IndexMap,
    t: usize,
    rng: &mut R,
) -> Result<SharedUpdate, FibError> {
    if t < MIN_PARTIES {
        return Err(FibError::InvalidPartyCount(t));
    }
    let s = index.require(update.source)?;
    let d = index.require(update.new_next_hop)?;
    Ok(share_pair(s, d, index.len(), t, rng))
}

/// Reconstructs a shared table. Needs every party's shares.
pub fn decode_shared_fib(shared: &SharedFib, index: &IndexMap) -> Result<ForwardingGraph, FibError> {
    if index.len() != shared.n || shared.destination >= shared.n {
        return Err(FibError::Undecodable);
    }
    let entries = shared
        .rows
        .iter()
        .map(|r| match (r.src.decode(), r.dst.decode()) {
            (Some(s), Some(d)) => Ok(FibEntry {
                source: index.asn_at(s),
                next_hop: index.asn_at(d),
            }),
            _ => Err(FibError::Undecodable),
        })
        .collect::<Result<Vec<_>, _>>()?;
    let destination: Asn = index.asn_at(shared.destination);
    ForwardingGraph::with_universe(destination, entries, index.asns().iter().copied())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field_share::reconstruct;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_entry_encoding() {
        let fib = ForwardingGraph::new(Asn(2), [FibEntry::new(1, 2)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let shared = encode_for_sharing(&fib, 3, &mut rng).unwrap();
        assert_eq!(shared.n, 2);
        assert_eq!(shared.destination, 1);
        let row = &shared.rows[0];
        let open = |v: &SharedOneHot| v.components.iter().map(|c| reconstruct(c).value()).collect::<Vec<_>>();
        assert_eq!(open(&row.src), vec![1, 0]);
        assert_eq!(open(&row.dst), vec![0, 1]);
    }

    #[test]
    fn decode_inverts_encode_up_to_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let n = rng.gen_range(2..20u32);
            let entries: Vec<_> = (1..n)
                .map(|i| FibEntry::new(i, rng.gen_range(0..n)))
                .filter(|e| e.source != Asn(0))
                .collect();
            let fib = ForwardingGraph::new(Asn(0), entries).unwrap();
            let shared = encode_for_sharing(&fib, 3, &mut rng).unwrap();
            let back = decode_shared_fib(&shared, fib.index()).unwrap();
            let mut a = fib.entries().to_vec();
            let mut b = back.entries().to_vec();
            a.sort();
            b.sort();
            assert_eq!(a, b);
            assert_eq!(back.index(), fib.index());
        }
    }

    #[test]
    fn two_parties_is_the_sharing_floor() {
        let fib = ForwardingGraph::new(Asn(2), [FibEntry::new(1, 2)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(
            encode_for_sharing(&fib, 1, &mut rng).unwrap_err(),
            FibError::InvalidPartyCount(1)
        );
    }

    #[test]
    fn update_needs_mapped_ases() {
        let fib = ForwardingGraph::new(Asn(2), [FibEntry::new(1, 2)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        assert!(share_update(FibUpdate::new(1, 2), fib.index(), 3, &mut rng).is_ok());
        assert_eq!(
            share_update(FibUpdate::new(1, 5), fib.index(), 3, &mut rng).unwrap_err(),
            FibError::UnmappedAsn(Asn(5))
        );
    }
}
