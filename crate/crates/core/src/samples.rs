//! Small reference graphs.
//!
//! Nodes `x1..x6` are ASNs 1 to 6 and the destination is ASN 7.

use crate::fib::{AsTopology, Asn, FibEntry, ForwardingGraph};

pub const DESTINATION: Asn = Asn(7);

/// The seven-node topology: forwarding links plus the unused links.
pub fn topology() -> AsTopology {
    AsTopology::from_edges([
        (1, 3),
        (3, 6),
        (2, 5),
        (5, 7),
        (4, 5),
        (6, 7),
        (4, 3),
        (4, 2),
        (1, 2),
        (3, 2),
        (1, 6),
        (4, 6),
    ])
}

/// The loop-free forwarding graph drawn on [`topology`].
pub fn forwarding_tree() -> ForwardingGraph {
    ForwardingGraph::new(
        DESTINATION,
        [
            FibEntry::new(1, 3),
            FibEntry::new(3, 6),
            FibEntry::new(2, 5),
            FibEntry::new(5, 7),
            FibEntry::new(4, 5),
            FibEntry::new(6, 7),
        ],
    )
    .expect("valid graph")
}

/// [`forwarding_tree`] with x6 redirected to x1, closing the cycle x1, x3, x6.
pub fn looped_graph() -> ForwardingGraph {
    ForwardingGraph::new(
        DESTINATION,
        [
            FibEntry::new(1, 3),
            FibEntry::new(3, 6),
            FibEntry::new(2, 5),
            FibEntry::new(5, 7),
            FibEntry::new(4, 5),
            FibEntry::new(6, 1),
        ],
    )
    .expect("valid graph")
}

/// The four-row table used to illustrate reversal and leaf pruning.
pub fn reversal_table() -> Vec<FibEntry> {
    vec![
        FibEntry::new(1, 2),
        FibEntry::new(3, 6),
        FibEntry::new(2, 5),
        FibEntry::new(4, 5),
    ]
}

/// Renders ASNs `1..=6` as `x1..x6` and 7 as `Dst`.
pub fn label(asn: Asn) -> String {
    match asn.0 {
        7 => "Dst".to_string(),
        i => format!("x{i}"),
    }
}
