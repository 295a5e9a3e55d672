use serde::{Deserialize, Serialize};

use super::{CheckKind, Mode, SharedFib, Verdict, VerifyError};
use crate::engine::Engine;
use crate::field_share::{FieldElement, OpeningKind};
use crate::oblivious::{frontier_flag, oblivious_conditional_write, oblivious_read, SharedBitVector};

/// How each traversal round scans the table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScanStrategy {
    /// All rows against the visited set of the previous round, with no
    /// revisit check: in a forwarding graph every node has exactly one
    /// parent, so marking an already-marked node is a no-op OR.
    #[default]
    Frontier,
    /// Row by row, marking a source only when its next hop is visited and
    /// it is not, with the visited set updated in place.
    Guarded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LoopOptions {
    pub mode: Mode,
    /// Upper limit on traversal rounds; the bound is `min(n - 1, cap)`.
    pub round_cap: Option<usize>,
    pub scan: ScanStrategy,
}

impl LoopOptions {
    pub fn round_bound(&self, n: usize) -> usize {
        let full = n.saturating_sub(1);
        self.round_cap.map_or(full, |cap| cap.min(full))
    }
}

/// Loop-freedom by traversal from the destination: the graph is loop-free
/// exactly when every node ends up marked.
pub fn is_loop_free<E: Engine>(
    engine: &mut E,
    fib: &SharedFib<E::Share>,
    options: LoopOptions,
) -> Result<Verdict, VerifyError> {
    is_loop_free_observed(engine, fib, options, |_, _| {})
}

/// [`is_loop_free`] with a hook receiving the shared visited vector after
/// each round (round 0 is the initial state).
pub fn is_loop_free_observed<E, F>(
    engine: &mut E,
    fib: &SharedFib<E::Share>,
    options: LoopOptions,
    mut observe: F,
) -> Result<Verdict, VerifyError>
where
    E: Engine,
    F: FnMut(u64, &[E::Share]),
{
    fib.check_shape()?;
    let start = engine.transcript().trace();
    let n = fib.n;
    let mut visited: Vec<E::Share> = (0..n)
        .map(|j| engine.public(FieldElement::from(j == fib.destination)))
        .collect();
    observe(0, &visited);

    let bound = options.round_bound(n) as u64;
    let mut rounds = 0;
    while rounds < bound {
        let (next, newly_marked) = match options.scan {
            ScanStrategy::Frontier => frontier_round(engine, fib, &visited)?,
            ScanStrategy::Guarded => guarded_round(engine, fib, visited)?,
        };
        visited = next;
        rounds += 1;
        observe(rounds, &visited);
        if options.mode == Mode::EarlyExit && !frontier_flag(engine, &newly_marked)? {
            break;
        }
    }

    let total = engine.sum(&visited);
    let gap = engine.add_public(&total, -FieldElement::from(n));
    let result = engine.is_zero(&gap, OpeningKind::ZeroTest)?;
    Ok(Verdict {
        check: CheckKind::LoopFree,
        result,
        rounds_executed: rounds,
        trace: engine.transcript().trace() - start,
        mode: options.mode,
    })
}

type RoundOutput<S> = (Vec<S>, Vec<S>);

fn frontier_round<E: Engine>(
    engine: &mut E,
    fib: &SharedFib<E::Share>,
    visited: &[E::Share],
) -> Result<RoundOutput<E::Share>, VerifyError> {
    let n = fib.n;
    // Is each row's next hop already visited?
    let pairs: Vec<_> = fib
        .rows
        .iter()
        .flat_map(|r| visited.iter().zip(&r.dst.components))
        .collect();
    let products = engine.mul_batch(&pairs)?;
    let parent_visited: Vec<_> = products.chunks(n).map(|c| engine.sum(c)).collect();

    // Scatter those bits onto the rows' sources.
    let pairs: Vec<_> = fib
        .rows
        .iter()
        .zip(&parent_visited)
        .flat_map(|(r, bit)| r.src.components.iter().map(move |s| (bit, s)))
        .collect();
    let products = engine.mul_batch(&pairs)?;
    let mut marks = vec![engine.zero(); n];
    for (k, p) in products.iter().enumerate() {
        marks[k % n] = engine.add(&marks[k % n], p);
    }

    // visited OR marks
    let pairs: Vec<_> = visited.iter().zip(&marks).collect();
    let overlap = engine.mul_batch(&pairs)?;
    let next: Vec<_> = visited
        .iter()
        .zip(marks.iter().zip(&overlap))
        .map(|(v, (m, o))| engine.sub(&engine.add(v, m), o))
        .collect();
    let newly_marked = next.iter().zip(visited).map(|(a, b)| engine.sub(a, b)).collect();
    Ok((next, newly_marked))
}

fn guarded_round<E: Engine>(
    engine: &mut E,
    fib: &SharedFib<E::Share>,
    visited: Vec<E::Share>,
) -> Result<RoundOutput<E::Share>, VerifyError> {
    let mut v = SharedBitVector { bits: visited };
    let mut newly_marked = Vec::with_capacity(fib.rows.len());
    for row in &fib.rows {
        let parent = oblivious_read(engine, &v, &row.dst)?;
        let own = oblivious_read(engine, &v, &row.src)?;
        let unvisited = engine.not(&own);
        let fresh = engine.mul(&parent, &unvisited)?;
        v = oblivious_conditional_write(engine, &v, &row.src, &fresh)?;
        newly_marked.push(fresh);
    }
    Ok((v.bits, newly_marked))
}
