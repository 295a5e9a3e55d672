//! Bounded next-hop walks over the shared table.
//!
//! The current position is a shared one-hot vector. One step computes
//! `next = sum_r dst_r * <cur, src_r>`, touching every row. The target
//! component is cleared before each step so the walk halts on arrival: the
//! reached bit is then a plain sum of `cur[d]` over all steps.

use serde::{Deserialize, Serialize};

use super::{
    BudgetDecision, CheckKind, HopBound, Mode, PrivacyBudget, SharedFib, SharedRow, SharedUpdate, Verdict, VerifyError,
};
use crate::engine::Engine;
use crate::error::ProtocolError;
use crate::field_share::{FieldElement, OpeningKind};
use crate::oblivious::SharedOneHot;

/// How an update is merged into the table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UpdateMode {
    /// Overwrite the next hop of the row with a matching source.
    #[default]
    Replace,
    /// Add the update as a new row, for an AS that had no entry yet. The
    /// row count is public, so this reveals that a new AS joined.
    Append,
}

fn check_index(index: usize, n: usize) -> Result<(), VerifyError> {
    if index >= n {
        Err(ProtocolError::InvalidIndex { index, n }.into())
    } else {
        Ok(())
    }
}

fn check_update<S>(fib: &SharedFib<S>, update: &SharedUpdate<S>) -> Result<(), VerifyError> {
    for v in [&update.src, &update.dst] {
        if v.len() != fib.n {
            return Err(ProtocolError::InvalidOperands {
                expected: fib.n,
                found: v.len(),
            }
            .into());
        }
    }
    Ok(())
}

/// Obliviously merges `update` into a copy of the table.
pub fn apply_update<E: Engine>(
    engine: &mut E,
    fib: &SharedFib<E::Share>,
    update: &SharedUpdate<E::Share>,
    mode: UpdateMode,
) -> Result<SharedFib<E::Share>, VerifyError> {
    fib.check_shape()?;
    check_update(fib, update)?;
    let rows = match mode {
        UpdateMode::Append => {
            let mut rows = fib.rows.clone();
            rows.push(update.clone());
            rows
        }
        UpdateMode::Replace => replace_rows(engine, fib, update)?,
    };
    Ok(SharedFib {
        rows,
        n: fib.n,
        destination: fib.destination,
    })
}

// dst_r <- dst_r + m_r * (upd.dst - dst_r), with m_r = <src_r, upd.src>.
fn replace_rows<E: Engine>(
    engine: &mut E,
    fib: &SharedFib<E::Share>,
    update: &SharedUpdate<E::Share>,
) -> Result<Vec<SharedRow<E::Share>>, VerifyError> {
    let n = fib.n;
    if fib.rows.is_empty() {
        return Ok(Vec::new());
    }
    let pairs: Vec<_> = fib
        .rows
        .iter()
        .flat_map(|r| r.src.components.iter().zip(&update.src.components))
        .collect();
    let products = engine.mul_batch(&pairs)?;
    let matches: Vec<_> = products.chunks(n).map(|c| engine.sum(c)).collect();

    let deltas: Vec<Vec<_>> = fib
        .rows
        .iter()
        .map(|r| {
            r.dst
                .components
                .iter()
                .zip(&update.dst.components)
                .map(|(old, new)| engine.sub(new, old))
                .collect()
        })
        .collect();
    let pairs: Vec<_> = matches
        .iter()
        .zip(&deltas)
        .flat_map(|(m, delta)| delta.iter().map(move |x| (m, x)))
        .collect();
    let shifts = engine.mul_batch(&pairs)?;
    Ok(fib
        .rows
        .iter()
        .zip(shifts.chunks(n))
        .map(|(r, shift)| SharedRow {
            src: r.src.clone(),
            dst: SharedOneHot {
                components: r
                    .dst
                    .components
                    .iter()
                    .zip(shift)
                    .map(|(a, b)| engine.add(a, b))
                    .collect(),
            },
        })
        .collect())
}

struct WalkOutcome<S> {
    reached: S,
    hit: Option<S>,
}

/// Runs `steps` steps from `start`, tracking arrival at `target` and, if
/// given, whether `waypoint` was passed on the way.
fn walk<E: Engine>(
    engine: &mut E,
    rows: &[SharedRow<E::Share>],
    start: Vec<E::Share>,
    steps: u32,
    target: usize,
    waypoint: Option<usize>,
) -> Result<WalkOutcome<E::Share>, VerifyError> {
    let n = start.len();
    let mut cur = start;
    let mut reached = cur[target].clone();
    let mut hit = waypoint.map(|w| cur[w].clone());
    // cur[w] from the latest step, not yet folded into `hit`.
    let mut pending: Option<E::Share> = None;

    for _ in 0..steps {
        cur[target] = engine.zero();
        let mut pairs: Vec<_> = rows.iter().flat_map(|r| cur.iter().zip(&r.src.components)).collect();
        if let (Some(h), Some(p)) = (&hit, &pending) {
            pairs.push((h, p));
        }
        let mut products = engine.mul_batch(&pairs)?;
        if let Some(p) = pending.take() {
            let h = hit.take().expect("pending implies waypoint");
            let both = products.pop().expect("or product");
            hit = Some(engine.sub(&engine.add(&h, &p), &both));
        }
        let selected: Vec<_> = if n == 0 {
            Vec::new()
        } else {
            products.chunks(n).map(|c| engine.sum(c)).collect()
        };

        let pairs: Vec<_> = rows
            .iter()
            .zip(&selected)
            .flat_map(|(r, m)| r.dst.components.iter().map(move |x| (m, x)))
            .collect();
        let products = engine.mul_batch(&pairs)?;
        let mut next = vec![engine.zero(); n];
        for (k, p) in products.iter().enumerate() {
            next[k % n] = engine.add(&next[k % n], p);
        }
        cur = next;
        reached = engine.add(&reached, &cur[target]);
        if let Some(w) = waypoint {
            pending = Some(cur[w].clone());
        }
    }
    if let Some(p) = pending.take() {
        let h = hit.take().expect("pending implies waypoint");
        let both = engine.mul(&h, &p)?;
        hit = Some(engine.sub(&engine.add(&h, &p), &both));
    }
    Ok(WalkOutcome { reached, hit })
}

fn finish<E: Engine>(
    engine: &mut E,
    check: CheckKind,
    holds: &E::Share,
    steps: u32,
    start: crate::oblivious::ObliviousTrace,
) -> Result<Verdict, VerifyError> {
    let miss = engine.not(holds);
    let result = engine.is_zero(&miss, OpeningKind::ZeroTest)?;
    Ok(Verdict {
        check,
        result,
        rounds_executed: u64::from(steps),
        trace: engine.transcript().trace() - start,
        mode: Mode::FixedRound,
    })
}

/// Does the walk from `s` reach `d` within `bound` hops? Always runs
/// exactly `bound` steps.
pub fn check_reachability<E: Engine>(
    engine: &mut E,
    fib: &SharedFib<E::Share>,
    s: usize,
    d: usize,
    bound: HopBound,
) -> Result<Verdict, VerifyError> {
    fib.check_shape()?;
    check_index(s, fib.n)?;
    check_index(d, fib.n)?;
    let start = engine.transcript().trace();
    let origin = (0..fib.n).map(|j| engine.public(FieldElement::from(j == s))).collect();
    let out = walk(engine, &fib.rows, origin, bound.get(), d, None)?;
    finish(engine, CheckKind::Reachability, &out.reached, bound.get(), start)
}

/// Does the path from `s` reach `d` and pass through `w` on the way?
///
/// Charges one query to `principal` first; an exhausted budget rejects the
/// query before any secure work is done.
#[allow(clippy::too_many_arguments)]
pub fn check_waypoint<E: Engine>(
    engine: &mut E,
    fib: &SharedFib<E::Share>,
    s: usize,
    d: usize,
    w: usize,
    bound: HopBound,
    budget: &mut PrivacyBudget,
    principal: &str,
) -> Result<Verdict, VerifyError> {
    fib.check_shape()?;
    for i in [s, d, w] {
        check_index(i, fib.n)?;
    }
    if budget.enforce(principal, CheckKind::Waypoint, d) == BudgetDecision::Reject {
        return Err(VerifyError::QueryRejected {
            principal: principal.to_string(),
            destination: d,
        });
    }
    let start = engine.transcript().trace();
    let origin = (0..fib.n).map(|j| engine.public(FieldElement::from(j == s))).collect();
    let out = walk(engine, &fib.rows, origin, bound.get(), d, Some(w))?;
    let hit = out.hit.expect("waypoint walk tracks hits");
    let both = engine.mul(&out.reached, &hit)?;
    finish(engine, CheckKind::Waypoint, &both, bound.get(), start)
}

/// Would the table stay loop-free after `update`?
///
/// Walks from the updating AS over the hypothetical table: the first hop
/// is the proposed next hop, the rest follow the table. The update is safe
/// iff the destination is reached within `bound` hops. Nothing is
/// committed.
pub fn incremental_check<E: Engine>(
    engine: &mut E,
    fib: &SharedFib<E::Share>,
    update: &SharedUpdate<E::Share>,
    mode: UpdateMode,
    bound: HopBound,
) -> Result<Verdict, VerifyError> {
    incremental_check_merged(engine, fib, update, mode, bound).map(|(v, _)| v)
}

/// [`incremental_check`] that also hands back the updated table, so a
/// caller can commit it when the verdict is positive without paying for
/// the merge twice.
pub fn incremental_check_merged<E: Engine>(
    engine: &mut E,
    fib: &SharedFib<E::Share>,
    update: &SharedUpdate<E::Share>,
    mode: UpdateMode,
    bound: HopBound,
) -> Result<(Verdict, SharedFib<E::Share>), VerifyError> {
    fib.check_shape()?;
    check_update(fib, update)?;
    let start = engine.transcript().trace();
    let hypothetical = apply_update(engine, fib, update, mode)?;
    let first_hop = update.dst.components.clone();
    let out = walk(
        engine,
        &hypothetical.rows,
        first_hop,
        bound.get() - 1,
        fib.destination,
        None,
    )?;
    let verdict = finish(engine, CheckKind::Incremental, &out.reached, bound.get(), start)?;
    Ok((verdict, hypothetical))
}
