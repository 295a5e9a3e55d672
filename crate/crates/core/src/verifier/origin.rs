use std::fmt;

use serde::{Deserialize, Serialize};

use super::{CheckKind, Mode, SharedFib, Verdict, VerifyError};
use crate::engine::Engine;
use crate::error::ProtocolError;
use crate::field_share::{FieldElement, OpeningKind};
use crate::oblivious::SharedOneHot;

/// What the origin check found. Only the coarse class is opened; the
/// number of claimed origins beyond "more than one" stays hidden.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OriginStatus {
    NoOrigin,
    /// More than one AS claims to originate the prefix: a potential hijack.
    MultipleOrigins,
    /// A single origin that the registry does not list.
    Unauthorized,
    Authorized,
}

impl OriginStatus {
    pub fn is_hijack(self) -> bool {
        matches!(self, OriginStatus::MultipleOrigins | OriginStatus::Unauthorized)
    }
}

impl fmt::Display for OriginStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OriginStatus::NoOrigin => "no origin",
            OriginStatus::MultipleOrigins => "multiple origins",
            OriginStatus::Unauthorized => "unauthorized origin",
            OriginStatus::Authorized => "authorized origin",
        })
    }
}

/// Checks that exactly one row is a loopback (the prefix origin) and that
/// its AS is the one in the shared `registry`.
pub fn check_origin_uniqueness<E: Engine>(
    engine: &mut E,
    fib: &SharedFib<E::Share>,
    registry: &SharedOneHot<E::Share>,
) -> Result<(Verdict, OriginStatus), VerifyError> {
    fib.check_shape()?;
    if registry.len() != fib.n {
        return Err(ProtocolError::InvalidOperands {
            expected: fib.n,
            found: registry.len(),
        }
        .into());
    }
    let start = engine.transcript().trace();
    let n = fib.n;

    // Per row: is it a loopback, and is its source the registered AS?
    let pairs: Vec<_> = fib
        .rows
        .iter()
        .flat_map(|r| {
            r.src
                .components
                .iter()
                .zip(&r.dst.components)
                .chain(r.src.components.iter().zip(&registry.components))
        })
        .collect();
    let products = engine.mul_batch(&pairs)?;
    let per_row: Vec<(E::Share, E::Share)> = products
        .chunks(2 * n)
        .map(|c| (engine.sum(&c[..n]), engine.sum(&c[n..])))
        .collect();
    let count = engine.sum(per_row.iter().map(|(loopback, _)| loopback));
    let pairs: Vec<_> = per_row.iter().map(|(a, b)| (a, b)).collect();
    let registered = engine.mul_batch(&pairs)?;
    let matched = engine.sum(&registered);

    let count_minus_one = engine.add_public(&count, -FieldElement::ONE);
    let tests = engine.zero_test_batch(&[&count, &count_minus_one], OpeningKind::ZeroTest)?;
    let status = match (tests[0], tests[1]) {
        (true, _) => OriginStatus::NoOrigin,
        (false, false) => OriginStatus::MultipleOrigins,
        (false, true) => {
            let miss = engine.not(&matched);
            if engine.is_zero(&miss, OpeningKind::ZeroTest)? {
                OriginStatus::Authorized
            } else {
                OriginStatus::Unauthorized
            }
        }
    };
    let verdict = Verdict {
        check: CheckKind::Origin,
        result: status == OriginStatus::Authorized,
        rounds_executed: 0,
        trace: engine.transcript().trace() - start,
        mode: Mode::FixedRound,
    };
    Ok((verdict, status))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::SimEngine;
    use crate::fib::{encode_for_sharing, Asn, FibEntry, ForwardingGraph};
    use crate::verifier::origin_cost;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn run(entries: Vec<FibEntry>, registered: u32) -> (Verdict, OriginStatus) {
        let fib = ForwardingGraph::new(Asn(7), entries).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(registered.into());
        let shared = encode_for_sharing(&fib, 3, &mut rng).unwrap();
        let reg = SharedOneHot::share(fib.index().index_of(Asn(registered)).unwrap(), fib.n(), 3, &mut rng).unwrap();
        let mut engine = SimEngine::seeded(3, 99);
        check_origin_uniqueness(&mut engine, &shared, &reg).unwrap()
    }

    fn base() -> Vec<FibEntry> {
        vec![FibEntry::new(1, 7), FibEntry::new(2, 1), FibEntry::new(3, 7)]
    }

    #[test]
    fn single_authorized_origin() {
        let mut e = base();
        e.push(FibEntry::new(7, 7));
        let (v, s) = run(e, 7);
        assert_eq!(s, OriginStatus::Authorized);
        assert!(v.result);
        assert_eq!(v.trace, origin_cost(3, 4, 4, true).trace);
    }

    #[test]
    fn two_origins_flag_hijack() {
        let mut e = base();
        e.push(FibEntry::new(7, 7));
        e[1] = FibEntry::new(2, 2);
        let (v, s) = run(e, 7);
        assert_eq!(s, OriginStatus::MultipleOrigins);
        assert!(s.is_hijack() && !v.result);
        assert_eq!(v.trace, origin_cost(3, 4, 4, false).trace);
    }

    #[test]
    fn unregistered_origin() {
        let mut e = base();
        e.push(FibEntry::new(7, 7));
        let (v, s) = run(e, 3);
        assert_eq!(s, OriginStatus::Unauthorized);
        assert!(!v.result);
    }

    #[test]
    fn missing_origin() {
        let (v, s) = run(base(), 7);
        assert_eq!(s, OriginStatus::NoOrigin);
        assert!(!v.result && !s.is_hijack());
    }
}
