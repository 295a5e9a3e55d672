//! Session lifecycle through share directories on disk.

mod common;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use seagull_core::fib::{decode_shared_fib, Asn, FibUpdate, ForwardingGraph};
use seagull_core::field_share::DealerStream;
use seagull_core::oracle::{connectivity_oracle, random_tree, Shape};
use seagull_core::runtime::{
    channel_mesh, files, PartyPool, PartyPreprocessing, Query, RuntimeError, Session, SessionConfig, SessionId,
    Transport,
};
use seagull_core::samples;
use seagull_core::verifier::{CheckKind, Mode, SharedFib};

use common::*;

const ID: SessionId = SessionId([3; 16]);

fn write_dir(fib: &ForwardingGraph, dir: &std::path::Path, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (meta, stores) = files::share_table(fib, T, ID, fib.destination(), None, &mut rng).unwrap();
    files::write_share_dir(dir, &meta, &stores).unwrap();
}

fn read_back(dir: &std::path::Path) -> ForwardingGraph {
    let (meta, stores) = files::read_share_dir(dir).unwrap();
    let views: Vec<_> = stores.into_iter().map(|s| s.fib).collect();
    decode_shared_fib(&SharedFib::from_party_views(&views).unwrap(), &meta.index).unwrap()
}

#[test]
fn committed_updates_persist() {
    let tmp = tempfile::tempdir().unwrap();
    let fib = samples::forwarding_tree();
    write_dir(&fib, tmp.path(), 1);

    let mut session = Session::local(ID, SessionConfig::default(), 7).unwrap();
    assert_eq!(session.ingest_dir(tmp.path()).unwrap(), 1);
    let meta = session.metadata().unwrap().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut expected = fib.clone();
    for (update, safe) in [
        (FibUpdate::new(6, 1), false),
        (FibUpdate::new(1, 2), true),
        (FibUpdate::new(4, 6), true),
    ] {
        let out = session
            .run(Query::incremental(&meta, update, &mut rng).unwrap())
            .unwrap();
        assert_eq!(out.verdict.result, safe, "{update:?}");
        assert_eq!(out.committed, safe);
        if safe {
            expected = expected.apply_update(update).unwrap();
        }
    }
    assert_eq!(session.metadata().unwrap().version, 3);
    assert!(session.run(Query::LoopFree).unwrap().verdict.result);

    let out = tempfile::tempdir().unwrap();
    session.persist(out.path()).unwrap();
    let back = read_back(out.path());
    let mut got: Vec<_> = back.entries().to_vec();
    let mut want: Vec<_> = expected.entries().to_vec();
    got.sort_by_key(|e| e.source);
    want.sort_by_key(|e| e.source);
    assert_eq!(got, want);
}

#[test]
fn pooled_session_matches_online_dealer() {
    let fib = random_tree(Shape::CaidaLike, 12, &mut ChaCha8Rng::seed_from_u64(4));
    let tmp = tempfile::tempdir().unwrap();
    write_dir(&fib, tmp.path(), 5);
    let config = SessionConfig {
        record_openings: true,
        ..SessionConfig::default()
    };

    let mut online = Session::local(ID, config.clone(), 11).unwrap();
    online.ingest_dir(tmp.path()).unwrap();
    let a = online.run(Query::LoopFree).unwrap();

    let spec = online.nodes()[0].audit_spec();
    let need = spec.worst_case(CheckKind::LoopFree);
    let pools = PartyPool::split(&mut DealerStream::new(T, 11), need.triples, need.masks).unwrap();
    let transports = channel_mesh(T)
        .into_iter()
        .map(|t| Box::new(t) as Box<dyn Transport>)
        .collect();
    let pre = pools
        .into_iter()
        .map(|p| Box::new(p) as Box<dyn PartyPreprocessing>)
        .collect();
    let mut pooled = Session::new(ID, config, transports, pre).unwrap();
    pooled.ingest_dir(tmp.path()).unwrap();
    let b = pooled.run(Query::LoopFree).unwrap();

    assert_eq!(a.verdict, b.verdict);
    assert_eq!(a.transcript.openings(), b.transcript.openings());
    // The pool held exactly one loop check; the next one is refused up front.
    assert!(matches!(
        pooled.run(Query::LoopFree),
        Err(RuntimeError::PoolExhausted { .. })
    ));
}

#[test]
fn early_exit_declares_its_round_count() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let fib = random_tree(Shape::Star, 20, &mut rng);
    let tmp = tempfile::tempdir().unwrap();
    write_dir(&fib, tmp.path(), 6);
    let config = SessionConfig {
        mode: Mode::EarlyExit,
        ..SessionConfig::default()
    };
    let mut session = Session::local(ID, config, 1).unwrap();
    session.ingest_dir(tmp.path()).unwrap();
    let out = session.run(Query::LoopFree).unwrap();
    assert!(out.verdict.result);
    assert!(out.verdict.rounds_executed < 19, "a star finishes early");
    let report = session.audit(&out);
    assert!(report.consistent);
    assert_eq!(
        report.declared_leakage,
        vec![format!("rounds_executed={}", out.verdict.rounds_executed)]
    );
}

#[test]
fn fixed_round_audits_are_shape_blind() {
    let mut reports = Vec::new();
    for (k, shape) in [Shape::Chain, Shape::Star].into_iter().enumerate() {
        let fib = random_tree(shape, 15, &mut ChaCha8Rng::seed_from_u64(k as u64));
        let tmp = tempfile::tempdir().unwrap();
        write_dir(&fib, tmp.path(), k as u64);
        let mut session = Session::local(ID, SessionConfig::default(), 3).unwrap();
        session.ingest_dir(tmp.path()).unwrap();
        let out = session
            .run(Query::Reachability {
                source: fib.entries()[0].source,
            })
            .unwrap();
        let report = session.audit(&out);
        assert!(report.consistent);
        assert!(report.declared_leakage.is_empty());
        reports.push(report.schedule);
    }
    assert_eq!(reports[0], reports[1]);
}

#[test]
fn reingest_bumps_version_and_keeps_budget() {
    let tmp = tempfile::tempdir().unwrap();
    let fib = samples::forwarding_tree();
    write_dir(&fib, tmp.path(), 8);
    let config = SessionConfig {
        budget_limit: 1,
        ..SessionConfig::default()
    };
    let mut session = Session::local(ID, config, 2).unwrap();
    session.ingest_dir(tmp.path()).unwrap();
    let waypoint = || Query::Waypoint {
        principal: "p".into(),
        source: Asn(1),
        waypoint: Asn(3),
    };
    assert!(session.run(waypoint()).unwrap().verdict.result);

    let looped = samples::looped_graph();
    write_dir(&looped, tmp.path(), 9);
    assert_eq!(session.ingest_dir(tmp.path()).unwrap(), 2);
    assert_eq!(
        session.run(Query::LoopFree).unwrap().verdict.result,
        connectivity_oracle(&looped)
    );
    assert!(matches!(
        session.run(waypoint()),
        Err(RuntimeError::BudgetRejected { .. })
    ));
    // A rejection is not an abort.
    assert!(session.run(Query::Origin).is_ok());
}
