//! Browser demo. Every party runs inside the page, so this shows what the
//! protocol computes and what it opens, not how it is deployed.
//!
//! The logic lives in plain functions returning serializable reports so it
//! can be tested natively; the `#[wasm_bindgen]` wrappers turn them into
//! JSON strings.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use seagull_core::engine::{Engine, SimEngine};
use seagull_core::fib::{
    encode_for_sharing, inject_loop, parse_fib, render_fib, share_update, Asn, FibUpdate, ForwardingGraph,
};
use seagull_core::oblivious::ObliviousTrace;
use seagull_core::oracle::{connectivity_oracle, random_tree, unreached_set, update_oracle, walk_oracle};
use seagull_core::verifier::{check_reachability, incremental_check, is_loop_free, HopBound, LoopOptions, UpdateMode};
use serde::Serialize;
use wasm_bindgen::prelude::*;

const PARTIES: usize = 3;
const MAX_NODES: usize = 120;

#[derive(Debug, Serialize)]
pub struct Generated {
    pub fib: String,
    pub nodes: usize,
    pub rows: usize,
    /// ASes on the injected cycle, if any.
    pub cycle: Vec<u32>,
}

#[derive(Debug, Serialize)]
pub struct PartyView {
    pub party: usize,
    /// This party's shares of the first row's source vector.
    pub first_row: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct CheckReport {
    pub check: &'static str,
    pub result: bool,
    /// Plaintext answer, for comparison.
    pub expected: bool,
    pub rounds: u64,
    pub trace: ObliviousTrace,
    pub views: Vec<PartyView>,
    /// Extra plaintext context (unreached ASes, the walked path).
    pub detail: Vec<u32>,
}

fn parse(text: &str) -> Result<ForwardingGraph, String> {
    let fib = parse_fib(text).map_err(|e| e.to_string())?;
    if fib.n() > MAX_NODES {
        return Err(format!(
            "the demo is limited to {MAX_NODES} ASes; this table has {}",
            fib.n()
        ));
    }
    Ok(fib)
}

fn asn(fib: &ForwardingGraph, value: u32) -> Result<usize, String> {
    fib.index().require(Asn(value)).map_err(|e| e.to_string())
}

fn report(
    check: &'static str,
    verdict: seagull_core::verifier::Verdict,
    expected: bool,
    views: Vec<PartyView>,
    detail: Vec<u32>,
) -> CheckReport {
    CheckReport {
        check,
        result: verdict.result,
        expected,
        rounds: verdict.rounds_executed,
        trace: verdict.trace,
        views,
        detail,
    }
}

/// Random forwarding tree, optionally with one AS redirected into its own
/// subtree.
pub fn generate_table(shape: &str, nodes: usize, with_loop: bool, seed: u64) -> Result<Generated, String> {
    if !(2..=MAX_NODES).contains(&nodes) {
        return Err(format!("node count must be between 2 and {MAX_NODES}"));
    }
    let shape = shape
        .parse()
        .map_err(|e: seagull_core::oracle::OracleError| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tree = random_tree(shape, nodes, &mut rng);
    let (fib, cycle) = if with_loop {
        let (g, c) = inject_loop(&tree, &mut rng).map_err(|e| e.to_string())?;
        (g, c.into_iter().map(|a| a.0).collect())
    } else {
        (tree, Vec::new())
    };
    Ok(Generated {
        fib: render_fib(&fib),
        nodes: fib.n(),
        rows: fib.entries().len(),
        cycle,
    })
}

/// Shares the table among three simulated parties and runs the secure
/// loop check.
pub fn loop_check(fib_text: &str, seed: u64) -> Result<CheckReport, String> {
    let fib = parse(fib_text)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shared = encode_for_sharing(&fib, PARTIES, &mut rng).map_err(|e| e.to_string())?;
    let views = (0..PARTIES)
        .map(|p| PartyView {
            party: p,
            first_row: shared
                .rows
                .first()
                .map(|r| r.src.components.iter().map(|s| s.share_of(p).to_string()).collect())
                .unwrap_or_default(),
        })
        .collect();
    let mut engine = SimEngine::seeded(PARTIES, seed);
    let v = is_loop_free(&mut engine, &shared, LoopOptions::default()).map_err(|e| e.to_string())?;
    debug_assert_eq!(engine.transcript().trace(), v.trace);
    let unreached = unreached_set(&fib).into_iter().map(|a| a.0).collect();
    Ok(report("loop_free", v, connectivity_oracle(&fib), views, unreached))
}

/// Secure reachability from `source`, or with `next_hop` set, the
/// incremental check for redirecting `source` there.
pub fn path_check(
    fib_text: &str,
    source: u32,
    next_hop: Option<u32>,
    bound: u32,
    seed: u64,
) -> Result<CheckReport, String> {
    let fib = parse(fib_text)?;
    let bound = HopBound::new(bound).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shared = encode_for_sharing(&fib, PARTIES, &mut rng).map_err(|e| e.to_string())?;
    let mut engine = SimEngine::seeded(PARTIES, seed);
    let s = asn(&fib, source)?;
    match next_hop {
        None => {
            let v = check_reachability(&mut engine, &shared, s, fib.destination_index(), bound)
                .map_err(|e| e.to_string())?;
            let walk = walk_oracle(&fib, Asn(source), fib.destination(), bound.get());
            Ok(report(
                "reachability",
                v,
                walk.reached,
                Vec::new(),
                walk.path.iter().map(|a| a.0).collect(),
            ))
        }
        Some(hop) => {
            asn(&fib, hop)?;
            if Asn(source) == fib.destination() {
                return Err("the destination has no next hop to change".into());
            }
            let update = FibUpdate {
                source: Asn(source),
                new_next_hop: Asn(hop),
            };
            let su = share_update(update, fib.index(), PARTIES, &mut rng).map_err(|e| e.to_string())?;
            let mode = if fib.next_hop(Asn(source)).is_some() {
                UpdateMode::Replace
            } else {
                UpdateMode::Append
            };
            let v = incremental_check(&mut engine, &shared, &su, mode, bound).map_err(|e| e.to_string())?;
            let expected = update_oracle(&fib, update, bound.get());
            Ok(report("incremental", v, expected, Vec::new(), Vec::new()))
        }
    }
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
        .and_then(|v| serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string())))
}

#[wasm_bindgen]
pub fn generate(shape: &str, nodes: usize, with_loop: bool, seed: u64) -> Result<String, JsError> {
    to_js(generate_table(shape, nodes, with_loop, seed))
}

#[wasm_bindgen]
pub fn verify_loop_free(fib: &str, seed: u64) -> Result<String, JsError> {
    to_js(loop_check(fib, seed))
}

/// `next_hop` of 0 means a plain reachability check.
#[wasm_bindgen]
pub fn verify_path(fib: &str, source: u32, next_hop: u32, bound: u32, seed: u64) -> Result<String, JsError> {
    to_js(path_check(
        fib,
        source,
        (next_hop != 0).then_some(next_hop),
        bound,
        seed,
    ))
}
