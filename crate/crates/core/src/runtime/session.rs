//! Verification sessions: ingestion, query execution and auditing.
//!
//! A [`PartyNode`] is one verifier's state and protocol loop. It only ever
//! holds its own shares. [`Session`] drives `t` nodes in one process, one
//! thread each, over any [`Transport`]; a networked deployment runs a single
//! node per process with the same code.

use std::collections::VecDeque;
use std::fmt;
use std::path::Path;
use std::thread;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::dealer::{DealerService, PartyPreprocessing};
use super::engine::PartyEngine;
use super::files::{self, FileError, PartyShares, PublicMetadata};
use super::transport::{Transport, TransportError};
use super::wire::{MessageKind, ProtocolMessage, SessionId};
use crate::error::ProtocolError;
use crate::fib::{Asn, FibUpdate};
use crate::field_share::{FieldElement, RoundEntry, Transcript};
use crate::oblivious::{ObliviousTrace, SharedOneHot};
use crate::verifier::{
    check_origin_uniqueness, check_reachability, check_waypoint, incremental_check_merged, incremental_cost,
    is_loop_free, loop_free_cost, origin_cost, reachability_cost, waypoint_cost, CheckKind, Cost, HopBound,
    LoopOptions, Mode, OriginStatus, PrivacyBudget, ScanStrategy, SharedFib, SharedUpdate, UpdateMode, Verdict,
    VerifyError, DEFAULT_WAYPOINT_BUDGET,
};

/// Smallest number of verifier parties a session accepts.
pub const MIN_SESSION_PARTIES: usize = 3;

#[derive(Debug, Error)]
pub enum RuntimeError {
    #[error("invalid session configuration: {0}")]
    Config(String),
    #[error("ingestion rejected: {0}")]
    Ingest(String),
    #[error("no forwarding table has been ingested")]
    NotIngested,
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("waypoint query rejected: budget of {principal:?} for destination index {destination} exhausted")]
    BudgetRejected { principal: String, destination: usize },
    #[error(
        "insufficient preprocessing for {check}: need {need_triples} triples and {need_masks} masks, \
         have {have_triples} and {have_masks}"
    )]
    PoolExhausted {
        check: CheckKind,
        need_triples: u64,
        need_masks: u64,
        have_triples: u64,
        have_masks: u64,
    },
    #[error("party {party} aborted the session: {reason}")]
    Aborted { party: usize, reason: String },
    #[error("parties computed different verdicts")]
    Disagreement,
    #[error("the session was aborted by an earlier failure")]
    SessionAborted,
    #[error(transparent)]
    Verify(VerifyError),
    #[error(transparent)]
    Files(#[from] FileError),
}

impl From<VerifyError> for RuntimeError {
    fn from(e: VerifyError) -> Self {
        match e {
            VerifyError::QueryRejected { principal, destination } => {
                RuntimeError::BudgetRejected { principal, destination }
            }
            other => RuntimeError::Verify(other),
        }
    }
}

impl From<ProtocolError> for RuntimeError {
    fn from(e: ProtocolError) -> Self {
        RuntimeError::Verify(VerifyError::Protocol(e))
    }
}

impl From<TransportError> for RuntimeError {
    fn from(e: TransportError) -> Self {
        RuntimeError::Verify(VerifyError::Protocol(ProtocolError::Transport(e.to_string())))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub parties: usize,
    pub mode: Mode,
    pub hop_bound: HopBound,
    pub budget_limit: u32,
    pub round_cap: Option<usize>,
    pub scan: ScanStrategy,
    pub update_mode: UpdateMode,
    /// Keep every opened value in the transcripts (tests and audits).
    pub record_openings: bool,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            parties: MIN_SESSION_PARTIES,
            mode: Mode::FixedRound,
            hop_bound: HopBound::DEFAULT,
            budget_limit: DEFAULT_WAYPOINT_BUDGET,
            round_cap: None,
            scan: ScanStrategy::Frontier,
            update_mode: UpdateMode::Replace,
            record_openings: false,
        }
    }
}

impl SessionConfig {
    pub fn validate(&self) -> Result<(), RuntimeError> {
        if self.parties < MIN_SESSION_PARTIES {
            return Err(RuntimeError::Config(format!(
                "{} parties requested, at least {MIN_SESSION_PARTIES} are required",
                self.parties
            )));
        }
        Ok(())
    }

    pub fn loop_options(&self) -> LoopOptions {
        LoopOptions {
            mode: self.mode,
            round_cap: self.round_cap,
            scan: self.scan,
        }
    }
}

/// A check with its public arguments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Query {
    LoopFree,
    Reachability {
        source: Asn,
    },
    Waypoint {
        principal: String,
        source: Asn,
        waypoint: Asn,
    },
    Origin,
    /// One shared view of the update per party, as prepared by the
    /// updating AS.
    Incremental {
        update: Vec<SharedUpdate<FieldElement>>,
    },
}

impl Query {
    pub fn check(&self) -> CheckKind {
        match self {
            Query::LoopFree => CheckKind::LoopFree,
            Query::Reachability { .. } => CheckKind::Reachability,
            Query::Waypoint { .. } => CheckKind::Waypoint,
            Query::Origin => CheckKind::Origin,
            Query::Incremental { .. } => CheckKind::Incremental,
        }
    }

    /// Shares an update for every party of a session.
    pub fn incremental<R: rand::Rng + ?Sized>(
        meta: &PublicMetadata,
        update: FibUpdate,
        rng: &mut R,
    ) -> Result<Query, RuntimeError> {
        if update.source == meta.destination_asn {
            return Err(RuntimeError::InvalidQuery(format!(
                "update source {} is the destination",
                update.source
            )));
        }
        let shared = crate::fib::share_update(update, &meta.index, meta.parties, rng)
            .map_err(|e| RuntimeError::InvalidQuery(e.to_string()))?;
        Ok(Query::Incremental {
            update: (0..meta.parties).map(|p| shared.party_view(p)).collect(),
        })
    }

    fn for_party(&self, party: usize) -> Result<PartyQuery, RuntimeError> {
        Ok(match self {
            Query::LoopFree => PartyQuery::LoopFree,
            Query::Reachability { source } => PartyQuery::Reachability { source: *source },
            Query::Waypoint {
                principal,
                source,
                waypoint,
            } => PartyQuery::Waypoint {
                principal: principal.clone(),
                source: *source,
                waypoint: *waypoint,
            },
            Query::Origin => PartyQuery::Origin,
            Query::Incremental { update } => PartyQuery::Incremental {
                update: update
                    .get(party)
                    .cloned()
                    .ok_or_else(|| RuntimeError::InvalidQuery(format!("no update shares for party {party}")))?,
            },
        })
    }
}

/// What one party learns about a query: the public arguments and its own
/// share of any private argument.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PartyQuery {
    LoopFree,
    Reachability {
        source: Asn,
    },
    Waypoint {
        principal: String,
        source: Asn,
        waypoint: Asn,
    },
    Origin,
    Incremental {
        update: SharedUpdate<FieldElement>,
    },
}

impl PartyQuery {
    pub fn check(&self) -> CheckKind {
        match self {
            PartyQuery::LoopFree => CheckKind::LoopFree,
            PartyQuery::Reachability { .. } => CheckKind::Reachability,
            PartyQuery::Waypoint { .. } => CheckKind::Waypoint,
            PartyQuery::Origin => CheckKind::Origin,
            PartyQuery::Incremental { .. } => CheckKind::Incremental,
        }
    }
}

/// Public sizes a query ran against; enough to predict its cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditSpec {
    pub parties: usize,
    pub n: usize,
    pub rows: usize,
    pub loop_options: LoopOptions,
    pub hop_bound: HopBound,
    pub update_mode: UpdateMode,
}

impl AuditSpec {
    /// Closed-form cost. `rounds` is the loop check's executed round count
    /// and `unique` whether the origin check found exactly one origin.
    pub fn cost(&self, check: CheckKind, rounds: u64, unique: bool) -> Cost {
        let (t, n, rows) = (self.parties, self.n, self.rows);
        match check {
            CheckKind::LoopFree => loop_free_cost(t, n, rows, self.loop_options, rounds),
            CheckKind::Reachability => reachability_cost(t, n, rows, self.hop_bound),
            CheckKind::Waypoint => waypoint_cost(t, n, rows, self.hop_bound),
            CheckKind::Origin => origin_cost(t, n, rows, unique),
            CheckKind::Incremental => incremental_cost(t, n, rows, self.update_mode, self.hop_bound),
        }
    }

    /// The most a query can cost, for sizing preprocessing before round 1.
    pub fn worst_case(&self, check: CheckKind) -> Cost {
        let rounds = self.loop_options.round_bound(self.n) as u64;
        self.cost(check, rounds, true)
    }
}

/// Result of one query as agreed by every party.
#[derive(Debug, Clone)]
pub struct QueryOutcome {
    pub seq: u64,
    pub verdict: Verdict,
    pub origin: Option<OriginStatus>,
    pub transcript: Transcript,
    pub spec: AuditSpec,
    /// Set when an incremental query found the update safe and it was
    /// merged into the stored table.
    pub committed: bool,
    pub version: u32,
}

/// One verifier's state.
#[derive(Debug, Clone)]
pub struct PartyNode {
    party: usize,
    config: SessionConfig,
    meta: PublicMetadata,
    fib: SharedFib<FieldElement>,
    registry: Option<SharedOneHot<FieldElement>>,
    budget: PrivacyBudget,
    next_round: u32,
}

fn origin_code(o: Option<OriginStatus>) -> u64 {
    match o {
        None => 0,
        Some(OriginStatus::NoOrigin) => 1,
        Some(OriginStatus::MultipleOrigins) => 2,
        Some(OriginStatus::Unauthorized) => 3,
        Some(OriginStatus::Authorized) => 4,
    }
}

fn check_code(c: CheckKind) -> u64 {
    match c {
        CheckKind::LoopFree => 1,
        CheckKind::Reachability => 2,
        CheckKind::Waypoint => 3,
        CheckKind::Origin => 4,
        CheckKind::Incremental => 5,
    }
}

/// Sends `payload` to every peer and fails unless every peer sent the same.
fn broadcast_agree(
    transport: &mut dyn Transport,
    session: SessionId,
    round: u32,
    kind: MessageKind,
    payload: Vec<FieldElement>,
) -> Result<(), RuntimeError> {
    let me = transport.party();
    let peers: Vec<usize> = (0..transport.parties()).filter(|p| *p != me).collect();
    let msg = ProtocolMessage::new(session, round, kind, payload);
    for &p in &peers {
        transport.send(p, &msg)?;
    }
    let mut agree = true;
    for &p in &peers {
        let got = transport.recv(p)?;
        if got.session != session || got.round != round || got.kind != kind {
            return Err(RuntimeError::Aborted {
                party: me,
                reason: format!("party {p} is out of step (round {}, {:?})", got.round, got.kind),
            });
        }
        agree &= got.payload == msg.payload;
    }
    if agree {
        Ok(())
    } else {
        Err(match kind {
            MessageKind::ShareIngest => RuntimeError::Ingest("parties hold tables of different dimensions".into()),
            _ => RuntimeError::Disagreement,
        })
    }
}

impl PartyNode {
    pub fn new(config: SessionConfig, meta: PublicMetadata, shares: PartyShares) -> Result<Self, RuntimeError> {
        config.validate()?;
        if meta.parties != config.parties {
            return Err(RuntimeError::Ingest(format!(
                "shares were prepared for {} parties, session has {}",
                meta.parties, config.parties
            )));
        }
        if shares.party >= config.parties {
            return Err(RuntimeError::Ingest(format!(
                "no party {} in a {}-party session",
                shares.party, config.parties
            )));
        }
        meta.check_fib(&shares.fib)?;
        if shares.registry.as_ref().is_some_and(|r| r.len() != meta.n) {
            return Err(RuntimeError::Ingest("registry vector does not match n".into()));
        }
        Ok(PartyNode {
            party: shares.party,
            budget: PrivacyBudget::new(config.budget_limit),
            config,
            meta,
            fib: shares.fib,
            registry: shares.registry,
            next_round: 0,
        })
    }

    pub fn party(&self) -> usize {
        self.party
    }

    pub fn metadata(&self) -> &PublicMetadata {
        &self.meta
    }

    pub fn budget(&self) -> &PrivacyBudget {
        &self.budget
    }

    pub fn set_budget(&mut self, budget: PrivacyBudget) {
        self.budget = budget;
    }

    /// Everything this party stores, as it would be written to disk.
    pub fn dump(&self) -> PartyShares {
        PartyShares {
            party: self.party,
            fib: self.fib.clone(),
            update: None,
            registry: self.registry.clone(),
        }
    }

    /// Next wire round this party will use.
    pub fn next_round(&self) -> u32 {
        self.next_round
    }

    fn take_round(&mut self) -> u32 {
        self.next_round += 1;
        self.next_round
    }

    /// Confirms with every peer that all parties hold tables of the same
    /// public shape. Only public metadata crosses the wire.
    pub fn confirm_dimensions(&mut self, transport: &mut dyn Transport) -> Result<(), RuntimeError> {
        let round = self.take_round();
        let dims = [
            self.meta.version as u64,
            self.meta.n as u64,
            self.meta.rows as u64,
            self.meta.destination as u64,
            self.registry.is_some() as u64,
        ];
        broadcast_agree(
            transport,
            self.meta.session,
            round,
            MessageKind::ShareIngest,
            dims.into_iter().map(FieldElement::new).collect(),
        )
    }

    pub fn audit_spec(&self) -> AuditSpec {
        AuditSpec {
            parties: self.config.parties,
            n: self.meta.n,
            rows: self.fib.rows.len(),
            loop_options: self.config.loop_options(),
            hop_bound: self.config.hop_bound,
            update_mode: self.config.update_mode,
        }
    }

    fn index(&self, asn: Asn) -> Result<usize, RuntimeError> {
        self.meta
            .index
            .index_of(asn)
            .ok_or_else(|| RuntimeError::InvalidQuery(format!("AS {asn} is not part of this session")))
    }

    /// Runs one query to completion. Any failure closes this party's links
    /// so that its peers abort too instead of waiting forever.
    pub fn run(
        &mut self,
        query: &PartyQuery,
        transport: &mut dyn Transport,
        pre: &mut dyn PartyPreprocessing,
    ) -> Result<QueryOutcome, RuntimeError> {
        let result = self.run_inner(query, transport, pre);
        if matches!(
            result,
            Err(RuntimeError::Verify(_) | RuntimeError::Aborted { .. } | RuntimeError::Disagreement)
        ) {
            transport.close();
        }
        result
    }

    fn run_inner(
        &mut self,
        query: &PartyQuery,
        transport: &mut dyn Transport,
        pre: &mut dyn PartyPreprocessing,
    ) -> Result<QueryOutcome, RuntimeError> {
        let check = query.check();
        let spec = self.audit_spec();
        let d = self.meta.destination;

        // Rejections happen before any frame is sent, identically at every party.
        if let PartyQuery::Waypoint { principal, .. } = query {
            if self.budget.remaining(principal, d) == 0 {
                return Err(RuntimeError::BudgetRejected {
                    principal: principal.clone(),
                    destination: d,
                });
            }
        }
        if check == CheckKind::Origin && self.registry.is_none() {
            return Err(RuntimeError::InvalidQuery("no registry shares were ingested".into()));
        }
        let need = spec.worst_case(check);
        if let Some((have_triples, have_masks)) = pre.available() {
            if have_triples < need.triples || have_masks < need.masks {
                return Err(RuntimeError::PoolExhausted {
                    check,
                    need_triples: need.triples,
                    need_masks: need.masks,
                    have_triples,
                    have_masks,
                });
            }
        }

        let session = self.meta.session;
        let mut engine = PartyEngine::new(session, self.next_round, transport, pre, self.config.record_openings);
        let mut origin = None;
        let mut merged = None;
        let verdict = match query {
            PartyQuery::LoopFree => is_loop_free(&mut engine, &self.fib, self.config.loop_options())?,
            PartyQuery::Reachability { source } => {
                let s = self.index(*source)?;
                check_reachability(&mut engine, &self.fib, s, d, self.config.hop_bound)?
            }
            PartyQuery::Waypoint {
                principal,
                source,
                waypoint,
            } => {
                let (s, w) = (self.index(*source)?, self.index(*waypoint)?);
                check_waypoint(
                    &mut engine,
                    &self.fib,
                    s,
                    d,
                    w,
                    self.config.hop_bound,
                    &mut self.budget,
                    principal,
                )?
            }
            PartyQuery::Origin => {
                let registry = self.registry.as_ref().expect("checked above");
                let (v, status) = check_origin_uniqueness(&mut engine, &self.fib, registry)?;
                origin = Some(status);
                v
            }
            PartyQuery::Incremental { update } => {
                let (v, table) = incremental_check_merged(
                    &mut engine,
                    &self.fib,
                    update,
                    self.config.update_mode,
                    self.config.hop_bound,
                )?;
                merged = v.result.then_some(table);
                v
            }
        };
        let round = engine.wire_round();
        let transcript = engine.into_transcript();
        self.next_round = round;

        let t = &verdict.trace;
        let summary = [
            check_code(verdict.check),
            verdict.result as u64,
            verdict.rounds_executed,
            t.multiplications,
            t.openings,
            t.messages,
            t.rounds,
            (verdict.mode == Mode::EarlyExit) as u64,
            origin_code(origin),
        ];
        let verdict_round = self.take_round();
        broadcast_agree(
            transport,
            session,
            verdict_round,
            MessageKind::Verdict,
            summary.into_iter().map(FieldElement::new).collect(),
        )?;

        let committed = merged.is_some();
        if let Some(table) = merged {
            self.meta.rows = table.rows.len();
            self.meta.version += 1;
            self.fib = table;
        }
        Ok(QueryOutcome {
            seq: 0,
            verdict,
            origin,
            transcript,
            spec,
            committed,
            version: self.meta.version,
        })
    }
}

/// An entry in a session's event log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryEvent {
    pub seq: u64,
    pub check: CheckKind,
    pub first_round: u32,
    pub verdict_round: u32,
    pub outcome: String,
}

/// `t` parties in one process, each on its own thread, sharing nothing but
/// their transports.
pub struct Session {
    id: SessionId,
    config: SessionConfig,
    nodes: Vec<PartyNode>,
    transports: Vec<Box<dyn Transport>>,
    preprocessing: Vec<Box<dyn PartyPreprocessing>>,
    queue: VecDeque<(u64, Query)>,
    next_seq: u64,
    events: Vec<QueryEvent>,
    aborted: bool,
}

impl fmt::Debug for Session {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Session")
            .field("id", &self.id)
            .field("config", &self.config)
            .field("ingested", &!self.nodes.is_empty())
            .field("aborted", &self.aborted)
            .finish()
    }
}

impl Session {
    pub fn new(
        id: SessionId,
        config: SessionConfig,
        transports: Vec<Box<dyn Transport>>,
        preprocessing: Vec<Box<dyn PartyPreprocessing>>,
    ) -> Result<Self, RuntimeError> {
        config.validate()?;
        if transports.len() != config.parties || preprocessing.len() != config.parties {
            return Err(RuntimeError::Config(format!(
                "{} parties configured but {} transports and {} preprocessing sources supplied",
                config.parties,
                transports.len(),
                preprocessing.len()
            )));
        }
        for (i, tr) in transports.iter().enumerate() {
            if tr.party() != i || tr.parties() != config.parties {
                return Err(RuntimeError::Config(format!(
                    "transport {i} is wired for the wrong party"
                )));
            }
        }
        Ok(Session {
            id,
            config,
            nodes: Vec::new(),
            transports,
            preprocessing,
            queue: VecDeque::new(),
            next_seq: 1,
            events: Vec::new(),
            aborted: false,
        })
    }

    /// In-process session with channel links and a seeded online dealer.
    pub fn local(id: SessionId, config: SessionConfig, dealer_seed: u64) -> Result<Self, RuntimeError> {
        config.validate()?;
        let transports = super::transport::channel_mesh(config.parties)
            .into_iter()
            .map(|t| Box::new(t) as Box<dyn Transport>)
            .collect();
        let pre = DealerService::new(config.parties, dealer_seed, id)
            .handles()
            .into_iter()
            .map(|h| Box::new(h) as Box<dyn PartyPreprocessing>)
            .collect();
        Session::new(id, config, transports, pre)
    }

    /// Same as [`Session::local`] over loopback TCP sockets.
    pub fn local_tcp(id: SessionId, config: SessionConfig, dealer_seed: u64) -> Result<Self, RuntimeError> {
        config.validate()?;
        let transports = super::transport::tcp_mesh(config.parties)?
            .into_iter()
            .map(|t| Box::new(t) as Box<dyn Transport>)
            .collect();
        let pre = DealerService::new(config.parties, dealer_seed, id)
            .handles()
            .into_iter()
            .map(|h| Box::new(h) as Box<dyn PartyPreprocessing>)
            .collect();
        Session::new(id, config, transports, pre)
    }

    pub fn id(&self) -> SessionId {
        self.id
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn nodes(&self) -> &[PartyNode] {
        &self.nodes
    }

    pub fn events(&self) -> &[QueryEvent] {
        &self.events
    }

    pub fn metadata(&self) -> Option<&PublicMetadata> {
        self.nodes.first().map(PartyNode::metadata)
    }

    /// Waypoint budget usage; identical at every party.
    pub fn budget(&self) -> Option<&PrivacyBudget> {
        self.nodes.first().map(PartyNode::budget)
    }

    pub fn set_budget(&mut self, budget: PrivacyBudget) {
        for n in &mut self.nodes {
            n.set_budget(budget.clone());
        }
    }

    fn usable(&self) -> Result<(), RuntimeError> {
        if self.aborted {
            Err(RuntimeError::SessionAborted)
        } else {
            Ok(())
        }
    }

    /// Runs `f` on every party concurrently and collects the results in
    /// party order.
    fn on_all_parties<T, F>(&mut self, nodes: &mut [PartyNode], f: F) -> Vec<Result<T, RuntimeError>>
    where
        T: Send,
        F: Fn(&mut PartyNode, &mut dyn Transport, &mut dyn PartyPreprocessing) -> Result<T, RuntimeError> + Sync,
    {
        let f = &f;
        thread::scope(|s| {
            let handles: Vec<_> = nodes
                .iter_mut()
                .zip(self.transports.iter_mut())
                .zip(self.preprocessing.iter_mut())
                .map(|((node, tr), pre)| s.spawn(move || f(node, tr.as_mut(), pre.as_mut())))
                .collect();
            handles
                .into_iter()
                .enumerate()
                .map(|(party, h)| {
                    h.join().unwrap_or_else(|_| {
                        Err(RuntimeError::Aborted {
                            party,
                            reason: "party thread panicked".into(),
                        })
                    })
                })
                .collect()
        })
    }

    /// Picks the error that explains a failed joint step: a peer's own
    /// failure is more useful than the disconnects it caused elsewhere.
    fn root_cause(errors: Vec<RuntimeError>) -> RuntimeError {
        let is_knock_on = |e: &RuntimeError| matches!(e, RuntimeError::Verify(VerifyError::Protocol(ProtocolError::Transport(m))) if m.contains("disconnected"));
        let mut errors = errors;
        let pos = errors.iter().position(|e| !is_knock_on(e)).unwrap_or(0);
        errors.swap_remove(pos)
    }

    /// Accepts a client's per-party shares. Either every party accepts the
    /// new table or none does and the previous state is kept. Re-ingesting
    /// replaces the table under the next version number.
    pub fn ingest(&mut self, meta: PublicMetadata, shares: Vec<PartyShares>) -> Result<u32, RuntimeError> {
        self.usable()?;
        if meta.session != self.id {
            return Err(RuntimeError::Ingest(format!(
                "shares belong to session {}, not {}",
                meta.session, self.id
            )));
        }
        if shares.len() != self.config.parties {
            return Err(RuntimeError::Ingest(format!(
                "{} share stores supplied for {} parties",
                shares.len(),
                self.config.parties
            )));
        }
        let version = self.nodes.first().map_or(1, |n| n.meta.version + 1);
        let mut candidates = Vec::with_capacity(shares.len());
        for (i, mut s) in shares.into_iter().enumerate() {
            if s.party != i {
                return Err(RuntimeError::Ingest(format!(
                    "share store {i} belongs to party {}",
                    s.party
                )));
            }
            // Each party derives its metadata from its own shares.
            let mut own = meta.clone();
            own.version = version;
            own.rows = s.fib.rows.len();
            if s.fib.n != own.n {
                return Err(RuntimeError::Ingest(format!(
                    "party {i} holds n={}, metadata says {}",
                    s.fib.n, own.n
                )));
            }
            s.update = None;
            let mut node = PartyNode::new(self.config.clone(), own, s)?;
            node.next_round = self.nodes.first().map_or(0, PartyNode::next_round);
            if let Some(old) = self.nodes.get(i) {
                node.budget = old.budget.clone();
            }
            candidates.push(node);
        }
        let results = self.on_all_parties(&mut candidates, |node, tr, _| node.confirm_dimensions(tr));
        let errors: Vec<_> = results.into_iter().filter_map(Result::err).collect();
        if !errors.is_empty() {
            // Keep wire rounds increasing even though the new table was discarded.
            for (old, new) in self.nodes.iter_mut().zip(&candidates) {
                old.next_round = new.next_round;
            }
            return Err(Self::root_cause(errors));
        }
        self.nodes = candidates;
        Ok(version)
    }

    /// Loads a share directory written by [`files::write_share_dir`].
    pub fn ingest_dir(&mut self, dir: &Path) -> Result<u32, RuntimeError> {
        let (meta, shares) = files::read_share_dir(dir)?;
        self.ingest(meta, shares)
    }

    /// Writes the current (possibly updated) table back as a share directory.
    pub fn persist(&self, dir: &Path) -> Result<(), RuntimeError> {
        let meta = self.metadata().ok_or(RuntimeError::NotIngested)?;
        let dumps: Vec<_> = self.nodes.iter().map(PartyNode::dump).collect();
        files::write_share_dir(dir, meta, &dumps)?;
        Ok(())
    }

    /// Queues a query; returns its sequence number.
    pub fn submit(&mut self, query: Query) -> u64 {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.queue.push_back((seq, query));
        seq
    }

    /// Runs queued queries one after another. Each starts only after the
    /// previous one's verdict exchange has finished at every party.
    pub fn drain(&mut self) -> Vec<(u64, Result<QueryOutcome, RuntimeError>)> {
        let mut out = Vec::new();
        while let Some((seq, query)) = self.queue.pop_front() {
            let result = self.execute(seq, &query);
            out.push((seq, result));
        }
        out
    }

    /// Submits and runs a single query.
    pub fn run(&mut self, query: Query) -> Result<QueryOutcome, RuntimeError> {
        let seq = self.submit(query);
        let mut results = self.drain();
        let (got, result) = results.pop().expect("one query queued");
        debug_assert_eq!(got, seq);
        result
    }

    fn execute(&mut self, seq: u64, query: &Query) -> Result<QueryOutcome, RuntimeError> {
        self.usable()?;
        if self.nodes.is_empty() {
            return Err(RuntimeError::NotIngested);
        }
        let views = (0..self.config.parties)
            .map(|p| query.for_party(p))
            .collect::<Result<Vec<_>, _>>()?;
        let first_round = self.nodes[0].next_round + 1;
        let mut nodes = std::mem::take(&mut self.nodes);
        let results = self.on_all_parties(&mut nodes, |node, tr, pre| node.run(&views[node.party], tr, pre));
        self.nodes = nodes;

        let mut outcomes = Vec::new();
        let mut errors = Vec::new();
        for r in results {
            match r {
                Ok(o) => outcomes.push(o),
                Err(e) => errors.push(e),
            }
        }
        let event = |outcome: String, verdict_round: u32| QueryEvent {
            seq,
            check: query.check(),
            first_round,
            verdict_round,
            outcome,
        };
        if !errors.is_empty() {
            let err = Self::root_cause(errors);
            // Rejections before round 1 leave the session usable.
            if !matches!(
                err,
                RuntimeError::BudgetRejected { .. }
                    | RuntimeError::PoolExhausted { .. }
                    | RuntimeError::InvalidQuery(_)
            ) || !outcomes.is_empty()
            {
                self.aborted = true;
            }
            self.events.push(event(format!("error: {err}"), 0));
            return Err(err);
        }
        let first = outcomes.swap_remove(0);
        if outcomes.iter().any(|o| {
            o.verdict != first.verdict || o.origin != first.origin || o.transcript.trace() != first.transcript.trace()
        }) {
            self.aborted = true;
            return Err(RuntimeError::Disagreement);
        }
        self.events
            .push(event(first.verdict.result.to_string(), self.nodes[0].next_round));
        Ok(QueryOutcome { seq, ..first })
    }

    /// Builds a leakage report for a finished query.
    pub fn audit(&self, outcome: &QueryOutcome) -> LeakageReport {
        audit_transcript(&outcome.spec, &outcome.verdict, outcome.origin, &outcome.transcript)
    }
}

/// The JSON-lines verdict format.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictRecord {
    pub session: SessionId,
    pub check: CheckKind,
    pub result: bool,
    pub rounds: u64,
    pub mults: u64,
    pub openings: u64,
    pub messages: u64,
    pub mode: Mode,
}

impl VerdictRecord {
    pub fn new(session: SessionId, v: &Verdict) -> Self {
        VerdictRecord {
            session,
            check: v.check,
            result: v.result,
            rounds: v.rounds_executed,
            mults: v.trace.multiplications,
            openings: v.trace.openings,
            messages: v.trace.messages,
            mode: v.mode,
        }
    }

    /// One line of JSON, without the trailing newline.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("verdict records always serialize")
    }
}

/// What a query made public, checked against the closed-form cost.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeakageReport {
    pub check: CheckKind,
    pub mode: Mode,
    pub parties: usize,
    pub n: usize,
    pub rows: usize,
    /// Kind and number of openings of every communication round.
    pub schedule: Vec<RoundEntry>,
    pub observed: ObliviousTrace,
    pub predicted: ObliviousTrace,
    pub beaver_openings: u64,
    pub masked_openings: u64,
    pub predicted_beaver_openings: u64,
    pub predicted_masked_openings: u64,
    /// Information revealed beyond the verdict bit, if any.
    pub declared_leakage: Vec<String>,
    pub consistent: bool,
}

impl LeakageReport {
    pub fn total_openings(&self) -> u64 {
        self.beaver_openings + self.masked_openings
    }
}

/// Lists every opening of a run by round and kind and checks the counts
/// against the closed-form prediction for the query's public sizes.
pub fn audit_transcript(
    spec: &AuditSpec,
    verdict: &Verdict,
    origin: Option<OriginStatus>,
    transcript: &Transcript,
) -> LeakageReport {
    let unique = matches!(origin, Some(OriginStatus::Authorized | OriginStatus::Unauthorized));
    let predicted = spec.cost(verdict.check, verdict.rounds_executed, unique);
    let schedule = transcript.schedule().to_vec();
    let beaver: u64 = schedule
        .iter()
        .filter(|r| r.kind == crate::field_share::OpeningKind::Beaver)
        .map(|r| r.openings)
        .sum();
    let masked: u64 = schedule.iter().map(|r| r.openings).sum::<u64>() - beaver;
    let mut declared = Vec::new();
    if verdict.check == CheckKind::LoopFree && verdict.mode == Mode::EarlyExit {
        declared.push(format!("rounds_executed={}", verdict.rounds_executed));
    }
    if let Some(status) = origin {
        let class = match status {
            OriginStatus::NoOrigin => "none",
            OriginStatus::MultipleOrigins => "multiple",
            OriginStatus::Unauthorized | OriginStatus::Authorized => "unique",
        };
        declared.push(format!("origin_count_class={class}"));
    }
    let observed = transcript.trace();
    let consistent = observed == predicted.trace
        && observed == verdict.trace
        && beaver == 2 * predicted.triples
        && masked == predicted.masks
        && schedule.len() as u64 == observed.rounds;
    LeakageReport {
        check: verdict.check,
        mode: verdict.mode,
        parties: spec.parties,
        n: spec.n,
        rows: spec.rows,
        schedule,
        observed,
        predicted: predicted.trace,
        beaver_openings: beaver,
        masked_openings: masked,
        predicted_beaver_openings: 2 * predicted.triples,
        predicted_masked_openings: predicted.masks,
        declared_leakage: declared,
        consistent,
    }
}

/// Runs one party of a networked session until its query finishes.
pub fn run_party(
    node: &mut PartyNode,
    query: &Query,
    transport: &mut dyn Transport,
    pre: &mut dyn PartyPreprocessing,
) -> Result<QueryOutcome, RuntimeError> {
    let view = query.for_party(node.party)?;
    node.run(&view, transport, pre)
}
