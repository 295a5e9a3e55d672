use std::fs;
use std::io::Write;
use std::net::TcpListener;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use seagull_core::fib::{
    build_fib, decode_shared_fib, inject_loop, parse_fib, parse_topology, parse_updates, render_fib, Asn, FibEntry,
    FibUpdate, ForwardingGraph,
};
use seagull_core::field_share::DealerStream;
use seagull_core::oracle::{generate_instances, random_tree, render_csv, render_table, run_benchmark, InstanceSpec};
use seagull_core::runtime::files;
use seagull_core::runtime::{
    channel_mesh, run_party, tcp_mesh, DealerService, PartyNode, PartyPool, PartyPreprocessing, PartyShares,
    PublicMetadata, Query, QueryOutcome, Session, SessionConfig, SessionId, TcpTransport, Transport, VerdictRecord,
};
use seagull_core::verifier::{CheckKind, HopBound, PrivacyBudget, SharedFib, UpdateMode};

use crate::exit::{self, verdict_code, CliError};
use crate::{
    BenchArgs, Cli, Command, DealArgs, GenArgs, Global, QueryArgs, ReconstructArgs, ShareArgs, TransportKind,
    VerifyArgs,
};

type Result<T> = std::result::Result<T, CliError>;

pub fn dispatch(cli: &Cli) -> Result<u8> {
    let g = &cli.global;
    match &cli.command {
        Command::Gen(a) => gen(g, a),
        Command::Share(a) => share(g, a),
        Command::Deal(a) => deal(g, a),
        Command::Verify(a) => verify(g, a, false),
        Command::Audit(a) => verify(g, a, true),
        Command::Query(a) => query(g, a),
        Command::Bench(a) => bench(g, a),
        Command::Reconstruct(a) => reconstruct(a),
    }
}

fn rng(g: &Global) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(g.seed)
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| CliError::new(exit::RUNTIME, format!("{}: {e}", path.display())))
}

fn parse_update(s: &str) -> Result<FibUpdate> {
    let mut all = parse_updates(s)?;
    match (all.pop(), all.is_empty()) {
        (Some(u), true) => Ok(u),
        _ => Err(CliError::input(format!(
            "expected one update SOURCE,NEW_NEXT_HOP, got {s:?}"
        ))),
    }
}

fn hop_bound(g: &Global) -> Result<HopBound> {
    HopBound::new(g.bound).map_err(CliError::input)
}

fn gen(g: &Global, a: &GenArgs) -> Result<u8> {
    let mut rng = rng(g);
    let fib = match (&a.topology, a.shape) {
        (Some(path), _) => {
            let topo = parse_topology(&read(path)?)?;
            let dest = a
                .destination
                .ok_or_else(|| CliError::input("--destination is required with --topology"))?;
            build_fib(&topo, dest)?
        }
        (None, Some(shape)) => {
            if a.nodes < 2 {
                return Err(CliError::input("a random table needs at least 2 nodes"));
            }
            random_tree(shape, a.nodes, &mut rng)
        }
        (None, None) => return Err(CliError::input("give either --topology or --shape")),
    };
    let fib = if a.originate {
        let d = fib.destination();
        let entries = fib
            .entries()
            .iter()
            .copied()
            .chain([FibEntry { source: d, next_hop: d }]);
        ForwardingGraph::with_universe(d, entries, fib.index().asns().iter().copied())?
    } else {
        fib
    };
    let fib = if a.inject_loop {
        let (looped, cycle) = inject_loop(&fib, &mut rng)?;
        let sidecar = a.cycle_out.clone().unwrap_or_else(|| {
            let mut p = a.out.clone().into_os_string();
            p.push(".cycle");
            PathBuf::from(p)
        });
        let mut text = String::from("# cycle nodes\n");
        for asn in &cycle {
            text.push_str(&format!("{asn}\n"));
        }
        write(&sidecar, &text)?;
        looped
    } else {
        fib
    };
    write(&a.out, &render_fib(&fib))?;
    eprintln!(
        "wrote {} rows over {} ASes to {}",
        fib.entries().len(),
        fib.n(),
        a.out.display()
    );
    Ok(exit::HOLDS)
}

fn share(g: &Global, a: &ShareArgs) -> Result<u8> {
    if a.parties < seagull_core::runtime::MIN_SESSION_PARTIES {
        return Err(CliError::input(format!(
            "{} parties requested; sharing needs at least {}",
            a.parties,
            seagull_core::runtime::MIN_SESSION_PARTIES
        )));
    }
    let fib = parse_fib(&read(&a.fib)?)?;
    let mut rng = rng(g);
    let session = match &a.session {
        Some(s) => s.parse().map_err(CliError::input)?,
        None => SessionId::random(&mut rng),
    };
    let update = a.update.as_deref().map(parse_update).transpose()?;
    let registered = a.registry.unwrap_or(fib.destination());
    let (meta, parties) = files::share_table(&fib, a.parties, session, registered, update, &mut rng)?;
    files::write_share_dir(&a.out, &meta, &parties)?;
    eprintln!("session {session}: {} share files in {}", a.parties, a.out.display());
    Ok(exit::HOLDS)
}

fn config(
    g: &Global,
    meta: &PublicMetadata,
    round_cap: Option<usize>,
    append: bool,
    record: bool,
) -> Result<SessionConfig> {
    Ok(SessionConfig {
        parties: meta.parties,
        mode: g.mode,
        hop_bound: hop_bound(g)?,
        budget_limit: g.budget,
        round_cap,
        update_mode: if append {
            UpdateMode::Append
        } else {
            UpdateMode::Replace
        },
        record_openings: record,
        ..SessionConfig::default()
    })
}

fn deal(g: &Global, a: &DealArgs) -> Result<u8> {
    let meta = files::read_metadata(&a.shares)?;
    let cfg = config(g, &meta, None, false, false)?;
    let spec = seagull_core::runtime::AuditSpec {
        parties: meta.parties,
        n: meta.n,
        rows: meta.rows,
        loop_options: cfg.loop_options(),
        hop_bound: cfg.hop_bound,
        update_mode: cfg.update_mode,
    };
    let everything = [
        CheckKind::LoopFree,
        CheckKind::Reachability,
        CheckKind::Waypoint,
        CheckKind::Origin,
        CheckKind::Incremental,
    ]
    .into_iter()
    .map(|c| spec.worst_case(c))
    .fold((0, 0), |(t, m), c| (t + c.triples, m + c.masks));
    let triples = a.triples.unwrap_or(everything.0);
    let masks = a.masks.unwrap_or(everything.1);
    let mut dealer = DealerStream::new(meta.parties, g.seed);
    let pools = PartyPool::split(&mut dealer, triples, masks).map_err(|e| CliError::new(exit::RUNTIME, e))?;
    let out = a.out.as_deref().unwrap_or(&a.shares);
    files::write_pool_dir(out, meta.session, &pools)?;
    eprintln!("{triples} triples and {masks} masks per party in {}", out.display());
    Ok(exit::HOLDS)
}

fn budget_path(dir: &Path, party: Option<usize>) -> PathBuf {
    match party {
        None => dir.join("budget.json"),
        Some(p) => dir.join(format!("budget-party-{p}.json")),
    }
}

fn load_budget(dir: &Path, party: Option<usize>, limit: u32) -> Result<PrivacyBudget> {
    let path = budget_path(dir, party);
    if !path.exists() {
        return Ok(PrivacyBudget::new(limit));
    }
    let b: PrivacyBudget =
        serde_json::from_str(&read(&path)?).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    Ok(b.with_limit(limit))
}

fn save_budget(dir: &Path, party: Option<usize>, budget: &PrivacyBudget) -> Result<()> {
    let text = serde_json::to_string_pretty(budget).map_err(|e| CliError::new(exit::RUNTIME, e))?;
    write(&budget_path(dir, party), &(text + "\n"))
}

fn build_query(a: &VerifyArgs, g: &Global, meta: &PublicMetadata, stored: &[PartyShares]) -> Result<Query> {
    let need =
        |v: Option<Asn>, flag: &str| v.ok_or_else(|| CliError::input(format!("--{flag} is required for {}", a.check)));
    Ok(match a.check {
        CheckKind::LoopFree => Query::LoopFree,
        CheckKind::Origin => Query::Origin,
        CheckKind::Reachability => Query::Reachability {
            source: need(a.source, "source")?,
        },
        CheckKind::Waypoint => Query::Waypoint {
            principal: a.principal.clone(),
            source: need(a.source, "source")?,
            waypoint: need(a.waypoint, "waypoint")?,
        },
        CheckKind::Incremental => match &a.update {
            Some(u) => Query::incremental(meta, parse_update(u)?, &mut rng(g))?,
            None => Query::Incremental {
                update: stored
                    .iter()
                    .map(|s| s.update.clone())
                    .collect::<Option<Vec<_>>>()
                    .ok_or_else(|| CliError::input("no --update given and the share files hold none"))?,
            },
        },
    })
}

fn preprocessing(g: &Global, a: &VerifyArgs, meta: &PublicMetadata) -> Result<Vec<Box<dyn PartyPreprocessing>>> {
    Ok(match &a.pool {
        Some(dir) => (0..meta.parties)
            .map(|p| files::read_pool(dir, meta.session, p).map(|pool| Box::new(pool) as Box<dyn PartyPreprocessing>))
            .collect::<std::result::Result<_, _>>()?,
        None => DealerService::new(meta.parties, g.seed, meta.session)
            .handles()
            .into_iter()
            .map(|h| Box::new(h) as Box<dyn PartyPreprocessing>)
            .collect(),
    })
}

fn transports(kind: TransportKind, t: usize) -> Result<Vec<Box<dyn Transport>>> {
    Ok(match kind {
        TransportKind::Channel => channel_mesh(t)
            .into_iter()
            .map(|x| Box::new(x) as Box<dyn Transport>)
            .collect(),
        TransportKind::Tcp => tcp_mesh(t)
            .map_err(|e| CliError::new(exit::RUNTIME, e))?
            .into_iter()
            .map(|x| Box::new(x) as Box<dyn Transport>)
            .collect(),
    })
}

fn report(session: SessionId, outcome: &QueryOutcome, audit: Option<&Session>) -> Result<u8> {
    let mut out = std::io::stdout().lock();
    let io = |e: std::io::Error| CliError::new(exit::RUNTIME, e);
    if let Some(status) = outcome.origin {
        eprintln!("origin: {status}");
    }
    match audit {
        None => {
            writeln!(out, "{}", VerdictRecord::new(session, &outcome.verdict).to_json_line()).map_err(io)?;
            Ok(verdict_code(outcome.verdict.result))
        }
        Some(s) => {
            let report = s.audit(outcome);
            let text = serde_json::to_string_pretty(&report).map_err(|e| CliError::new(exit::RUNTIME, e))?;
            writeln!(out, "{text}").map_err(io)?;
            if report.consistent {
                Ok(exit::HOLDS)
            } else {
                Err(CliError::new(
                    exit::RUNTIME,
                    "transcript does not match the closed-form prediction",
                ))
            }
        }
    }
}

fn verify(g: &Global, a: &VerifyArgs, audit: bool) -> Result<u8> {
    if let Some(party) = a.party {
        if audit {
            return Err(CliError::input("audit runs all parties locally; drop --party"));
        }
        return verify_networked(g, a, party);
    }
    let (meta, stored) = files::read_share_dir(&a.shares)?;
    let cfg = config(g, &meta, a.round_cap, a.append, audit)?;
    let query = build_query(a, g, &meta, &stored)?;
    let mut session = Session::new(
        meta.session,
        cfg,
        transports(a.transport, meta.parties)?,
        preprocessing(g, a, &meta)?,
    )?;
    session.ingest(meta.clone(), stored)?;
    let charged = a.check == CheckKind::Waypoint;
    if charged {
        session.set_budget(load_budget(&a.shares, None, g.budget)?);
    }
    let outcome = session.run(query);
    if charged {
        if let Some(b) = session.budget() {
            save_budget(&a.shares, None, b)?;
        }
    }
    report(meta.session, &outcome?, audit.then_some(&session))
}

fn verify_networked(g: &Global, a: &VerifyArgs, party: usize) -> Result<u8> {
    let meta = files::read_metadata(&a.shares)?;
    if a.peers.len() != meta.parties || party >= meta.parties {
        return Err(CliError::input(format!(
            "--peers must list all {} party addresses and --party must be below that",
            meta.parties
        )));
    }
    if a.update.is_some() {
        return Err(CliError::input(
            "networked incremental checks use the update stored in the share files",
        ));
    }
    let pool_dir = a
        .pool
        .as_ref()
        .ok_or_else(|| CliError::input("--pool is required when running a single party"))?;
    let mut pool = files::read_pool(pool_dir, meta.session, party)?;
    let shares = files::read_party_shares(&a.shares, &meta, party)?;
    let mut views: Vec<PartyShares> = (0..meta.parties).map(|_| shares.clone()).collect();
    // Only this party's own view is ever used; the rest are placeholders.
    views.iter_mut().enumerate().for_each(|(p, v)| v.party = p);
    let query = build_query(a, g, &meta, &views)?;
    let cfg = config(g, &meta, a.round_cap, a.append, false)?;
    let mut node = PartyNode::new(cfg, meta.clone(), PartyShares { update: None, ..shares })?;
    let charged = a.check == CheckKind::Waypoint;
    if charged {
        node.set_budget(load_budget(&a.shares, Some(party), g.budget)?);
    }
    let listener = TcpListener::bind(a.peers[party]).map_err(|e| CliError::new(exit::RUNTIME, e))?;
    let mut transport =
        TcpTransport::establish(party, listener, &a.peers).map_err(|e| CliError::new(exit::RUNTIME, e))?;
    node.confirm_dimensions(&mut transport)?;
    let outcome = run_party(&mut node, &query, &mut transport, &mut pool);
    if charged {
        save_budget(&a.shares, Some(party), node.budget())?;
    }
    report(meta.session, &outcome?, None)
}

fn query(g: &Global, a: &QueryArgs) -> Result<u8> {
    let (meta, stored) = files::read_share_dir(&a.shares)?;
    let updates = parse_updates(&read(&a.updates)?)?;
    let cfg = config(g, &meta, None, a.append, false)?;
    let pre = DealerService::new(meta.parties, g.seed, meta.session)
        .handles()
        .into_iter()
        .map(|h| Box::new(h) as Box<dyn PartyPreprocessing>)
        .collect();
    let mut session = Session::new(
        meta.session,
        cfg,
        transports(TransportKind::Channel, meta.parties)?,
        pre,
    )?;
    session.ingest(meta.clone(), stored)?;
    let mut rng = rng(g);
    let mut all_safe = true;
    let mut committed = 0;
    for update in updates {
        let current = session.metadata().expect("ingested").clone();
        let outcome = session.run(Query::incremental(&current, update, &mut rng)?)?;
        println!("{}", VerdictRecord::new(meta.session, &outcome.verdict).to_json_line());
        all_safe &= outcome.verdict.result;
        committed += usize::from(outcome.committed);
    }
    if a.commit && committed > 0 {
        session.persist(&a.shares)?;
        eprintln!("committed {committed} update(s)");
    }
    Ok(verdict_code(all_safe))
}

fn bench(g: &Global, a: &BenchArgs) -> Result<u8> {
    let mut graphs: Vec<ForwardingGraph> = a
        .fibs
        .iter()
        .map(|p| Ok(parse_fib(&read(p)?)?))
        .collect::<Result<_>>()?;
    let mut rng = rng(g);
    for &n in &a.nodes {
        let spec = InstanceSpec {
            nodes: n..=n,
            loop_probability: a.loop_probability,
            shape: a.shape,
        };
        let inst = generate_instances(&spec, 1, &mut rng).map_err(CliError::input)?;
        graphs.extend(inst.into_iter().map(|i| i.graph));
    }
    if graphs.is_empty() {
        return Err(CliError::input("nothing to benchmark: give --fib files or --nodes"));
    }
    let rows = run_benchmark(&graphs, a.reps).map_err(CliError::input)?;
    print!("{}", render_table(&rows));
    let csv = render_csv(&rows);
    match &a.csv {
        Some(path) => write(path, &csv)?,
        None => print!("\n{csv}"),
    }
    if rows.iter().all(|r| r.agree()) {
        Ok(exit::HOLDS)
    } else {
        Err(CliError::new(
            exit::DISAGREEMENT,
            "loop detectors disagree on at least one graph",
        ))
    }
}

fn reconstruct(a: &ReconstructArgs) -> Result<u8> {
    let (meta, parties) = files::read_share_dir(&a.shares)?;
    let views: Vec<_> = parties.into_iter().map(|p| p.fib).collect();
    let joined = SharedFib::from_party_views(&views).map_err(CliError::input)?;
    let graph = decode_shared_fib(&joined, &meta.index)?;
    let mut entries: Vec<FibEntry> = graph.entries().to_vec();
    entries.sort();
    let canonical = ForwardingGraph::with_universe(graph.destination(), entries, meta.index.asns().iter().copied())?;
    let text = render_fib(&canonical);
    match &a.out {
        Some(p) => write(p, &text)?,
        None => print!("{text}"),
    }
    Ok(exit::HOLDS)
}
