//! `seagull`: generate forwarding tables, share them among verifier
//! parties and run private checks over the shares.

mod commands;
mod exit;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use seagull_core::fib::Asn;
use seagull_core::oracle::Shape;
use seagull_core::verifier::{CheckKind, Mode};

#[derive(Parser, Debug)]
#[command(
    name = "seagull",
    version,
    about = "Private verification of inter-AS forwarding tables"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Seed for every random choice; equal seeds give byte-identical output.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Loop-check termination: `fixed-round` (oblivious) or `early-exit`.
    #[arg(long, global = true, default_value = "fixed-round", value_parser = parse_mode)]
    pub mode: Mode,
    /// Hop bound for reachability, waypoint and incremental checks.
    #[arg(long, global = true, default_value_t = 15)]
    pub bound: u32,
    /// Waypoint queries allowed per principal and destination.
    #[arg(long, global = true, default_value_t = 100)]
    pub budget: u32,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse()
        .map_err(|e: seagull_core::verifier::VerifyError| e.to_string())
}

fn parse_check(s: &str) -> Result<CheckKind, String> {
    s.parse()
        .map_err(|e: seagull_core::verifier::VerifyError| e.to_string())
}

fn parse_asn(s: &str) -> Result<Asn, String> {
    s.parse().map_err(|_| format!("invalid ASN {s:?}"))
}

fn parse_shape(s: &str) -> Result<Shape, String> {
    s.parse().map_err(|e: seagull_core::oracle::OracleError| e.to_string())
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build a forwarding table from a topology or at random.
    Gen(GenArgs),
    /// Split a forwarding table into per-party share files.
    Share(ShareArgs),
    /// Write per-party dealer pools for a share directory.
    Deal(DealArgs),
    /// Run one check over a share directory and print the verdict.
    Verify(VerifyArgs),
    /// Check proposed next-hop updates before applying them.
    Query(QueryArgs),
    /// Time the six plaintext loop detectors.
    Bench(BenchArgs),
    /// Run a check and report everything it opened.
    Audit(VerifyArgs),
    /// Recover the plaintext table from all share files (testing only).
    Reconstruct(ReconstructArgs),
}

#[derive(Args, Debug)]
pub struct GenArgs {
    /// Topology file: one whitespace-separated ASN pair per line.
    #[arg(long, conflicts_with = "shape")]
    pub topology: Option<PathBuf>,
    /// Destination AS (with --topology).
    #[arg(long, value_parser = parse_asn, requires = "topology")]
    pub destination: Option<Asn>,
    /// Random tree shape: chain, star or caida-like.
    #[arg(long, value_parser = parse_shape)]
    pub shape: Option<Shape>,
    /// Node count for a random tree.
    #[arg(long, default_value_t = 10)]
    pub nodes: usize,
    /// Redirect one AS into its own subtree.
    #[arg(long)]
    pub inject_loop: bool,
    /// Add the destination's own origin entry (a loopback row), which the
    /// origin check looks for.
    #[arg(long)]
    pub originate: bool,
    /// Where to list the injected cycle's ASes (default: OUT with `.cycle` appended).
    #[arg(long)]
    pub cycle_out: Option<PathBuf>,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ShareArgs {
    #[arg(long)]
    pub fib: PathBuf,
    /// Number of verifier parties (at least 3).
    #[arg(long, short = 't', default_value_t = 3)]
    pub parties: usize,
    /// Registered origin AS for the prefix (default: the destination).
    #[arg(long, value_parser = parse_asn)]
    pub registry: Option<Asn>,
    /// Also share a pending update, `SOURCE,NEW_NEXT_HOP`.
    #[arg(long)]
    pub update: Option<String>,
    /// Session id as 32 hex digits (default: derived from --seed).
    #[arg(long)]
    pub session: Option<String>,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct DealArgs {
    #[arg(long)]
    pub shares: PathBuf,
    /// Output directory (default: the share directory).
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Triples per party (default: enough for one run of every check).
    #[arg(long)]
    pub triples: Option<u64>,
    /// Masks per party (default: enough for one run of every check).
    #[arg(long)]
    pub masks: Option<u64>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransportKind {
    Channel,
    Tcp,
}

#[derive(Args, Debug, Clone)]
pub struct VerifyArgs {
    #[arg(long)]
    pub shares: PathBuf,
    /// loop-free, reachability, waypoint, origin or incremental.
    #[arg(long, value_parser = parse_check)]
    pub check: CheckKind,
    /// Source AS for reachability and waypoint checks.
    #[arg(long, value_parser = parse_asn)]
    pub source: Option<Asn>,
    #[arg(long, value_parser = parse_asn)]
    pub waypoint: Option<Asn>,
    /// Who is asking; waypoint budgets are kept per principal.
    #[arg(long, default_value = "operator")]
    pub principal: String,
    /// Update for the incremental check, `SOURCE,NEW_NEXT_HOP`. Without it
    /// the update stored in the share files is used.
    #[arg(long)]
    pub update: Option<String>,
    /// Merge the update as a new row instead of replacing the source's row.
    #[arg(long)]
    pub append: bool,
    /// Dealer pool directory (default: an in-process dealer seeded by --seed).
    #[arg(long)]
    pub pool: Option<PathBuf>,
    /// Links between the in-process parties.
    #[arg(long, value_enum, default_value = "channel")]
    pub transport: TransportKind,
    /// Run only this party, connecting to the others over TCP.
    #[arg(long, requires = "peers")]
    pub party: Option<usize>,
    /// Comma-separated listen addresses of all parties, in party order.
    #[arg(long, value_delimiter = ',')]
    pub peers: Vec<SocketAddr>,
    /// Loop-check round cap.
    #[arg(long)]
    pub round_cap: Option<usize>,
}

#[derive(Args, Debug)]
pub struct QueryArgs {
    #[arg(long)]
    pub shares: PathBuf,
    /// Update file: `source_asn,new_next_hop_asn` lines.
    #[arg(long)]
    pub updates: PathBuf,
    /// Merge safe updates into the share files.
    #[arg(long)]
    pub commit: bool,
    #[arg(long)]
    pub append: bool,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Forwarding-table files to benchmark.
    #[arg(long = "fib")]
    pub fibs: Vec<PathBuf>,
    /// Random graph shape for generated inputs.
    #[arg(long, value_parser = parse_shape, default_value = "caida-like")]
    pub shape: Shape,
    /// Node counts of generated graphs, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub nodes: Vec<usize>,
    /// Chance that a generated graph gets a loop.
    #[arg(long, default_value_t = 0.0)]
    pub loop_probability: f64,
    #[arg(long, default_value_t = 5)]
    pub reps: usize,
    /// Write the CSV report here instead of after the table.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ReconstructArgs {
    #[arg(long)]
    pub shares: PathBuf,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::dispatch(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("seagull: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
