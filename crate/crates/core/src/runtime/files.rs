//! On-disk formats for party share stores and dealer pools.
//!
//! Both are CSV with one share per line:
//!
//! ```text
//! session,value_id,party,kind,share
//! ```
//!
//! FIB rows use `value_id = row * n + j` for component `j`; update and
//! registry vectors use `value_id = j`; triples and masks use their dealer id.
//! Public session metadata lives next to the share files in `public.json`.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::dealer::{PartyMask, PartyPool, PartyTriple};
use super::wire::SessionId;
use crate::fib::{encode_for_sharing, share_update, Asn, FibError, FibUpdate, ForwardingGraph, IndexMap};
use crate::field_share::FieldElement;
use crate::oblivious::SharedOneHot;
use crate::verifier::{SharedFib, SharedRow, SharedUpdate};

pub const METADATA_FILE: &str = "public.json";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum FileError {
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("share stores disagree: {0}")]
    Mismatch(String),
}

fn io_err(path: &Path, e: impl fmt::Display) -> FileError {
    FileError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn format_err(path: &Path, message: impl Into<String>) -> FileError {
    FileError::Format {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ValueKind {
    Src,
    Dst,
    UpdSrc,
    UpdDst,
    Registry,
    TripleA,
    TripleB,
    TripleC,
    Mask,
}

impl ValueKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ValueKind::Src => "SRC",
            ValueKind::Dst => "DST",
            ValueKind::UpdSrc => "UPD_SRC",
            ValueKind::UpdDst => "UPD_DST",
            ValueKind::Registry => "REGISTRY",
            ValueKind::TripleA => "TRIPLE_A",
            ValueKind::TripleB => "TRIPLE_B",
            ValueKind::TripleC => "TRIPLE_C",
            ValueKind::Mask => "MASK",
        }
    }
}

impl fmt::Display for ValueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ValueKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "SRC" => ValueKind::Src,
            "DST" => ValueKind::Dst,
            "UPD_SRC" => ValueKind::UpdSrc,
            "UPD_DST" => ValueKind::UpdDst,
            "REGISTRY" => ValueKind::Registry,
            "TRIPLE_A" => ValueKind::TripleA,
            "TRIPLE_B" => ValueKind::TripleB,
            "TRIPLE_C" => ValueKind::TripleC,
            "MASK" => ValueKind::Mask,
            other => return Err(format!("unknown value kind {other:?}")),
        })
    }
}

impl Serialize for ValueKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for ValueKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShareRecord {
    pub session: SessionId,
    pub value_id: u64,
    pub party: usize,
    pub kind: ValueKind,
    pub share: FieldElement,
}

/// Everything about a session that all parties may know. Holds no
/// next-hop information.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublicMetadata {
    pub format: u32,
    pub session: SessionId,
    pub version: u32,
    pub parties: usize,
    pub n: usize,
    pub rows: usize,
    pub destination: usize,
    pub destination_asn: Asn,
    pub index: IndexMap,
}

impl PublicMetadata {
    pub fn check_fib<S>(&self, fib: &SharedFib<S>) -> Result<(), FileError> {
        if fib.n != self.n || fib.rows.len() != self.rows || fib.destination != self.destination {
            return Err(FileError::Mismatch(format!(
                "metadata says n={} rows={} destination={}, shares have n={} rows={} destination={}",
                self.n,
                self.rows,
                self.destination,
                fib.n,
                fib.rows.len(),
                fib.destination
            )));
        }
        Ok(())
    }
}

/// Splits a table for `t` parties: public metadata plus one private store
/// per party. The registered origin and an optional pending update are
/// shared alongside the rows.
pub fn share_table<R: rand::Rng + ?Sized>(
    fib: &ForwardingGraph,
    t: usize,
    session: SessionId,
    registered: Asn,
    update: Option<FibUpdate>,
    rng: &mut R,
) -> Result<(PublicMetadata, Vec<PartyShares>), FibError> {
    let shared = encode_for_sharing(fib, t, rng)?;
    let reg_index = fib.index().require(registered)?;
    let registry = SharedOneHot::share(reg_index, fib.n(), t, rng).map_err(|_| FibError::InvalidPartyCount(t))?;
    let update = update.map(|u| share_update(u, fib.index(), t, rng)).transpose()?;
    let meta = PublicMetadata {
        format: FORMAT_VERSION,
        session,
        version: 1,
        parties: t,
        n: fib.n(),
        rows: shared.rows.len(),
        destination: fib.destination_index(),
        destination_asn: fib.destination(),
        index: fib.index().clone(),
    };
    let stores = (0..t)
        .map(|p| PartyShares {
            party: p,
            fib: shared.party_view(p),
            update: update.as_ref().map(|u| u.party_view(p)),
            registry: Some(registry.party_view(p)),
        })
        .collect();
    Ok((meta, stores))
}

/// One party's private shares.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartyShares {
    pub party: usize,
    pub fib: SharedFib<FieldElement>,
    pub update: Option<SharedUpdate<FieldElement>>,
    pub registry: Option<SharedOneHot<FieldElement>>,
}

impl PartyShares {
    pub fn records(&self, session: SessionId) -> Vec<ShareRecord> {
        let n = self.fib.n as u64;
        let party = self.party;
        let rec = |kind, value_id, share| ShareRecord {
            session,
            value_id,
            party,
            kind,
            share,
        };
        let mut out = Vec::new();
        for (r, row) in self.fib.rows.iter().enumerate() {
            let base = r as u64 * n;
            out.extend(
                row.src
                    .components
                    .iter()
                    .enumerate()
                    .map(|(j, s)| rec(ValueKind::Src, base + j as u64, *s)),
            );
            out.extend(
                row.dst
                    .components
                    .iter()
                    .enumerate()
                    .map(|(j, s)| rec(ValueKind::Dst, base + j as u64, *s)),
            );
        }
        if let Some(u) = &self.update {
            out.extend(
                u.src
                    .components
                    .iter()
                    .enumerate()
                    .map(|(j, s)| rec(ValueKind::UpdSrc, j as u64, *s)),
            );
            out.extend(
                u.dst
                    .components
                    .iter()
                    .enumerate()
                    .map(|(j, s)| rec(ValueKind::UpdDst, j as u64, *s)),
            );
        }
        if let Some(reg) = &self.registry {
            out.extend(
                reg.components
                    .iter()
                    .enumerate()
                    .map(|(j, s)| rec(ValueKind::Registry, j as u64, *s)),
            );
        }
        out
    }

    /// Rebuilds a party's shares from its records, checking that every
    /// component named by the metadata is present exactly once.
    pub fn from_records(
        meta: &PublicMetadata,
        party: usize,
        records: &[ShareRecord],
        path: &Path,
    ) -> Result<Self, FileError> {
        let n = meta.n;
        let mut src = vec![None; meta.rows * n];
        let mut dst = vec![None; meta.rows * n];
        let mut upd_src = vec![None; n];
        let mut upd_dst = vec![None; n];
        let mut registry = vec![None; n];
        for r in records {
            if r.session != meta.session {
                return Err(format_err(
                    path,
                    format!("record for session {} in store of {}", r.session, meta.session),
                ));
            }
            if r.party != party {
                return Err(format_err(
                    path,
                    format!("record for party {} in store of party {party}", r.party),
                ));
            }
            let slot = match r.kind {
                ValueKind::Src => src.get_mut(r.value_id as usize),
                ValueKind::Dst => dst.get_mut(r.value_id as usize),
                ValueKind::UpdSrc => upd_src.get_mut(r.value_id as usize),
                ValueKind::UpdDst => upd_dst.get_mut(r.value_id as usize),
                ValueKind::Registry => registry.get_mut(r.value_id as usize),
                other => return Err(format_err(path, format!("{other} record in a share store"))),
            }
            .ok_or_else(|| format_err(path, format!("{} value id {} out of range", r.kind, r.value_id)))?;
            if slot.replace(r.share).is_some() {
                return Err(format_err(
                    path,
                    format!("duplicate {} value id {}", r.kind, r.value_id),
                ));
            }
        }
        let complete = |v: Vec<Option<FieldElement>>, kind: ValueKind| {
            v.into_iter()
                .enumerate()
                .map(|(i, s)| s.ok_or_else(|| format_err(path, format!("missing {kind} value id {i}"))))
                .collect::<Result<Vec<_>, _>>()
        };
        // Optional vectors must be entirely present or entirely absent.
        let optional = |v: Vec<Option<FieldElement>>, kind: ValueKind| {
            if v.iter().all(Option::is_none) {
                Ok(None)
            } else {
                complete(v, kind).map(|components| Some(SharedOneHot { components }))
            }
        };
        let src = complete(src, ValueKind::Src)?;
        let dst = complete(dst, ValueKind::Dst)?;
        let rows = if n == 0 {
            Vec::new()
        } else {
            src.chunks(n)
                .zip(dst.chunks(n))
                .map(|(s, d)| SharedRow {
                    src: SharedOneHot { components: s.to_vec() },
                    dst: SharedOneHot { components: d.to_vec() },
                })
                .collect()
        };
        let update = match (
            optional(upd_src, ValueKind::UpdSrc)?,
            optional(upd_dst, ValueKind::UpdDst)?,
        ) {
            (Some(src), Some(dst)) => Some(SharedRow { src, dst }),
            (None, None) => None,
            _ => return Err(format_err(path, "update has only one of UPD_SRC and UPD_DST")),
        };
        Ok(PartyShares {
            party,
            fib: SharedFib {
                rows,
                n,
                destination: meta.destination,
            },
            update,
            registry: optional(registry, ValueKind::Registry)?,
        })
    }
}

pub fn write_records(path: &Path, records: &[ShareRecord]) -> Result<(), FileError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    for r in records {
        w.serialize(r).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn read_records(path: &Path) -> Result<Vec<ShareRecord>, FileError> {
    let mut rd = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| io_err(path, e))?;
    let headers = rd.headers().map_err(|e| format_err(path, e.to_string()))?;
    if headers.iter().collect::<Vec<_>>() != ["session", "value_id", "party", "kind", "share"] {
        return Err(format_err(path, "expected header session,value_id,party,kind,share"));
    }
    rd.deserialize()
        .map(|r| r.map_err(|e| format_err(path, e.to_string())))
        .collect()
}

pub fn share_file(dir: &Path, party: usize) -> PathBuf {
    dir.join(format!("party-{party}.csv"))
}

pub fn pool_file(dir: &Path, party: usize) -> PathBuf {
    dir.join(format!("pool-{party}.csv"))
}

pub fn write_metadata(dir: &Path, meta: &PublicMetadata) -> Result<(), FileError> {
    let path = dir.join(METADATA_FILE);
    let text = serde_json::to_string_pretty(meta).map_err(|e| io_err(&path, e))?;
    fs::write(&path, text + "\n").map_err(|e| io_err(&path, e))
}

pub fn read_metadata(dir: &Path) -> Result<PublicMetadata, FileError> {
    let path = dir.join(METADATA_FILE);
    let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
    let meta: PublicMetadata = serde_json::from_str(&text).map_err(|e| format_err(&path, e.to_string()))?;
    if meta.format != FORMAT_VERSION {
        return Err(format_err(&path, format!("unsupported format version {}", meta.format)));
    }
    if meta.index.len() != meta.n || meta.destination >= meta.n.max(1) {
        return Err(format_err(&path, "index map does not match n"));
    }
    Ok(meta)
}

/// Writes metadata plus one share file per party.
pub fn write_share_dir(dir: &Path, meta: &PublicMetadata, parties: &[PartyShares]) -> Result<(), FileError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    write_metadata(dir, meta)?;
    for p in parties {
        meta.check_fib(&p.fib)?;
        write_records(&share_file(dir, p.party), &p.records(meta.session))?;
    }
    Ok(())
}

pub fn read_party_shares(dir: &Path, meta: &PublicMetadata, party: usize) -> Result<PartyShares, FileError> {
    let path = share_file(dir, party);
    let records = read_records(&path)?;
    PartyShares::from_records(meta, party, &records, &path)
}

/// Reads every party's store. Only a test or recovery tool should hold all
/// of these at once.
pub fn read_share_dir(dir: &Path) -> Result<(PublicMetadata, Vec<PartyShares>), FileError> {
    let meta = read_metadata(dir)?;
    let parties = (0..meta.parties)
        .map(|p| read_party_shares(dir, &meta, p))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((meta, parties))
}

pub fn pool_records(session: SessionId, party: usize, pool: &PartyPool) -> Vec<ShareRecord> {
    let rec = |kind, value_id, share| ShareRecord {
        session,
        value_id,
        party,
        kind,
        share,
    };
    let mut out = Vec::with_capacity(pool.triples.len() * 3 + pool.masks.len());
    for t in &pool.triples {
        out.extend([
            rec(ValueKind::TripleA, t.id, t.a),
            rec(ValueKind::TripleB, t.id, t.b),
            rec(ValueKind::TripleC, t.id, t.c),
        ]);
    }
    out.extend(pool.masks.iter().map(|m| rec(ValueKind::Mask, m.id, m.r)));
    out
}

/// Rebuilds a pool; triples must appear as consecutive A, B, C records.
pub fn pool_from_records(
    session: SessionId,
    party: usize,
    records: &[ShareRecord],
    path: &Path,
) -> Result<PartyPool, FileError> {
    let mut pool = PartyPool::default();
    let mut pending: Option<PartyTriple> = None;
    for r in records {
        if r.session != session || r.party != party {
            return Err(format_err(
                path,
                format!(
                    "record for session {} party {} in pool of party {party}",
                    r.session, r.party
                ),
            ));
        }
        match (r.kind, pending.as_mut()) {
            (ValueKind::TripleA, None) => {
                pending = Some(PartyTriple {
                    id: r.value_id,
                    a: r.share,
                    b: FieldElement::ZERO,
                    c: FieldElement::ZERO,
                })
            }
            (ValueKind::TripleB, Some(t)) if t.id == r.value_id => t.b = r.share,
            (ValueKind::TripleC, Some(t)) if t.id == r.value_id => {
                t.c = r.share;
                pool.triples.push_back(pending.take().expect("pending triple"));
            }
            (ValueKind::Mask, None) => pool.masks.push_back(PartyMask {
                id: r.value_id,
                r: r.share,
            }),
            (kind, _) => {
                return Err(format_err(
                    path,
                    format!("unexpected {kind} record for id {}", r.value_id),
                ))
            }
        }
    }
    if pending.is_some() {
        return Err(format_err(path, "truncated triple at end of pool"));
    }
    Ok(pool)
}

pub fn write_pool_dir(dir: &Path, session: SessionId, pools: &[PartyPool]) -> Result<(), FileError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    for (party, pool) in pools.iter().enumerate() {
        write_records(&pool_file(dir, party), &pool_records(session, party, pool))?;
    }
    Ok(())
}

pub fn read_pool(dir: &Path, session: SessionId, party: usize) -> Result<PartyPool, FileError> {
    let path = pool_file(dir, party);
    let records = read_records(&path)?;
    pool_from_records(session, party, &records, &path)
}
