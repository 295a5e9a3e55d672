//! Text formats for forwarding tables and updates.
//!
//! ```text
//! # destination: 64500
//! source_asn,next_hop_asn
//! 64501,64500
//! 64502,64501
//! ```
//!
//! An optional `# nodes: a,b,...` comment lists ASes that are part of the
//! session but currently have no entry.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use super::{Asn, FibEntry, FibError, FibUpdate, ForwardingGraph};

pub const FIB_HEADER: &str = "source_asn,next_hop_asn";
const UPDATE_HEADER: &str = "source_asn,new_next_hop_asn";

fn parse_pair(line: &str, line_no: usize) -> Result<(Asn, Asn), FibError> {
    let err = |message: String| FibError::Parse { line: line_no, message };
    let mut parts = line.split(',');
    let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
        return Err(err(format!("expected two comma-separated ASNs, got {line:?}")));
    };
    let a = a.parse().map_err(|_| err(format!("invalid ASN {a:?}")))?;
    let b = b.parse().map_err(|_| err(format!("invalid ASN {b:?}")))?;
    Ok((a, b))
}

fn parse_asn_list(list: &str, line_no: usize) -> Result<Vec<Asn>, FibError> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse().map_err(|_| FibError::Parse {
                line: line_no,
                message: format!("invalid ASN {s:?}"),
            })
        })
        .collect()
}

pub fn parse_fib(text: &str) -> Result<ForwardingGraph, FibError> {
    let mut destination = None;
    let mut extra = Vec::new();
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let comment = comment.trim();
            if let Some(d) = comment.strip_prefix("destination:") {
                let d = d.trim();
                destination = Some(d.parse::<Asn>().map_err(|_| FibError::Parse {
                    line: line_no,
                    message: format!("invalid destination ASN {d:?}"),
                })?);
            } else if let Some(list) = comment.strip_prefix("nodes:") {
                extra.extend(parse_asn_list(list, line_no)?);
            }
            continue;
        }
        if line.eq_ignore_ascii_case(FIB_HEADER) {
            continue;
        }
        let (source, next_hop) = parse_pair(line, line_no)?;
        entries.push(FibEntry { source, next_hop });
    }
    let destination = destination.ok_or(FibError::Parse {
        line: 1,
        message: "missing '# destination: <asn>' header".into(),
    })?;
    ForwardingGraph::with_universe(destination, entries, extra)
}

pub fn render_fib(fib: &ForwardingGraph) -> String {
    let mut out = String::new();
    writeln!(out, "# destination: {}", fib.destination()).unwrap();
    let mentioned: BTreeSet<Asn> = fib
        .entries()
        .iter()
        .flat_map(|e| [e.source, e.next_hop])
        .chain([fib.destination()])
        .collect();
    let extra: Vec<String> = fib
        .index()
        .asns()
        .iter()
        .filter(|a| !mentioned.contains(a))
        .map(Asn::to_string)
        .collect();
    if !extra.is_empty() {
        writeln!(out, "# nodes: {}", extra.join(",")).unwrap();
    }
    writeln!(out, "{FIB_HEADER}").unwrap();
    for e in fib.entries() {
        writeln!(out, "{},{}", e.source, e.next_hop).unwrap();
    }
    out
}

pub fn parse_updates(text: &str) -> Result<Vec<FibUpdate>, FibError> {
    let mut updates = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.eq_ignore_ascii_case(UPDATE_HEADER) {
            continue;
        }
        let (source, new_next_hop) = parse_pair(line, i + 1)?;
        updates.push(FibUpdate { source, new_next_hop });
    }
    Ok(updates)
}

pub fn render_updates(updates: &[FibUpdate]) -> String {
    let mut out = format!("{UPDATE_HEADER}\n");
    for u in updates {
        writeln!(out, "{},{}", u.source, u.new_next_hop).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fib_round_trip() {
        let fib = ForwardingGraph::with_universe(Asn(7), [FibEntry::new(1, 7), FibEntry::new(2, 1)], [Asn(5)]).unwrap();
        let text = render_fib(&fib);
        assert_eq!(
            text,
            "# destination: 7\n# nodes: 5\nsource_asn,next_hop_asn\n1,7\n2,1\n"
        );
        assert_eq!(parse_fib(&text).unwrap(), fib);
    }

    #[test]
    fn fib_requires_destination() {
        assert!(matches!(
            parse_fib("source_asn,next_hop_asn\n1,2\n"),
            Err(FibError::Parse { .. })
        ));
        assert!(matches!(
            parse_fib("# destination: 2\n1;2\n"),
            Err(FibError::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn updates_parse() {
        let u = parse_updates("source_asn,new_next_hop_asn\n6,1\n\n3,5\n").unwrap();
        assert_eq!(u, vec![FibUpdate::new(6, 1), FibUpdate::new(3, 5)]);
        assert_eq!(parse_updates(&render_updates(&u)).unwrap(), u);
        assert!(parse_updates("6\n").is_err());
    }
}
