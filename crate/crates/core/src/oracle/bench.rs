use std::fmt::Write;
use std::time::Instant;

use serde::Serialize;

use super::{loop_free_oracle, LoopAlgorithm, OracleError};
use crate::fib::ForwardingGraph;

const COLUMNS: [&str; 6] = ["BFS", "DFS", "Topology", "Tarjan's", "DSU", "Johnson"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkRow {
    pub edge_count: usize,
    /// Mean wall time per algorithm, in [`LoopAlgorithm::ALL`] order.
    pub millis: [f64; 6],
    pub verdicts: [bool; 6],
}

impl BenchmarkRow {
    pub fn agree(&self) -> bool {
        self.verdicts.iter().all(|v| *v == self.verdicts[0])
    }

    pub fn loop_free(&self) -> Option<bool> {
        self.agree().then_some(self.verdicts[0])
    }
}

/// Times every detector on every graph, averaging over `repetitions` runs.
pub fn run_benchmark(graphs: &[ForwardingGraph], repetitions: usize) -> Result<Vec<BenchmarkRow>, OracleError> {
    if repetitions == 0 {
        return Err(OracleError::NoRepetitions);
    }
    Ok(graphs
        .iter()
        .map(|g| {
            let mut row = BenchmarkRow {
                edge_count: g.entries().iter().filter(|e| !e.is_loopback()).count(),
                millis: [0.0; 6],
                verdicts: [false; 6],
            };
            for (k, alg) in LoopAlgorithm::ALL.into_iter().enumerate() {
                let mut total = 0.0;
                for _ in 0..repetitions {
                    let start = Instant::now();
                    row.verdicts[k] = loop_free_oracle(g, alg);
                    total += start.elapsed().as_secs_f64() * 1e3;
                }
                row.millis[k] = total / repetitions as f64;
            }
            row
        })
        .collect())
}

pub fn render_csv(rows: &[BenchmarkRow]) -> String {
    let mut out = String::from("edges,bfs_ms,dfs_ms,topological_ms,tarjan_ms,dsu_ms,johnson_ms,loop_free\n");
    for r in rows {
        let verdict = r.loop_free().map_or("disagree".to_string(), |v| v.to_string());
        let cells: Vec<String> = r.millis.iter().map(|m| format!("{m:.3}")).collect();
        writeln!(out, "{},{},{}", r.edge_count, cells.join(","), verdict).unwrap();
    }
    out
}

pub fn render_table(rows: &[BenchmarkRow]) -> String {
    let header: Vec<&str> = std::iter::once("# Edges").chain(COLUMNS).collect();
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            std::iter::once(r.edge_count.to_string())
                .chain(r.millis.iter().map(|m| format!("{m:.3}")))
                .collect()
        })
        .collect();
    let widths: Vec<usize> = (0..header.len())
        .map(|c| {
            body.iter()
                .map(|row| row[c].len())
                .chain([header[c].len()])
                .max()
                .unwrap_or(0)
        })
        .collect();
    let line = |cells: &[&str]| {
        let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
        format!("| {} |\n", padded.join(" | "))
    };
    let rule = format!(
        "|{}|\n",
        widths.iter().map(|w| "-".repeat(w + 2)).collect::<Vec<_>>().join("|")
    );
    let mut out = line(&header);
    out.push_str(&rule);
    for row in &body {
        let cells: Vec<&str> = row.iter().map(String::as_str).collect();
        out.push_str(&line(&cells));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{random_tree, Shape};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn empty_input_empty_report() {
        assert!(run_benchmark(&[], 5).unwrap().is_empty());
        assert_eq!(render_csv(&[]).lines().count(), 1);
    }

    #[test]
    fn zero_repetitions_rejected() {
        assert_eq!(run_benchmark(&[], 0).unwrap_err(), OracleError::NoRepetitions);
    }

    #[test]
    fn single_chain_row() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = random_tree(Shape::Chain, 50, &mut rng);
        let rows = run_benchmark(&[g], 3).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].edge_count, 49);
        assert_eq!(rows[0].loop_free(), Some(true));
        let table = render_table(&rows);
        assert!(table.starts_with("| # Edges |") && table.contains("Tarjan's"));
        assert_eq!(table.lines().count(), 3);
    }
}
