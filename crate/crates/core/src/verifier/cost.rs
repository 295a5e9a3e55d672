//! Closed-form operation counts for every check.
//!
//! These mirror the batching structure of the secure implementations and
//! are used to audit transcripts and to size dealer pools up front.

use serde::{Deserialize, Serialize};

use super::{HopBound, LoopOptions, Mode, ScanStrategy, UpdateMode};
use crate::oblivious::ObliviousTrace;

/// Predicted trace plus the preprocessing it consumes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cost {
    pub trace: ObliviousTrace,
    pub triples: u64,
    pub masks: u64,
}

impl Cost {
    fn new() -> Self {
        Cost::default()
    }

    fn round(&mut self, t: usize) {
        let t = t as u64;
        self.trace.rounds += 1;
        self.trace.messages += t * (t - 1);
    }

    /// One batch of `k` Beaver products; empty batches are free.
    fn batch(&mut self, t: usize, k: u64) -> &mut Self {
        if k > 0 {
            self.round(t);
            self.trace.multiplications += k;
            self.trace.openings += 2 * k;
            self.triples += k;
        }
        self
    }

    /// `k` masked zero tests run side by side.
    fn zero_tests(&mut self, t: usize, k: u64) -> &mut Self {
        if k > 0 {
            self.batch(t, k);
            self.round(t);
            self.trace.openings += k;
            self.masks += k;
        }
        self
    }

    fn repeat(&mut self, times: u64, step: impl Fn(&mut Cost)) -> &mut Self {
        for _ in 0..times {
            step(self);
        }
        self
    }

    fn done(&mut self) -> Cost {
        *self
    }
}

impl std::ops::Add for Cost {
    type Output = Cost;

    fn add(self, o: Cost) -> Cost {
        Cost {
            trace: ObliviousTrace {
                multiplications: self.trace.multiplications + o.trace.multiplications,
                openings: self.trace.openings + o.trace.openings,
                messages: self.trace.messages + o.trace.messages,
                rounds: self.trace.rounds + o.trace.rounds,
            },
            triples: self.triples + o.triples,
            masks: self.masks + o.masks,
        }
    }
}

/// Loop check running `rounds` traversal rounds. In fixed-round mode pass
/// `options.round_bound(n)`.
pub fn loop_free_cost(t: usize, n: usize, rows: usize, options: LoopOptions, rounds: u64) -> Cost {
    let (n, rows) = (n as u64, rows as u64);
    let early = options.mode == Mode::EarlyExit;
    Cost::new()
        .repeat(rounds, |c| {
            match options.scan {
                ScanStrategy::Frontier => {
                    c.batch(t, rows * n).batch(t, rows * n).batch(t, n);
                }
                ScanStrategy::Guarded => {
                    c.repeat(rows, |c| {
                        c.batch(t, n).batch(t, n).batch(t, 1).batch(t, n).batch(t, n);
                    });
                }
            }
            if early {
                c.zero_tests(t, 1);
            }
        })
        .zero_tests(t, 1)
        .done()
}

fn walk_steps(c: &mut Cost, t: usize, n: u64, rows: u64, steps: u64) {
    c.repeat(steps, |c| {
        c.batch(t, rows * n).batch(t, rows * n);
    });
}

pub fn reachability_cost(t: usize, n: usize, rows: usize, bound: HopBound) -> Cost {
    let mut c = Cost::new();
    walk_steps(&mut c, t, n as u64, rows as u64, u64::from(bound.get()));
    c.zero_tests(t, 1).done()
}

pub fn waypoint_cost(t: usize, n: usize, rows: usize, bound: HopBound) -> Cost {
    let (n, rows) = (n as u64, rows as u64);
    let steps = u64::from(bound.get());
    Cost::new()
        .batch(t, rows * n)
        .batch(t, rows * n)
        .repeat(steps - 1, |c| {
            c.batch(t, rows * n + 1).batch(t, rows * n);
        })
        .batch(t, 1)
        .batch(t, 1)
        .zero_tests(t, 1)
        .done()
}

pub fn apply_update_cost(t: usize, n: usize, rows: usize, mode: UpdateMode) -> Cost {
    let work = match mode {
        UpdateMode::Replace => (rows * n) as u64,
        UpdateMode::Append => 0,
    };
    Cost::new().batch(t, work).batch(t, work).done()
}

pub fn incremental_cost(t: usize, n: usize, rows: usize, mode: UpdateMode, bound: HopBound) -> Cost {
    let merged_rows = match mode {
        UpdateMode::Replace => rows,
        UpdateMode::Append => rows + 1,
    };
    let mut c = apply_update_cost(t, n, rows, mode);
    walk_steps(&mut c, t, n as u64, merged_rows as u64, u64::from(bound.get()) - 1);
    c.zero_tests(t, 1).done()
}

/// `unique` is whether exactly one origin was found, which decides whether
/// the registry comparison is opened.
pub fn origin_cost(t: usize, n: usize, rows: usize, unique: bool) -> Cost {
    let (n, rows) = (n as u64, rows as u64);
    let mut c = Cost::new();
    c.batch(t, 2 * rows * n).batch(t, rows).zero_tests(t, 2);
    if unique {
        c.zero_tests(t, 1);
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_multiplication() {
        let c = Cost::new().batch(3, 1).done();
        assert_eq!(
            c.trace,
            ObliviousTrace {
                multiplications: 1,
                openings: 2,
                messages: 6,
                rounds: 1
            }
        );
    }

    #[test]
    fn zero_test_costs_three_openings_two_rounds() {
        let c = Cost::new().zero_tests(3, 1).done();
        assert_eq!(c.trace.openings, 3);
        assert_eq!(c.trace.rounds, 2);
        assert_eq!((c.triples, c.masks), (1, 1));
    }

    #[test]
    fn fixed_loop_check_small_case() {
        // n = 4, rows = 3, three rounds: 3 * (12 + 12 + 4) products plus
        // the final test.
        let opts = LoopOptions::default();
        let c = loop_free_cost(3, 4, 3, opts, opts.round_bound(4) as u64);
        assert_eq!(c.trace.multiplications, 3 * 28 + 1);
        assert_eq!(c.trace.openings, 2 * (3 * 28 + 1) + 1);
        assert_eq!(c.trace.rounds, 3 * 3 + 2);
    }

    #[test]
    fn append_is_free() {
        assert_eq!(apply_update_cost(3, 10, 9, UpdateMode::Append), Cost::default());
    }
}
