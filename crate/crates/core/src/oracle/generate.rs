use std::collections::BTreeSet;
use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::Rng;

use super::OracleError;
use crate::fib::{inject_loop, rewrite_next_hop, Asn, FibEntry, FibError, ForwardingGraph};

/// Highest 16-bit public ASN; generated graphs draw distinct ASNs below it.
const ASN_SPACE: usize = 64_495;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Shape {
    Chain,
    Star,
    /// Preferential-attachment tree: a few hubs with many customers, so
    /// the graph is wide and shallow like measured AS topologies.
    CaidaLike,
}

impl Shape {
    pub fn name(self) -> &'static str {
        match self {
            Shape::Chain => "chain",
            Shape::Star => "star",
            Shape::CaidaLike => "caida-like",
        }
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Shape {
    type Err = OracleError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "chain" => Ok(Shape::Chain),
            "star" => Ok(Shape::Star),
            "caida-like" | "caida" => Ok(Shape::CaidaLike),
            other => Err(OracleError::UnknownShape(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceSpec {
    pub nodes: RangeInclusive<usize>,
    pub loop_probability: f64,
    pub shape: Shape,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub graph: ForwardingGraph,
    pub looped: bool,
    /// ASes on the injected cycle; empty for loop-free instances.
    pub cycle: BTreeSet<Asn>,
}

/// A loop-free forwarding tree over `n >= 1` distinct random ASNs.
pub fn random_tree<R: Rng + ?Sized>(shape: Shape, n: usize, rng: &mut R) -> ForwardingGraph {
    assert!((1..=ASN_SPACE).contains(&n), "node count out of range");
    let asns: Vec<Asn> = sample(rng, ASN_SPACE, n)
        .into_iter()
        .map(|i| Asn(i as u32 + 1))
        .collect();
    // Position 0 is the destination; each later position picks a parent
    // among the earlier ones.
    let mut parent = vec![0usize; n];
    match shape {
        Shape::Chain => {
            for (i, p) in parent.iter_mut().enumerate().skip(1) {
                *p = i - 1;
            }
        }
        Shape::Star => {}
        Shape::CaidaLike => {
            // Each node appears once plus once per child, so picking
            // uniformly from `tickets` favors well-connected nodes.
            let mut tickets = vec![0usize];
            for (i, p) in parent.iter_mut().enumerate().skip(1) {
                *p = *tickets.choose(rng).expect("nonempty");
                tickets.push(*p);
                tickets.push(i);
            }
        }
    }
    let entries = (1..n).map(|i| FibEntry {
        source: asns[i],
        next_hop: asns[parent[i]],
    });
    ForwardingGraph::new(asns[0], entries).expect("tree entries are valid")
}

fn self_loop<R: Rng + ?Sized>(
    fib: &ForwardingGraph,
    rng: &mut R,
) -> Result<(ForwardingGraph, BTreeSet<Asn>), FibError> {
    let sources: Vec<Asn> = fib.entries().iter().map(|e| e.source).collect();
    let x = *sources.choose(rng).ok_or(FibError::CannotInject(0))?;
    Ok((rewrite_next_hop(fib, x, x)?, BTreeSet::from([x])))
}

/// Draws `count` labeled graphs. Graphs too small for a proper loop get a
/// self-loop instead.
pub fn generate_instances<R: Rng + ?Sized>(
    spec: &InstanceSpec,
    count: usize,
    rng: &mut R,
) -> Result<Vec<Instance>, OracleError> {
    if *spec.nodes.start() < 2 || spec.nodes.is_empty() || *spec.nodes.end() > ASN_SPACE {
        return Err(OracleError::InvalidSpec(format!(
            "node range {:?} must lie within 2..={ASN_SPACE}",
            spec.nodes
        )));
    }
    if !(0.0..=1.0).contains(&spec.loop_probability) {
        return Err(OracleError::InvalidSpec(
            "loop probability must be within [0, 1]".into(),
        ));
    }
    (0..count)
        .map(|_| {
            let n = rng.gen_range(spec.nodes.clone());
            let tree = random_tree(spec.shape, n, rng);
            if !rng.gen_bool(spec.loop_probability) {
                return Ok(Instance {
                    graph: tree,
                    looped: false,
                    cycle: BTreeSet::new(),
                });
            }
            let (graph, cycle) = match inject_loop(&tree, rng) {
                Err(FibError::CannotInject(_)) => self_loop(&tree, rng),
                other => other,
            }
            .map_err(|e| OracleError::InvalidSpec(e.to_string()))?;
            Ok(Instance {
                graph,
                looped: true,
                cycle,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{connectivity_oracle, depth, unreached_set};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn chain_depth() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = random_tree(Shape::Chain, 5, &mut rng);
        assert_eq!(depth(&g), Some(4));
        assert_eq!(g.entries().len(), 4);
    }

    #[test]
    fn star_depth() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert_eq!(depth(&random_tree(Shape::Star, 30, &mut rng)), Some(1));
    }

    #[test]
    fn labels_match_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for shape in [Shape::Chain, Shape::Star, Shape::CaidaLike] {
            let spec = InstanceSpec {
                nodes: 2..=40,
                loop_probability: 0.5,
                shape,
            };
            for inst in generate_instances(&spec, 200, &mut rng).unwrap() {
                assert_eq!(inst.looped, !connectivity_oracle(&inst.graph));
                assert!(inst.cycle.is_subset(&unreached_set(&inst.graph)));
            }
        }
    }

    #[test]
    fn certain_loops() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let spec = InstanceSpec {
            nodes: 2..=6,
            loop_probability: 1.0,
            shape: Shape::CaidaLike,
        };
        assert!(generate_instances(&spec, 100, &mut rng)
            .unwrap()
            .iter()
            .all(|i| i.looped));
    }

    #[test]
    fn rejects_bad_specs() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let bad = InstanceSpec {
            nodes: 1..=4,
            loop_probability: 0.5,
            shape: Shape::Star,
        };
        assert!(generate_instances(&bad, 1, &mut rng).is_err());
        assert!("ring".parse::<Shape>().is_err());
    }
}
