//! Randomized agreement between the secure checks and plaintext oracles.

mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use seagull_core::fib::{decode_shared_fib, parse_fib, render_fib, share_update, Asn, FibUpdate, ForwardingGraph};
use seagull_core::oracle::{connectivity_oracle, generate_instances, update_oracle, walk_oracle, InstanceSpec, Shape};
use seagull_core::verifier::{
    check_reachability, incremental_check, is_loop_free, HopBound, LoopOptions, Mode, UpdateMode,
};

use common::*;

fn shape() -> impl Strategy<Value = Shape> {
    prop_oneof![Just(Shape::Chain), Just(Shape::Star), Just(Shape::CaidaLike)]
}

fn instance(seed: u64, n: usize, shape: Shape) -> seagull_core::fib::ForwardingGraph {
    let spec = InstanceSpec {
        nodes: n..=n,
        loop_probability: 0.5,
        shape,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    generate_instances(&spec, 1, &mut rng).unwrap().remove(0).graph
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn loop_check_matches_oracle(seed: u64, n in 2usize..24, shape in shape(), early: bool) {
        let g = instance(seed, n, shape);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let options = LoopOptions {
            mode: if early { Mode::EarlyExit } else { Mode::FixedRound },
            ..LoopOptions::default()
        };
        let v = is_loop_free(&mut engine(seed), &share(&g, &mut rng), options).unwrap();
        prop_assert_eq!(v.result, connectivity_oracle(&g));
        if !early {
            prop_assert_eq!(v.rounds_executed, (n - 1) as u64);
        }
    }

    #[test]
    fn reachability_matches_walk(seed: u64, n in 2usize..24, shape in shape(), bound in 1u32..20, pick: usize) {
        let g = instance(seed, n, shape);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 2);
        let s = g.index().asn_at(pick % g.n());
        let v = check_reachability(
            &mut engine(seed),
            &share(&g, &mut rng),
            pick % g.n(),
            g.destination_index(),
            HopBound::new(bound).unwrap(),
        )
        .unwrap();
        prop_assert_eq!(v.result, walk_oracle(&g, s, g.destination(), bound).reached);
    }

    #[test]
    fn incremental_matches_update_oracle(seed: u64, n in 2usize..20, shape in shape(), append: bool) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tree = seagull_core::oracle::random_tree(shape, n, &mut rng);
        // Append is for an AS joining without a row of its own.
        let (g, update, mode) = if append {
            let newcomer = Asn(1_000_000);
            let g = ForwardingGraph::with_universe(
                tree.destination(),
                tree.entries().iter().copied(),
                tree.index().asns().iter().copied().chain([newcomer]),
            )
            .unwrap();
            let target = tree.index().asn_at(rng.gen_range(0..tree.n()));
            (g, FibUpdate { source: newcomer, new_next_hop: target }, UpdateMode::Append)
        } else {
            let update = random_update(&tree, &mut rng);
            (tree, update, UpdateMode::Replace)
        };
        let su = share_update(update, g.index(), T, &mut rng).unwrap();
        let v = incremental_check(&mut engine(seed), &share(&g, &mut rng), &su, mode, HopBound::DEFAULT).unwrap();
        prop_assert_eq!(v.result, update_oracle(&g, update, 15));
    }

    #[test]
    fn sharing_round_trips_through_text(seed: u64, n in 2usize..40, shape in shape()) {
        let g = instance(seed, n, shape);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 3);
        let back = decode_shared_fib(&share(&g, &mut rng), g.index()).unwrap();
        let rows = |f: &seagull_core::fib::ForwardingGraph| {
            let mut e = parse_fib(&render_fib(f)).unwrap().entries().to_vec();
            e.sort_by_key(|r| r.source);
            e
        };
        prop_assert_eq!(rows(&back), rows(&g));
    }
}

#[test]
fn update_to_destination_is_always_safe() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for n in 2..12 {
        let g = random_graph(n, &mut rng);
        let x = non_destination(&g, &mut rng);
        let update = FibUpdate {
            source: x,
            new_next_hop: g.destination(),
        };
        let su = share_update(update, g.index(), T, &mut rng).unwrap();
        let v = incremental_check(
            &mut engine(n as u64),
            &share(&g, &mut rng),
            &su,
            UpdateMode::Replace,
            HopBound::DEFAULT,
        )
        .unwrap();
        assert!(v.result, "n={n}");
    }
}
