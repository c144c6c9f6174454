//! Marginals against central finite differences of the log-partition.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use structdist_core::oracle::{finite_difference_error, spanning_flag_triples};
use structdist_core::random::random_instance;
use structdist_core::*;

const STEP: f64 = 1e-4;
const TOL: f64 = 1e-4;

fn check(config: FamilyConfig, seed: u64) {
    let d = random_instance(&config, 2.0, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
    let err = finite_difference_error(&d, STEP).unwrap().unwrap();
    assert!(err <= TOL, "{config:?}: {err}");
}

#[test]
fn sequence_families() {
    check(FamilyConfig::LinearChain { n: 6, m: 3 }, 1);
    check(FamilyConfig::SemiMarkov { n: 6, s: 3, m: 2 }, 2);
    check(FamilyConfig::MonotoneAlignment { n: 5, m: 6 }, 3);
    check(
        FamilyConfig::Ctc {
            frames: 6,
            vocab: 4,
            target: vec![1, 3, 3],
        },
        4,
    );
}

#[test]
fn constituency_families() {
    check(FamilyConfig::TreeCrf { n: 6, m: 3 }, 5);
    check(FamilyConfig::Pcfg { n: 6, nt: 3, pt: 2 }, 6);
}

#[test]
fn spanning_trees() {
    for (k, (directed, projective, single_root_edge)) in
        spanning_flag_triples().into_iter().enumerate()
    {
        check(
            FamilyConfig::SpanningTree {
                n: 6,
                directed,
                projective,
                single_root_edge,
            },
            10 + k as u64,
        );
    }
}

#[test]
fn one_to_one_has_no_gradient_check() {
    let d = random_instance(&FamilyConfig::OneToOne { n: 4 }, 1.0, &mut ChaCha8Rng::seed_from_u64(0))
        .unwrap();
    assert_eq!(finite_difference_error(&d, STEP).unwrap(), None);
}
