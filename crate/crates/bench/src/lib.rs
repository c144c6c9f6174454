//! Seeded benchmark instances shared by the criterion suites.

use structdist_core::random::random_instance;
use structdist_core::{FamilyConfig, LinearChainCrf, RandomSeed, SpanningTreeCrf, StructuredDistribution, TreeCrf};

pub const SIZES: [usize; 2] = [16, 32];
pub const CHAIN_TAGS: usize = 16;
pub const TREE_LABELS: usize = 4;

fn instance(config: FamilyConfig) -> StructuredDistribution {
    random_instance(&config, 1.0, &mut RandomSeed(0).rng()).expect("generated instances are valid")
}

/// A directed spanning-tree instance over `n` words.
pub fn spanning(n: usize, projective: bool, single_root_edge: bool) -> SpanningTreeCrf {
    match instance(FamilyConfig::SpanningTree {
        n,
        directed: true,
        projective,
        single_root_edge,
    }) {
        StructuredDistribution::SpanningTree(s) => s,
        _ => unreachable!(),
    }
}

pub fn chain(n: usize) -> LinearChainCrf {
    match instance(FamilyConfig::LinearChain { n, m: CHAIN_TAGS }) {
        StructuredDistribution::LinearChain(c) => c,
        _ => unreachable!(),
    }
}

pub fn tree_crf(n: usize) -> TreeCrf {
    match instance(FamilyConfig::TreeCrf { n, m: TREE_LABELS }) {
        StructuredDistribution::TreeCrf(t) => t,
        _ => unreachable!(),
    }
}
