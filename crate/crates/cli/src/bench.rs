//! Wall-clock timing of paired algorithms over a size grid, as CSV.

use std::hint::black_box;
use std::time::{Duration, Instant};

use structdist_core::chain::forward_log_partition;
use structdist_core::constituency::cky_log_partition;
use structdist_core::random::random_instance;
use structdist_core::spanning::{cle_argmax, eisner_max_score, kuhlmann_argmax};
use structdist_core::{marginals, FamilyConfig, RandomSeed, StructuredDistribution};

pub const SUITES: [&str; 4] = ["nonprojective-argmax", "projective-argmax", "chain", "treecrf"];

/// Tags per position in the chain suite.
const CHAIN_TAGS: usize = 16;
/// Labels per span in the tree suite.
const TREE_LABELS: usize = 4;

const MIN_ITERATIONS: u32 = 5;
const MAX_ITERATIONS: u32 = 200;
const TIME_BUDGET: Duration = Duration::from_millis(150);

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub suite: &'static str,
    pub n: usize,
    pub algorithm: &'static str,
    pub median_ms: f64,
    pub iterations: u32,
}

impl BenchRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{:.6},{}",
            self.suite, self.n, self.algorithm, self.median_ms, self.iterations
        )
    }
}

pub const CSV_HEADER: &str = "suite,n,algorithm,median_ms,iterations";

/// Median milliseconds of `f` after one warm-up call.
fn time(mut f: impl FnMut()) -> (f64, u32) {
    f();
    let start = Instant::now();
    let mut samples = Vec::new();
    while samples.len() < MIN_ITERATIONS as usize
        || (start.elapsed() < TIME_BUDGET && samples.len() < MAX_ITERATIONS as usize)
    {
        let t = Instant::now();
        f();
        samples.push(t.elapsed().as_secs_f64() * 1e3);
    }
    samples.sort_by(f64::total_cmp);
    let median = samples[samples.len() / 2];
    // Keep reported timings strictly positive on coarse clocks.
    (median.max(1e-6), samples.len() as u32)
}

fn instance(config: FamilyConfig) -> StructuredDistribution {
    random_instance(&config, 1.0, &mut RandomSeed(0).rng()).expect("generated instances are valid")
}

fn tree(n: usize, projective: bool, single_root_edge: bool) -> structdist_core::SpanningTreeCrf {
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

pub fn run_suite(suite: &str, sizes: &[usize]) -> Result<Vec<BenchRow>, String> {
    let suite: &'static str = SUITES
        .into_iter()
        .find(|s| *s == suite)
        .ok_or_else(|| format!("unknown suite {suite:?}; expected one of {}", SUITES.join(", ")))?;
    let mut rows = Vec::new();
    let mut push = |n, algorithm, (median_ms, iterations)| {
        rows.push(BenchRow {
            suite,
            n,
            algorithm,
            median_ms,
            iterations,
        })
    };
    for &n in sizes {
        if n == 0 {
            return Err("sizes must be positive".into());
        }
        match suite {
            "projective-argmax" => {
                let d = tree(n, true, false);
                push(n, "eisner-max-plus", time(|| {
                    black_box(eisner_max_score(&d).unwrap());
                }));
                push(n, "kuhlmann-arc-hybrid", time(|| {
                    black_box(kuhlmann_argmax(&d).unwrap());
                }));
            }
            "nonprojective-argmax" => {
                let multi = tree(n, false, false);
                let single = tree(n, false, true);
                push(n, "cle-tarjan", time(|| {
                    black_box(cle_argmax(&multi).unwrap());
                }));
                push(n, "cle-tarjan-reweighted", time(|| {
                    black_box(cle_argmax(&single).unwrap());
                }));
            }
            "chain" => {
                let d = instance(FamilyConfig::LinearChain { n, m: CHAIN_TAGS });
                let StructuredDistribution::LinearChain(c) = &d else { unreachable!() };
                push(n, "forward", time(|| {
                    black_box(forward_log_partition(c));
                }));
                push(n, "forward-backward", time(|| {
                    black_box(marginals(&d).unwrap());
                }));
            }
            "treecrf" => {
                let d = instance(FamilyConfig::TreeCrf { n, m: TREE_LABELS });
                let StructuredDistribution::TreeCrf(t) = &d else { unreachable!() };
                push(n, "cky", time(|| {
                    black_box(cky_log_partition(t));
                }));
                push(n, "inside-outside", time(|| {
                    black_box(marginals(&d).unwrap());
                }));
            }
            _ => unreachable!(),
        }
    }
    Ok(rows)
}

pub fn to_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.csv_line());
        out.push('\n');
    }
    out
}
