//! Reconstruct a random tensor train from black-box samples.
//!
//! Builds a hidden rank-10 train on 60 binary sites, exposes it only
//! through batched function evaluation, and recovers it from samples at
//! uniformly drawn pivot configurations. Prints the recovered bond ranks,
//! the oracle call count, and the fidelity against the hidden train.

use ttkit::{decompose, fidelity, random_tt_oracle, sample_pivots_uniform, Oracle, SketchConfig};

fn main() {
    let n = 60;
    let rank = 10;
    let oracle = random_tt_oracle(n, 2, rank, 42).unwrap();
    let pivots = sample_pivots_uniform(oracle.sites(), 60, 7).unwrap();
    let cfg = SketchConfig::new(rank, 0);

    let (tt, report) = decompose(&oracle, &pivots, &cfg).unwrap();

    println!("sites: {n}, hidden rank: {rank}, pivots: {}", pivots.len());
    println!("oracle evaluations: {}", report.oracle_calls);
    println!("recovered ranks: {:?}", tt.ranks());
    let f = fidelity(&tt, oracle.tt()).unwrap();
    println!("fidelity vs hidden train: {f:.12}");

    // spot check: both trains agree pointwise, not just in overlap
    let probe = sample_pivots_uniform(oracle.sites(), 5, 99).unwrap();
    for x in probe.points() {
        let a = tt.evaluate(x).unwrap();
        let b = oracle.tt().evaluate(x).unwrap();
        println!("  sample point: recovered {a:+.9e}  hidden {b:+.9e}");
    }
}
