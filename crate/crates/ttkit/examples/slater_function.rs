//! Tensorize a function of continuous coordinates through bit encoding.
//!
//! The target is `f(z) = exp(-|z|) / |z|` for `z` in a cube of side `L`,
//! with each of the three coordinates discretized into 10 binary digits:
//! `z_i = L * sum_j x_{i,j} 2^{-j}`. The resulting 30-site binary tensor
//! is reconstructed from samples at 200 pivots and validated on fresh
//! random configurations.

use ttkit::{
    decompose, relative_error, sample_pivots_uniform, slater_oracle, Oracle, SketchConfig,
};

fn main() {
    let coords = 3;
    let bits = 10;
    let oracle = slater_oracle(coords, bits, 10.0).unwrap();
    let n = coords * bits;
    println!("sites: {n} ({coords} coordinates x {bits} bits)");

    let pivots = sample_pivots_uniform(oracle.sites(), 200, 11).unwrap();
    let cfg = SketchConfig::new(200, 0);
    let (tt, report) = decompose(&oracle, &pivots, &cfg).unwrap();
    println!(
        "recovered max rank: {} with {} oracle evaluations",
        tt.max_rank(),
        report.oracle_calls
    );

    // error on the training pivots and on fresh test configurations
    for (label, seed, count) in [("pivot", 11u64, 200usize), ("test", 1234, 500)] {
        let points = sample_pivots_uniform(oracle.sites(), count, seed).unwrap();
        let exact = oracle.eval_batch(points.points()).unwrap();
        let approx = tt.evaluate_batch(points.points()).unwrap();
        let r = relative_error(&exact, &approx, 0.0).unwrap();
        println!("relative error on {count} {label} points: {r:.3e}");
    }
}
