//! Compare dense and tensorized costs of a linear layer.
//!
//! A 1024 x 1024 weight matrix is factored as a tensor-train matrix over
//! five mode pairs of size 4 x 4. The report counts parameters and
//! multiply-accumulate operations for the dense matrix-vector product and
//! for the sequential core contraction, at several bond ranks.

use ttkit::cost_report;

fn main() {
    let in_dims = [4usize, 4, 4, 4, 4];
    let out_dims = [4usize, 4, 4, 4, 4];

    println!("dense layer: 1024 x 1024 = 1,048,576 parameters and ops\n");
    println!(
        "{:>5} {:>12} {:>12} {:>12} {:>10}",
        "rank", "ttm params", "ttm ops", "param ratio", "ops ratio"
    );
    for rank in [2usize, 4, 8, 16, 32] {
        let report = cost_report(&in_dims, &out_dims, rank).unwrap();
        println!(
            "{rank:>5} {:>12} {:>12} {:>12.5} {:>10.3}",
            report.ttm_params, report.ttm_ops, report.param_ratio, report.ops_ratio
        );
    }

    // attach the storage and evaluation cost of a plain (vector) train
    // with the same physical dimensions and uniform rank 8
    let ranks = [1usize, 8, 8, 8, 8, 1];
    let dims = [16usize, 16, 16, 16, 16];
    let with_tt = cost_report(&in_dims, &out_dims, 8)
        .unwrap()
        .with_single_tt(&dims, &ranks)
        .unwrap();
    println!(
        "\nplain rank-8 train over dims {dims:?}: {} parameters, {} ops per evaluation",
        with_tt.single_tt_params.unwrap(),
        with_tt.single_tt_eval_ops.unwrap()
    );
    println!("op-count convention: {}", with_tt.ttm_ops_convention);
}
