//! Error and cost reporting.
//!
//! [`relative_error`] is the guarded 2-norm relative error used to score
//! reconstructions on pivot and test sets. [`cost_report`] compares a
//! dense matrix against its tensor-train-matrix factorization
//! (parameters and matrix-vector operation counts), with the op-count
//! contraction convention spelled out in the report itself.

use serde::Serialize;

use crate::error::{domain_err, shape_err, TtResult};
use crate::field::Field;
use crate::oracle::Oracle;
use crate::site::Configuration;
use crate::tt::TensorTrain;

/// Guarded relative 2-norm error `|exact - approx| / (|exact| + epsilon)`.
pub fn relative_error<T: Field>(exact: &[T], approx: &[T], epsilon: f64) -> TtResult<f64> {
    if exact.is_empty() {
        return shape_err("relative error of empty value lists");
    }
    if exact.len() != approx.len() {
        return shape_err(format!(
            "value lists of lengths {} and {}",
            exact.len(),
            approx.len()
        ));
    }
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return domain_err("epsilon must be a non-negative number");
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (&a, &b) in exact.iter().zip(approx.iter()) {
        num += (a - b).square();
        den += a.square();
    }
    Ok(num.sqrt() / (den.sqrt() + epsilon))
}

/// Relative errors of a tensor train against its oracle on two point
/// sets.
#[derive(Clone, Debug, Serialize)]
pub struct ErrorReport {
    /// Relative error on the pivot configurations.
    pub r_pivots: f64,
    /// Relative error on the held-out test configurations.
    pub r_test: f64,
    pub epsilon: f64,
    /// Per-point absolute residuals on the test set, if requested.
    pub residuals: Option<Vec<f64>>,
}

/// Score a reconstruction against its oracle on the pivots it was built
/// from and on an independent test set.
pub fn error_report<T: Field>(
    tt: &TensorTrain<T>,
    oracle: &dyn Oracle<T>,
    pivots: &[Configuration],
    test: &[Configuration],
    epsilon: f64,
    keep_residuals: bool,
) -> TtResult<ErrorReport> {
    let exact_pivots = oracle.eval_batch(pivots)?;
    let approx_pivots = tt.evaluate_batch(pivots)?;
    let exact_test = oracle.eval_batch(test)?;
    let approx_test = tt.evaluate_batch(test)?;
    let residuals = keep_residuals.then(|| {
        exact_test
            .iter()
            .zip(approx_test.iter())
            .map(|(&a, &b)| (a - b).square().sqrt())
            .collect()
    });
    Ok(ErrorReport {
        r_pivots: relative_error(&exact_pivots, &approx_pivots, epsilon)?,
        r_test: relative_error(&exact_test, &approx_test, epsilon)?,
        epsilon,
        residuals,
    })
}

/// Parameter and operation counts for a dense matrix, its
/// tensor-train-matrix form, and optionally a plain tensor train.
#[derive(Clone, Debug, Serialize)]
pub struct CostReport {
    /// Rows x columns of the dense matrix.
    pub dense_params: u64,
    /// One multiply-accumulate per entry of a matrix-vector product.
    pub dense_ops: u64,
    /// Sum over cores of `r_{k-1} * d_in_k * d_out_k * r_k`.
    pub ttm_params: u64,
    /// Matrix-vector operation count under [`CostReport::ttm_ops_convention`].
    pub ttm_ops: u64,
    /// The contraction order the op count assumes.
    pub ttm_ops_convention: String,
    /// Storage of a plain tensor train, `sum_k r_{k-1} d_k r_k`, when the
    /// report includes one.
    pub single_tt_params: Option<u64>,
    /// Multiply-accumulates of one plain-TT evaluation (embedding costs
    /// excluded), same sum as the storage.
    pub single_tt_eval_ops: Option<u64>,
    /// ttm_params / dense_params.
    pub param_ratio: f64,
    /// ttm_ops / dense_ops.
    pub ops_ratio: f64,
}

const TTM_OPS_CONVENTION: &str = "left-to-right sequential core contraction of a full input \
     vector: sum over cores k of (prod of earlier output dims) * r_{k-1} * d_in_k * d_out_k \
     * r_k * (prod of later input dims), one multiply-accumulate per term";

/// Cost model of a dense `prod(out_dims) x prod(in_dims)` matrix against
/// its tensor-train-matrix factorization with all interior bond ranks
/// equal to `rank`.
pub fn cost_report(in_dims: &[usize], out_dims: &[usize], rank: usize) -> TtResult<CostReport> {
    if in_dims.is_empty() || in_dims.len() != out_dims.len() {
        return shape_err(format!(
            "need matching non-empty factorizations, got {} input and {} output factors",
            in_dims.len(),
            out_dims.len()
        ));
    }
    if rank < 1 {
        return domain_err("rank must be at least 1");
    }
    if in_dims.iter().chain(out_dims.iter()).any(|&d| d == 0) {
        return domain_err("dimension factors must be at least 1");
    }
    let n = in_dims.len();
    let total_in: u64 = in_dims.iter().map(|&d| d as u64).product();
    let total_out: u64 = out_dims.iter().map(|&d| d as u64).product();
    let dense = total_in * total_out;

    let r = |k: usize| -> u64 {
        if k == 0 || k == n {
            1
        } else {
            rank as u64
        }
    };
    let mut ttm_params = 0u64;
    let mut ttm_ops = 0u64;
    let mut out_prefix = 1u64;
    let mut in_suffix: Vec<u64> = vec![1; n + 1];
    for k in (0..n).rev() {
        in_suffix[k] = in_suffix[k + 1] * in_dims[k] as u64;
    }
    for k in 0..n {
        let core = r(k) * in_dims[k] as u64 * out_dims[k] as u64 * r(k + 1);
        ttm_params += core;
        ttm_ops += out_prefix * core * in_suffix[k + 1];
        out_prefix *= out_dims[k] as u64;
    }

    Ok(CostReport {
        dense_params: dense,
        dense_ops: dense,
        ttm_params,
        ttm_ops,
        ttm_ops_convention: TTM_OPS_CONVENTION.to_string(),
        single_tt_params: None,
        single_tt_eval_ops: None,
        param_ratio: ttm_params as f64 / dense as f64,
        ops_ratio: ttm_ops as f64 / dense as f64,
    })
}

impl CostReport {
    /// Attach the parameter and evaluation-op counts of a plain tensor
    /// train with the given physical dimensions and bond ranks
    /// `r_0..r_n`.
    pub fn with_single_tt(mut self, dims: &[usize], ranks: &[usize]) -> TtResult<Self> {
        if ranks.len() != dims.len() + 1 {
            return shape_err(format!(
                "{} ranks for {} sites (need one per bond including both ends)",
                ranks.len(),
                dims.len()
            ));
        }
        if dims.is_empty() || dims.iter().any(|&d| d == 0) || ranks.iter().any(|&r| r == 0) {
            return domain_err("dimensions and ranks must be at least 1");
        }
        let total: u64 = dims
            .iter()
            .enumerate()
            .map(|(k, &d)| ranks[k] as u64 * d as u64 * ranks[k + 1] as u64)
            .sum();
        self.single_tt_params = Some(total);
        self.single_tt_eval_ops = Some(total);
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn relative_error_examples() {
        let e = 1e-12;
        assert_eq!(relative_error(&[1.0, 1.0], &[1.0, 1.0], e).unwrap(), 0.0);
        let total_miss = relative_error(&[2.0, 0.0], &[0.0, 0.0], e).unwrap();
        assert!((total_miss - 1.0).abs() < 1e-10);
        let partial = relative_error(&[3.0, 4.0], &[3.0, 0.0], e).unwrap();
        assert!((partial - 0.8).abs() < 1e-10);
        assert!(relative_error::<f64>(&[], &[], e).is_err());
        assert!(relative_error(&[1.0], &[1.0, 2.0], e).is_err());
    }

    #[test]
    fn relative_error_matches_direct_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let len = rng.random_range(1..30);
            let exact: Vec<f64> = (0..len).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
            let approx: Vec<f64> = exact
                .iter()
                .map(|v| v + rng.random::<f64>() * 0.1)
                .collect();
            let got = relative_error(&exact, &approx, 1e-12).unwrap();
            let num: f64 = exact
                .iter()
                .zip(&approx)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let den: f64 = exact.iter().map(|a| a * a).sum::<f64>().sqrt();
            assert!((got - num / (den + 1e-12)).abs() < 1e-14);
        }
    }

    #[test]
    fn relative_error_complex() {
        let exact = [Complex64::new(0.0, 3.0), Complex64::new(4.0, 0.0)];
        let approx = [Complex64::new(0.0, 3.0), Complex64::new(0.0, 0.0)];
        let r = relative_error(&exact, &approx, 1e-12).unwrap();
        assert!((r - 0.8).abs() < 1e-10);
    }

    #[test]
    fn cost_bert_factorization() {
        let in_dims = [1, 2, 2, 2, 2, 2, 2, 2, 2, 3, 1];
        let out_dims = [2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 3];
        let report = cost_report(&in_dims, &out_dims, 10).unwrap();
        assert_eq!(report.dense_params, 2_359_296);
        assert_eq!(report.dense_ops, 2_359_296);
        assert_eq!(report.ttm_params, 3_850);
        assert_eq!(report.ttm_ops, 2_810_880);
        assert!(report.param_ratio < 0.002);
    }

    #[test]
    fn cost_degenerate_all_ones() {
        let dims = [1usize; 7];
        let report = cost_report(&dims, &dims, 1).unwrap();
        assert_eq!(report.ttm_params, 7);
        assert_eq!(report.ttm_ops, 7);
        assert_eq!(report.dense_params, 1);
    }

    #[test]
    fn cost_single_tt_attachment() {
        let report = cost_report(&[2, 2], &[2, 2], 2)
            .unwrap()
            .with_single_tt(&[2, 2, 2], &[1, 2, 2, 1])
            .unwrap();
        // 1*2*2 + 2*2*2 + 2*2*1 = 16
        assert_eq!(report.single_tt_params, Some(16));
        assert_eq!(report.single_tt_eval_ops, Some(16));
        assert!(cost_report(&[2, 2], &[2, 2], 2)
            .unwrap()
            .with_single_tt(&[2, 2], &[1, 2])
            .is_err());
    }

    #[test]
    fn cost_rejects_bad_input() {
        assert!(cost_report(&[], &[], 2).is_err());
        assert!(cost_report(&[2], &[2, 2], 2).is_err());
        assert!(cost_report(&[2, 0], &[2, 2], 2).is_err());
        assert!(cost_report(&[2, 2], &[2, 2], 0).is_err());
    }
}
