//! Shared dense linear algebra: Haar-random orthogonal (unitary) matrices,
//! thin SVD with a deterministic sign convention, and minimum-norm
//! least-squares solves through an SVD pseudoinverse with a relative cutoff.

use ndarray::prelude::*;
use ndarray_linalg::{JobSvd, QRInto, SVDDCInto};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{numeric_err, shape_err, TtResult};
use crate::field::Field;

/// Conjugate transpose.
pub fn adjoint<T: Field>(a: ArrayView2<'_, T>) -> Array2<T> {
    a.t().mapv(|z| z.conj())
}

/// Draw a Haar-distributed orthogonal (real field) or unitary (complex
/// field) `m x m` matrix from an explicit seed.
///
/// Uses the QR construction: a matrix of i.i.d. standard Gaussians is
/// QR-factored and the columns of Q are rescaled by the phases of the
/// diagonal of R, which corrects the non-uniformity of raw QR output.
pub fn haar_orthogonal<T: Field>(m: usize, seed: u64) -> TtResult<Array2<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    haar_with_rng(m, &mut rng)
}

/// Same as [`haar_orthogonal`] but drawing from a caller-owned generator,
/// so that a pipeline can consume one stream of randomness in a fixed order.
pub fn haar_with_rng<T: Field, R: Rng + ?Sized>(m: usize, rng: &mut R) -> TtResult<Array2<T>> {
    if m == 0 {
        return shape_err("haar matrix size must be at least 1");
    }
    let data: Vec<T> = (0..m * m).map(|_| T::std_normal(rng)).collect();
    let a = Array2::from_shape_vec((m, m), data).expect("m*m elements");
    let (mut q, r) = a
        .qr_into()
        .map_err(|e| crate::error::TtError::Numeric(format!("qr failed: {e}")))?;
    for j in 0..m {
        let phase = r[[j, j]].unit_phase();
        q.column_mut(j).mapv_inplace(|z| z * phase);
    }
    Ok(q)
}

/// Thin SVD `a = u * diag(s) * vt` with each column of `u` rescaled so its
/// largest-magnitude entry is real and positive (the corresponding row of
/// `vt` absorbs the inverse phase). Ties in magnitude resolve to the first
/// index, so the output is deterministic.
pub struct ThinSvd<T> {
    pub u: Array2<T>,
    pub s: Vec<f64>,
    pub vt: Array2<T>,
}

pub fn thin_svd_signed<T: Field>(a: &Array2<T>) -> TtResult<ThinSvd<T>> {
    if a.iter().any(|z| !z.is_finite_val()) {
        return numeric_err("svd input contains non-finite values");
    }
    let (u, s, vt) = a
        .to_owned()
        .svddc_into(JobSvd::Some)
        .map_err(|e| crate::error::TtError::Numeric(format!("svd failed: {e}")))?;
    let mut u = u.expect("left singular vectors requested");
    let mut vt = vt.expect("right singular vectors requested");
    for j in 0..u.ncols() {
        let col = u.column(j);
        let mut best = 0;
        let mut best_mag = -1.0;
        for (i, z) in col.iter().enumerate() {
            let mag = z.abs();
            if mag > best_mag {
                best_mag = mag;
                best = i;
            }
        }
        let phase = col[best].unit_phase();
        let inv = phase.conj();
        u.column_mut(j).mapv_inplace(|z| z * inv);
        if j < vt.nrows() {
            vt.row_mut(j).mapv_inplace(|z| z * phase);
        }
    }
    Ok(ThinSvd {
        u,
        s: s.to_vec(),
        vt,
    })
}

/// Diagnostics of a pseudoinverse solve.
#[derive(Clone, Debug, serde::Serialize)]
pub struct LstsqInfo {
    /// Number of singular values kept by the relative cutoff.
    pub rank: usize,
    /// Frobenius norm of `a x - b`.
    pub residual: f64,
    /// True when the kept rank is below the number of unknown rows, i.e.
    /// the system did not determine the solution uniquely.
    pub rank_deficient: bool,
}

/// Minimum-norm least-squares solution of `a x = b` (`a`: m x p, `b`: m x q)
/// through the SVD pseudoinverse. Singular values below
/// `rel_cutoff * s_max` are treated as zero.
pub fn lstsq_pinv<T: Field>(
    a: &Array2<T>,
    b: &Array2<T>,
    rel_cutoff: f64,
) -> TtResult<(Array2<T>, LstsqInfo)> {
    if a.nrows() != b.nrows() {
        return shape_err(format!(
            "lstsq row mismatch: a is {}x{}, b is {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        ));
    }
    let svd = thin_svd_signed(a)?;
    let smax = svd.s.first().copied().unwrap_or(0.0);
    let cutoff = rel_cutoff * smax;
    let kept = svd.s.iter().take_while(|&&s| s > cutoff && s > 0.0).count();

    let p = a.ncols();
    let q = b.ncols();
    let x = if kept == 0 {
        Array2::zeros((p, q))
    } else {
        // x = v[:, :kept] * diag(1/s) * u[:, :kept]^H * b
        let ut_b = adjoint(svd.u.slice(s![.., ..kept])).dot(b);
        let mut scaled = ut_b;
        for (i, mut row) in scaled.rows_mut().into_iter().enumerate() {
            let inv = T::from_real(1.0 / svd.s[i]);
            row.mapv_inplace(|z| z * inv);
        }
        adjoint(svd.vt.slice(s![..kept, ..])).dot(&scaled)
    };

    let diff = a.dot(&x) - b;
    let residual = diff.iter().map(|z| z.square()).sum::<f64>().sqrt();
    let info = LstsqInfo {
        rank: kept,
        residual,
        rank_deficient: kept < p,
    };
    Ok((x, info))
}
