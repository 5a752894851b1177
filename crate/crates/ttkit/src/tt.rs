//! Tensor trains and their algebra.
//!
//! A tensor train stores an n-index coefficient tensor as a chain of
//! 3-axis cores linked by bond indices:
//!
//! ```text
//!   G_1 (1, d_1, r_1) -- G_2 (r_1, d_2, r_2) -- ... -- G_n (r_{n-1}, d_n, 1)
//! ```
//!
//! The coefficient at a discrete configuration `(x_1, .., x_n)` is the
//! product of the selected slices; at a continuous point each core is first
//! contracted with the site's embedding vector. Everything here works over
//! either scalar field through the [`Field`] trait.

use ndarray::prelude::*;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{domain_err, numeric_err, shape_err, TtError, TtResult};
use crate::field::{Field, FieldTag};
use crate::linalg::{adjoint, haar_with_rng, thin_svd_signed};
use crate::site::{validate_config, Configuration, SiteSpec, SiteValue};

/// Hard cap on dense materialization: `contract_full` refuses tensors with
/// more entries than this.
pub const DENSE_CAP: usize = 1 << 24;

/// An n-site tensor train over the scalar field `T`.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorTrain<T: Field> {
    sites: Vec<SiteSpec>,
    cores: Vec<Array3<T>>,
}

impl<T: Field> TensorTrain<T> {
    /// Build a tensor train, validating open boundaries, bond
    /// compatibility, site dimensions, and finiteness of every entry.
    pub fn new(sites: Vec<SiteSpec>, cores: Vec<Array3<T>>) -> TtResult<Self> {
        if sites.is_empty() {
            return shape_err("tensor train needs at least one site");
        }
        if sites.len() != cores.len() {
            return shape_err(format!(
                "{} sites but {} cores",
                sites.len(),
                cores.len()
            ));
        }
        let n = sites.len();
        for (k, core) in cores.iter().enumerate() {
            let (rl, d, rr) = core.dim();
            if rl == 0 || d == 0 || rr == 0 {
                return shape_err(format!("cores[{k}]: zero-sized axis"));
            }
            if d != sites[k].dim() {
                return shape_err(format!(
                    "cores[{k}]: physical dimension {d} does not match site dimension {}",
                    sites[k].dim()
                ));
            }
            if k == 0 && rl != 1 {
                return shape_err(format!("cores[0]: left bond {rl}, expected 1"));
            }
            if k == n - 1 && rr != 1 {
                return shape_err(format!("cores[{k}]: right bond {rr}, expected 1"));
            }
            if k + 1 < n && rr != cores[k + 1].dim().0 {
                return shape_err(format!(
                    "cores[{}]: right bond {} does not match next left bond {}",
                    k,
                    rr,
                    cores[k + 1].dim().0
                ));
            }
            if core.iter().any(|z| !z.is_finite_val()) {
                return numeric_err(format!("cores[{k}] contains non-finite entries"));
            }
        }
        Ok(TensorTrain { sites, cores })
    }

    pub fn n(&self) -> usize {
        self.sites.len()
    }

    pub fn sites(&self) -> &[SiteSpec] {
        &self.sites
    }

    pub fn cores(&self) -> &[Array3<T>] {
        &self.cores
    }

    pub fn core(&self, k: usize) -> &Array3<T> {
        &self.cores[k]
    }

    pub fn dims(&self) -> Vec<usize> {
        self.sites.iter().map(|s| s.dim()).collect()
    }

    /// Bond ranks `r_0 .. r_n` (length n+1, boundary entries 1).
    pub fn ranks(&self) -> Vec<usize> {
        let mut r = Vec::with_capacity(self.n() + 1);
        r.push(1);
        for core in &self.cores {
            r.push(core.dim().2);
        }
        r
    }

    pub fn max_rank(&self) -> usize {
        self.ranks().into_iter().max().unwrap_or(1)
    }

    pub fn field(&self) -> FieldTag {
        T::TAG
    }

    /// True when every site is discrete (trivial embedding).
    pub fn all_discrete(&self) -> bool {
        self.sites.iter().all(|s| s.is_discrete())
    }

    /// Contract the chain at one configuration.
    pub fn evaluate(&self, x: &[SiteValue]) -> TtResult<T> {
        validate_config(&self.sites, x)?;
        let mut v: Vec<T> = vec![T::from_real(1.0)];
        for (k, core) in self.cores.iter().enumerate() {
            v = contract_site(&v, core, &self.sites[k], x[k])?;
        }
        let out = v[0];
        if !out.is_finite_val() {
            return numeric_err("evaluation produced a non-finite value");
        }
        Ok(out)
    }

    /// Elementwise [`TensorTrain::evaluate`] preserving order; errors are
    /// annotated with the index of the offending point. Large batches are
    /// evaluated in parallel.
    pub fn evaluate_batch(&self, xs: &[Configuration]) -> TtResult<Vec<T>> {
        use rayon::prelude::*;
        let eval_one = |(i, x): (usize, &Configuration)| {
            self.evaluate(x)
                .map_err(|e| TtError::Numeric(format!("point {i}: {e}")))
        };
        if xs.len() >= 256 {
            xs.par_iter().enumerate().map(eval_one).collect()
        } else {
            xs.iter().enumerate().map(eval_one).collect()
        }
    }

    /// Materialize the dense coefficient tensor (row-major, site 1
    /// slowest). Requires all-discrete sites and at most [`DENSE_CAP`]
    /// entries.
    pub fn contract_full(&self) -> TtResult<DenseTensor<T>> {
        if !self.all_discrete() {
            return Err(TtError::Unsupported(
                "contract_full requires discrete sites".into(),
            ));
        }
        let dims = self.dims();
        let mut total: usize = 1;
        for &d in &dims {
            total = total
                .checked_mul(d)
                .filter(|&t| t <= DENSE_CAP)
                .ok_or_else(|| {
                    TtError::Unsupported(format!(
                        "dense tensor exceeds the {DENSE_CAP}-entry cap"
                    ))
                })?;
        }
        let mut acc: Array2<T> = Array2::from_elem((1, 1), T::from_real(1.0));
        for core in &self.cores {
            let (rl, d, rr) = core.dim();
            let unfolded = core
                .to_shape((rl, d * rr))
                .expect("core is contiguous");
            let next = acc.dot(&unfolded);
            let rows = next.nrows() * d;
            acc = next
                .into_shape_with_order((rows, rr))
                .expect("row-major reshape");
        }
        let data = acc.into_iter().collect::<Vec<T>>();
        DenseTensor::new(dims, data)
    }

    /// Squared 2-norm of the coefficient tensor.
    pub fn norm_sq(&self) -> TtResult<f64> {
        Ok(inner_product(self, self)?.re().max(0.0))
    }

    pub fn norm(&self) -> TtResult<f64> {
        Ok(self.norm_sq()?.sqrt())
    }

    /// Left-canonicalize: returns an equivalent train in which every core
    /// but the last satisfies the gauge identity
    /// `sum_x G^x^H G^x = identity`; the last core carries the norm.
    ///
    /// Implemented as a left-to-right sweep of thin SVDs, absorbing
    /// `diag(s) vt` into the next core. Each left singular vector is
    /// sign-fixed (largest-magnitude entry real positive), making the
    /// output deterministic.
    pub fn left_canonicalize(&self) -> TtResult<Self> {
        let n = self.n();
        let mut new_cores: Vec<Array3<T>> = Vec::with_capacity(n);
        let mut carry: Array2<T> = Array2::from_elem((1, 1), T::from_real(1.0));
        for (k, core) in self.cores.iter().enumerate() {
            let (rl, d, rr) = core.dim();
            let unfolded = core.to_shape((rl, d * rr)).expect("contiguous");
            let m = carry.dot(&unfolded);
            let c = m.nrows();
            if k == n - 1 {
                new_cores.push(m.into_shape_with_order((c, d, rr)).expect("reshape"));
                break;
            }
            let m = m
                .into_shape_with_order((c * d, rr))
                .expect("reshape");
            let svd = thin_svd_signed(&m)?;
            let kk = svd.s.len();
            new_cores.push(svd.u.into_shape_with_order((c, d, kk)).expect("reshape"));
            let mut sv = svd.vt;
            for (i, mut row) in sv.rows_mut().into_iter().enumerate() {
                let s = T::from_real(svd.s[i]);
                row.mapv_inplace(|z| z * s);
            }
            carry = sv;
        }
        TensorTrain::new(self.sites.clone(), new_cores)
    }

    /// Largest deviation from the left gauge identity over all sites but
    /// the last: `max_k max_ab |(sum_x G^x^H G^x)_ab - delta_ab|`.
    /// Zero (up to rounding) exactly when the train is left-canonical.
    pub fn left_gauge_residual(&self) -> f64 {
        let n = self.n();
        let mut worst = 0.0f64;
        for core in self.cores.iter().take(n.saturating_sub(1)) {
            let (_, d, rr) = core.dim();
            let mut gram: Array2<T> = Array2::zeros((rr, rr));
            for i in 0..d {
                let x = core.slice(s![.., i, ..]);
                gram = gram + adjoint(x).dot(&x);
            }
            for a in 0..rr {
                for b in 0..rr {
                    let target = if a == b { 1.0 } else { 0.0 };
                    let dev = (gram[[a, b]] - T::from_real(target)).abs();
                    worst = worst.max(dev);
                }
            }
        }
        worst
    }

    /// Gauge obfuscation: inserts a fresh Haar-random orthogonal (unitary
    /// for complex) matrix on every interior bond,
    /// `G_k -> W_{k-1}^H G_k W_k` with identity boundary factors. The
    /// represented coefficient tensor is unchanged.
    pub fn obfuscate(&self, seed: u64) -> TtResult<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = self.n();
        let mut new_cores: Vec<Array3<T>> = Vec::with_capacity(n);
        let mut prev_w: Option<Array2<T>> = None;
        for (k, core) in self.cores.iter().enumerate() {
            let (rl, d, rr) = core.dim();
            let mut g: Array2<T> = match &prev_w {
                Some(w) => {
                    let unfolded = core.to_shape((rl, d * rr)).expect("contiguous");
                    adjoint(w.view()).dot(&unfolded)
                }
                None => core
                    .to_shape((rl, d * rr))
                    .expect("contiguous")
                    .to_owned(),
            };
            if k < n - 1 {
                let w: Array2<T> = haar_with_rng(rr, &mut rng)?;
                let tall = g
                    .into_shape_with_order((rl * d, rr))
                    .expect("reshape");
                g = tall.dot(&w);
                prev_w = Some(w);
                new_cores.push(
                    g.into_shape_with_order((rl, d, rr)).expect("reshape"),
                );
            } else {
                new_cores.push(
                    g.into_shape_with_order((rl, d, rr)).expect("reshape"),
                );
            }
        }
        TensorTrain::new(self.sites.clone(), new_cores)
    }

    /// Draw `count` configurations from the Born distribution
    /// `p(x) = |Psi(x)|^2 / <Psi|Psi>` by exact sequential conditional
    /// sampling with precomputed right environments.
    pub fn sample(&self, count: usize, seed: u64) -> TtResult<Vec<Configuration>> {
        if !self.all_discrete() {
            return Err(TtError::Unsupported(
                "Born sampling requires discrete sites".into(),
            ));
        }
        let n = self.n();
        // right environments: env[k] has shape (r_k, r_k), env[n] = [[1]]
        let mut env: Vec<Array2<T>> = vec![Array2::from_elem((1, 1), T::from_real(1.0)); n + 1];
        for k in (0..n).rev() {
            let core = &self.cores[k];
            let (rl, d, _) = core.dim();
            let mut e = Array2::zeros((rl, rl));
            for i in 0..d {
                let gi = core.slice(s![.., i, ..]);
                e = e + gi.dot(&env[k + 1]).dot(&adjoint(gi));
            }
            env[k] = e;
        }
        let norm_sq = env[0][[0, 0]].re();
        if norm_sq <= 0.0 {
            return numeric_err("cannot sample from a zero-norm state");
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            let mut v: Array1<T> = Array1::from_elem(1, T::from_real(1.0));
            let mut config: Configuration = Vec::with_capacity(n);
            for k in 0..n {
                let core = &self.cores[k];
                let d = core.dim().1;
                let mut weights = Vec::with_capacity(d);
                let mut branches = Vec::with_capacity(d);
                let mut total = 0.0;
                for i in 0..d {
                    let u = v.dot(&core.slice(s![.., i, ..]));
                    let w: f64 = u
                        .iter()
                        .enumerate()
                        .map(|(b, &ub)| {
                            let t: T = env[k + 1]
                                .row(b)
                                .iter()
                                .zip(u.iter())
                                .map(|(&e, &ub2)| e * ub2.conj())
                                .sum();
                            (ub * t).re()
                        })
                        .sum::<f64>()
                        .max(0.0);
                    total += w;
                    weights.push(w);
                    branches.push(u);
                }
                if total <= 0.0 {
                    return numeric_err("zero-probability branch while sampling");
                }
                let draw = rand::Rng::random::<f64>(&mut rng) * total;
                let mut acc = 0.0;
                let mut pick = d - 1;
                for (i, &w) in weights.iter().enumerate() {
                    acc += w;
                    if draw < acc {
                        pick = i;
                        break;
                    }
                }
                config.push(SiteValue::Index(pick + 1));
                let u = branches.swap_remove(pick);
                let scale = u.iter().map(|z| z.square()).sum::<f64>().sqrt();
                v = if scale > 0.0 {
                    u.mapv(|z| z.mul_real(1.0 / scale))
                } else {
                    u
                };
            }
            out.push(config);
        }
        Ok(out)
    }

    /// Expectation value of a block-swap operator dressed with diagonal
    /// phases, normalized by the squared norm.
    ///
    /// With three consecutive blocks A, B, C of `block_len` sites starting
    /// at site `start` (zero-based), this returns
    ///
    /// ```text
    ///   1/<Psi|Psi> * sum_x  w_ket(x_A) w_ket(x_B) w_bra(x_B) w_bra(x_C)
    ///                        conj(Psi(.., x_C, x_B, x_A, ..)) Psi(.., x_A, x_B, x_C, ..)
    /// ```
    ///
    /// where `w_ket`/`w_bra` are products of the per-value diagonal weights
    /// `u_ket`/`u_bra` over the block, and the sites outside the window
    /// agree in bra and ket. The contraction runs over bond-space transfer
    /// objects with at most four bond indices, never enumerating
    /// configurations.
    pub fn window_expectation(
        &self,
        u_ket: &[f64],
        u_bra: &[f64],
        block_len: usize,
        start: usize,
    ) -> TtResult<T> {
        let n = self.n();
        let l = block_len;
        if l < 1 {
            return domain_err("block length must be at least 1");
        }
        if start + 3 * l > n {
            return domain_err(format!(
                "window [{start}, {}) exceeds {n} sites",
                start + 3 * l
            ));
        }
        for k in start..start + 3 * l {
            let spec = &self.sites[k];
            if !spec.is_discrete() {
                return Err(TtError::Unsupported(
                    "window expectation requires discrete sites".into(),
                ));
            }
            if spec.dim() != u_ket.len() || spec.dim() != u_bra.len() {
                return shape_err(format!(
                    "site {} has dimension {}, phase vectors have lengths {} and {}",
                    k + 1,
                    spec.dim(),
                    u_ket.len(),
                    u_bra.len()
                ));
            }
        }

        let norm_sq = self.norm_sq()?;
        if norm_sq <= 0.0 {
            return numeric_err("window expectation of a zero-norm state");
        }

        let conj_slice = |k: usize, i: usize| self.cores[k].slice(s![.., i, ..]).mapv(|z| z.conj());

        // Left environment over sites 0..start: E(ket bond, bra bond).
        let mut e_left: Array2<T> = Array2::from_elem((1, 1), T::from_real(1.0));
        for k in 0..start {
            let d = self.sites[k].dim();
            let (_, _, rr) = self.cores[k].dim();
            let mut next = Array2::zeros((rr, rr));
            for i in 0..d {
                let x = self.cores[k].slice(s![.., i, ..]);
                next = next + x.t().dot(&e_left).dot(&conj_slice(k, i));
            }
            e_left = next;
        }

        // Right environment over sites start+3l..n: F(ket bond, bra bond).
        let mut e_right: Array2<T> = Array2::from_elem((1, 1), T::from_real(1.0));
        for k in (start + 3 * l..n).rev() {
            let d = self.sites[k].dim();
            let (rl, _, _) = self.cores[k].dim();
            let mut next = Array2::zeros((rl, rl));
            for i in 0..d {
                let x = self.cores[k].slice(s![.., i, ..]);
                next = next + x.dot(&e_right).dot(&conj_slice(k, i).t());
            }
            e_right = next;
        }

        let ranks = self.ranks();
        let r_c_in = ranks[start + 2 * l]; // bra bond entering block C'
        // A phase: T(a, b, c0, c) starts as E_left(a, b) * delta(c0, c);
        // each step advances the ket through block A (weights u_ket) and the
        // bra through block C (same values, no weight).
        let mut t4: Array4<T> =
            Array4::zeros((e_left.nrows(), e_left.ncols(), r_c_in, r_c_in));
        for a in 0..e_left.nrows() {
            for b in 0..e_left.ncols() {
                for c in 0..r_c_in {
                    t4[[a, b, c, c]] = e_left[[a, b]];
                }
            }
        }
        for i in 0..l {
            let jk = start + i;
            let jb = start + 2 * l + i;
            let d = self.sites[jk].dim();
            let (_, _, a2) = self.cores[jk].dim();
            let (_, _, c2) = self.cores[jb].dim();
            let (_, bdim, c0dim, _) = t4.dim();
            let mut next: Array4<T> = Array4::zeros((a2, bdim, c0dim, c2));
            for s_val in 0..d {
                let w = T::from_real(u_ket[s_val]);
                let x = self.cores[jk].slice(s![.., s_val, ..]);
                let y = conj_slice(jb, s_val);
                let (adim, _, _, cdim) = t4.dim();
                let m = t4
                    .view()
                    .into_shape_with_order((adim, bdim * c0dim * cdim))
                    .expect("contiguous");
                let p = x.t().dot(&m); // (a2, b*c0*c)
                let p = p
                    .into_shape_with_order((a2 * bdim * c0dim, cdim))
                    .expect("reshape");
                let q = p.dot(&y); // (a2*b*c0, c2)
                let q = q
                    .into_shape_with_order((a2, bdim, c0dim, c2))
                    .expect("reshape");
                next = next + q.mapv(|z| z * w);
            }
            t4 = next;
        }

        // B phase: operator W(a_in, b_in, a_out, b_out) over the middle
        // block, ket and bra advancing together with weights
        // u_ket * u_bra.
        let r_b_in = ranks[start + l];
        let mut w4: Array4<T> = Array4::zeros((r_b_in, r_b_in, r_b_in, r_b_in));
        for a in 0..r_b_in {
            for b in 0..r_b_in {
                w4[[a, b, a, b]] = T::from_real(1.0);
            }
        }
        for i in 0..l {
            let j = start + l + i;
            let d = self.sites[j].dim();
            let (_, _, rr) = self.cores[j].dim();
            let (ai, bi, _, bdim) = w4.dim();
            let adim = w4.dim().2;
            let mut next: Array4<T> = Array4::zeros((ai, bi, rr, rr));
            for s_val in 0..d {
                let w = T::from_real(u_ket[s_val] * u_bra[s_val]);
                let x = self.cores[j].slice(s![.., s_val, ..]);
                let y = conj_slice(j, s_val);
                // contract axis 2 (ket) with x, axis 3 (bra) with y
                let perm = w4
                    .view()
                    .permuted_axes([0, 1, 3, 2])
                    .as_standard_layout()
                    .to_owned();
                let m = perm
                    .into_shape_with_order((ai * bi * bdim, adim))
                    .expect("reshape");
                let p = m.dot(&x); // (.., a_out)
                let p = p
                    .into_shape_with_order((ai, bi, bdim, rr))
                    .expect("reshape")
                    .permuted_axes([0, 1, 3, 2])
                    .as_standard_layout()
                    .to_owned();
                let m = p
                    .into_shape_with_order((ai * bi * rr, bdim))
                    .expect("reshape");
                let q = m.dot(&y); // (.., b_out)
                let q = q
                    .into_shape_with_order((ai, bi, rr, rr))
                    .expect("reshape");
                next = next + q.mapv(|z| z * w);
            }
            w4 = next;
        }

        // C phase from the right: R(ket bond, bra bond into A, beta, bra
        // bond out of C). The ket walks block C leftward while the bra
        // walks block A leftward on the same values with weights u_bra.
        let r_a_out = ranks[start + l];
        let r_end = ranks[start + 3 * l];
        let mut r4: Array4<T> = Array4::zeros((
            e_right.nrows(),
            r_a_out,
            r_a_out,
            e_right.ncols(),
        ));
        for k in 0..e_right.nrows() {
            for b in 0..r_a_out {
                for cp in 0..e_right.ncols() {
                    r4[[k, b, b, cp]] = e_right[[k, cp]];
                }
            }
        }
        debug_assert_eq!(r_end, e_right.nrows());
        for i in (0..l).rev() {
            let jk = start + 2 * l + i;
            let jb = start + i;
            let d = self.sites[jk].dim();
            let (k_new, _, _) = self.cores[jk].dim();
            let (b_new, _, _) = self.cores[jb].dim();
            let (kdim, bdim, beta, cp) = r4.dim();
            let mut next: Array4<T> = Array4::zeros((k_new, b_new, beta, cp));
            for s_val in 0..d {
                let w = T::from_real(u_bra[s_val]);
                let x = self.cores[jk].slice(s![.., s_val, ..]); // (k_new, kdim)
                let y = conj_slice(jb, s_val); // (b_new, bdim)
                let m = r4
                    .view()
                    .into_shape_with_order((kdim, bdim * beta * cp))
                    .expect("contiguous");
                let p = x.dot(&m); // (k_new, b*beta*cp)
                let p = p
                    .into_shape_with_order((k_new, bdim, beta, cp))
                    .expect("reshape")
                    .permuted_axes([1, 0, 2, 3])
                    .as_standard_layout()
                    .to_owned();
                let m = p
                    .into_shape_with_order((bdim, k_new * beta * cp))
                    .expect("reshape");
                let q = y.dot(&m); // (b_new, k_new*beta*cp)
                let q = q
                    .into_shape_with_order((b_new, k_new, beta, cp))
                    .expect("reshape")
                    .permuted_axes([1, 0, 2, 3])
                    .as_standard_layout()
                    .to_owned();
                next = next + q.mapv(|z| z * w);
            }
            r4 = next;
        }

        // Assemble: sum over all six shared bond indices.
        let (adim, bdim, c0dim, cpdim) = t4.dim();
        let (wa, wb, wk, wc0) = w4.dim();
        debug_assert_eq!(adim, wa);
        debug_assert_eq!(c0dim, wc0);
        let l_mat = t4
            .permuted_axes([1, 3, 0, 2])
            .as_standard_layout()
            .to_owned()
            .into_shape_with_order((bdim * cpdim, adim * c0dim))
            .expect("reshape");
        let w_mat = w4
            .permuted_axes([0, 3, 1, 2])
            .as_standard_layout()
            .to_owned()
            .into_shape_with_order((wa * wc0, wb * wk))
            .expect("reshape");
        let m1 = l_mat.dot(&w_mat); // (b*cp, beta*kappa)
        let m1 = m1
            .into_shape_with_order((bdim, cpdim, wb, wk))
            .expect("reshape");
        let mut num = T::from_real(0.0);
        for b in 0..bdim {
            for cp in 0..cpdim {
                for beta in 0..wb {
                    for kappa in 0..wk {
                        num += m1[[b, cp, beta, kappa]] * r4[[kappa, b, beta, cp]];
                    }
                }
            }
        }
        Ok(num.mul_real(1.0 / norm_sq))
    }
}

impl TensorTrain<f64> {
    /// Promote to the complex field.
    pub fn to_complex(&self) -> TensorTrain<Complex64> {
        let cores = self
            .cores
            .iter()
            .map(|c| c.mapv(|x| Complex64::new(x, 0.0)))
            .collect();
        TensorTrain {
            sites: self.sites.clone(),
            cores,
        }
    }
}

/// Advance a left state vector across one site: `out_b = sum_a v_a G(a, x, b)`
/// with the physical axis resolved through the site's embedding.
pub(crate) fn contract_site<T: Field>(
    v: &[T],
    core: &Array3<T>,
    spec: &SiteSpec,
    x: SiteValue,
) -> TtResult<Vec<T>> {
    let (rl, _, rr) = core.dim();
    debug_assert_eq!(v.len(), rl);
    let mut out = vec![T::from_real(0.0); rr];
    let mut axpy = |va: T, row: ArrayView1<T>| {
        if let Some(row) = row.as_slice() {
            for (o, &g) in out.iter_mut().zip(row) {
                *o += va * g;
            }
        } else {
            for (o, &g) in out.iter_mut().zip(row.iter()) {
                *o += va * g;
            }
        }
    };
    if let (true, SiteValue::Index(i)) = (spec.embedding().is_trivial(), x) {
        let slice = core.slice(s![.., i - 1, ..]);
        for (&va, row) in v.iter().zip(slice.outer_iter()) {
            axpy(va, row);
        }
    } else {
        let phi = spec.embedding().embed_point(x)?;
        for (i, &w) in phi.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let slice = core.slice(s![.., i, ..]);
            let w = T::from_real(w);
            for (&va, row) in v.iter().zip(slice.outer_iter()) {
                axpy(va * w, row);
            }
        }
    }
    Ok(out)
}

/// Advance a right state vector across one site:
/// `out_a = sum_b G(a, x, b) w_b`.
pub(crate) fn contract_site_right<T: Field>(
    core: &Array3<T>,
    spec: &SiteSpec,
    x: SiteValue,
    w: &[T],
) -> TtResult<Vec<T>> {
    let (rl, _, rr) = core.dim();
    debug_assert_eq!(w.len(), rr);
    let mut out = vec![T::from_real(0.0); rl];
    let row_dot = |row: ArrayView1<T>| -> T {
        let mut acc = T::from_real(0.0);
        if let Some(row) = row.as_slice() {
            for (&g, &wb) in row.iter().zip(w) {
                acc += g * wb;
            }
        } else {
            for (g, &wb) in row.iter().zip(w) {
                acc += *g * wb;
            }
        }
        acc
    };
    if let (true, SiteValue::Index(i)) = (spec.embedding().is_trivial(), x) {
        let slice = core.slice(s![.., i - 1, ..]);
        for (o, row) in out.iter_mut().zip(slice.outer_iter()) {
            *o = row_dot(row);
        }
    } else {
        let phi = spec.embedding().embed_point(x)?;
        for (i, &weight) in phi.iter().enumerate() {
            if weight == 0.0 {
                continue;
            }
            let slice = core.slice(s![.., i, ..]);
            let weight = T::from_real(weight);
            for (o, row) in out.iter_mut().zip(slice.outer_iter()) {
                *o += row_dot(row) * weight;
            }
        }
    }
    Ok(out)
}

/// `sum_x conj(a(x)) b(x)` over the coefficient tensors, computed by the
/// zipper (transfer) contraction without densifying.
pub fn inner_product<T: Field>(a: &TensorTrain<T>, b: &TensorTrain<T>) -> TtResult<T> {
    if a.n() != b.n() || a.dims() != b.dims() {
        return shape_err(format!(
            "inner product needs matching dimensions: {:?} vs {:?}",
            a.dims(),
            b.dims()
        ));
    }
    let mut e: Array2<T> = Array2::from_elem((1, 1), T::from_real(1.0));
    for k in 0..a.n() {
        let d = a.dims()[k];
        let ca = a.core(k);
        let cb = b.core(k);
        let (_, _, ra2) = ca.dim();
        let (_, _, rb2) = cb.dim();
        let mut next: Array2<T> = Array2::zeros((ra2, rb2));
        for i in 0..d {
            let ai = ca.slice(s![.., i, ..]);
            let bi = cb.slice(s![.., i, ..]);
            next = next + adjoint(ai).dot(&e).dot(&bi);
        }
        e = next;
    }
    Ok(e[[0, 0]])
}

/// Normalized overlap `inner(a, b) / (|a| |b|)`. For the real field this is
/// signed; for the complex field the modulus is returned (the overall
/// phase of either train is not observable).
pub fn fidelity<T: Field>(a: &TensorTrain<T>, b: &TensorTrain<T>) -> TtResult<f64> {
    let na = a.norm()?;
    let nb = b.norm()?;
    if na == 0.0 || nb == 0.0 {
        return numeric_err("fidelity of a zero-norm operand");
    }
    let ip = inner_product(a, b)?;
    let f = ip.mul_real(1.0 / (na * nb));
    Ok(match T::TAG {
        FieldTag::Real64 => f.re(),
        FieldTag::Complex128 => f.abs(),
    })
}

/// Dense coefficient tensor in row-major order (site 1 slowest).
#[derive(Clone, Debug, PartialEq)]
pub struct DenseTensor<T> {
    dims: Vec<usize>,
    data: Vec<T>,
}

impl<T: Field> DenseTensor<T> {
    pub fn new(dims: Vec<usize>, data: Vec<T>) -> TtResult<Self> {
        let total: usize = dims.iter().product();
        if total != data.len() {
            return shape_err(format!(
                "dense data length {} does not match dims {:?}",
                data.len(),
                dims
            ));
        }
        if total > DENSE_CAP {
            return Err(TtError::Unsupported(format!(
                "dense tensor exceeds the {DENSE_CAP}-entry cap"
            )));
        }
        Ok(DenseTensor { dims, data })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Row-major flat index of a configuration of one-based indices.
    pub fn flat_index(&self, x: &[SiteValue]) -> TtResult<usize> {
        if x.len() != self.dims.len() {
            return shape_err(format!(
                "configuration of length {} for a {}-dim tensor",
                x.len(),
                self.dims.len()
            ));
        }
        let mut idx = 0usize;
        for (k, &v) in x.iter().enumerate() {
            let i = match v {
                SiteValue::Index(i) if i >= 1 && i <= self.dims[k] => i - 1,
                other => {
                    return domain_err(format!(
                        "site {}: value {other} outside 1..={}",
                        k + 1,
                        self.dims[k]
                    ))
                }
            };
            idx = idx * self.dims[k] + i;
        }
        Ok(idx)
    }

    pub fn get(&self, x: &[SiteValue]) -> TtResult<T> {
        Ok(self.data[self.flat_index(x)?])
    }

    /// Iterate all configurations in row-major order.
    pub fn configurations(&self) -> impl Iterator<Item = Configuration> + '_ {
        let dims = self.dims.clone();
        let total = self.data.len();
        (0..total).map(move |mut flat| {
            let mut x = vec![SiteValue::Index(1); dims.len()];
            for k in (0..dims.len()).rev() {
                x[k] = SiteValue::Index(flat % dims[k] + 1);
                flat /= dims[k];
            }
            x
        })
    }
}

/// A tensor train over either field, for code paths (CLI, persistence)
/// that decide the field at run time.
#[derive(Clone, Debug)]
pub enum AnyTt {
    Real(TensorTrain<f64>),
    Complex(TensorTrain<Complex64>),
}

impl AnyTt {
    pub fn field(&self) -> FieldTag {
        match self {
            AnyTt::Real(_) => FieldTag::Real64,
            AnyTt::Complex(_) => FieldTag::Complex128,
        }
    }

    pub fn n(&self) -> usize {
        match self {
            AnyTt::Real(t) => t.n(),
            AnyTt::Complex(t) => t.n(),
        }
    }

    pub fn dims(&self) -> Vec<usize> {
        match self {
            AnyTt::Real(t) => t.dims(),
            AnyTt::Complex(t) => t.dims(),
        }
    }

    pub fn ranks(&self) -> Vec<usize> {
        match self {
            AnyTt::Real(t) => t.ranks(),
            AnyTt::Complex(t) => t.ranks(),
        }
    }

    pub fn sites(&self) -> &[SiteSpec] {
        match self {
            AnyTt::Real(t) => t.sites(),
            AnyTt::Complex(t) => t.sites(),
        }
    }

    pub fn to_complex(&self) -> TensorTrain<Complex64> {
        match self {
            AnyTt::Real(t) => t.to_complex(),
            AnyTt::Complex(t) => t.clone(),
        }
    }

    /// Fidelity between two trains, promoting real to complex when the
    /// fields differ.
    pub fn fidelity_with(&self, other: &AnyTt) -> TtResult<f64> {
        match (self, other) {
            (AnyTt::Real(a), AnyTt::Real(b)) => fidelity(a, b),
            (AnyTt::Complex(a), AnyTt::Complex(b)) => fidelity(a, b),
            _ => fidelity(&self.to_complex(), &other.to_complex()),
        }
    }
}
