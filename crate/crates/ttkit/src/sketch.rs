//! Tensor-train reconstruction from black-box samples.
//!
//! Given an oracle and a set of pivot configurations, [`decompose`] builds
//! a tensor train in a single left-to-right pass. At each cut k it
//!
//! 1. evaluates the oracle on prefix x grid x suffix products
//!    ([`build_phi_bar`]),
//! 2. sketches the suffix axis with a Haar-random orthogonal matrix
//!    ([`sketch_right`]),
//! 3. fits the grid axis onto the site's embedding functions
//!    ([`fit_coefficients`]),
//! 4. truncates with an SVD under a cumulative-weight rank rule
//!    ([`trim`]),
//! 5. restricts the result to pivot prefixes ([`form_system`]), and
//! 6. solves a least-squares system for the core ([`solve_core`]).
//!
//! The unique-prefix and unique-suffix bookkeeping lives in
//! [`PrefixIndex`]; all orderings are first-occurrence order, which makes
//! the whole pipeline deterministic for a fixed seed.

use std::collections::HashMap;
use std::time::Instant;

use ndarray::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::embed::default_fit_grid;
use crate::error::{domain_err, numeric_err, shape_err, TtError, TtResult};
use crate::field::Field;
use crate::linalg::{haar_with_rng, lstsq_pinv, thin_svd_signed, LstsqInfo};
use crate::oracle::Oracle;
use crate::site::{Configuration, SiteSpec, SiteValue};
use crate::tt::TensorTrain;

pub use crate::linalg::haar_orthogonal;

/// A deduplicated table of pivot configurations.
#[derive(Clone, Debug)]
pub struct PivotSet {
    points: Vec<Configuration>,
    n: usize,
}

impl PivotSet {
    /// Deduplicate (first occurrence wins), validate every value against
    /// the site specs, and require at least two distinct pivots.
    pub fn new(points: Vec<Configuration>, sites: &[SiteSpec]) -> TtResult<Self> {
        let n = sites.len();
        let mut seen: HashMap<Vec<u64>, ()> = HashMap::new();
        let mut kept = Vec::new();
        for (row, p) in points.into_iter().enumerate() {
            crate::site::validate_config(sites, &p)
                .map_err(|e| TtError::Domain(format!("pivot {row}: {e}")))?;
            let key: Vec<u64> = p.iter().map(|v| v.key_bits()).collect();
            if seen.insert(key, ()).is_none() {
                kept.push(p);
            }
        }
        if kept.len() < 2 {
            return domain_err(format!(
                "need at least 2 distinct pivots, got {}",
                kept.len()
            ));
        }
        Ok(PivotSet { points: kept, n })
    }

    pub fn points(&self) -> &[Configuration] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// All values appearing in column `k`, in pivot order (with repeats).
    pub fn column(&self, k: usize) -> Vec<SiteValue> {
        self.points.iter().map(|p| p[k]).collect()
    }
}

/// One level of the unique-prefix (or unique-suffix) table.
#[derive(Clone, Debug, Default)]
struct Level {
    /// index of each entry's parent in the previous level
    parents: Vec<usize>,
    /// the value by which each entry extends its parent
    values: Vec<SiteValue>,
    /// a representative pivot row containing each entry
    rows: Vec<usize>,
}

/// Unique prefixes and suffixes of a pivot set at every cut, with parent
/// maps, in first-occurrence order.
#[derive(Clone, Debug)]
pub struct PrefixIndex {
    n: usize,
    /// prefix_levels[k]: unique prefixes of length k (entry 0 is the empty
    /// prefix level with a single element)
    prefix_levels: Vec<Level>,
    /// suffix_levels[m]: unique suffixes of length m
    suffix_levels: Vec<Level>,
}

/// Build the prefix/suffix tables for a pivot set.
pub fn index_pivots(pivots: &PivotSet) -> PrefixIndex {
    let n = pivots.n();
    let points = pivots.points();
    let empty = Level {
        parents: vec![usize::MAX],
        values: vec![SiteValue::Index(1)],
        rows: vec![0],
    };

    // Each pivot row carries the table id of its current prefix (suffix);
    // extending by one site keys on (parent id, next value), so the whole
    // construction is linear in N * n.
    let mut prefix_levels = vec![empty.clone()];
    let mut id_of_row = vec![0usize; points.len()];
    for k in 1..=n {
        let mut level = Level::default();
        let mut map: HashMap<(usize, u64), usize> = HashMap::new();
        for (row, p) in points.iter().enumerate() {
            let parent = id_of_row[row];
            let key = (parent, p[k - 1].key_bits());
            let id = *map.entry(key).or_insert_with(|| {
                level.parents.push(parent);
                level.values.push(p[k - 1]);
                level.rows.push(row);
                level.rows.len() - 1
            });
            id_of_row[row] = id;
        }
        prefix_levels.push(level);
    }

    let mut suffix_levels = vec![empty];
    let mut id_of_row = vec![0usize; points.len()];
    for m in 1..=n {
        let mut level = Level::default();
        let mut map: HashMap<(usize, u64), usize> = HashMap::new();
        for (row, p) in points.iter().enumerate() {
            let parent = id_of_row[row];
            let key = (parent, p[n - m].key_bits());
            let id = *map.entry(key).or_insert_with(|| {
                level.parents.push(parent);
                level.values.push(p[n - m]);
                level.rows.push(row);
                level.rows.len() - 1
            });
            id_of_row[row] = id;
        }
        suffix_levels.push(level);
    }

    PrefixIndex {
        n,
        prefix_levels,
        suffix_levels,
    }
}

impl PrefixIndex {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of unique prefixes of length `k` (k = 0 gives 1).
    pub fn prefix_count(&self, k: usize) -> usize {
        self.prefix_levels[k].rows.len()
    }

    /// Number of unique suffixes of length `m` (m = 0 gives 1).
    pub fn suffix_count(&self, m: usize) -> usize {
        self.suffix_levels[m].rows.len()
    }

    /// Parent indices of the length-`k` prefixes in the length-(k-1) table.
    pub fn prefix_parents(&self, k: usize) -> &[usize] {
        &self.prefix_levels[k].parents
    }

    /// The k-th value of each unique length-`k` prefix.
    pub fn prefix_values(&self, k: usize) -> &[SiteValue] {
        &self.prefix_levels[k].values
    }

    /// Materialize the unique prefixes of length `k` in table order.
    pub fn prefix_configs(&self, pivots: &PivotSet, k: usize) -> Vec<Configuration> {
        self.prefix_levels[k]
            .rows
            .iter()
            .map(|&row| pivots.points()[row][..k].to_vec())
            .collect()
    }

    /// Materialize the unique suffixes of length `m` in table order.
    pub fn suffix_configs(&self, pivots: &PivotSet, m: usize) -> Vec<Configuration> {
        let n = self.n;
        self.suffix_levels[m]
            .rows
            .iter()
            .map(|&row| pivots.points()[row][n - m..].to_vec())
            .collect()
    }
}

/// Reconstruction parameters.
#[derive(Clone, Debug)]
pub struct SketchConfig {
    /// Hard cap on every bond rank.
    pub r_max: usize,
    /// Cumulative singular-value weight retained by the rank rule,
    /// in (0, 1].
    pub cum: f64,
    /// Seed for the sketch matrices.
    pub seed: u64,
    /// Fit grids per site, or automatic (discrete: all values;
    /// continuous: pivot values plus an equidistant grid).
    pub fit_grids: FitGrids,
    /// Relative singular-value cutoff for least-squares pseudoinverses.
    pub lstsq_cutoff: f64,
}

#[derive(Clone, Debug, Default)]
pub enum FitGrids {
    #[default]
    Auto,
    Explicit(Vec<Vec<SiteValue>>),
}

impl SketchConfig {
    pub fn new(r_max: usize, seed: u64) -> Self {
        SketchConfig {
            r_max,
            cum: 1.0 - 1e-5,
            seed,
            fit_grids: FitGrids::Auto,
            lstsq_cutoff: 1e-12,
        }
    }

    fn validate(&self) -> TtResult<()> {
        if self.r_max < 1 {
            return domain_err("r_max must be at least 1");
        }
        if !(self.cum > 0.0 && self.cum <= 1.0) {
            return domain_err(format!("cum must lie in (0, 1], got {}", self.cum));
        }
        if !(self.lstsq_cutoff.is_finite() && self.lstsq_cutoff >= 0.0) {
            return domain_err("least-squares cutoff must be a non-negative number");
        }
        Ok(())
    }
}

/// Per-cut record in the decomposition report.
#[derive(Clone, Debug, Serialize)]
pub struct CutReport {
    /// 1-based cut index.
    pub cut: usize,
    /// Chosen bond rank r_k.
    pub rank: usize,
    /// Full singular-value spectrum at this cut (empty when the SVD was
    /// skipped); entries past `rank` were discarded.
    pub singular_values: Vec<f64>,
    pub svd_skipped: bool,
    /// Least-squares diagnostics of the core solve (absent for the first
    /// core, which is copied directly).
    pub solve: Option<LstsqInfo>,
    /// Least-squares diagnostics of the embedding fit (absent when the
    /// trivial-embedding identity fit was skipped).
    pub fit: Option<LstsqInfo>,
    /// Oracle evaluations requested for this cut.
    pub oracle_calls: usize,
}

/// Wall time spent in each pipeline phase, in seconds.
#[derive(Clone, Debug, Default, Serialize)]
pub struct PhaseTimings {
    pub evaluate: f64,
    pub sketch: f64,
    pub fit: f64,
    pub trim: f64,
    pub system: f64,
    pub solve: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DecompositionReport {
    pub cuts: Vec<CutReport>,
    /// Bond ranks r_0..r_n of the result.
    pub ranks: Vec<usize>,
    /// Total oracle evaluations requested (the sum over cuts of
    /// prefixes x grid x suffixes).
    pub oracle_calls: usize,
    pub timings: PhaseTimings,
    /// Cuts whose core system was numerically rank-deficient and solved
    /// in the minimum-norm sense.
    pub rank_deficient_cuts: Vec<usize>,
}

/// Evaluate the oracle on every (prefix, grid value, suffix) combination
/// for cut `k` (1-based): shape `N_{1:k-1} x |grid| x N_{k+1:n}`.
pub fn build_phi_bar<T: Field>(
    oracle: &dyn Oracle<T>,
    pivots: &PivotSet,
    idx: &PrefixIndex,
    k: usize,
    grid: &[SiteValue],
) -> TtResult<Array3<T>> {
    let n = idx.n();
    if k < 1 || k > n {
        return shape_err(format!("cut {k} outside 1..={n}"));
    }
    let prefixes = idx.prefix_configs(pivots, k - 1);
    let suffixes = idx.suffix_configs(pivots, n - k);
    oracle.eval_product_batch(&prefixes, k - 1, grid, &suffixes)
}

/// Contract the suffix axis with a square sketch matrix:
/// `out(b, j, c) = sum_s phi(b, j, s) u(s, c)`.
pub fn sketch_right<T: Field>(phi_bar: &Array3<T>, u: &Array2<T>) -> TtResult<Array3<T>> {
    let (p, g, s) = phi_bar.dim();
    if u.nrows() != s || u.ncols() != s {
        return shape_err(format!(
            "sketch matrix is {}x{}, suffix axis has size {s}",
            u.nrows(),
            u.ncols()
        ));
    }
    let flat = phi_bar
        .to_shape((p * g, s))
        .expect("contiguous")
        .dot(u);
    Ok(flat
        .into_shape_with_order((p, g, s))
        .expect("reshape"))
}

/// True when the grid is exactly the identity grid `1..=d` of a discrete
/// site, in which case the embedding fit is the identity and is skipped.
fn is_identity_grid(spec: &SiteSpec, grid: &[SiteValue]) -> bool {
    spec.is_discrete()
        && grid.len() == spec.dim()
        && grid
            .iter()
            .enumerate()
            .all(|(i, v)| matches!(v, SiteValue::Index(j) if *j == i + 1))
}

/// Express the grid axis in the site's embedding functions:
/// solve `phi_tilde(b, y, c) = sum_i phi_check(b, i, c) e(i, y)` in the
/// least-squares sense. For the identity grid of a discrete site this is
/// skipped and the input is returned unchanged.
pub fn fit_coefficients<T: Field>(
    phi_tilde: Array3<T>,
    spec: &SiteSpec,
    grid: &[SiteValue],
    cutoff: f64,
) -> TtResult<(Array3<T>, Option<LstsqInfo>)> {
    let (p, g, s) = phi_tilde.dim();
    if g != grid.len() {
        return shape_err(format!(
            "grid axis has size {g} but the grid lists {} values",
            grid.len()
        ));
    }
    if is_identity_grid(spec, grid) {
        return Ok((phi_tilde, None));
    }
    let d = spec.dim();
    if g < d {
        return domain_err(format!(
            "fit grid has {g} points for a dimension-{d} embedding"
        ));
    }
    let embed = spec.embedding().embed_grid(grid)?; // d x g, real
    let a: Array2<T> = embed.t().mapv(T::from_real); // g x d
    let rhs = phi_tilde
        .permuted_axes([1, 0, 2])
        .as_standard_layout()
        .to_owned()
        .into_shape_with_order((g, p * s))
        .expect("reshape");
    let (x, info) = lstsq_pinv(&a, &rhs, cutoff)?;
    if info.rank < d {
        return numeric_err(format!(
            "embedding matrix on the fit grid is rank-deficient ({} of {d})",
            info.rank
        ));
    }
    let phi_check = x
        .into_shape_with_order((d, p, s))
        .expect("reshape")
        .permuted_axes([1, 0, 2])
        .as_standard_layout()
        .to_owned();
    Ok((phi_check, Some(info)))
}

/// Output of the trimming step.
#[derive(Clone, Debug)]
pub struct TrimOutcome<T> {
    /// Shape `(prefixes, d, rank)`.
    pub b: Array3<T>,
    pub rank: usize,
    /// Full spectrum when the SVD ran; empty when it was skipped.
    pub singular_values: Vec<f64>,
    pub skipped: bool,
}

/// Smallest rank whose plain cumulative singular-value sum reaches `cum`.
fn rank_by_cum(s: &[f64], cum: f64) -> usize {
    let total: f64 = s.iter().sum();
    if !(total > 0.0) {
        return 1;
    }
    let mut partial = 0.0;
    for (i, &v) in s.iter().enumerate() {
        partial += v;
        if partial / total >= cum {
            return i + 1;
        }
    }
    s.len()
}

/// Truncate the suffix axis: SVD of the `(prefixes*d) x suffixes`
/// unfolding, keep the smallest rank whose cumulative singular-value
/// weight reaches `cum`, capped at `r_max`. When the suffix axis is
/// already no larger than `r_max` the SVD is skipped entirely and the
/// input is kept as is.
pub fn trim<T: Field>(phi_check: Array3<T>, r_max: usize, cum: f64) -> TtResult<TrimOutcome<T>> {
    let (p, d, s) = phi_check.dim();
    if s <= r_max {
        return Ok(TrimOutcome {
            rank: s,
            b: phi_check,
            singular_values: Vec::new(),
            skipped: true,
        });
    }
    let flat = phi_check
        .into_shape_with_order((p * d, s))
        .expect("reshape");
    let svd = thin_svd_signed(&flat)?;
    let r = rank_by_cum(&svd.s, cum).min(r_max);
    let b = svd.u.slice(s![.., ..r]).to_owned();
    Ok(TrimOutcome {
        b: b.into_shape_with_order((p, d, r)).expect("reshape"),
        rank: r,
        singular_values: svd.s,
        skipped: false,
    })
}

/// Restrict a trimmed block to the pivot prefixes of cut `k`: row beta of
/// the result is `sum_i e(i, v_beta) b(parent(beta), i, :)` where
/// `v_beta` is the k-th value of unique prefix beta. For trivial
/// embeddings this selects slices directly.
pub fn form_system<T: Field>(
    b: &Array3<T>,
    idx: &PrefixIndex,
    spec: &SiteSpec,
    k: usize,
) -> TtResult<Array2<T>> {
    let (p, d, r) = b.dim();
    if d != spec.dim() {
        return shape_err(format!(
            "block physical axis {d} does not match site dimension {}",
            spec.dim()
        ));
    }
    let parents = idx.prefix_parents(k);
    let values = idx.prefix_values(k);
    let rows = parents.len();
    let mut a = Array2::zeros((rows, r));
    for beta in 0..rows {
        let parent = parents[beta];
        if parent >= p {
            return shape_err(format!(
                "prefix parent {parent} outside the {p}-row block at cut {k}"
            ));
        }
        if let (true, SiteValue::Index(i)) = (spec.embedding().is_trivial(), values[beta]) {
            a.row_mut(beta).assign(&b.slice(s![parent, i - 1, ..]));
        } else {
            let phi = spec.embedding().embed_point(values[beta])?;
            for (i, &w) in phi.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                let w = T::from_real(w);
                let slice = b.slice(s![parent, i, ..]);
                for c in 0..r {
                    a[[beta, c]] += slice[c] * w;
                }
            }
        }
    }
    Ok(a)
}

/// Solve `a_prev G = b` for the core in the minimum-norm least-squares
/// sense, unfolding `b` to `(rows, d*rank)`.
pub fn solve_core<T: Field>(
    a_prev: &Array2<T>,
    b: &Array3<T>,
    cutoff: f64,
) -> TtResult<(Array3<T>, LstsqInfo)> {
    let (m, d, r) = b.dim();
    if a_prev.nrows() != m {
        return shape_err(format!(
            "system has {} rows, right-hand side has {m}",
            a_prev.nrows()
        ));
    }
    let rhs = b
        .to_shape((m, d * r))
        .expect("contiguous")
        .to_owned();
    let (x, info) = lstsq_pinv(a_prev, &rhs, cutoff)?;
    let core = x
        .into_shape_with_order((a_prev.ncols(), d, r))
        .expect("reshape");
    Ok((core, info))
}

/// Draw `count` distinct configurations uniformly over the sites' domains
/// (discrete: uniform index; interval: uniform real). Fails after
/// `100 * count` attempts without finding enough distinct points.
pub fn sample_pivots_uniform(
    sites: &[SiteSpec],
    count: usize,
    seed: u64,
) -> TtResult<PivotSet> {
    use rand::Rng;
    if count < 2 {
        return domain_err("need at least 2 pivots");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen: HashMap<Vec<u64>, ()> = HashMap::new();
    let mut out: Vec<Configuration> = Vec::with_capacity(count);
    let mut attempts = 0usize;
    while out.len() < count {
        attempts += 1;
        if attempts > 100 * count {
            return domain_err(format!(
                "could not find {count} distinct pivots in {attempts} attempts"
            ));
        }
        let p: Configuration = sites
            .iter()
            .map(|spec| match spec.domain() {
                crate::site::Domain::Discrete => {
                    SiteValue::Index(rng.random_range(1..=spec.dim()))
                }
                crate::site::Domain::Interval { lo, hi } => {
                    SiteValue::Real(lo + (hi - lo) * rng.random::<f64>())
                }
            })
            .collect();
        let key: Vec<u64> = p.iter().map(|v| v.key_bits()).collect();
        if seen.insert(key, ()).is_none() {
            out.push(p);
        }
    }
    PivotSet::new(out, sites)
}

/// Reconstruct a tensor train from oracle samples at the given pivots.
///
/// Deterministic for fixed (oracle, pivots, config). The report carries
/// per-cut ranks and spectra, least-squares diagnostics, the exact oracle
/// evaluation count, and per-phase wall times.
pub fn decompose<T: Field>(
    oracle: &dyn Oracle<T>,
    pivots: &PivotSet,
    cfg: &SketchConfig,
) -> TtResult<(TensorTrain<T>, DecompositionReport)> {
    cfg.validate()?;
    let sites = oracle.sites().to_vec();
    let n = sites.len();
    if pivots.n() != n {
        return shape_err(format!(
            "pivots have {} sites, oracle has {n}",
            pivots.n()
        ));
    }
    let idx = index_pivots(pivots);

    let grids: Vec<Vec<SiteValue>> = match &cfg.fit_grids {
        FitGrids::Auto => (0..n)
            .map(|k| default_fit_grid(sites[k].dim(), sites[k].domain(), &pivots.column(k)))
            .collect(),
        FitGrids::Explicit(gs) => {
            if gs.len() != n {
                return shape_err(format!(
                    "{} fit grids for {n} sites",
                    gs.len()
                ));
            }
            for (k, g) in gs.iter().enumerate() {
                if g.len() < sites[k].dim() {
                    return domain_err(format!(
                        "site {}: fit grid has {} points for dimension {}",
                        k + 1,
                        g.len(),
                        sites[k].dim()
                    ));
                }
                for &v in g {
                    sites[k]
                        .validate_value(v)
                        .map_err(|e| TtError::Domain(format!("site {} fit grid: {e}", k + 1)))?;
                }
            }
            gs.clone()
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut timings = PhaseTimings::default();
    let mut cuts = Vec::with_capacity(n);
    let mut rank_deficient_cuts = Vec::new();
    let mut oracle_calls = 0usize;
    let mut cores: Vec<Array3<T>> = Vec::with_capacity(n);
    let mut a_prev: Option<Array2<T>> = None;

    let annotate = |k: usize, e: TtError| -> TtError {
        match e {
            TtError::Shape(m) => TtError::Shape(format!("cut {k}: {m}")),
            TtError::Domain(m) => TtError::Domain(format!("cut {k}: {m}")),
            TtError::Numeric(m) => TtError::Numeric(format!("cut {k}: {m}")),
            TtError::Oracle(m) => TtError::Oracle(format!("cut {k}: {m}")),
            TtError::Io(m) => TtError::Io(format!("cut {k}: {m}")),
            TtError::Unsupported(m) => TtError::Unsupported(format!("cut {k}: {m}")),
        }
    };

    for k in 1..=n {
        let grid = &grids[k - 1];
        let p_count = idx.prefix_count(k - 1);
        let s_count = idx.suffix_count(n - k);
        let cut_calls = p_count * grid.len() * s_count;
        oracle_calls += cut_calls;

        let t = Instant::now();
        let phi_bar =
            build_phi_bar(oracle, pivots, &idx, k, grid).map_err(|e| annotate(k, e))?;
        timings.evaluate += t.elapsed().as_secs_f64();

        let t = Instant::now();
        let phi_tilde = if k < n {
            let u: Array2<T> = haar_with_rng(s_count, &mut rng)?;
            sketch_right(&phi_bar, &u).map_err(|e| annotate(k, e))?
        } else {
            phi_bar
        };
        timings.sketch += t.elapsed().as_secs_f64();

        let t = Instant::now();
        let (phi_check, fit_info) =
            fit_coefficients(phi_tilde, &sites[k - 1], grid, cfg.lstsq_cutoff)
                .map_err(|e| annotate(k, e))?;
        timings.fit += t.elapsed().as_secs_f64();

        let t = Instant::now();
        let trimmed = trim(phi_check, cfg.r_max, cfg.cum).map_err(|e| annotate(k, e))?;
        timings.trim += t.elapsed().as_secs_f64();

        let t = Instant::now();
        let solve_info = match &a_prev {
            None => {
                debug_assert_eq!(trimmed.b.dim().0, 1);
                cores.push(trimmed.b.clone());
                None
            }
            Some(a) => {
                let (core, info) =
                    solve_core(a, &trimmed.b, cfg.lstsq_cutoff).map_err(|e| annotate(k, e))?;
                cores.push(core);
                if info.rank_deficient {
                    rank_deficient_cuts.push(k);
                }
                Some(info)
            }
        };
        timings.solve += t.elapsed().as_secs_f64();

        if k < n {
            let t = Instant::now();
            let a = form_system(&trimmed.b, &idx, &sites[k - 1], k).map_err(|e| annotate(k, e))?;
            a_prev = Some(a);
            timings.system += t.elapsed().as_secs_f64();
        }

        cuts.push(CutReport {
            cut: k,
            rank: trimmed.rank,
            singular_values: trimmed.singular_values,
            svd_skipped: trimmed.skipped,
            solve: solve_info,
            fit: fit_info,
            oracle_calls: cut_calls,
        });
    }

    let tt = TensorTrain::new(sites, cores)?;
    let report = DecompositionReport {
        ranks: tt.ranks(),
        cuts,
        oracle_calls,
        timings,
        rank_deficient_cuts,
    };
    Ok((tt, report))
}
