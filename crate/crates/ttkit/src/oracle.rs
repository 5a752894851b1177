//! Black-box function oracles.
//!
//! An [`Oracle`] answers batched point queries against some underlying
//! function of n site variables. The reconstruction pipeline only ever
//! talks to this trait, so the same code serves synthetic tensor trains,
//! closed-form test functions, and external subprocesses.
//!
//! Besides plain batches, oracles can answer structured product batches
//! (every prefix x mid-grid x suffix combination at one site). The default
//! implementation expands the product and defers to [`Oracle::eval_batch`];
//! oracles backed by a tensor train override it with cached partial
//! contractions, which keeps reconstruction cost linear in the chain
//! length instead of quadratic.

use rustc_hash::FxHashMap;
use std::io::{BufRead, BufReader, Write as IoWrite};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::time::Duration;

use ndarray::prelude::*;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::error::{domain_err, numeric_err, oracle_err, shape_err, TtResult};
use crate::field::Field;
use crate::linalg::haar_with_rng;
use crate::site::{validate_config, Configuration, SiteSpec, SiteValue};
use crate::tt::{contract_site, contract_site_right, DenseTensor, TensorTrain};

/// A black-box function of n site variables, queried in batches.
pub trait Oracle<T: Field>: Send + Sync {
    /// Site structure of the function's domain.
    fn sites(&self) -> &[SiteSpec];

    /// Human-readable identity, echoed in configuration reports.
    fn name(&self) -> &str;

    /// Evaluate every configuration, one value per input, in order.
    fn eval_batch(&self, points: &[Configuration]) -> TtResult<Vec<T>>;

    fn n(&self) -> usize {
        self.sites().len()
    }

    /// Evaluate the structured product batch
    /// `(prefix, y, suffix)` for every combination, where `y` runs over
    /// `mid_grid` at site `mid_site` (zero-based), each prefix covers the
    /// sites before it and each suffix the sites after it. Returns shape
    /// `(prefixes, grid, suffixes)`.
    fn eval_product_batch(
        &self,
        prefixes: &[Configuration],
        mid_site: usize,
        mid_grid: &[SiteValue],
        suffixes: &[Configuration],
    ) -> TtResult<Array3<T>> {
        check_product_shape(self.sites(), prefixes, mid_site, mid_grid, suffixes)?;
        let mut points = Vec::with_capacity(prefixes.len() * mid_grid.len() * suffixes.len());
        for p in prefixes {
            for &y in mid_grid {
                for s in suffixes {
                    let mut x = Vec::with_capacity(self.n());
                    x.extend_from_slice(p);
                    x.push(y);
                    x.extend_from_slice(s);
                    points.push(x);
                }
            }
        }
        let values = self.eval_batch(&points)?;
        Array3::from_shape_vec((prefixes.len(), mid_grid.len(), suffixes.len()), values)
            .map_err(|e| crate::error::TtError::Shape(e.to_string()))
    }
}

pub(crate) fn check_product_shape(
    sites: &[SiteSpec],
    prefixes: &[Configuration],
    mid_site: usize,
    mid_grid: &[SiteValue],
    suffixes: &[Configuration],
) -> TtResult<()> {
    let n = sites.len();
    if mid_site >= n {
        return shape_err(format!("mid site {mid_site} out of range for {n} sites"));
    }
    if prefixes.is_empty() || mid_grid.is_empty() || suffixes.is_empty() {
        return shape_err("product batch needs at least one prefix, grid value, and suffix");
    }
    for p in prefixes {
        if p.len() != mid_site {
            return shape_err(format!(
                "prefix of length {} for mid site {mid_site}",
                p.len()
            ));
        }
    }
    let tail = n - mid_site - 1;
    for s in suffixes {
        if s.len() != tail {
            return shape_err(format!(
                "suffix of length {} where {tail} sites follow site {mid_site}",
                s.len()
            ));
        }
    }
    for &y in mid_grid {
        sites[mid_site]
            .validate_value(y)
            .map_err(|e| crate::error::TtError::Domain(format!("grid value: {e}")))?;
    }
    Ok(())
}

/// Flag bit marking a cache key that contains a value the packed encoding
/// cannot represent; such keys never equal a legitimately built key.
const KEY_POISON: u64 = 1 << 63;

/// Encoding of site-value sequences into cache keys.
///
/// When every site is discrete, each value occupies a fixed power-of-two
/// number of bits (so values never straddle words) and the key is
/// `[count, packed words...]`; a length-k prefix then costs
/// `1 + ceil(k*w/64)` words instead of `k`, which keeps key hashing cheap
/// on long chains. Any continuous site falls back to one raw
/// `key_bits` word per value.
#[derive(Clone, Copy)]
enum KeyCodec {
    Packed { w: u32 },
    Raw,
}

impl KeyCodec {
    fn for_sites(sites: &[SiteSpec]) -> KeyCodec {
        let mut w = 1u32;
        for s in sites {
            if !s.is_discrete() {
                return KeyCodec::Raw;
            }
            let top = (s.dim() - 1) as u64;
            let need = (64 - top.leading_zeros()).max(1);
            w = w.max(need.next_power_of_two());
        }
        if w > 16 {
            KeyCodec::Raw
        } else {
            KeyCodec::Packed { w }
        }
    }

    /// Append one value to a key (packed keys must already hold their
    /// count word).
    fn push(self, key: &mut Vec<u64>, v: SiteValue) {
        match self {
            KeyCodec::Raw => key.push(v.key_bits()),
            KeyCodec::Packed { w } => {
                let w = w as usize;
                let count = key[0];
                key[0] = count.wrapping_add(1);
                let val = match v {
                    SiteValue::Index(i) if i >= 1 && ((i - 1) as u64) >> w == 0 => {
                        (i - 1) as u64
                    }
                    _ => {
                        key[0] |= KEY_POISON;
                        return;
                    }
                };
                let off = (count & !KEY_POISON) as usize * w;
                let word = 1 + off / 64;
                let shift = off % 64;
                if word == key.len() {
                    key.push(val << shift);
                } else {
                    key[word] |= val << shift;
                }
            }
        }
    }

    /// Reset `key` to the encoding of `vals` in iteration order.
    fn pack<I: Iterator<Item = SiteValue>>(self, key: &mut Vec<u64>, vals: I) {
        key.clear();
        if let KeyCodec::Packed { .. } = self {
            key.push(0);
        }
        for v in vals {
            self.push(key, v);
        }
    }
}

/// Cached partial contractions of a tensor train. Prefix keys encode the
/// sites left to right; suffix keys encode them right to left, so that
/// extending a suffix by one site on its left is a push.
struct EnvCache<T> {
    codec: KeyCodec,
    /// prefix values (sites 0..j) -> state row vector at bond j
    left: FxHashMap<Vec<u64>, Vec<T>>,
    /// reversed suffix values (sites n-m..n) -> state column vector at
    /// bond n-m
    right: FxHashMap<Vec<u64>, Vec<T>>,
    /// reusable key buffers
    buf: Vec<u64>,
    buf2: Vec<u64>,
}

/// Oracle backed by an explicit tensor train.
///
/// Plain batches evaluate the train directly. Product batches reuse
/// partial contractions across calls: prefix vectors are extended one site
/// at a time and every intermediate is cached, so a left-to-right sweep of
/// reconstruction cuts touches each site a bounded number of times.
pub struct TtOracle<T: Field> {
    tt: TensorTrain<T>,
    name: String,
    cache: Mutex<EnvCache<T>>,
}

impl<T: Field> TtOracle<T> {
    pub fn new(tt: TensorTrain<T>, name: impl Into<String>) -> Self {
        let codec = KeyCodec::for_sites(tt.sites());
        TtOracle {
            tt,
            name: name.into(),
            cache: Mutex::new(EnvCache {
                codec,
                left: FxHashMap::default(),
                right: FxHashMap::default(),
                buf: Vec::new(),
                buf2: Vec::new(),
            }),
        }
    }

    /// The underlying train (ground truth for fidelity checks).
    pub fn tt(&self) -> &TensorTrain<T> {
        &self.tt
    }
}

/// Prefix vector for `prefix`, resuming from the longest cached sub-prefix
/// and caching every intermediate. `full_key` is the already-built key of
/// the whole prefix (which missed); `key` is a scratch buffer.
fn left_walk<T: Field>(
    tt: &TensorTrain<T>,
    left: &mut FxHashMap<Vec<u64>, Vec<T>>,
    codec: KeyCodec,
    prefix: &[SiteValue],
    key: &mut Vec<u64>,
) -> TtResult<Vec<T>> {
    let mut start = 0;
    let mut v = vec![T::from_real(1.0)];
    for j in (1..prefix.len()).rev() {
        codec.pack(key, prefix[..j].iter().copied());
        if let Some(cached) = left.get(key.as_slice()) {
            start = j;
            v = cached.clone();
            break;
        }
    }
    codec.pack(key, prefix[..start].iter().copied());
    for j in start..prefix.len() {
        tt.sites()[j].validate_value(prefix[j])?;
        v = contract_site(&v, tt.core(j), &tt.sites()[j], prefix[j])?;
        codec.push(key, prefix[j]);
        left.insert(key.clone(), v.clone());
    }
    Ok(v)
}

/// Suffix vector for `suffix` (covering the last `suffix.len()` sites),
/// resuming from the longest cached sub-suffix. Suffix keys pack the
/// values right to left, so every sub-suffix key is a stage of one
/// incremental build.
fn right_walk<T: Field>(
    tt: &TensorTrain<T>,
    right: &mut FxHashMap<Vec<u64>, Vec<T>>,
    codec: KeyCodec,
    suffix: &[SiteValue],
    key: &mut Vec<u64>,
) -> TtResult<Vec<T>> {
    let len = suffix.len();
    let mut stop = len;
    let mut w = vec![T::from_real(1.0)];
    codec.pack(key, std::iter::empty());
    for m in 1..len {
        codec.push(key, suffix[len - m]);
        if let Some(cached) = right.get(key.as_slice()) {
            stop = len - m;
            w = cached.clone();
        }
    }
    codec.pack(key, suffix[stop..].iter().rev().copied());
    let first_site = tt.n() - len;
    for i in (0..stop).rev() {
        let site = first_site + i;
        tt.sites()[site].validate_value(suffix[i])?;
        w = contract_site_right(tt.core(site), &tt.sites()[site], suffix[i], &w)?;
        codec.push(key, suffix[i]);
        right.insert(key.clone(), w.clone());
    }
    Ok(w)
}

impl<T: Field> Oracle<T> for TtOracle<T> {
    fn sites(&self) -> &[SiteSpec] {
        self.tt.sites()
    }

    fn name(&self) -> &str {
        &self.name
    }

    fn eval_batch(&self, points: &[Configuration]) -> TtResult<Vec<T>> {
        self.tt.evaluate_batch(points)
    }

    fn eval_product_batch(
        &self,
        prefixes: &[Configuration],
        mid_site: usize,
        mid_grid: &[SiteValue],
        suffixes: &[Configuration],
    ) -> TtResult<Array3<T>> {
        check_product_shape(self.sites(), prefixes, mid_site, mid_grid, suffixes)?;
        let cache = &mut *self.cache.lock().expect("cache poisoned");
        let spec = &self.tt.sites()[mid_site];
        let core = self.tt.core(mid_site);
        let codec = cache.codec;
        cache
            .left
            .reserve(prefixes.len() * (1 + mid_grid.len()));
        let tail = suffixes.first().map_or(0, |s| s.len());
        cache.right.reserve(suffixes.len() * tail.max(1));
        let mut base = std::mem::take(&mut cache.buf);
        let mut key = std::mem::take(&mut cache.buf2);

        // extended prefix vectors through the mid site, cached so the next
        // cut's prefixes (this cut's prefixes extended by a grid value) hit
        let mut ext: Vec<Vec<Vec<T>>> = Vec::with_capacity(prefixes.len());
        for p in prefixes {
            codec.pack(&mut base, p.iter().copied());
            let mut v: Option<Vec<T>> = None;
            let mut per_y = Vec::with_capacity(mid_grid.len());
            for &y in mid_grid {
                key.clone_from(&base);
                codec.push(&mut key, y);
                let vy = match cache.left.get(key.as_slice()) {
                    Some(c) => c.clone(),
                    None => {
                        if v.is_none() {
                            v = Some(if p.is_empty() {
                                vec![T::from_real(1.0)]
                            } else if let Some(c) = cache.left.get(base.as_slice()) {
                                c.clone()
                            } else {
                                left_walk(&self.tt, &mut cache.left, codec, p, &mut key)?
                            });
                        }
                        key.clone_from(&base);
                        codec.push(&mut key, y);
                        let vy = contract_site(v.as_ref().unwrap(), core, spec, y)?;
                        cache.left.insert(key.clone(), vy.clone());
                        vy
                    }
                };
                per_y.push(vy);
            }
            ext.push(per_y);
        }

        let mut rights: Vec<Vec<T>> = Vec::with_capacity(suffixes.len());
        for s in suffixes {
            let w = if s.is_empty() {
                vec![T::from_real(1.0)]
            } else {
                codec.pack(&mut key, s.iter().rev().copied());
                match cache.right.get(key.as_slice()) {
                    Some(c) => c.clone(),
                    None => right_walk(&self.tt, &mut cache.right, codec, s, &mut key)?,
                }
            };
            rights.push(w);
        }
        cache.buf = base;
        cache.buf2 = key;

        let mut out = Array3::zeros((prefixes.len(), mid_grid.len(), suffixes.len()));
        for (pi, per_y) in ext.iter().enumerate() {
            for (gi, vy) in per_y.iter().enumerate() {
                for (si, w) in rights.iter().enumerate() {
                    let mut acc = T::from_real(0.0);
                    for (&va, &wa) in vy.iter().zip(w) {
                        acc += va * wa;
                    }
                    out[[pi, gi, si]] = acc;
                }
            }
        }
        Ok(out)
    }
}

/// Random tensor train whose interior core slices are Haar-orthogonal
/// matrices and whose boundary slices are unit-norm vectors; every value
/// of the represented function lies in `[-1, 1]`.
///
/// The draw order (left to right, physical values in order, boundary
/// vectors componentwise) is part of the seed contract.
pub fn random_tt_oracle(n: usize, d: usize, rank: usize, seed: u64) -> TtResult<TtOracle<f64>> {
    if n < 2 {
        return domain_err("random tensor train needs at least 2 sites");
    }
    if d < 1 || rank < 1 {
        return domain_err("physical dimension and rank must be at least 1");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    fn unit_vec(len: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..len).map(|_| f64::std_normal(rng)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-6 {
                return v.into_iter().map(|x| x / norm).collect();
            }
        }
    }
    let mut cores: Vec<Array3<f64>> = Vec::with_capacity(n);
    let mut first = Array3::zeros((1, d, rank));
    for x in 0..d {
        let v = unit_vec(rank, &mut rng);
        for (b, &val) in v.iter().enumerate() {
            first[[0, x, b]] = val;
        }
    }
    cores.push(first);
    for _ in 1..n - 1 {
        let mut core = Array3::zeros((rank, d, rank));
        for x in 0..d {
            let q: Array2<f64> = haar_with_rng(rank, &mut rng)?;
            core.slice_mut(s![.., x, ..]).assign(&q);
        }
        cores.push(core);
    }
    let mut last = Array3::zeros((rank, d, 1));
    for x in 0..d {
        let v = unit_vec(rank, &mut rng);
        for (a, &val) in v.iter().enumerate() {
            last[[a, x, 0]] = val;
        }
    }
    cores.push(last);
    let sites = (0..n).map(|_| SiteSpec::discrete(d)).collect::<TtResult<Vec<_>>>()?;
    let tt = TensorTrain::new(sites, cores)?;
    Ok(TtOracle::new(
        tt,
        format!("random-tt(n={n},d={d},rank={rank},seed={seed})"),
    ))
}

/// Quantized Slater function on `m * l` binary sites.
///
/// Coordinate i is decoded from its l bits as
/// `z_i = L * sum_j bit_{i,j} 2^{-j}` (bits are site values minus 1), and
/// the value is `exp(-|z|) / |z|` with `|z|` clamped below at `L 2^{-l}`
/// so the origin stays finite.
pub struct SlaterOracle {
    m: usize,
    l: usize,
    scale: f64,
    sites: Vec<SiteSpec>,
    name: String,
}

pub fn slater_oracle(m: usize, l: usize, scale: f64) -> TtResult<SlaterOracle> {
    if m < 1 || l < 1 {
        return domain_err("slater oracle needs m >= 1 and l >= 1");
    }
    if !(scale.is_finite() && scale > 0.0) {
        return domain_err("slater scale L must be positive and finite");
    }
    let sites = (0..m * l)
        .map(|_| SiteSpec::discrete(2))
        .collect::<TtResult<Vec<_>>>()?;
    Ok(SlaterOracle {
        m,
        l,
        scale,
        sites,
        name: format!("slater(m={m},l={l},L={scale})"),
    })
}

impl SlaterOracle {
    fn eval_one(&self, x: &Configuration) -> TtResult<f64> {
        validate_config(&self.sites, x)?;
        let mut norm_sq = 0.0;
        for i in 0..self.m {
            let mut z = 0.0;
            let mut weight = 0.5;
            for j in 0..self.l {
                if let SiteValue::Index(v) = x[i * self.l + j] {
                    z += (v - 1) as f64 * weight;
                }
                weight *= 0.5;
            }
            z *= self.scale;
            norm_sq += z * z;
        }
        let floor = self.scale * 0.5f64.powi(self.l as i32);
        let r = norm_sq.sqrt().max(floor);
        Ok((-r).exp() / r)
    }
}

impl Oracle<f64> for SlaterOracle {
    fn sites(&self) -> &[SiteSpec] {
        &self.sites
    }

    fn name(&self) -> &str {
        &self.name
    }

    fn eval_batch(&self, points: &[Configuration]) -> TtResult<Vec<f64>> {
        use rayon::prelude::*;
        if points.len() >= 1024 {
            points.par_iter().map(|x| self.eval_one(x)).collect()
        } else {
            points.iter().map(|x| self.eval_one(x)).collect()
        }
    }
}

/// Amplitudes of the spin-1 AKLT matrix-product state (complex, d = 3).
pub fn aklt_oracle(n: usize) -> TtResult<TtOracle<Complex64>> {
    let tt = crate::aklt::build_aklt_tt(n)?;
    Ok(TtOracle::new(tt, format!("aklt(n={n})")))
}

/// Elementwise square root of a non-negative real oracle (amplitudes from
/// probabilities, Born-rule convention). Values below -1e-12 are contract
/// violations; tiny negatives round to zero.
pub struct SqrtOracle {
    inner: Box<dyn Oracle<f64>>,
    name: String,
}

pub fn sqrt_oracle(inner: Box<dyn Oracle<f64>>) -> SqrtOracle {
    let name = format!("sqrt({})", inner.name());
    SqrtOracle { inner, name }
}

fn checked_sqrt(v: f64) -> TtResult<f64> {
    if v < -1e-12 {
        return numeric_err(format!(
            "square-root oracle got negative value {v:e} from its inner oracle"
        ));
    }
    Ok(v.max(0.0).sqrt())
}

impl Oracle<f64> for SqrtOracle {
    fn sites(&self) -> &[SiteSpec] {
        self.inner.sites()
    }

    fn name(&self) -> &str {
        &self.name
    }

    fn eval_batch(&self, points: &[Configuration]) -> TtResult<Vec<f64>> {
        self.inner
            .eval_batch(points)?
            .into_iter()
            .map(checked_sqrt)
            .collect()
    }

    fn eval_product_batch(
        &self,
        prefixes: &[Configuration],
        mid_site: usize,
        mid_grid: &[SiteValue],
        suffixes: &[Configuration],
    ) -> TtResult<Array3<f64>> {
        let inner = self
            .inner
            .eval_product_batch(prefixes, mid_site, mid_grid, suffixes)?;
        let mut out = inner;
        for v in out.iter_mut() {
            *v = checked_sqrt(*v)?;
        }
        Ok(out)
    }
}

/// Deterministic pseudo-random conditional probabilities: values in (0,1)
/// that sum to one over the class-site axis for every fixed setting of the
/// remaining sites.
pub struct RandomProbOracle {
    sites: Vec<SiteSpec>,
    class_site: usize,
    seed: u64,
    name: String,
}

pub fn random_prob_oracle(
    n: usize,
    d: usize,
    num_classes: usize,
    class_site: usize,
    seed: u64,
) -> TtResult<RandomProbOracle> {
    if n < 1 || d < 1 || num_classes < 1 {
        return domain_err("probability oracle needs n, d, classes >= 1");
    }
    if class_site < 1 || class_site > n {
        return domain_err(format!("class site {class_site} outside 1..={n}"));
    }
    let sites = (0..n)
        .map(|k| SiteSpec::discrete(if k == class_site - 1 { num_classes } else { d }))
        .collect::<TtResult<Vec<_>>>()?;
    Ok(RandomProbOracle {
        sites,
        class_site: class_site - 1,
        seed,
        name: format!(
            "random-prob(n={n},d={d},classes={num_classes},class_site={class_site},seed={seed})"
        ),
    })
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

impl RandomProbOracle {
    /// Raw hash value in the open interval (0,1) for one configuration.
    fn raw(&self, x: &[SiteValue]) -> f64 {
        let mut h = splitmix64(self.seed);
        for v in x {
            h = splitmix64(h ^ v.key_bits());
        }
        ((h >> 11) as f64 + 0.5) / (1u64 << 53) as f64
    }

    fn eval_one(&self, x: &Configuration) -> TtResult<f64> {
        validate_config(&self.sites, x)?;
        let mut total = 0.0;
        let classes = self.sites[self.class_site].dim();
        let mut variant = x.clone();
        for y in 1..=classes {
            variant[self.class_site] = SiteValue::Index(y);
            total += self.raw(&variant);
        }
        Ok(self.raw(x) / total)
    }
}

impl Oracle<f64> for RandomProbOracle {
    fn sites(&self) -> &[SiteSpec] {
        &self.sites
    }

    fn name(&self) -> &str {
        &self.name
    }

    fn eval_batch(&self, points: &[Configuration]) -> TtResult<Vec<f64>> {
        points.iter().map(|x| self.eval_one(x)).collect()
    }
}

/// Lookup oracle over an explicit dense tensor (testing plumbing).
pub struct DenseOracle<T: Field> {
    tensor: DenseTensor<T>,
    sites: Vec<SiteSpec>,
    name: String,
}

pub fn dense_oracle<T: Field>(tensor: DenseTensor<T>) -> TtResult<DenseOracle<T>> {
    let sites = tensor
        .dims()
        .iter()
        .map(|&d| SiteSpec::discrete(d))
        .collect::<TtResult<Vec<_>>>()?;
    let name = format!("dense(dims={:?})", tensor.dims());
    Ok(DenseOracle {
        tensor,
        sites,
        name,
    })
}

impl<T: Field> Oracle<T> for DenseOracle<T> {
    fn sites(&self) -> &[SiteSpec] {
        &self.sites
    }

    fn name(&self) -> &str {
        &self.name
    }

    fn eval_batch(&self, points: &[Configuration]) -> TtResult<Vec<T>> {
        points.iter().map(|x| self.tensor.get(x)).collect()
    }
}

/// Oracle served by an external subprocess over newline-delimited JSON.
///
/// Protocol: the client opens with `{"hello":{"n":<n>,"field":"real"|"complex"}}`
/// and the server answers `{"ready":true}`. Each request
/// `{"id":<id>,"points":[[...],...]}` is answered by
/// `{"id":<id>,"values":[...]}` (complex values as `[re,im]` pairs) or
/// `{"id":<id>,"error":"..."}`, in request order. One batch is in flight
/// at a time; concurrent callers queue on an internal lock.
pub struct PipeOracle<T: Field> {
    sites: Vec<SiteSpec>,
    name: String,
    timeout: Duration,
    io: Mutex<PipeIo>,
    child: Mutex<Child>,
    _field: std::marker::PhantomData<fn() -> T>,
}

struct PipeIo {
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
    next_id: u64,
}

pub const PIPE_DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);

pub fn pipe_oracle<T: Field>(
    command: &str,
    sites: Vec<SiteSpec>,
    timeout: Option<Duration>,
) -> TtResult<PipeOracle<T>> {
    if sites.is_empty() {
        return domain_err("pipe oracle needs at least one site");
    }
    let timeout = timeout.unwrap_or(PIPE_DEFAULT_TIMEOUT);
    let mut child = Command::new("sh")
        .arg("-c")
        .arg(command)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::inherit())
        .spawn()
        .map_err(|e| crate::error::TtError::Oracle(format!("cannot spawn `{command}`: {e}")))?;
    let mut stdin = child.stdin.take().expect("piped stdin");
    let stdout = child.stdout.take().expect("piped stdout");
    let (tx, rx) = mpsc::channel();
    std::thread::spawn(move || {
        let reader = BufReader::new(stdout);
        for line in reader.lines() {
            if tx.send(line).is_err() {
                break;
            }
        }
    });

    let hello = json!({"hello": {"n": sites.len(), "field": T::TAG.as_str()}});
    writeln!(stdin, "{hello}")
        .and_then(|_| stdin.flush())
        .map_err(|e| oracle_err(format!("handshake write failed: {e}")))?;
    let line = recv_line(&rx, timeout, "handshake")?;
    let ready: Value = serde_json::from_str(&line)
        .map_err(|e| oracle_err(format!("bad handshake reply {line:?}: {e}")))?;
    if ready.get("ready") != Some(&Value::Bool(true)) {
        return Err(oracle_err(format!(
            "server did not acknowledge handshake: {line:?}"
        )));
    }

    Ok(PipeOracle {
        sites,
        name: format!("pipe:{command}"),
        timeout,
        io: Mutex::new(PipeIo {
            stdin,
            lines: rx,
            next_id: 0,
        }),
        child: Mutex::new(child),
        _field: std::marker::PhantomData,
    })
}

fn recv_line(
    rx: &Receiver<std::io::Result<String>>,
    timeout: Duration,
    what: &str,
) -> TtResult<String> {
    match rx.recv_timeout(timeout) {
        Ok(Ok(line)) => Ok(line),
        Ok(Err(e)) => Err(oracle_err(format!("pipe read failed during {what}: {e}"))),
        Err(RecvTimeoutError::Timeout) => Err(oracle_err(format!(
            "timed out after {timeout:?} waiting for {what}"
        ))),
        Err(RecvTimeoutError::Disconnected) => Err(oracle_err(format!(
            "server closed the pipe during {what}"
        ))),
    }
}

impl<T: Field> Oracle<T> for PipeOracle<T> {
    fn sites(&self) -> &[SiteSpec] {
        &self.sites
    }

    fn name(&self) -> &str {
        &self.name
    }

    fn eval_batch(&self, points: &[Configuration]) -> TtResult<Vec<T>> {
        for (i, p) in points.iter().enumerate() {
            validate_config(&self.sites, p)
                .map_err(|e| oracle_err(format!("point {i}: {e}")))?;
        }
        let mut io = self.io.lock().expect("pipe lock poisoned");
        let id = io.next_id;
        io.next_id += 1;
        let coords: Vec<Vec<f64>> = points
            .iter()
            .map(|p| p.iter().map(|v| v.as_f64()).collect())
            .collect();
        let request = json!({"id": id, "points": coords});
        writeln!(io.stdin, "{request}")
            .and_then(|_| io.stdin.flush())
            .map_err(|e| oracle_err(format!("request write failed for batch {id}: {e}")))?;
        let line = recv_line(&io.lines, self.timeout, &format!("batch {id}"))?;
        let reply: Value = serde_json::from_str(&line)
            .map_err(|e| oracle_err(format!("unparseable reply to batch {id}: {line:?} ({e})")))?;
        match reply.get("id").and_then(Value::as_u64) {
            Some(rid) if rid == id => {}
            _ => {
                return Err(oracle_err(format!(
                    "reply id mismatch for batch {id}: {line:?}"
                )))
            }
        }
        if let Some(err) = reply.get("error") {
            return Err(oracle_err(format!(
                "server error for batch {id}: {}",
                err.as_str().unwrap_or("<non-string error>")
            )));
        }
        let values = reply
            .get("values")
            .and_then(Value::as_array)
            .ok_or_else(|| {
                oracle_err(format!("reply to batch {id} carries no values: {line:?}"))
            })?;
        if values.len() != points.len() {
            return Err(oracle_err(format!(
                "batch {id}: {} values for {} points",
                values.len(),
                points.len()
            )));
        }
        values
            .iter()
            .map(|v| {
                T::from_json(v).map_err(|e| oracle_err(format!("batch {id}: bad value {v}: {e}")))
            })
            .collect()
    }
}

impl<T: Field> Drop for PipeOracle<T> {
    fn drop(&mut self) {
        if let Ok(mut child) = self.child.lock() {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::Embedding;
    use crate::site::Domain;
    use rand::Rng;

    fn all_configs(dims: &[usize]) -> Vec<Configuration> {
        let total: usize = dims.iter().product();
        (0..total)
            .map(|mut flat| {
                let mut x = vec![SiteValue::Index(1); dims.len()];
                for k in (0..dims.len()).rev() {
                    x[k] = SiteValue::Index(flat % dims[k] + 1);
                    flat /= dims[k];
                }
                x
            })
            .collect()
    }

    #[test]
    fn random_tt_outputs_bounded() {
        let oracle = random_tt_oracle(6, 2, 3, 42).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let points: Vec<Configuration> = (0..10_000)
            .map(|_| {
                (0..6)
                    .map(|_| SiteValue::Index(rng.random_range(1..=2)))
                    .collect()
            })
            .collect();
        let values = oracle.eval_batch(&points).unwrap();
        for v in values {
            assert!((-1.0..=1.0).contains(&v), "out of range: {v}");
        }
    }

    #[test]
    fn random_tt_matches_returned_train() {
        let oracle = random_tt_oracle(4, 2, 3, 9).unwrap();
        for x in all_configs(&[2, 2, 2, 2]) {
            let from_oracle = oracle.eval_batch(std::slice::from_ref(&x)).unwrap()[0];
            let from_tt = oracle.tt().evaluate(&x).unwrap();
            assert!((from_oracle - from_tt).abs() < 1e-12);
        }
    }

    #[test]
    fn random_tt_seed_determinism() {
        let a = random_tt_oracle(5, 2, 4, 7).unwrap();
        let b = random_tt_oracle(5, 2, 4, 7).unwrap();
        assert_eq!(a.tt(), b.tt());
        let c = random_tt_oracle(5, 2, 4, 8).unwrap();
        assert_ne!(a.tt(), c.tt());
    }

    #[test]
    fn product_batch_matches_expansion() {
        let oracle = random_tt_oracle(6, 2, 3, 31).unwrap();
        let prefixes: Vec<Configuration> = vec![
            vec![SiteValue::Index(1), SiteValue::Index(2)],
            vec![SiteValue::Index(2), SiteValue::Index(2)],
        ];
        let grid = vec![SiteValue::Index(1), SiteValue::Index(2)];
        let suffixes: Vec<Configuration> = vec![
            vec![SiteValue::Index(1), SiteValue::Index(1), SiteValue::Index(2)],
            vec![SiteValue::Index(2), SiteValue::Index(1), SiteValue::Index(1)],
            vec![SiteValue::Index(1), SiteValue::Index(2), SiteValue::Index(2)],
        ];
        let fast = oracle
            .eval_product_batch(&prefixes, 2, &grid, &suffixes)
            .unwrap();
        // reference: default expansion through eval_batch
        struct Plain<'a>(&'a TtOracle<f64>);
        impl Oracle<f64> for Plain<'_> {
            fn sites(&self) -> &[SiteSpec] {
                self.0.sites()
            }
            fn name(&self) -> &str {
                "plain"
            }
            fn eval_batch(&self, points: &[Configuration]) -> TtResult<Vec<f64>> {
                self.0.eval_batch(points)
            }
        }
        let slow = Plain(&oracle)
            .eval_product_batch(&prefixes, 2, &grid, &suffixes)
            .unwrap();
        assert_eq!(fast.dim(), (2, 2, 3));
        for (f, s) in fast.iter().zip(slow.iter()) {
            assert!((f - s).abs() < 1e-12);
        }
        // second call hits the caches and stays identical
        let again = oracle
            .eval_product_batch(&prefixes, 2, &grid, &suffixes)
            .unwrap();
        assert_eq!(fast, again);
    }

    #[test]
    fn product_batch_boundary_cuts() {
        let oracle = random_tt_oracle(3, 2, 2, 5).unwrap();
        let empty: Vec<Configuration> = vec![vec![]];
        let grid = vec![SiteValue::Index(1), SiteValue::Index(2)];
        let suffixes: Vec<Configuration> =
            vec![vec![SiteValue::Index(1), SiteValue::Index(2)]];
        let first = oracle
            .eval_product_batch(&empty, 0, &grid, &suffixes)
            .unwrap();
        assert_eq!(first.dim(), (1, 2, 1));
        let x = vec![SiteValue::Index(2), SiteValue::Index(1), SiteValue::Index(2)];
        let direct = oracle.tt().evaluate(&x).unwrap();
        assert!((first[[0, 1, 0]] - direct).abs() < 1e-12);

        let prefixes: Vec<Configuration> =
            vec![vec![SiteValue::Index(1), SiteValue::Index(1)]];
        let last = oracle
            .eval_product_batch(&prefixes, 2, &grid, &[vec![]])
            .unwrap();
        assert_eq!(last.dim(), (1, 2, 1));
        let x = vec![SiteValue::Index(1), SiteValue::Index(1), SiteValue::Index(2)];
        let direct = oracle.tt().evaluate(&x).unwrap();
        assert!((last[[0, 1, 0]] - direct).abs() < 1e-12);
    }

    /// Reference oracle that expands every product batch through
    /// `eval_batch`, bypassing the environment cache.
    struct Plain2<'a, T: Field>(&'a TtOracle<T>);
    impl<T: Field> Oracle<T> for Plain2<'_, T> {
        fn sites(&self) -> &[SiteSpec] {
            self.0.sites()
        }
        fn name(&self) -> &str {
            "plain"
        }
        fn eval_batch(&self, points: &[Configuration]) -> TtResult<Vec<T>> {
            self.0.eval_batch(points)
        }
    }

    fn assert_product_batches_match(oracle: &TtOracle<f64>, points: &[Configuration]) {
        let n = oracle.sites().len();
        for mid in 0..n {
            let prefixes: Vec<Configuration> =
                points.iter().map(|p| p[..mid].to_vec()).collect();
            let suffixes: Vec<Configuration> =
                points.iter().map(|p| p[mid + 1..].to_vec()).collect();
            let grid: Vec<SiteValue> = match oracle.sites()[mid].domain() {
                Domain::Discrete => (1..=oracle.sites()[mid].dim())
                    .map(SiteValue::Index)
                    .collect(),
                Domain::Interval { lo, hi } => {
                    vec![SiteValue::Real(lo), SiteValue::Real(0.5 * (lo + hi))]
                }
            };
            let fast = oracle
                .eval_product_batch(&prefixes, mid, &grid, &suffixes)
                .unwrap();
            let slow = Plain2(oracle)
                .eval_product_batch(&prefixes, mid, &grid, &suffixes)
                .unwrap();
            for (f, s) in fast.iter().zip(slow.iter()) {
                assert!((f - s).abs() < 1e-12, "cut {mid}: {f} vs {s}");
            }
        }
    }

    #[test]
    fn product_batch_mixed_continuous_sites() {
        // any interval site switches the cache keys to the raw encoding
        let sites = vec![
            SiteSpec::discrete(2).unwrap(),
            SiteSpec::interval(Embedding::parse_descriptor("poly:3").unwrap(), -1.0, 2.0)
                .unwrap(),
            SiteSpec::discrete(3).unwrap(),
            SiteSpec::interval(Embedding::parse_descriptor("poly:2").unwrap(), 0.0, 1.0)
                .unwrap(),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let cores = vec![
            Array3::from_shape_fn((1, 2, 3), |_| rng.random_range(-1.0..1.0)),
            Array3::from_shape_fn((3, 3, 2), |_| rng.random_range(-1.0..1.0)),
            Array3::from_shape_fn((2, 3, 2), |_| rng.random_range(-1.0..1.0)),
            Array3::from_shape_fn((2, 2, 1), |_| rng.random_range(-1.0..1.0)),
        ];
        let tt = TensorTrain::new(sites, cores).unwrap();
        let oracle = TtOracle::new(tt, "mixed");
        let points: Vec<Configuration> = (0..6)
            .map(|_| {
                vec![
                    SiteValue::Index(rng.random_range(1..=2)),
                    SiteValue::Real(rng.random_range(-1.0..2.0)),
                    SiteValue::Index(rng.random_range(1..=3)),
                    SiteValue::Real(rng.random_range(0.0..1.0)),
                ]
            })
            .collect();
        assert_product_batches_match(&oracle, &points);
        // repeat so every lookup comes from the cache
        assert_product_batches_match(&oracle, &points);
    }

    #[test]
    fn product_batch_packed_keys_long_chain() {
        // d = 3 packs two bits per site; 40 sites span multiple key words
        let n = 40;
        let oracle = random_tt_oracle(n, 3, 4, 123).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let points: Vec<Configuration> = (0..5)
            .map(|_| {
                (0..n)
                    .map(|_| SiteValue::Index(rng.random_range(1..=3)))
                    .collect()
            })
            .collect();
        assert_product_batches_match(&oracle, &points);
        assert_product_batches_match(&oracle, &points);
    }

    #[test]
    fn product_batch_rejects_bad_prefix_value() {
        let oracle = random_tt_oracle(4, 2, 2, 11).unwrap();
        let grid = vec![SiteValue::Index(1), SiteValue::Index(2)];
        let bad: Vec<Configuration> = vec![vec![SiteValue::Real(0.5), SiteValue::Index(1)]];
        let good: Vec<Configuration> = vec![vec![SiteValue::Index(1), SiteValue::Index(1)]];
        let suffix: Vec<Configuration> = vec![vec![SiteValue::Index(2)]];
        assert!(oracle.eval_product_batch(&bad, 2, &grid, &suffix).is_err());
        // the failed call must not have left a corrupt cache entry behind
        let out = oracle
            .eval_product_batch(&good, 2, &grid, &suffix)
            .unwrap();
        let x = vec![
            SiteValue::Index(1),
            SiteValue::Index(1),
            SiteValue::Index(2),
            SiteValue::Index(2),
        ];
        let direct = oracle.tt().evaluate(&x).unwrap();
        assert!((out[[0, 1, 0]] - direct).abs() < 1e-12);
    }

    #[test]
    fn slater_single_bit_value() {
        let oracle = slater_oracle(5, 20, 10.0).unwrap();
        let mut x = vec![SiteValue::Index(1); 100];
        x[0] = SiteValue::Index(2); // bit (1,1): z_1 = 10 * 2^-1 = 5
        let v = oracle.eval_batch(std::slice::from_ref(&x)).unwrap()[0];
        let expect = (-5.0f64).exp() / 5.0;
        assert!((v - expect).abs() < 1e-15);
        assert!((v - 1.34759e-3).abs() < 1e-8);
    }

    #[test]
    fn slater_origin_clamped() {
        let oracle = slater_oracle(2, 4, 3.0).unwrap();
        let x = vec![SiteValue::Index(1); 8];
        let v = oracle.eval_batch(std::slice::from_ref(&x)).unwrap()[0];
        let floor = 3.0 * 0.5f64.powi(4);
        assert!((v - (-floor).exp() / floor).abs() < 1e-15);
    }

    #[test]
    fn slater_block_permutation_symmetry() {
        let oracle = slater_oracle(2, 3, 2.0).unwrap();
        // block patterns (1,2,1) and (2,1,2) swapped between coordinates
        let a: Configuration = [1, 2, 1, 2, 1, 2]
            .iter()
            .map(|&i| SiteValue::Index(i))
            .collect();
        let b: Configuration = [2, 1, 2, 1, 2, 1]
            .iter()
            .map(|&i| SiteValue::Index(i))
            .collect();
        let va = oracle.eval_batch(std::slice::from_ref(&a)).unwrap()[0];
        let vb = oracle.eval_batch(std::slice::from_ref(&b)).unwrap()[0];
        assert!((va - vb).abs() < 1e-15);
    }

    #[test]
    fn sqrt_oracle_behavior() {
        let four = DenseTensor::new(vec![2], vec![4.0, 4.0]).unwrap();
        let o = sqrt_oracle(Box::new(dense_oracle(four).unwrap()));
        let x = vec![SiteValue::Index(1)];
        assert_eq!(o.eval_batch(std::slice::from_ref(&x)).unwrap(), vec![2.0]);

        let zero = DenseTensor::new(vec![2], vec![0.0, -1e-14]).unwrap();
        let o = sqrt_oracle(Box::new(dense_oracle(zero).unwrap()));
        let y = vec![SiteValue::Index(2)];
        assert_eq!(o.eval_batch(std::slice::from_ref(&y)).unwrap(), vec![0.0]);

        let neg = DenseTensor::new(vec![2], vec![-1.0, 1.0]).unwrap();
        let o = sqrt_oracle(Box::new(dense_oracle(neg).unwrap()));
        let z = vec![SiteValue::Index(1)];
        assert!(o.eval_batch(std::slice::from_ref(&z)).is_err());
    }

    #[test]
    fn random_prob_normalization_and_range() {
        let oracle = random_prob_oracle(3, 2, 3, 2, 77).unwrap();
        for x1 in 1..=2usize {
            for x3 in 1..=2usize {
                let mut total = 0.0;
                for y in 1..=3usize {
                    let x = vec![
                        SiteValue::Index(x1),
                        SiteValue::Index(y),
                        SiteValue::Index(x3),
                    ];
                    let v = oracle.eval_batch(std::slice::from_ref(&x)).unwrap()[0];
                    assert!(v > 0.0 && v < 1.0);
                    total += v;
                }
                assert!((total - 1.0).abs() < 1e-12);
            }
        }
        let again = random_prob_oracle(3, 2, 3, 2, 77).unwrap();
        let x = vec![
            SiteValue::Index(2),
            SiteValue::Index(1),
            SiteValue::Index(1),
        ];
        assert_eq!(
            oracle.eval_batch(std::slice::from_ref(&x)).unwrap(),
            again.eval_batch(std::slice::from_ref(&x)).unwrap()
        );
    }

    #[test]
    fn dense_oracle_lookup() {
        let t = DenseTensor::new(vec![2, 2], vec![10.0, 20.0, 30.0, 40.0]).unwrap();
        let o = dense_oracle(t.clone()).unwrap();
        let first = vec![SiteValue::Index(1), SiteValue::Index(1)];
        assert_eq!(o.eval_batch(std::slice::from_ref(&first)).unwrap(), vec![10.0]);
        let oob = vec![SiteValue::Index(3), SiteValue::Index(1)];
        assert!(o.eval_batch(std::slice::from_ref(&oob)).is_err());
        let sweep = all_configs(&[2, 2]);
        assert_eq!(o.eval_batch(&sweep).unwrap(), t.data().to_vec());
    }

    #[test]
    fn pipe_oracle_spawn_failure_is_an_error() {
        let sites = vec![SiteSpec::discrete(2).unwrap()];
        let r = pipe_oracle::<f64>("exit 1", sites, Some(Duration::from_secs(5)));
        assert!(r.is_err());
    }
}
