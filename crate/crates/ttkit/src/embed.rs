//! Per-site embeddings: the d functions `phi^1 .. phi^d` that map one site
//! value to a length-d feature vector.
//!
//! A discrete site uses the trivial embedding (canonical basis vectors), so
//! contracting a core with the embedding is plain slice selection. A
//! continuous site uses a genuinely functional embedding; the bundled ones
//! are the polynomial family `phi^i(x) = x^(i-1)` and the two-component
//! unit embedding `[cos(pi x / 2), sin(pi x / 2)]`.

use std::sync::Arc;

use ndarray::prelude::*;

use crate::error::{domain_err, shape_err, TtError, TtResult};
use crate::site::{Domain, SiteValue};

/// A user-supplied embedding: a name for diagnostics, a dimension, and the
/// component function `f(i, x) = phi^(i+1)(x)` (zero-based component).
#[derive(Clone)]
pub struct CustomEmbedding {
    pub name: String,
    pub dim: usize,
    pub func: Arc<dyn Fn(usize, f64) -> f64 + Send + Sync>,
}

impl std::fmt::Debug for CustomEmbedding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "CustomEmbedding({}, dim {})", self.name, self.dim)
    }
}

/// One site's embedding family.
#[derive(Clone, Debug)]
pub enum Embedding {
    /// Canonical basis vectors on an integer domain `1..=d`.
    Trivial(usize),
    /// `phi^i(x) = x^(i-1)` for `i = 1..=d`.
    Polynomial(usize),
    /// `[cos(pi x / 2), sin(pi x / 2)]`, dimension 2.
    Unit,
    /// Caller-provided component functions.
    Custom(CustomEmbedding),
}

impl PartialEq for Embedding {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Embedding::Trivial(a), Embedding::Trivial(b)) => a == b,
            (Embedding::Polynomial(a), Embedding::Polynomial(b)) => a == b,
            (Embedding::Unit, Embedding::Unit) => true,
            (Embedding::Custom(a), Embedding::Custom(b)) => {
                a.name == b.name && a.dim == b.dim
            }
            _ => false,
        }
    }
}

impl Embedding {
    pub fn dim(&self) -> usize {
        match self {
            Embedding::Trivial(d) | Embedding::Polynomial(d) => *d,
            Embedding::Unit => 2,
            Embedding::Custom(c) => c.dim,
        }
    }

    pub fn is_trivial(&self) -> bool {
        matches!(self, Embedding::Trivial(_))
    }

    /// Descriptor string used by the CLI and the file formats:
    /// `trivial:d`, `poly:d`, `unit`, `custom:name:d`.
    pub fn descriptor(&self) -> String {
        match self {
            Embedding::Trivial(d) => format!("trivial:{d}"),
            Embedding::Polynomial(d) => format!("poly:{d}"),
            Embedding::Unit => "unit".to_string(),
            Embedding::Custom(c) => format!("custom:{}:{}", c.name, c.dim),
        }
    }

    /// Parse a descriptor string. Custom embeddings carry code and cannot
    /// be reconstructed from a string.
    pub fn parse_descriptor(s: &str) -> TtResult<Embedding> {
        if s == "unit" {
            return Ok(Embedding::Unit);
        }
        if let Some(d) = s.strip_prefix("trivial:") {
            let d: usize = d
                .parse()
                .map_err(|_| TtError::Io(format!("bad embedding descriptor {s:?}")))?;
            if d == 0 {
                return shape_err("trivial embedding needs dimension >= 1");
            }
            return Ok(Embedding::Trivial(d));
        }
        if let Some(d) = s.strip_prefix("poly:") {
            let d: usize = d
                .parse()
                .map_err(|_| TtError::Io(format!("bad embedding descriptor {s:?}")))?;
            if d == 0 {
                return shape_err("polynomial embedding needs dimension >= 1");
            }
            return Ok(Embedding::Polynomial(d));
        }
        Err(TtError::Io(format!(
            "unknown embedding descriptor {s:?} (expected trivial:d, poly:d, or unit)"
        )))
    }

    /// Evaluate all d component functions at one value.
    pub fn embed_point(&self, x: SiteValue) -> TtResult<Vec<f64>> {
        match self {
            Embedding::Trivial(d) => match x {
                SiteValue::Index(i) if i >= 1 && i <= *d => {
                    let mut v = vec![0.0; *d];
                    v[i - 1] = 1.0;
                    Ok(v)
                }
                other => domain_err(format!(
                    "trivial embedding of dimension {d} cannot embed {other}"
                )),
            },
            Embedding::Polynomial(d) => {
                let x = continuous_value(x)?;
                let mut v = Vec::with_capacity(*d);
                let mut p = 1.0;
                for _ in 0..*d {
                    v.push(p);
                    p *= x;
                }
                Ok(v)
            }
            Embedding::Unit => {
                let x = continuous_value(x)?;
                let t = std::f64::consts::FRAC_PI_2 * x;
                Ok(vec![t.cos(), t.sin()])
            }
            Embedding::Custom(c) => {
                let x = continuous_value(x)?;
                let v: Vec<f64> = (0..c.dim).map(|i| (c.func)(i, x)).collect();
                if v.iter().any(|y| !y.is_finite()) {
                    return Err(TtError::Numeric(format!(
                        "custom embedding {} produced non-finite values at {x}",
                        c.name
                    )));
                }
                Ok(v)
            }
        }
    }

    /// Matrix whose column j is `embed_point(grid[j])`, shape d x |grid|.
    pub fn embed_grid(&self, grid: &[SiteValue]) -> TtResult<Array2<f64>> {
        let d = self.dim();
        let mut m = Array2::zeros((d, grid.len()));
        for (j, &x) in grid.iter().enumerate() {
            let col = self.embed_point(x)?;
            for i in 0..d {
                m[[i, j]] = col[i];
            }
        }
        Ok(m)
    }
}

fn continuous_value(x: SiteValue) -> TtResult<f64> {
    match x {
        SiteValue::Real(v) if v.is_finite() => Ok(v),
        SiteValue::Real(v) => domain_err(format!("non-finite site value {v}")),
        SiteValue::Index(i) => domain_err(format!(
            "continuous embedding cannot embed discrete index {i}"
        )),
    }
}

/// Default fitting grid for one site: for discrete sites, exactly the
/// domain `1..=d`; for interval sites, the distinct pivot values at this
/// site joined with an equidistant grid of `max(4 d, 16)` points over
/// `[lo, hi]` (duplicates removed, first occurrence kept).
pub fn default_fit_grid(
    dim: usize,
    domain: Domain,
    pivot_values: &[SiteValue],
) -> Vec<SiteValue> {
    match domain {
        Domain::Discrete => (1..=dim).map(SiteValue::Index).collect(),
        Domain::Interval { lo, hi } => {
            let mut grid: Vec<SiteValue> = Vec::new();
            let mut seen = std::collections::HashSet::new();
            for &v in pivot_values {
                if seen.insert(v.key_bits()) {
                    grid.push(v);
                }
            }
            let m = (4 * dim).max(16);
            for j in 0..m {
                let x = lo + (hi - lo) * j as f64 / (m - 1) as f64;
                let v = SiteValue::Real(x);
                if seen.insert(v.key_bits()) {
                    grid.push(v);
                }
            }
            grid
        }
    }
}
