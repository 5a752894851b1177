//! Per-site structure: values, domains, and site specifications.
//!
//! A tensor train is indexed by one value per site. Discrete sites take
//! one-based integer indices `1..=d`; continuous sites take reals from a
//! closed interval. File formats and the subprocess protocol carry both as
//! plain numbers, so conversions live here as well.

use serde::Serialize;

use crate::embed::Embedding;
use crate::error::{domain_err, shape_err, TtResult};

/// One coordinate of a configuration: a one-based index for discrete
/// sites, a real number for continuous sites.
#[derive(Clone, Copy, Debug)]
pub enum SiteValue {
    Index(usize),
    Real(f64),
}

impl SiteValue {
    /// Stable 64-bit key used for hashing and exact equality. Reals
    /// compare bitwise; configurations are treated as identical only when
    /// they were built from identical numbers.
    pub fn key_bits(self) -> u64 {
        match self {
            SiteValue::Index(i) => i as u64,
            SiteValue::Real(x) => x.to_bits(),
        }
    }

    /// Numeric rendering used by CSV files and the pipe protocol.
    pub fn as_f64(self) -> f64 {
        match self {
            SiteValue::Index(i) => i as f64,
            SiteValue::Real(x) => x,
        }
    }
}

impl PartialEq for SiteValue {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (SiteValue::Index(a), SiteValue::Index(b)) => a == b,
            (SiteValue::Real(a), SiteValue::Real(b)) => a.to_bits() == b.to_bits(),
            _ => false,
        }
    }
}

impl Eq for SiteValue {}

impl std::hash::Hash for SiteValue {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        match self {
            SiteValue::Index(i) => {
                state.write_u8(0);
                state.write_u64(*i as u64);
            }
            SiteValue::Real(x) => {
                state.write_u8(1);
                state.write_u64(x.to_bits());
            }
        }
    }
}

impl std::fmt::Display for SiteValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SiteValue::Index(i) => write!(f, "{i}"),
            SiteValue::Real(x) => write!(f, "{x}"),
        }
    }
}

/// One full input point: one value per site.
pub type Configuration = Vec<SiteValue>;

/// Renders a configuration as comma-separated numbers.
pub fn config_to_string(x: &[SiteValue]) -> String {
    x.iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// Domain of one site.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Domain {
    /// Integer indices `1..=d`.
    Discrete,
    /// A closed real interval `[lo, hi]`.
    Interval { lo: f64, hi: f64 },
}

/// Dimension, domain, and embedding of one site.
#[derive(Clone, Debug, PartialEq)]
pub struct SiteSpec {
    dim: usize,
    domain: Domain,
    embedding: Embedding,
}

impl SiteSpec {
    /// Discrete site with `d` values and the basis-vector embedding.
    pub fn discrete(d: usize) -> TtResult<Self> {
        if d == 0 {
            return shape_err("site dimension must be at least 1");
        }
        Ok(SiteSpec {
            dim: d,
            domain: Domain::Discrete,
            embedding: Embedding::Trivial(d),
        })
    }

    /// Continuous site over `[lo, hi]` with the given embedding, whose
    /// dimension becomes the site dimension.
    pub fn interval(embedding: Embedding, lo: f64, hi: f64) -> TtResult<Self> {
        if embedding.is_trivial() {
            return domain_err("interval domains require a continuous embedding");
        }
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return domain_err(format!("invalid interval [{lo}, {hi}]"));
        }
        Ok(SiteSpec {
            dim: embedding.dim(),
            domain: Domain::Interval { lo, hi },
            embedding,
        })
    }

    /// Rebuild a site from its serialized parts, enforcing the
    /// discrete-iff-trivial pairing.
    pub fn from_parts(embedding: Embedding, domain: Domain) -> TtResult<Self> {
        match domain {
            Domain::Discrete => {
                if !embedding.is_trivial() {
                    return domain_err("discrete domains require the trivial embedding");
                }
                SiteSpec::discrete(embedding.dim())
            }
            Domain::Interval { lo, hi } => SiteSpec::interval(embedding, lo, hi),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn embedding(&self) -> &Embedding {
        &self.embedding
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self.domain, Domain::Discrete)
    }

    /// Check one value against the domain.
    pub fn validate_value(&self, v: SiteValue) -> TtResult<()> {
        match (self.domain, v) {
            (Domain::Discrete, SiteValue::Index(i)) => {
                if i >= 1 && i <= self.dim {
                    Ok(())
                } else {
                    domain_err(format!("index {i} outside 1..={}", self.dim))
                }
            }
            (Domain::Discrete, SiteValue::Real(x)) => {
                domain_err(format!("discrete site given real value {x}"))
            }
            (Domain::Interval { lo, hi }, SiteValue::Real(x)) => {
                if x.is_finite() && x >= lo && x <= hi {
                    Ok(())
                } else {
                    domain_err(format!("value {x} outside [{lo}, {hi}]"))
                }
            }
            (Domain::Interval { .. }, SiteValue::Index(i)) => {
                domain_err(format!("continuous site given index {i}"))
            }
        }
    }

    /// Interpret a plain number as a value of this site, as read from CSV
    /// files or the pipe protocol: discrete sites require an exact integer.
    pub fn value_from_f64(&self, x: f64) -> TtResult<SiteValue> {
        let v = match self.domain {
            Domain::Discrete => {
                if x.fract() != 0.0 || !x.is_finite() {
                    return domain_err(format!("discrete site needs an integer, got {x}"));
                }
                SiteValue::Index(x as usize)
            }
            Domain::Interval { .. } => SiteValue::Real(x),
        };
        self.validate_value(v)?;
        Ok(v)
    }
}

/// Validate a full configuration against a site list.
pub fn validate_config(sites: &[SiteSpec], x: &[SiteValue]) -> TtResult<()> {
    if x.len() != sites.len() {
        return shape_err(format!(
            "configuration has {} values for {} sites",
            x.len(),
            sites.len()
        ));
    }
    for (k, (spec, &v)) in sites.iter().zip(x.iter()).enumerate() {
        spec.validate_value(v)
            .map_err(|e| crate::error::TtError::Domain(format!("site {}: {e}", k + 1)))?;
    }
    Ok(())
}
