//! Scalar field abstraction: every tensor train is generic over `Field`,
//! instantiated at `f64` (real64) or `Complex64` (complex128).
//!
//! The trait extends the LAPACK-capable scalar from `ndarray-linalg` with
//! the few extras this crate needs: a runtime field tag, seeded Gaussian
//! draws for Haar sampling, phase normalization for SVD sign fixing, and
//! JSON conversions used by the file formats and the pipe protocol.

use ndarray_linalg::{Lapack, Scalar};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde_json::Value;

use crate::error::{TtError, TtResult};

/// Runtime tag identifying the scalar field of a tensor train.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FieldTag {
    /// IEEE-754 double precision reals.
    Real64,
    /// Pairs of doubles forming complex numbers.
    Complex128,
}

impl FieldTag {
    /// Name used in file formats and the pipe handshake.
    pub fn as_str(self) -> &'static str {
        match self {
            FieldTag::Real64 => "real",
            FieldTag::Complex128 => "complex",
        }
    }

    /// Inverse of [`FieldTag::as_str`].
    pub fn parse(s: &str) -> TtResult<Self> {
        match s {
            "real" => Ok(FieldTag::Real64),
            "complex" => Ok(FieldTag::Complex128),
            other => Err(TtError::Io(format!(
                "unknown field tag {other:?} (expected \"real\" or \"complex\")"
            ))),
        }
    }
}

impl std::fmt::Display for FieldTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Scalar element of a tensor train: `f64` or `Complex64`.
pub trait Field:
    Scalar<Real = f64, Complex = Complex64> + Lapack + Send + Sync + 'static
{
    /// The runtime tag for this field.
    const TAG: FieldTag;

    /// Draw from the standard (complex) normal distribution.
    fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// `z / |z|`, with the convention that zero maps to one.
    fn unit_phase(self) -> Self;

    /// JSON representation: a number for reals, `[re, im]` for complex.
    fn to_json(self) -> Value;

    /// Parse the JSON representation; rejects non-finite values.
    fn from_json(v: &Value) -> TtResult<Self>;

    /// True when both components are finite.
    fn is_finite_val(self) -> bool {
        self.re().is_finite() && self.im().is_finite()
    }
}

fn finite_f64(v: &Value) -> TtResult<f64> {
    let x = v
        .as_f64()
        .ok_or_else(|| TtError::Io(format!("expected a number, got {v}")))?;
    if !x.is_finite() {
        return Err(TtError::Io(format!("non-finite value {x}")));
    }
    Ok(x)
}

impl Field for f64 {
    const TAG: FieldTag = FieldTag::Real64;

    fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }

    fn unit_phase(self) -> Self {
        if self < 0.0 {
            -1.0
        } else {
            1.0
        }
    }

    fn to_json(self) -> Value {
        Value::from(self)
    }

    fn from_json(v: &Value) -> TtResult<Self> {
        finite_f64(v)
    }
}

impl Field for Complex64 {
    const TAG: FieldTag = FieldTag::Complex128;

    fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    }

    fn unit_phase(self) -> Self {
        let r = self.norm();
        if r == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            self / r
        }
    }

    fn to_json(self) -> Value {
        Value::from(vec![self.re, self.im])
    }

    fn from_json(v: &Value) -> TtResult<Self> {
        match v {
            Value::Array(parts) if parts.len() == 2 => {
                let re = finite_f64(&parts[0])?;
                let im = finite_f64(&parts[1])?;
                Ok(Complex64::new(re, im))
            }
            Value::Number(_) => Ok(Complex64::new(finite_f64(v)?, 0.0)),
            other => Err(TtError::Io(format!(
                "expected [re, im] or a number, got {other}"
            ))),
        }
    }
}
