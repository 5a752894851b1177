//! Tensor-train toolkit.
//!
//! Represents high-dimensional coefficient tensors as tensor trains,
//! reconstructs them from black-box function samples, and operates on the
//! result: evaluation, canonical forms, gauge obfuscation, exact Born
//! sampling, string-order probes for matrix-product states, persistence,
//! and compression cost accounting.

pub mod aklt;
pub mod cli;
pub mod embed;
pub mod error;
pub mod field;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod oracle;
pub mod site;
pub mod sketch;
pub mod tt;

pub use aklt::{
    build_aklt_tt, order_parameter, reconstruct_and_probe, OrderParamResult, PhaseLabel,
    ProbeConfig, ProbeReport, SymmetryRep,
};
pub use embed::Embedding;
pub use error::{TtError, TtResult};
pub use field::{Field, FieldTag};
pub use io::{load_pivots, load_tt, save_any_tt, save_pivots, save_tt};
pub use metrics::{cost_report, error_report, relative_error, CostReport, ErrorReport};
pub use oracle::{
    aklt_oracle, dense_oracle, pipe_oracle, random_prob_oracle, random_tt_oracle, slater_oracle,
    sqrt_oracle, Oracle, TtOracle,
};
pub use site::{Configuration, Domain, SiteSpec, SiteValue};
pub use sketch::{
    decompose, index_pivots, sample_pivots_uniform, CutReport, DecompositionReport, FitGrids,
    PivotSet, PrefixIndex, SketchConfig,
};
pub use tt::{fidelity, inner_product, AnyTt, DenseTensor, TensorTrain, DENSE_CAP};
