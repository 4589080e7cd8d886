//! The finite-field model `V = F_p^n`, `p` an odd prime: weighted covers by
//! cosets of subspaces, the energy-increment iteration, tuple counting and a
//! desk-scale end-to-end driver.

mod counting;
mod cover;
mod linalg;
mod pipeline;
mod unif;

pub use counting::{
    count_tuples, ct_bound_check, lemma_c_check, CountMode, CountingAlternative, LemmaCInput, TupleCount,
    EXACT_TUPLE_BUDGET,
};
pub use cover::{atom_uniformity, coset_density, cover_check, cover_dilate, Atom, AtomUniformity, WeightedCover};
pub use linalg::{FieldSpace, Subspace};
pub use pipeline::{
    densest_cosets, model_pipeline, AtomWalk, Branch, DenseCosets, DilateRow, ModelAlternative, ModelReport,
    PipelineOptions, WalkStep,
};
pub use unif::{uniformize, unif_step, AtomVerdict, IterationTrace, RefinedAtom, Refinement, StepRecord, UnifStep};

use num::{BigRational, ToPrimitive};

use crate::Rational;

pub(crate) fn big_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

pub(crate) fn ser_big<S: serde::Serializer>(r: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

pub(crate) fn ser_opt_big<S: serde::Serializer>(r: &Option<BigRational>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match r {
        Some(r) => s.serialize_str(&r.to_string()),
        None => s.serialize_none(),
    }
}

pub(crate) fn ser_rational<S: serde::Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}
