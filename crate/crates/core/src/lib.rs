//! Restricted sumsets, sum-free subsets and the additive-combinatorics
//! toolkit around them: exact solvers, additive energy, Fourier analysis on
//! finite abelian groups, systems of neighbourhoods and a finite-field model
//! of the density-increment iteration.

pub mod constructions;
pub mod energy;
pub mod error;
pub mod fourier;
pub mod fpmodel;
pub mod group;
pub mod io;
pub mod report;
pub mod sets;
pub mod solvers;
pub mod systems;

pub use error::{Error, Result};
pub use group::{AmbientGroup, GroupElem};
pub use report::{Verdict, VerificationReport};
pub use sets::{GroupSet, IntSet, Level, TwoAdicDecomposition};

/// Exact rational used for thresholds such as eps, kappa, tau and delta.
pub type Rational = num::rational::Ratio<i64>;

/// Arbitrary precision rational for accumulations that may overflow `i64`.
pub type BigRational = num::BigRational;
