//! Computing `M_X(A)`: conflict graphs, the exact solver, the greedy
//! heuristic and the iterative construction over the largest elements.

mod bootstrap;
mod graph;
mod greedy;
mod mis;

pub use bootstrap::{bootstrap_construct, exact_oracle, greedy_oracle, BootstrapOutcome, BootstrapParams, RoundTrace};
pub use graph::ConflictGraph;
pub use greedy::{greedy_sumfree, GreedyOrder};
pub use mis::{
    is_summing, max_independent_set, max_sumfree_subset, summing_witness, Budget, MisOutcome, SolveOptions,
    SolveResult,
};
