//! Fixtures shared by the solver benchmarks.

use splitrank::synthetic::generate;
use splitrank::{GraphModel, GraphSpec, TransitionOperator};

/// Host-clustered graph with the degree and dangling share used by the bench
/// harness defaults.
pub fn web_like(n: usize, seed: u64) -> TransitionOperator {
    let spec = GraphSpec::new(n, 8.0, 0.15, seed).with_model(GraphModel::HostClustered);
    let adj = generate(&spec).expect("valid fixture spec");
    TransitionOperator::uniform(&adj).expect("square fixture")
}
