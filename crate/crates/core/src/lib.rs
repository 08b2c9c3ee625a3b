//! Sparse PageRank solvers: power iteration, inner-outer splitting (IIO),
//! multi-step splitting (MIIO), thick-restarted and adaptive weighted
//! Arnoldi, and their hybrids with MIIO.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod dense;
pub mod error;
pub mod harness;
pub mod hybrid;
pub mod krylov;
pub mod matrix;
pub mod operator;
pub mod report;
pub mod splitting;
pub mod synthetic;
pub mod vecops;

pub use dense::{dense_oracle_pagerank, DenseMatrix, EigenPair, SvdTriplet, WeightVector};
pub use error::{Error, Result};
pub use harness::{run_bench, BenchConfig, BenchOutcome, BenchRow, Format, InputSource};
pub use hybrid::{arnoldi_miio_solve, garnoldi_miio_solve, FlipFlopParams};
pub use krylov::{adaptive_garnoldi_solve, thick_restart_arnoldi_solve, KrylovFactorization};
pub use matrix::{CompressedSparseMatrix, IngestStats};
pub use operator::{MvCounter, Session, TransitionOperator};
pub use report::{Method, Phase, PhaseRecord, SolveReport};
pub use splitting::{convergence_bound, iio_solve, miio_solve, power_method, ConvergenceBound, SplittingParams};
pub use synthetic::{GraphModel, GraphSpec};
