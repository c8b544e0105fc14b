//! sigma-lab: exact computation of convergence modes for σ-subfields on
//! finite weighted probability spaces.
//!
//! The crate represents σ-subfields as canonical partitions mod null sets,
//! materializes conditional-expectation operators exactly, and computes the
//! Hausdorff-type metrics, L^p→L^q operator norms, and per-stage statistics
//! for the weak / strong / Hausdorff / set-theoretic / almost-sure /
//! operator-norm / monotone / orthogonal convergence modes. Arithmetic is
//! exact throughout: rationals plus one quadratic extension ℚ(√d).

pub mod bitset;
pub mod conditioning;
pub mod decimal;
pub mod detect;
pub mod error;
pub mod fuzz_entries;
pub mod fuzzing;
pub mod gallery;
pub mod independence;
pub mod metrics;
pub mod opnorm;
pub mod partition;
pub mod report;
pub mod scalar;
pub mod scenario;
pub mod space;

pub use conditioning::{bayes_cond_exp, cond_exp, CondExpOperator, RandomVariable};
pub use detect::{run_detect, ConvergenceReport, DetectOptions, Mode, Verdict};
pub use error::{Error, Result};
pub use independence::{is_cond_independent, preservation_experiment, IndependenceCertificate};
pub use metrics::{hausdorff, inf_symdiff, MetricReport};
pub use opnorm::{lp_norm, op_norm, verify_onc_hc_chain, Exponent, OpNormResult, WitnessKind};
pub use partition::{Partition, PartitionDoc, WindowedLimit};
pub use scalar::{scalar_arith, ArithOp, Scalar};
pub use scenario::{Materialization, Scenario, TailDeclaration};
pub use space::{Event, FiniteSpace, SpaceDoc};
