//! Numerical laboratory for the normalized Kähler-Ricci flow on radial
//! (U(n)-invariant) Kähler metrics over the ball, driven through its
//! potential-level Monge-Ampère form on a truncated domain, with
//! quantitative monitoring of the trace bound, potential decay, metric
//! equivalence and Kähler-Einstein convergence, plus standalone property
//! suites for the pointwise curvature inequalities the bounds rest on.
//!
//! Module map:
//! - [`hermitian`]: frame-level Hermitian forms, curvature tensors and the
//!   algebraic contraction inequalities;
//! - [`radial`]: analytic radial potential families and their curvature;
//! - [`flow`]: the explicit method-of-lines integrator;
//! - [`diagnostics`]: monitored quantities, record streams, verdicts;
//! - [`config`], [`snapshot`], [`runner`]: file-based orchestration used
//!   by the `krflow` command-line front end.

// Negated float comparisons are deliberate throughout: a NaN parameter
// must fail every guard. Tensor contractions keep their explicit
// index loops; iterator rewrites obscure the slot pairing.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod config;
pub mod diagnostics;
pub mod flow;
pub mod hermitian;
pub mod radial;
pub mod runner;
pub mod snapshot;
pub mod stencil;
pub mod svg;

pub use config::{FamilySpec, RunConfig};
pub use diagnostics::{DiagnosticsRecord, Monitor, VerdictReport};
pub use flow::{init_flow, run_until, FlowParams, FlowState, StepReport};
pub use hermitian::{CurvatureTensor, FirstJet, HermitianForm, MetricForm};
pub use radial::{EigenPair, Family, RadialPotential};
