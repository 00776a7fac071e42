//! Infeasible-start primal-dual path following for convex problems in
//! Domain-Driven form
//!
//! ```text
//!     inf { <c, x> : Ax ∈ D }
//! ```
//!
//! where `D` is the closure of the domain of a self-concordant barrier given as
//! a product of [barrier atoms](barrier::BarrierAtom). The solver tracks the
//! central path of an embedding with a single artificial variable `tau` and
//! classifies every instance as one of
//!
//! - an ε-solution with an approximate dual certificate,
//! - infeasible, with a (possibly exact) certificate `y ∈ D*`, `Aᵀy = 0`, `δ*(y|D) < 0`,
//! - unbounded, with a feasible point of arbitrarily low objective,
//! - ill-conditioned, with a pair of ε-feasible primal and dual points.
//!
//! # Example
//!
//! ```
//! use ddsolve_core::{instances, follow, FollowerOptions, StartData, Status};
//!
//! let problem = instances::inst_box();
//! let start = StartData::default_for(&problem);
//! let options = FollowerOptions { eps: 1e-6, ..FollowerOptions::default() };
//! let outcome = follow(&problem, &start, &options, &mut |_| {});
//! assert_eq!(outcome.report.status, Status::EpsSolution);
//! ```

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod barrier;
mod error;
pub mod instances;
mod linalg;
pub mod oracles;
pub mod path;
pub mod problem;
pub mod status;

pub use barrier::{
    local_norm, AtomKind, BarrierAtom, Domain, Evaluation, ExtendedReal, LocalMetric, NormMode, Order, Side,
};
pub use error::{Error, Result};
pub use path::{
    corrector_step, follow, log_mu_slope, predictor_step, residuals, Accepted, FollowOutcome,
    FollowerOptions, Residuals, TraceRow,
};
pub use problem::{
    gap_bounds, mu_of, proximity, support_function, GapBounds, Iterate, Point, Problem, SolverConstants,
    StartData,
};
pub use status::{
    check_status, mu_cap, stop_params, strict_infeasibility_certificate, strict_unboundedness_certificate,
    verify_certificate, Certificate, Diagnostics, Status, StatusReport, StopParams, VerificationReport,
};
