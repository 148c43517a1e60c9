//! Monte Carlo solver for Dirichlet problems of the spectral fractional
//! Laplacian on bounded domains, with nonzero boundary data.
//!
//! The solution of the parabolic problem
//!
//! ```text
//! d/dt u + (-L)^(alpha/2) u = r   in Omega, t > 0
//!            u = g               on the boundary
//!            u(0, .) = f         in Omega
//! ```
//!
//! (and of its elliptic steady state) is estimated pointwise through its
//! stochastic representation: a Brownian motion with generator equal to the
//! Dirichlet Laplacian is run until it exits `Omega`, an independent
//! `alpha/2`-stable subordinator changes its clock, and `u(t, x)` is the
//! expectation of `f` or `g` at the subordinated position plus a path
//! integral of the forcing `r`. Everything is discretized on a fixed step
//! `dt`, in four stages:
//!
//! 1. Euler steps of the Brownian path until the first exterior point, which
//!    is replaced by a boundary point; the exit time is rounded up to the
//!    grid (`path` module, backed by `domain`).
//! 2. One-sided stable increments accumulate the subordinator until it
//!    passes the exit time, where it is truncated (`stable`, `path`).
//! 3. The subordinator is rounded up to the grid and composed with the
//!    stopped path (`path::subordinate`).
//! 4. Estimators average `f`/`g` at subordinated positions plus the forcing
//!    integral over many independent paths (`estimator`).
//!
//! An eigenfunction series on boxes (`reference`) provides independent
//! reference solutions, and `job` plus the `subwalk` binary run whole
//! benchmark configurations to CSV or JSON lines with reproducible seeding.

pub mod domain;
pub mod error;
pub mod estimator;
pub mod job;
pub mod path;
pub mod problem;
pub mod reference;
pub mod rng;
pub mod stable;

pub use domain::DomainGeometry;
pub use error::{Result, SolverError};
pub use estimator::{
    convergence_sweep, elliptic_estimate, parabolic_estimate, survival_estimate, McConfig,
    PointEstimate, SweepCell, SweepJob,
};
pub use job::{
    run_job, validate_config, JobConfig, JobSummary, OutputFormat, Overrides, Violation,
    WORKERS_ENV,
};
pub use path::{
    generate_stopped_path, generate_subordinator, subordinate, StoppedPath, SubordinatedPath,
    SubordinatorPath, DEFAULT_MAX_STEPS,
};
pub use problem::{ExactSolution, Forcing, ProblemSpec, ScalarField, SpacetimeField};
pub use reference::{
    benchmark_catalog, box_eigenpairs, heat_series_eval, survival_series, Benchmark,
    BenchmarkKind, BoxEigenpair, SeriesSolution, BENCHMARK_NAMES,
};
pub use rng::{derive_seed, RngStream};
pub use stable::{gaussian_increment, stable_increment, StableParams, MAX_STABLE_INDEX};
