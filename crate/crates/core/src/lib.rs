//! Laboratory for one-dimensional scalar conservation laws
//! `u_t + f(u)_x = 0` with convex flux functions.
//!
//! The crate builds weak solutions (entropy and non-entropy), measures their
//! entropy production, and exposes the diagnostics that decide which weak
//! solution is the physical one:
//!
//! - [`convexfn`]: convex, locally Lipschitz scalar functions with exact
//!   one-sided derivatives, Legendre conjugates, and linear-degeneracy
//!   intervals.
//! - [`entropypair`]: entropy / entropy-flux pairs `(η, q)` with `q' = η'f'`,
//!   the Kruzkov family, and asymptotic growth-condition checks.
//! - [`bilinear`]: the bilinear form `B(f, η)` over discrete probability
//!   measures and its positivity / decomposition properties.
//! - [`waves`]: exact Riemann fans for convex fluxes, discontinuity
//!   classification, and per-jump entropy production.
//! - [`solvers`]: a Hopf-Lax variational solver for the potential equation
//!   `w_t + f(w_x) = 0` and a Godunov finite-volume solver for `u`.
//! - [`meter`]: entropy-production ball statistics `μ(B_r)/r`, Kruzkov
//!   residuals, Oleinik slope checks, and Hölder-seminorm estimation.
//! - [`config`]: serde descriptions of functions, pairs, and initial data
//!   used by configuration files.

// `!(x > 0.0)`-style guards are used on purpose: they reject NaN along with
// the out-of-range values, which `x <= 0.0` would let through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bilinear;
pub mod config;
pub mod convexfn;
pub mod entropypair;
pub mod gen;
pub mod meter;
pub mod quad;
pub mod solvers;
pub mod waves;

pub use bilinear::{BilinearError, DiscreteMeasure};
pub use convexfn::{ConvexFun, ConvexFunError, DegeneracyInterval, Side, ValidationReport};
pub use entropypair::{
    EntropyPair, GammaResult, GrowthDescriptor, GrowthReport, KruzkovPair, PairError,
};
pub use meter::{BallDiagnostic, HolderReport, MeterError, Verdict};
pub use solvers::{GridSolution, InitialData, SolverError, SolutionSource};
pub use waves::{Classification, DiscontinuityReport, WaveError, WaveFan};
