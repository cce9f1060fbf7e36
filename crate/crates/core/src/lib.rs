//! Simulation of a particle in a box while a delta-function barrier of
//! time-dependent strength is inserted at an arbitrary position.
//!
//! The exact dynamics is obtained from a boundary integral equation of
//! Volterra type, marched with left Riemann sums ([`volterra`]). Around it:
//!
//! - [`modes`]: truncated-mode ODE approximations of the boundary value for
//!   symmetric insertion, integrated with second-order Runge-Kutta.
//! - [`design`]: the inverse problem — construct the strength schedule that
//!   drives a prescribed boundary evolution within the two-mode picture.
//! - [`observables`]: norms, energies, adiabatic decompositions, and
//!   which-side probabilities.
//! - [`postsplit`]: sub-box spectral evolution once the barrier is treated
//!   as impenetrable, superposition construction, and time reversal.
//! - [`oracle`]: an independent Crank-Nicolson finite-difference solver used
//!   to cross-validate the integral-equation scheme.
//!
//! All quantities are dimensionless: the governing equation is
//! `-psi_xx + 2 c(t) delta(x - x0) psi = i psi_t` on `[-L, +L]` with
//! `psi(+-L, t) = 0`.

pub mod design;
pub mod error;
pub mod geometry;
pub mod kernel;
pub mod modes;
pub mod observables;
pub mod oracle;
pub mod postsplit;
pub mod protocol;
pub mod quadrature;
pub mod volterra;

pub use error::{Error, Result};
pub use geometry::{BoxGeometry, SpatialGrid, TimeGrid, DEFAULT_SPATIAL_POINTS};
pub use kernel::kernel_coeff;
pub use protocol::{Protocol, ProtocolKind, DEFAULT_CAP_FRACTION};
pub use volterra::{
    mode_coefficients, run, BoundaryTrace, ModeCoefficients, RunOutput, RunSettings, SolverState,
    Trajectory, WavefunctionSnapshot, DEFAULT_MODE_CUTOFF, DEFAULT_THETA_MAX,
};
