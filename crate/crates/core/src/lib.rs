//! Numerical laboratory for the Cauchy problem
//!
//! ```text
//!   du/dt + |u|^{q-1} du/dx = D[u],
//! ```
//!
//! where `D` is a Riesz-Feller operator of order `beta in (1,2)` (the
//! flagship case being `dx D^alpha` with `beta = 1 + alpha`). The crate
//! provides the nonlocal operators in spectral and singular-integral form,
//! the linear semigroup kernel and its decay laws, a pseudo-spectral
//! exponential time-differencing solver, the exact N-wave entropy solution
//! of the inviscid limit, and a verification layer that measures mass
//! conservation, the Oleinik inequality, `L^p` decay, energy dissipation,
//! tail control, and convergence of rescaled solutions toward the N-wave.

pub mod error;
pub mod fit;
pub mod grid;
pub mod kernel;
pub mod nwave;
pub mod solver;
pub mod verify;
pub mod ops;
pub mod quad;

pub use error::{Error, Result};
pub use grid::{Field, Grid};
pub use ops::{
    apply_spectral, check_integration_by_parts, dissipativity, make_symbol, riesz_feller_coeffs,
    DissipativityReport, IbpRule, OperatorSpec, SpectralMultiplier,
};
pub use kernel::{kernel_field, self_similarity_residual, semigroup_l1_residual, tail_decay_exponent, time_decay_exponent, DecayFit, KernelField};
pub use nwave::{entropy_residual, initial_trace, Bump, EntropyForm, EntropyResidual, NWaveParams};
pub use quad::apply_quadrature;
pub use solver::{flux, mild_residual, solve, solve_rescaled, step, InitialData, Scheme, Snapshot, SolverConfig, Trajectory};
pub use verify::{asymptotic_distance, decay_exponents, diagnose, energy_budget, oleinik_check, tail_control, DiagnosticsRecord};
