//! Explicit solution families of the Fermat-type equations
//! `fⁿ + (f′)ⁿ = e^{αz+β}` and `fⁿ(z) + fⁿ(z+c) = e^{αz+β}`, with the tools
//! needed to check them numerically:
//!
//! - [`expr`]: closed-form expressions in one complex variable, with exact
//!   evaluation and symbolic differentiation.
//! - [`elliptic`]: the Weierstrass `℘` for the equianharmonic lattice
//!   `(℘′)² = 4℘³ − 1`.
//! - [`families`]: constructors for every solution family, with scalar
//!   admissibility checks.
//! - [`verify`]: sampled residual reports for the functional equations and the
//!   intermediate identities of the `n = 3` parametrization.
//! - [`nevanlinna`]: proximity, counting and characteristic functions plus
//!   order-of-growth fits.

pub mod elliptic;
pub mod expr;
pub mod families;
pub mod format;
pub mod nevanlinna;
pub mod verify;

pub use num_complex::Complex64;

pub use elliptic::{equianharmonic_lattice, wp, wp_prime, CellReduction, Lattice};
pub use expr::{EvalError, EvalOptions, Expr};
pub use families::{FamilyError, FamilyKind, FamilySpec, Generated, Mode};
pub use nevanlinna::{GrowthCurve, GrowthRecord, NevanlinnaError, OrderEstimate, PoleEnumerator};
pub use verify::{ResidualReport, SamplePlan, VerifyError};

/// JSON schema version stamped on every machine-readable report.
pub const SCHEMA_VERSION: u32 = 1;
