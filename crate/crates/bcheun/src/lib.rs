//! Numerical machinery for the biconfluent Heun equation
//!
//! ```text
//! u'' + (gamma/z + delta + epsilon*z) u' + ((alpha*z - q)/z) u = 0
//! ```
//!
//! The crate evaluates solutions through four resummed series whose terms are
//! incomplete Beta or incomplete Gamma functions, certifies them against
//! independent oracles (an origin power series, an adaptive complex-path
//! integrator, and closed forms for the reducible parameter cases), and
//! detects or constructs terminating, finite-sum solutions.
//!
//! Modules:
//! - [`model`]: the parameter set, canonical-form converters, derived
//!   singular structure, auxiliary polynomials, and the residual operator.
//! - [`special`]: incomplete Beta/Gamma, Kummer 1F1, Tricomi U, log-Gamma.
//! - [`frobenius`]: recentered polynomial operators, indicial exponents,
//!   mechanically synthesized recurrence bands, Frobenius coefficients.
//! - [`expansions`]: the four resummed expansions, constant recovery,
//!   termination certificates and the terminating-parameter solver.
//! - [`reference`]: independent oracles used to certify everything else.
//! - [`quadrature`]: adaptive Gauss-Kronrod integration on complex segments.

pub mod error;
pub mod expansions;
pub mod frobenius;
pub mod model;
pub mod poly;
pub mod quadrature;
pub mod reference;
pub mod special;

pub use error::{Error, Result};
pub use model::{
    from_dlmf, from_ronveaux, p3_delta, p3_eps, pi_quadratic, residual, singular_structure,
    BcHeunParams, OdeResidual, SingularStructure,
};

/// Complex scalar used throughout the crate.
pub type Complex = num_complex::Complex64;
