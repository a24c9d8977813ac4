//! Spectral analysis and model reduction for autonomous delay differential
//! equations ẋ(t) = f(x_t) with discrete and distributed delays.
//!
//! The crate computes the characteristic spectrum of the linearization,
//! spectral projections and dichotomy data, third-order spectral-submanifold
//! (SSM) parameterizations with reduced dynamics (including the cubic normal
//! form and Hopf limit-cycle prediction), and certifies inertial manifolds
//! with explicit decay-rate bounds. A method-of-steps simulator validates
//! predictions at desk scale.

pub mod error;
pub mod histfn;
pub mod inertial;
pub mod interp;
pub mod linalg;
pub mod model;
pub mod projection;
pub mod quad;
pub mod simulate;
pub mod spectrum;
pub mod ssm;
pub mod systems;

pub use error::Error;
pub type Result<T> = std::result::Result<T, Error>;

pub type C64 = num_complex::Complex<f64>;
pub type CVec = nalgebra::DVector<C64>;
pub type CMat = nalgebra::DMatrix<C64>;

/// Numerical tolerances shared across the pipeline. All overridable.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    /// Residual |det Δ(λ)| below which a polished root is accepted.
    pub tol_root: f64,
    /// Rectangle size below which a cluster is declared a multiple root.
    pub tol_sep: f64,
    /// Match tolerance for resonance / eigenvalue-coincidence checks.
    pub tol_res: f64,
    /// Minimum of |det Δ| on a contour below which the contour is rejected.
    pub tol_boundary: f64,
    /// |d/dz det Δ| below which a root is treated as non-simple.
    pub tol_deriv: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            tol_root: 1e-12,
            tol_sep: 1e-8,
            tol_res: 1e-8,
            tol_boundary: 1e-10,
            tol_deriv: 1e-6,
        }
    }
}
