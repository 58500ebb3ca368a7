//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    /// Spin-field coupling constant is zero; no corrective field exists.
    #[error("invalid coupling: gyromagnetic factor must be nonzero")]
    InvalidCoupling,

    /// A caller-supplied vector was expected to be unit length.
    #[error("expected a unit vector, got norm {norm}")]
    NonUnitVector { norm: f64 },

    /// A dissipation tensor failed its symmetry check.
    #[error("tensor is not symmetric (max asymmetry {deviation:.3e})")]
    TensorAsymmetric { deviation: f64 },

    /// A dissipation tensor has a negative eigenvalue beyond tolerance.
    #[error("tensor is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    TensorNotPsd { min_eigenvalue: f64 },

    /// Generic precondition violation, with a field-level message.
    #[error("domain error: {0}")]
    Domain(String),

    /// Integration produced a non-finite state component.
    #[error("numerical overflow at integration step {step}")]
    NumericalOverflow { step: usize },

    /// Boundary-condition system for a polynomial fit is singular.
    #[error("degenerate boundary conditions: linear system is singular")]
    DegenerateConditions,

    /// The mixing angle reached 0 or pi/2 inside the open interval, so
    /// cot(gamma) diverges and no finite pulse pair exists.
    #[error("singular cotangent in pulse synthesis at t = {t}")]
    SingularCotangent { t: f64 },

    /// sin(phi) vanished inside the protocol, so the shortcut field diverges.
    #[error("singular shortcut field at t = {t}")]
    SingularField { t: f64 },

    /// tan(phi) vanished, so the longitudinal correction diverges.
    #[error("singular correction field at t = {t}")]
    SingularCorrection { t: f64 },

    /// Spin norm decayed below representable range.
    #[error("spin norm underflow ({norm:.3e}); use a shorter duration or smaller rates")]
    Underflow { norm: f64 },
}

pub type Result<T> = std::result::Result<T, CoreError>;
