//! Corrective-field synthesis: the renormalization rate F-dot, the
//! accumulated factor F(t), and the field b(t) that keeps a damped spin on
//! its dissipationless trajectory.
//!
//! The defining condition is
//!
//! ```text
//! F-dot S0 + gyro * (b x S0) = L S0
//! ```
//!
//! for the unit direction S0 and damping tensor L. Projecting on S0 fixes
//! F-dot = S0^T L S0 uniquely; the remaining freedom in b is the line
//! b0 + lambda S0. The canonical particular solution used here,
//!
//! ```text
//! b0 = (1 / gyro) S0 x (L S0),
//! ```
//!
//! is the unique solution orthogonal to S0.

use crate::error::{CoreError, Result};
use crate::geometry::{
    quadratic_form, AngularPath, DissipationTensor, RealVec3, SphericalFrame, TimeGrid,
};
use crate::quad::cumulative_simpson;

/// Corrective field at one instant: particular solution `b0` (orthogonal to
/// the spin direction), decay rate `fdot`, and the spherical frame it was
/// built in.
#[derive(Copy, Clone, Debug)]
pub struct CorrectionResult {
    pub b0: RealVec3,
    pub fdot: f64,
    pub frame: SphericalFrame,
}

/// General closed form for an arbitrary unit direction and PSD tensor.
pub fn correction_general(
    s0_hat: &RealVec3,
    tensor: &DissipationTensor,
    gyro: f64,
) -> Result<CorrectionResult> {
    if gyro == 0.0 {
        return Err(CoreError::InvalidCoupling);
    }
    let norm = s0_hat.norm();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(CoreError::NonUnitVector { norm });
    }
    let damped = tensor.apply(s0_hat);
    let fdot = s0_hat.dot(&damped);
    let b0 = s0_hat.cross(&damped) * (1.0 / gyro);
    // frame with theta-hat least aligned to the pole singularity
    let theta = s0_hat.z.clamp(-1.0, 1.0).acos();
    let phi = s0_hat.y.atan2(s0_hat.x);
    let frame = crate::geometry::spherical_frame_at(theta, phi);
    Ok(CorrectionResult { b0, fdot, frame })
}

/// Corrective field for the axial tensor diag(G_perp, G_perp, G_z) along a
/// trajectory at polar angle `theta`: signed magnitude
/// (G_perp - G_z) sin(2 theta) / (2 gyro) along phi-hat.
///
/// Note the sign: this is the unique solution of the correction condition
/// under dS/dt = gyro B x S; it cancels at the poles and at the equator,
/// where the spin is an eigenvector of the tensor.
pub fn correction_transverse(
    theta: f64,
    gamma_perp: f64,
    gamma_z: f64,
    gyro: f64,
) -> Result<f64> {
    if gyro == 0.0 {
        return Err(CoreError::InvalidCoupling);
    }
    Ok((gamma_perp - gamma_z) * (2.0 * theta).sin() / (2.0 * gyro))
}

/// Shift the particular solution along the gauge line b0 + lambda S0; every
/// member drives the same direction trajectory.
pub fn gauge_shift(result: &CorrectionResult, lambda: f64) -> RealVec3 {
    result.b0 + result.frame.radial * lambda
}

/// Accumulated renormalization factor F(t) = integral of S0 . L S0 along the
/// path, sampled on the grid nodes by cumulative composite Simpson.
///
/// The tensor may vary in time through the closure; constancy is not
/// assumed.
pub fn accumulate_f_var(
    path: &AngularPath,
    tensor: impl Fn(f64) -> DissipationTensor,
    grid: &TimeGrid,
) -> Vec<f64> {
    let rates: Vec<f64> = grid
        .nodes()
        .map(|t| quadratic_form(&tensor(t), &path.direction(t)))
        .collect();
    cumulative_simpson(&rates, grid.step())
}

/// `accumulate_f_var` for a constant tensor.
pub fn accumulate_f(
    path: &AngularPath,
    tensor: &DissipationTensor,
    grid: &TimeGrid,
) -> Vec<f64> {
    accumulate_f_var(path, |_| *tensor, grid)
}

/// Residual of the correction condition; zero (to rounding) for a valid
/// correction.
pub fn correction_residual(
    s0_hat: &RealVec3,
    tensor: &DissipationTensor,
    gyro: f64,
    result: &CorrectionResult,
) -> f64 {
    let lhs = *s0_hat * result.fdot + result.b0.cross(s0_hat) * gyro;
    (lhs - tensor.apply(s0_hat)).norm()
}

/// Damped Bloch system driven by the dissipationless field of `path` plus
/// the corrective field (shifted by `lambda` along the gauge line).
pub fn corrected_bloch_system(
    path: &AngularPath,
    tensor: DissipationTensor,
    gyro: f64,
    lambda: f64,
    grid: crate::geometry::TimeGrid,
) -> crate::dynamics::BlochSystem {
    let p = path.clone();
    let field = crate::dynamics::FieldProtocol::new(
        move |t| {
            let drive = p.precession_vector(t) * (1.0 / gyro);
            let c = correction_general(&p.direction(t), &tensor, gyro)
                .expect("path direction is unit by construction");
            drive + gauge_shift(&c, lambda)
        },
        grid,
    );
    crate::dynamics::BlochSystem::new(field, tensor, gyro)
}

/// Tracking quality of a corrected run against its design.
#[derive(Copy, Clone, Debug)]
pub struct ExactnessReport {
    /// Max angle between the integrated direction and the design direction.
    pub max_angle_error: f64,
    /// Max relative deviation of the norm from exp(-F(t)).
    pub max_norm_rel_error: f64,
}

/// Integrate the corrected system from the design's start and measure how
/// well direction and norm follow S0(t) and exp(-F(t)).
pub fn verify_exactness(
    path: &AngularPath,
    tensor: &DissipationTensor,
    gyro: f64,
    lambda: f64,
    grid: &crate::geometry::TimeGrid,
) -> crate::error::Result<ExactnessReport> {
    let system = corrected_bloch_system(path, *tensor, gyro, lambda, *grid);
    let traj = crate::dynamics::integrate_bloch(&system, path.direction(0.0), grid)?;
    let f_acc = accumulate_f(path, tensor, grid);
    let mut max_angle_error = 0.0f64;
    let mut max_norm_rel_error = 0.0f64;
    for ((s, t), f) in traj.states.iter().zip(grid.nodes()).zip(f_acc.iter()) {
        let dir = s.normalized().expect("norm cannot vanish in finite time");
        max_angle_error = max_angle_error.max(dir.angle_to(&path.direction(t)));
        let expected = (-f).exp();
        max_norm_rel_error = max_norm_rel_error.max((s.norm() - expected).abs() / expected);
    }
    Ok(ExactnessReport { max_angle_error, max_norm_rel_error })
}
