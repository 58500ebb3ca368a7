//! Two-level population inversion under simultaneous laser amplitude noise
//! and static transverse damping: the noise-optimal shortcut, its corrected
//! variant, and a plain pi pulse for comparison.
//!
//! The noise-averaged dynamics is the damped precession with the tensor
//! `laser_noise_tensor` added to the static transverse tensor. The transfer
//! figure of merit is the normalized probability
//! `P2 = (1 - S_z(T)/|S(T)|) / 2`, insensitive to isotropic damping.

use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};

use crate::correction::correction_general;
use crate::dynamics::{integrate_bloch, BlochSystem, FieldProtocol};
use crate::error::{CoreError, Result};
use crate::geometry::{AngularPath, DissipationTensor, RealVec3, TimeGrid};

pub use crate::stochastic::laser_noise_tensor;

/// Pulse protocols compared in the noisy-inversion scenario.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum NoiseProtocol {
    /// Constant-rate inversion along the same meridian.
    PiPulse,
    /// The inversion trajectory optimized against laser amplitude noise.
    OptimalSta,
    /// Same trajectory with the transverse-damping correction superimposed.
    OptimalStaCorrected,
}

/// One scenario point.
#[derive(Copy, Clone, Debug)]
pub struct NoiseScenario {
    pub protocol: NoiseProtocol,
    pub lambda_noise: f64,
    pub gamma_perp_t: f64,
    pub duration: f64,
}

impl NoiseScenario {
    pub fn new(
        protocol: NoiseProtocol,
        lambda_noise: f64,
        gamma_perp_t: f64,
        duration: f64,
    ) -> Result<Self> {
        if lambda_noise < 0.0 {
            return Err(CoreError::Domain("lambda_noise must be >= 0".into()));
        }
        if gamma_perp_t < 0.0 {
            return Err(CoreError::Domain("gamma_perp_t must be >= 0".into()));
        }
        if !duration.is_finite() || duration <= 0.0 {
            return Err(CoreError::Domain("duration must be > 0".into()));
        }
        Ok(NoiseScenario { protocol, lambda_noise, gamma_perp_t, duration })
    }
}

/// The noise-optimal inversion path: theta(t) = pi t/T - sin(2 pi t/T)/12 at
/// fixed azimuth pi/4.
pub fn optimal_sta_path(duration: f64) -> AngularPath {
    let t_total = duration;
    AngularPath::from_closures(
        move |t| PI * t / t_total - (TAU * t / t_total).sin() / 12.0,
        move |t| (PI / t_total) * (1.0 - (TAU * t / t_total).cos() / 6.0),
        |_| PI / 4.0,
        |_| 0.0,
        duration,
    )
}

/// Resonant quadrature pulses implementing an azimuth-pi/4 meridian sweep:
///
/// ```text
/// W_R(t) = -theta-dot/sqrt(2),  W_I(t) = +theta-dot/sqrt(2),  Delta = 0.
/// ```
///
/// Under dS/dt = B x S the driving field must lie along the meridian-plane
/// normal (-x + y)/sqrt(2), which fixes the relative sign of the two
/// quadratures; the noise tensor and every transfer probability depend only
/// on their squares.
pub fn optimal_sta_pulses(path: &AngularPath, t: f64) -> (f64, f64, f64) {
    let rate = path.theta_dot(t) * FRAC_1_SQRT_2;
    (-rate, rate, 0.0)
}

/// Transfer metrics of one protocol run.
#[derive(Copy, Clone, Debug)]
pub struct NoiseOutcome {
    /// Normalized probability (1 - S_z/|S|)/2, insensitive to isotropic
    /// damping.
    pub p2_hat: f64,
    /// Raw probability (1 - S_z)/2 of the decayed spin.
    pub p2_raw: f64,
    pub final_spin: RealVec3,
}

/// Normalized P2 for one protocol run from S(0) = z.
pub fn run_noise_scenario(scenario: &NoiseScenario, grid: &TimeGrid) -> Result<f64> {
    run_noise_scenario_detailed(scenario, grid).map(|o| o.p2_hat)
}

/// Both transfer metrics plus the final Bloch vector.
pub fn run_noise_scenario_detailed(
    scenario: &NoiseScenario,
    grid: &TimeGrid,
) -> Result<NoiseOutcome> {
    let t_total = scenario.duration;
    let lambda = scenario.lambda_noise;
    let gamma_perp = scenario.gamma_perp_t / t_total;
    let static_tensor = DissipationTensor::transverse(gamma_perp)?;
    let path = optimal_sta_path(t_total);

    // nominal quadratures for each protocol
    let nominal: Box<dyn Fn(f64) -> (f64, f64) + Send + Sync> = match scenario.protocol {
        NoiseProtocol::PiPulse => {
            let rate = (PI / t_total) * FRAC_1_SQRT_2;
            Box::new(move |_| (-rate, rate))
        }
        _ => {
            let p = path.clone();
            Box::new(move |t| {
                let (wr, wi, _) = optimal_sta_pulses(&p, t);
                (wr, wi)
            })
        }
    };
    let corrected = scenario.protocol == NoiseProtocol::OptimalStaCorrected;
    let corr_path = path.clone();
    let quadratures = std::sync::Arc::new(move |t: f64| {
        let (mut wr, mut wi) = nominal(t);
        if corrected {
            let c = correction_general(&corr_path.direction(t), &static_tensor, 1.0)
                .expect("path direction is unit, gyro = 1");
            wr += c.b0.x;
            wi += c.b0.y;
        }
        (wr, wi)
    });

    let field_quads = quadratures.clone();
    let field = FieldProtocol::new(
        move |t| {
            let (wr, wi) = field_quads(t);
            RealVec3::new(wr, wi, 0.0)
        },
        *grid,
    );
    // amplitude noise acts on the quadratures actually applied
    let system = BlochSystem::with_time_dependent_tensor(
        field,
        move |t| {
            let (wr, wi) = quadratures(t);
            laser_noise_tensor(wr, wi, lambda) + static_tensor
        },
        1.0,
    );
    let trajectory = integrate_bloch(&system, RealVec3::Z, grid)?;
    let s = trajectory.last();
    Ok(NoiseOutcome {
        p2_hat: p2_of(&s)?,
        p2_raw: 0.5 * (1.0 - s.z),
        final_spin: s,
    })
}

/// Normalized transfer probability of the final Bloch vector.
pub fn p2_of(s: &RealVec3) -> Result<f64> {
    let norm = s.norm();
    if norm < 1e-300 {
        return Err(CoreError::Underflow { norm });
    }
    Ok(0.5 * (1.0 - s.z / norm))
}

/// One row of the transfer-probability comparison.
#[derive(Copy, Clone, Debug)]
pub struct NoiseSweepRow {
    pub gamma_perp_t: f64,
    pub p2_pi: f64,
    pub p2_opt: f64,
    pub p2_opt_corrected: f64,
}

/// All three protocols across a range of transverse damping strengths.
pub fn run_noise_sweep(
    lambda_noise: f64,
    duration: f64,
    gamma_perp_t_values: &[f64],
    n_steps: usize,
) -> Result<Vec<NoiseSweepRow>> {
    let grid = TimeGrid::new(0.0, duration, n_steps)?;
    gamma_perp_t_values
        .iter()
        .map(|&gpt| {
            let run = |protocol| {
                run_noise_scenario(
                    &NoiseScenario::new(protocol, lambda_noise, gpt, duration)?,
                    &grid,
                )
            };
            Ok(NoiseSweepRow {
                gamma_perp_t: gpt,
                p2_pi: run(NoiseProtocol::PiPulse)?,
                p2_opt: run(NoiseProtocol::OptimalSta)?,
                p2_opt_corrected: run(NoiseProtocol::OptimalStaCorrected)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{assert_close, assert_path_derivatives};

    #[test]
    fn path_endpoints_and_derivative() {
        let t_total = 2.0;
        let path = optimal_sta_path(t_total);
        assert_close(path.theta(0.0), 0.0, 1e-15);
        assert_close(path.theta(t_total), PI, 1e-12);
        assert_close(path.theta(t_total / 2.0), PI / 2.0, 1e-12);
        assert_close(path.theta_dot(0.0), 5.0 * PI / (6.0 * t_total), 1e-12);
        assert_close(path.phi(0.7), PI / 4.0, 1e-15);
        assert_path_derivatives(&path);
    }

    #[test]
    fn pulse_values_at_reference_times() {
        let t_total = 1.0;
        let path = optimal_sta_path(t_total);
        let (wr, _, delta) = optimal_sta_pulses(&path, 0.0);
        assert_close(wr, -5.0 * PI / (6.0 * 2f64.sqrt() * t_total), 1e-12);
        assert_close(delta, 0.0, 1e-15);
        let (wr, _, _) = optimal_sta_pulses(&path, t_total / 2.0);
        assert_close(wr, -7.0 * PI / (6.0 * 2f64.sqrt() * t_total), 1e-12);
    }

    #[test]
    fn pulses_reproduce_path_without_dissipation() {
        let t_total = 1.3;
        let path = optimal_sta_path(t_total);
        let grid = TimeGrid::new(0.0, t_total, 4000).unwrap();
        let p = path.clone();
        let field = FieldProtocol::new(
            move |t| {
                let (wr, wi, delta) = optimal_sta_pulses(&p, t);
                RealVec3::new(wr, wi, delta)
            },
            grid,
        );
        let system = BlochSystem::new(field, DissipationTensor::ZERO, 1.0);
        let traj = integrate_bloch(&system, path.direction(0.0), &grid).unwrap();
        for (s, t) in traj.states.iter().zip(grid.nodes()) {
            let err = (*s - path.direction(t)).norm();
            assert!(err <= 1e-8, "path deviation {err} at t = {t}");
        }
    }

    #[test]
    fn perfect_inversion_without_noise_or_damping() {
        let grid = TimeGrid::new(0.0, 1.0, 4000).unwrap();
        for protocol in [
            NoiseProtocol::PiPulse,
            NoiseProtocol::OptimalSta,
            NoiseProtocol::OptimalStaCorrected,
        ] {
            let s = NoiseScenario::new(protocol, 0.0, 0.0, 1.0).unwrap();
            let p2 = run_noise_scenario(&s, &grid).unwrap();
            assert!(p2 >= 1.0 - 1e-8, "{protocol:?} gave {p2}");
        }
    }

    #[test]
    fn p2_is_scale_invariant_and_bounded() {
        let s = RealVec3::new(0.3, -0.2, -0.8);
        let a = p2_of(&s).unwrap();
        let b = p2_of(&(s * 1e-12)).unwrap();
        assert_close(a, b, 1e-12);
        assert!((0.0..=1.0).contains(&a));
        assert!(matches!(
            p2_of(&RealVec3::ZERO),
            Err(CoreError::Underflow { .. })
        ));
    }

    #[test]
    fn scenario_validation() {
        assert!(NoiseScenario::new(NoiseProtocol::PiPulse, -0.1, 1.0, 1.0).is_err());
        assert!(NoiseScenario::new(NoiseProtocol::PiPulse, 0.1, -1.0, 1.0).is_err());
        assert!(NoiseScenario::new(NoiseProtocol::PiPulse, 0.1, 1.0, 0.0).is_err());
    }

    #[test]
    fn reference_transfer_triple() {
        // lambda = 0.3, Gp T = 6: raw transfer probabilities
        // 0.455 / 0.465 / 0.532 for pi / optimal / optimal-corrected
        let grid = TimeGrid::new(0.0, 1.0, 4000).unwrap();
        let raw = |protocol| {
            run_noise_scenario_detailed(
                &NoiseScenario::new(protocol, 0.3, 6.0, 1.0).unwrap(),
                &grid,
            )
            .unwrap()
            .p2_raw
        };
        assert_close(raw(NoiseProtocol::PiPulse), 0.455, 5e-3);
        assert_close(raw(NoiseProtocol::OptimalSta), 0.465, 5e-3);
        assert_close(raw(NoiseProtocol::OptimalStaCorrected), 0.532, 5e-3);
    }

    #[test]
    fn monte_carlo_agrees_with_deterministic_p2() {
        use crate::stochastic::{stochastic_bloch_oracle, NoisyDriveSystem};
        let t_total = 1.0;
        let (lambda, gpt) = (0.3, 6.0);
        let grid = TimeGrid::new(0.0, t_total, 1000).unwrap();
        let scenario =
            NoiseScenario::new(NoiseProtocol::OptimalSta, lambda, gpt, t_total).unwrap();
        let det = run_noise_scenario_detailed(&scenario, &grid).unwrap();

        let path = optimal_sta_path(t_total);
        let (pr, pi) = (path.clone(), path.clone());
        let gamma_perp = gpt / t_total;
        let sys = NoisyDriveSystem::new(
            move |t| optimal_sta_pulses(&pr, t).0,
            move |t| optimal_sta_pulses(&pi, t).1,
            |_| 0.0,
            lambda,
        )
        .with_static_tensor(move |_| DissipationTensor::transverse(gamma_perp).unwrap());
        let mc = stochastic_bloch_oracle(&sys, RealVec3::Z, 0xB10C, 2000, &grid).unwrap();
        let m = *mc.mean.last().unwrap();
        let sem = *mc.sem.last().unwrap();
        let p2_mc = p2_of(&m).unwrap();
        // propagate the standard errors through P2 = (1 - Sz/|S|)/2
        let r = m.norm();
        let grad = RealVec3::new(
            m.z * m.x / (2.0 * r.powi(3)),
            m.z * m.y / (2.0 * r.powi(3)),
            -(r * r - m.z * m.z) / (2.0 * r.powi(3)),
        );
        let sigma = ((grad.x * sem.x).powi(2)
            + (grad.y * sem.y).powi(2)
            + (grad.z * sem.z).powi(2))
        .sqrt();
        let diff = (p2_mc - det.p2_hat).abs();
        assert!(
            diff <= 3.0 * sigma + 2e-3,
            "P2 mismatch: mc {p2_mc}, det {}, diff {diff}, 3 sigma {}",
            det.p2_hat,
            3.0 * sigma
        );
    }
}
