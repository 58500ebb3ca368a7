//! Dispatch from validated configurations to the library runners, collecting
//! named metrics and curve tables.

use std::collections::BTreeMap;

use serde_json::{json, Value};

use dissicorr_core::correction::correction_general;
use dissicorr_core::dynamics::{integrate_bloch, BlochSystem, FieldProtocol};
use dissicorr_core::energy::pi_pulse_energy_analysis;
use dissicorr_core::geometry::{quadratic_form, DissipationTensor, RealVec3, TimeGrid};
use dissicorr_core::noise::{
    optimal_sta_path, optimal_sta_pulses, run_noise_scenario_detailed, NoiseProtocol,
    NoiseScenario,
};
use dissicorr_core::quad::simpson;
use dissicorr_core::stirap::{run_stirap, StirapInitialState, StirapParams};
use dissicorr_core::stochastic::{stochastic_bloch_oracle, NoisyDriveSystem};

use crate::config::{
    EnergyConfig, EntangleConfig, NoiseConfig, PiPulseConfig, ScenarioConfig, StirapConfig,
    StirapInitialStateConfig,
};
use crate::error::CliError;

/// A curve table destined for a CSV file.
#[derive(Clone, Debug)]
pub struct CsvTable {
    pub header: &'static str,
    pub rows: Vec<Vec<f64>>,
}

/// Metrics plus an optional trajectory/curve table.
#[derive(Clone, Debug)]
pub struct ScenarioOutput {
    pub metrics: BTreeMap<String, Value>,
    pub csv: Option<CsvTable>,
}

pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioOutput, CliError> {
    match config {
        ScenarioConfig::Stirap(c) => run_stirap_scenario(c),
        ScenarioConfig::Noise(c) => run_noise(c),
        ScenarioConfig::Entangle(c) => run_entangle(c),
        ScenarioConfig::Energy(c) => run_energy(c),
        ScenarioConfig::PiPulse(c) => run_pi_pulse(c),
    }
}

fn run_stirap_scenario(c: &StirapConfig) -> Result<ScenarioOutput, CliError> {
    let params = StirapParams::new(c.epsilon, c.delta, c.gamma_t, 1.0)?;
    let grid = TimeGrid::new(0.0, 1.0, c.n_steps)?;
    let initial = match c.initial_state {
        StirapInitialStateConfig::Ket1 => StirapInitialState::Ket1,
        StirapInitialStateConfig::InvariantEigenstate => StirapInitialState::InvariantEigenstate,
    };
    let report = run_stirap(params, c.corrected, &grid, initial)?;
    let mut metrics = BTreeMap::new();
    metrics.insert("final_pop_1".into(), json!(report.final_pop_1));
    metrics.insert("final_pop_2".into(), json!(report.final_pop_2));
    metrics.insert("residual_12".into(), json!(report.residual_12));
    metrics.insert("p_hat_final".into(), json!(*report.p_hat.last().unwrap()));
    metrics.insert(
        "max_angle_error".into(),
        json!(report.tracking.max_angle_error),
    );
    metrics.insert(
        "max_norm_rel_error".into(),
        json!(report.tracking.max_norm_rel_error),
    );
    let rows = report
        .times_over_t
        .iter()
        .zip(report.p_hat.iter())
        .map(|(&t, &p)| vec![t, p])
        .collect();
    Ok(ScenarioOutput {
        metrics,
        csv: Some(CsvTable { header: "t_over_T,p_hat", rows }),
    })
}

fn run_noise(c: &NoiseConfig) -> Result<ScenarioOutput, CliError> {
    let grid = TimeGrid::new(0.0, c.duration, c.n_steps)?;
    let mut metrics = BTreeMap::new();
    let point = |protocol, gpt: f64| -> Result<_, CliError> {
        Ok(run_noise_scenario_detailed(
            &NoiseScenario::new(protocol, c.lambda, gpt, c.duration)?,
            &grid,
        )?)
    };
    for (protocol, name) in [
        (NoiseProtocol::PiPulse, "pi"),
        (NoiseProtocol::OptimalSta, "opt"),
        (NoiseProtocol::OptimalStaCorrected, "opt_corrected"),
    ] {
        let o = point(protocol, c.gamma_perp_t)?;
        metrics.insert(format!("p2_hat_{name}"), json!(o.p2_hat));
        metrics.insert(format!("p2_raw_{name}"), json!(o.p2_raw));
    }

    if let Some(mc) = &c.mc_check {
        let path = optimal_sta_path(c.duration);
        let (pr, pi) = (path.clone(), path.clone());
        let gamma_perp = c.gamma_perp_t / c.duration;
        let sys = NoisyDriveSystem::new(
            move |t| optimal_sta_pulses(&pr, t).0,
            move |t| optimal_sta_pulses(&pi, t).1,
            |_| 0.0,
            c.lambda,
        )
        .with_static_tensor(move |_| {
            DissipationTensor::transverse(gamma_perp).expect("non-negative rate")
        });
        let avg = stochastic_bloch_oracle(&sys, RealVec3::Z, mc.seed, mc.n_traj, &grid)?;
        let m = *avg.mean.last().unwrap();
        let sem = *avg.sem.last().unwrap();
        let r = m.norm();
        let p2_mc = 0.5 * (1.0 - m.z / r);
        let grad = RealVec3::new(
            m.z * m.x / (2.0 * r.powi(3)),
            m.z * m.y / (2.0 * r.powi(3)),
            -(r * r - m.z * m.z) / (2.0 * r.powi(3)),
        );
        let sigma = ((grad.x * sem.x).powi(2)
            + (grad.y * sem.y).powi(2)
            + (grad.z * sem.z).powi(2))
        .sqrt();
        metrics.insert("mc_p2_hat_opt".into(), json!(p2_mc));
        metrics.insert("mc_p2_sigma".into(), json!(sigma));
        metrics.insert("mc_n_traj".into(), json!(mc.n_traj));
    }

    let csv = match &c.sweep {
        None => None,
        Some(sweep) => {
            let rows = sweep
                .values()
                .into_iter()
                .map(|gpt| -> Result<Vec<f64>, CliError> {
                    Ok(vec![
                        gpt,
                        point(NoiseProtocol::PiPulse, gpt)?.p2_hat,
                        point(NoiseProtocol::OptimalSta, gpt)?.p2_hat,
                        point(NoiseProtocol::OptimalStaCorrected, gpt)?.p2_hat,
                    ])
                })
                .collect::<Result<Vec<_>, _>>()?;
            Some(CsvTable {
                header: "gamma_perp_T,p2_pi,p2_opt,p2_opt_corrected",
                rows,
            })
        }
    };
    Ok(ScenarioOutput { metrics, csv })
}

fn run_entangle(c: &EntangleConfig) -> Result<ScenarioOutput, CliError> {
    let form = if c.flipped_offset_correction {
        dissicorr_core::twospin::CorrectionForm::FlippedOffset
    } else {
        dissicorr_core::twospin::CorrectionForm::Frame
    };
    scan_with(c, form)
}

fn scan_with(
    c: &EntangleConfig,
    form: dissicorr_core::twospin::CorrectionForm,
) -> Result<ScenarioOutput, CliError> {
    use dissicorr_core::twospin::*;
    let grid = TimeGrid::new(0.0, c.duration, c.n_steps)?;
    let mut rows = Vec::new();
    for r in c.r_gamma.values() {
        let gamma_bell = c.gamma_bell_t / c.duration;
        let params = TwoSpinParams::new(
            1.0,
            c.omega_t / c.duration,
            r * gamma_bell,
            gamma_bell,
            1.0,
            c.duration,
        )?;
        let fields = TwoSpinFields::new(two_spin_angles(params.duration), params);
        let unc = bell_fidelity(
            &integrate_two_spin(&fields, None, TwoSpinFrame::Interaction, &grid)?.last(),
        )?;
        let cor = bell_fidelity(
            &integrate_two_spin(&fields, Some(form), TwoSpinFrame::Interaction, &grid)?.last(),
        )?;
        rows.push((r, unc, cor));
    }
    Ok(entangle_output(rows))
}

fn entangle_output(rows: Vec<(f64, f64, f64)>) -> ScenarioOutput {
    let mut metrics = BTreeMap::new();
    let min_cor = rows.iter().map(|r| r.2).fold(f64::INFINITY, f64::min);
    let min_unc = rows.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    metrics.insert("points".into(), json!(rows.len()));
    metrics.insert("min_fidelity_uncorrected".into(), json!(min_unc));
    metrics.insert("min_fidelity_corrected".into(), json!(min_cor));
    if let Some(last) = rows.last() {
        metrics.insert("fidelity_uncorrected_at_max_r".into(), json!(last.1));
        metrics.insert("fidelity_corrected_at_max_r".into(), json!(last.2));
    }
    ScenarioOutput {
        metrics,
        csv: Some(CsvTable {
            header: "r_gamma,fidelity_uncorrected,fidelity_corrected",
            rows: rows.into_iter().map(|(r, u, c)| vec![r, u, c]).collect(),
        }),
    }
}

fn run_energy(c: &EnergyConfig) -> Result<ScenarioOutput, CliError> {
    let mut rows = Vec::new();
    for &eps in &c.epsilons {
        let r = pi_pulse_energy_analysis(eps, c.gamma_perp, c.gyro)?;
        rows.push(vec![eps, r.t_bound, r.t_opt, r.e_pi, r.delta_e_pi, r.ratio]);
    }
    let first = pi_pulse_energy_analysis(c.epsilons[0], c.gamma_perp, c.gyro)?;
    let mut metrics = BTreeMap::new();
    metrics.insert("epsilon".into(), json!(c.epsilons[0]));
    metrics.insert("t_bound".into(), json!(first.t_bound));
    metrics.insert("t_opt".into(), json!(first.t_opt));
    metrics.insert("e_pi".into(), json!(first.e_pi));
    metrics.insert("delta_e_pi".into(), json!(first.delta_e_pi));
    metrics.insert("ratio".into(), json!(first.ratio));
    metrics.insert("e_pi_scaled".into(), json!(first.e_pi_scaled));
    metrics.insert("delta_e_pi_scaled".into(), json!(first.delta_e_pi_scaled));
    Ok(ScenarioOutput {
        metrics,
        csv: Some(CsvTable {
            header: "epsilon,t_bound,t_opt,e_pi,delta_e_pi,ratio",
            rows,
        }),
    })
}

/// Design direction of a constant-axis rotation (Rodrigues form).
fn rotated(axis: &RealVec3, v: &RealVec3, angle: f64) -> RealVec3 {
    let (s, c) = angle.sin_cos();
    *v * c + axis.cross(v) * s + *axis * (axis.dot(v) * (1.0 - c))
}

fn run_pi_pulse(c: &PiPulseConfig) -> Result<ScenarioOutput, CliError> {
    let duration = 1.0;
    let grid = TimeGrid::new(0.0, duration, c.n_steps)?;
    let axis = RealVec3::new(c.field_axis[0], c.field_axis[1], c.field_axis[2])
        .normalized()
        .expect("validated nonzero");
    let s_init = RealVec3::new(c.s_init[0], c.s_init[1], c.s_init[2])
        .normalized()
        .expect("validated nonzero");
    let rate = c.rotation_turns * std::f64::consts::TAU / duration;
    let tensor =
        DissipationTensor::axial(c.gamma_perp_t / duration, c.gamma_z_t / duration)?;
    let corrected = c.corrected;
    let design = move |t: f64| rotated(&axis, &s_init, rate * t);
    let field = FieldProtocol::new(
        move |t| {
            let mut b = axis * rate;
            if corrected {
                b = b
                    + correction_general(&design(t), &tensor, 1.0)
                        .expect("design direction is unit")
                        .b0;
            }
            b
        },
        grid,
    );
    let system = BlochSystem::new(field, tensor, 1.0);
    let traj = integrate_bloch(&system, s_init, &grid)?;

    // predicted decay along the design
    let rates: Vec<f64> = grid
        .nodes()
        .map(|t| quadratic_form(&tensor, &rotated(&axis, &s_init, rate * t)))
        .collect();
    let f_total = simpson(&rates, grid.step());
    let s = traj.last();
    let target = rotated(&axis, &s_init, rate * duration);
    let mut metrics = BTreeMap::new();
    metrics.insert("final_sx".into(), json!(s.x));
    metrics.insert("final_sy".into(), json!(s.y));
    metrics.insert("final_sz".into(), json!(s.z));
    metrics.insert("norm_ratio".into(), json!(s.norm()));
    metrics.insert("predicted_norm_ratio".into(), json!((-f_total).exp()));
    metrics.insert(
        "direction_error".into(),
        json!(s.normalized().map(|d| d.angle_to(&target)).unwrap_or(f64::NAN)),
    );
    let rows = traj
        .times
        .iter()
        .zip(traj.states.iter())
        .map(|(&t, sv)| vec![t, sv.x, sv.y, sv.z])
        .collect();
    Ok(ScenarioOutput {
        metrics,
        csv: Some(CsvTable { header: "t,sx,sy,sz", rows }),
    })
}
