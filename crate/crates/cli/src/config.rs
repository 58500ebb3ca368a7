//! JSON scenario configuration: one flat object per scenario selected by a
//! `scenario` tag, schema-checked with unknown keys as hard errors, plus
//! field-level validation before any computation runs.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use dissicorr_core::dynamics::DEFAULT_STEPS;

#[derive(Clone, Debug)]
pub enum ScenarioConfig {
    Stirap(StirapConfig),
    Noise(NoiseConfig),
    Entangle(EntangleConfig),
    Energy(EnergyConfig),
    PiPulse(PiPulseConfig),
}

impl ScenarioConfig {
    pub fn name(&self) -> &'static str {
        match self {
            ScenarioConfig::Stirap(_) => "stirap",
            ScenarioConfig::Noise(_) => "noise",
            ScenarioConfig::Entangle(_) => "entangle",
            ScenarioConfig::Energy(_) => "energy",
            ScenarioConfig::PiPulse(_) => "pi_pulse",
        }
    }
}

/// Parse and validate a configuration document.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, String> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| format!("invalid JSON: {e}"))?;
    let Value::Object(mut map) = value else {
        return Err("configuration must be a JSON object".into());
    };
    let scenario = match map.remove("scenario") {
        Some(Value::String(s)) => s,
        Some(_) => return Err("field `scenario` must be a string".into()),
        None => return Err("missing required field `scenario`".into()),
    };
    let rest = Value::Object(map);
    let parsed = match scenario.as_str() {
        "stirap" => ScenarioConfig::Stirap(from_value(rest)?),
        "noise" => ScenarioConfig::Noise(from_value(rest)?),
        "entangle" => ScenarioConfig::Entangle(from_value(rest)?),
        "energy" => ScenarioConfig::Energy(from_value(rest)?),
        "pi_pulse" => ScenarioConfig::PiPulse(from_value(rest)?),
        other => {
            return Err(format!(
                "unknown scenario `{other}`; expected one of stirap, noise, entangle, \
                 energy, pi_pulse"
            ))
        }
    };
    validate(&parsed)?;
    Ok(parsed)
}

fn from_value<T: for<'de> Deserialize<'de>>(v: Value) -> Result<T, String> {
    serde_json::from_value(v).map_err(|e| e.to_string())
}

fn validate(config: &ScenarioConfig) -> Result<(), String> {
    let non_negative = |name: &str, v: f64| {
        if v < 0.0 {
            Err(format!("field `{name}` must be >= 0, got {v}"))
        } else {
            Ok(())
        }
    };
    let positive = |name: &str, v: f64| {
        if !v.is_finite() || v <= 0.0 {
            Err(format!("field `{name}` must be > 0, got {v}"))
        } else {
            Ok(())
        }
    };
    match config {
        ScenarioConfig::Stirap(c) => {
            positive("epsilon", c.epsilon)?;
            if !(c.epsilon < c.delta && c.delta <= std::f64::consts::FRAC_PI_2) {
                return Err(format!(
                    "fields `epsilon`, `delta` must satisfy 0 < epsilon < delta <= pi/2, \
                     got {} and {}",
                    c.epsilon, c.delta
                ));
            }
            non_negative("gammaT", c.gamma_t)?;
            positive("n_steps", c.n_steps as f64)?;
        }
        ScenarioConfig::Noise(c) => {
            non_negative("lambda", c.lambda)?;
            non_negative("gamma_perp_T", c.gamma_perp_t)?;
            positive("duration", c.duration)?;
            positive("n_steps", c.n_steps as f64)?;
            if let Some(sweep) = &c.sweep {
                non_negative("sweep.min", sweep.min)?;
                if sweep.max < sweep.min {
                    return Err("field `sweep.max` must be >= `sweep.min`".into());
                }
                if sweep.points < 2 {
                    return Err("field `sweep.points` must be >= 2".into());
                }
            }
            if let Some(mc) = &c.mc_check {
                positive("mc_check.n_traj", mc.n_traj as f64)?;
            }
        }
        ScenarioConfig::Entangle(c) => {
            non_negative("gamma_bell_T", c.gamma_bell_t)?;
            positive("duration", c.duration)?;
            positive("n_steps", c.n_steps as f64)?;
            let values = c.r_gamma.values();
            if values.is_empty() {
                return Err("field `r_gamma` must contain at least one value".into());
            }
            for v in values {
                if v < 1.0 {
                    return Err(format!("field `r_gamma` entries must be >= 1, got {v}"));
                }
            }
        }
        ScenarioConfig::Energy(c) => {
            if c.epsilons.is_empty() {
                return Err("field `epsilons` must contain at least one value".into());
            }
            for &e in &c.epsilons {
                if !(e > 0.0 && e < 1.0) {
                    return Err(format!("field `epsilons` entries must lie in (0, 1), got {e}"));
                }
            }
            positive("gamma_perp", c.gamma_perp)?;
            if c.gyro == 0.0 {
                return Err("field `gyro` must be nonzero".into());
            }
        }
        ScenarioConfig::PiPulse(c) => {
            positive("rotation_turns", c.rotation_turns)?;
            non_negative("gamma_perp_T", c.gamma_perp_t)?;
            non_negative("gamma_z_T", c.gamma_z_t)?;
            positive("n_steps", c.n_steps as f64)?;
            let axis_norm =
                (c.field_axis[0].powi(2) + c.field_axis[1].powi(2) + c.field_axis[2].powi(2))
                    .sqrt();
            if axis_norm < 1e-12 {
                return Err("field `field_axis` must be a nonzero vector".into());
            }
            let init_norm =
                (c.s_init[0].powi(2) + c.s_init[1].powi(2) + c.s_init[2].powi(2)).sqrt();
            if init_norm < 1e-12 {
                return Err("field `s_init` must be a nonzero vector".into());
            }
        }
    }
    Ok(())
}

fn default_steps() -> usize {
    DEFAULT_STEPS
}

fn default_delta() -> f64 {
    std::f64::consts::FRAC_PI_4
}

/// Three-level transfer run.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct StirapConfig {
    pub epsilon: f64,
    /// Mid-time mixing angle; the default pi/4 gives the maximal
    /// intermediate-state population 1/2.
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(rename = "gammaT")]
    pub gamma_t: f64,
    pub corrected: bool,
    #[serde(default = "default_steps")]
    pub n_steps: usize,
    #[serde(default)]
    pub initial_state: StirapInitialStateConfig,
}

#[derive(Copy, Clone, Debug, Default, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum StirapInitialStateConfig {
    #[default]
    Ket1,
    InvariantEigenstate,
}

/// Noisy two-level inversion run, optionally with a damping sweep and a
/// Monte-Carlo cross-check.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub lambda: f64,
    #[serde(rename = "gamma_perp_T")]
    pub gamma_perp_t: f64,
    #[serde(default = "default_duration")]
    pub duration: f64,
    #[serde(default = "default_steps")]
    pub n_steps: usize,
    #[serde(default)]
    pub sweep: Option<SweepRange>,
    #[serde(default)]
    pub mc_check: Option<McCheck>,
}

fn default_duration() -> f64 {
    1.0
}

#[derive(Copy, Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SweepRange {
    #[serde(default)]
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl SweepRange {
    pub fn values(&self) -> Vec<f64> {
        (0..self.points)
            .map(|i| self.min + (self.max - self.min) * i as f64 / (self.points - 1) as f64)
            .collect()
    }
}

#[derive(Copy, Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct McCheck {
    pub n_traj: usize,
    #[serde(default)]
    pub seed: u64,
}

/// Entangled-state generation scan.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct EntangleConfig {
    pub r_gamma: RGammaSpec,
    #[serde(rename = "gamma_bell_T", default = "default_gamma_bell_t")]
    pub gamma_bell_t: f64,
    #[serde(rename = "omega_T", default = "default_omega_t")]
    pub omega_t: f64,
    /// Total time in units of 1/xi.
    #[serde(default = "default_entangle_duration")]
    pub duration: f64,
    #[serde(default = "default_steps")]
    pub n_steps: usize,
    /// Comparison mode: flip the sign of the longitudinal correction rate
    /// term and add the constant omega - 2 xi offset.
    #[serde(default)]
    pub flipped_offset_correction: bool,
}

fn default_gamma_bell_t() -> f64 {
    2.5
}

fn default_omega_t() -> f64 {
    2.0
}

fn default_entangle_duration() -> f64 {
    100.0
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(untagged)]
pub enum RGammaSpec {
    Values(Vec<f64>),
    Range(SweepRange),
}

impl RGammaSpec {
    pub fn values(&self) -> Vec<f64> {
        match self {
            RGammaSpec::Values(v) => v.clone(),
            RGammaSpec::Range(r) => r.values(),
        }
    }
}

/// Corrected pi-pulse energy table.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyConfig {
    pub epsilons: Vec<f64>,
    #[serde(default = "default_one")]
    pub gamma_perp: f64,
    #[serde(default = "default_one")]
    pub gyro: f64,
}

fn default_one() -> f64 {
    1.0
}

/// Constant-field precession with optional damping and correction.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PiPulseConfig {
    /// Total precession angle in turns (0.5 = pi pulse, 1.0 = full turn).
    #[serde(default = "default_half_turn")]
    pub rotation_turns: f64,
    #[serde(default = "default_y_axis")]
    pub field_axis: [f64; 3],
    #[serde(default = "default_z_init")]
    pub s_init: [f64; 3],
    #[serde(rename = "gamma_perp_T")]
    pub gamma_perp_t: f64,
    #[serde(rename = "gamma_z_T", default)]
    pub gamma_z_t: f64,
    pub corrected: bool,
    #[serde(default = "default_steps")]
    pub n_steps: usize,
}

fn default_half_turn() -> f64 {
    0.5
}

fn default_y_axis() -> [f64; 3] {
    [0.0, 1.0, 0.0]
}

fn default_z_init() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}
