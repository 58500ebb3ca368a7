//! Figure-data emission. Each figure maps to a preset configuration file
//! (auditable data, not code) plus the derived companion runs; one CSV per
//! curve, deterministic bytes for a fixed preset.

use std::path::{Path, PathBuf};

use crate::config::{parse_config, ScenarioConfig};
use crate::error::CliError;
use crate::output::write_csv;
use crate::scenarios::run_scenario;

pub const FIGURES: [&str; 4] = ["fig1", "fig2", "fig3", "figS1"];

pub fn preset_text(figure: &str) -> Option<&'static str> {
    match figure {
        "fig1" => Some(include_str!("../presets/fig1.json")),
        "fig2" => Some(include_str!("../presets/fig2.json")),
        "fig3" => Some(include_str!("../presets/fig3.json")),
        "figS1" => Some(include_str!("../presets/fig_s1.json")),
        _ => None,
    }
}

/// Emit the CSV files of one figure into `out_dir`; returns the paths.
pub fn emit_figure_data(figure: &str, out_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let text = preset_text(figure).ok_or_else(|| {
        CliError::Usage(format!(
            "unknown figure `{figure}`; expected one of {}",
            FIGURES.join(", ")
        ))
    })?;
    let config = parse_config(text).map_err(CliError::Config)?;
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", out_dir.display())))?;
    match (figure, config) {
        ("fig1", ScenarioConfig::PiPulse(preset)) => {
            // dissipative trajectory vs its dissipationless counterpart,
            // directions normalized to unit length for plotting
            let mut paths = Vec::new();
            for (suffix, damped) in [("dissipative", true), ("dissipationless", false)] {
                let mut c = preset.clone();
                if !damped {
                    c.gamma_perp_t = 0.0;
                    c.gamma_z_t = 0.0;
                }
                let out = run_scenario(&ScenarioConfig::PiPulse(c))?;
                let table = out.csv.expect("pi_pulse emits a trajectory");
                let rows: Vec<Vec<f64>> = table
                    .rows
                    .iter()
                    .map(|r| {
                        let n = (r[1] * r[1] + r[2] * r[2] + r[3] * r[3]).sqrt();
                        vec![r[0], r[1] / n, r[2] / n, r[3] / n]
                    })
                    .collect();
                let path = out_dir.join(format!("fig1_{suffix}.csv"));
                write_csv(&path, "t,sx,sy,sz", &rows)?;
                paths.push(path);
            }
            Ok(paths)
        }
        ("fig2", config @ ScenarioConfig::Noise(_)) => {
            let out = run_scenario(&config)?;
            let table = out.csv.expect("sweep preset emits a table");
            let path = out_dir.join("fig2.csv");
            write_csv(&path, table.header, &table.rows)?;
            Ok(vec![path])
        }
        ("fig3", config @ ScenarioConfig::Entangle(_)) => {
            let out = run_scenario(&config)?;
            let table = out.csv.expect("scan emits a table");
            let path = out_dir.join("fig3.csv");
            write_csv(&path, table.header, &table.rows)?;
            Ok(vec![path])
        }
        ("figS1", ScenarioConfig::Stirap(preset)) => {
            let mut paths = Vec::new();
            for (suffix, corrected) in [("corrected", true), ("uncorrected", false)] {
                let mut c = preset.clone();
                c.corrected = corrected;
                let out = run_scenario(&ScenarioConfig::Stirap(c))?;
                let table = out.csv.expect("protocol run emits p_hat samples");
                let path = out_dir.join(format!("fig_s1_{suffix}.csv"));
                write_csv(&path, table.header, &table.rows)?;
                paths.push(path);
            }
            Ok(paths)
        }
        (fig, config) => Err(CliError::Config(format!(
            "preset for {fig} has unexpected scenario `{}`",
            config.name()
        ))),
    }
}
