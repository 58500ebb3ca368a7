//! Command-line entry point: scenario runs, configuration validation, and
//! figure-data emission.
//!
//! ```text
//! dissicorr run <config.json> [--out <dir>]
//! dissicorr figure <fig1|fig2|fig3|figS1> [--out <dir>]
//! dissicorr validate <config.json>
//! ```
//!
//! The default output directory is $DISSICORR_OUT, falling back to ./out.
//! Exit codes: 0 ok, 1 configuration error, 2 numeric/singular error.

mod config;
mod error;
mod figures;
mod output;
mod scenarios;

use std::path::PathBuf;
use std::time::Instant;

use config::parse_config;
use error::CliError;
use figures::emit_figure_data;
use output::{write_csv, write_metrics};
use scenarios::run_scenario;

const USAGE: &str = "usage:
  dissicorr run <config.json> [--out <dir>]
  dissicorr figure <fig1|fig2|fig3|figS1> [--out <dir>]
  dissicorr validate <config.json>

The default output directory is $DISSICORR_OUT, else ./out.";

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    match dispatch(&args) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("{e}");
            if matches!(e, CliError::Usage(_)) {
                eprintln!("{USAGE}");
            }
            std::process::exit(e.exit_code());
        }
    }
}

fn dispatch(args: &[String]) -> Result<(), CliError> {
    let (command, rest) = args
        .split_first()
        .ok_or_else(|| CliError::Usage("missing command".into()))?;
    match command.as_str() {
        "run" => cmd_run(rest),
        "figure" => cmd_figure(rest),
        "validate" => cmd_validate(rest),
        other => Err(CliError::Usage(format!("unknown command `{other}`"))),
    }
}

fn out_dir_from(rest: &[String]) -> Result<PathBuf, CliError> {
    let mut iter = rest.iter();
    while let Some(arg) = iter.next() {
        if arg == "--out" {
            let dir = iter
                .next()
                .ok_or_else(|| CliError::Usage("--out requires a directory".into()))?;
            return Ok(PathBuf::from(dir));
        }
    }
    Ok(std::env::var_os("DISSICORR_OUT")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("out")))
}

fn load(path: &str) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read config {path}: {e}")))
}

fn cmd_run(rest: &[String]) -> Result<(), CliError> {
    let path = rest
        .first()
        .filter(|a| !a.starts_with("--"))
        .ok_or_else(|| CliError::Usage("run requires a config path".into()))?;
    let out_dir = out_dir_from(rest)?;
    let text = load(path)?;
    let config = parse_config(&text).map_err(CliError::Config)?;

    let start = Instant::now();
    let result = run_scenario(&config)?;
    let wall = start.elapsed().as_secs_f64();

    std::fs::create_dir_all(&out_dir)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", out_dir.display())))?;
    let name = config.name();
    let csv_path = match &result.csv {
        Some(table) => {
            let p = out_dir.join(format!("{name}.csv"));
            write_csv(&p, table.header, &table.rows)?;
            Some(p)
        }
        None => None,
    };
    let metrics_path = out_dir.join(format!("{name}_metrics.json"));
    write_metrics(
        &metrics_path,
        name,
        &text,
        &result.metrics,
        csv_path.as_deref(),
        wall,
    )?;
    for (key, value) in &result.metrics {
        println!("{key} = {value}");
    }
    println!("metrics written to {}", metrics_path.display());
    Ok(())
}

fn cmd_figure(rest: &[String]) -> Result<(), CliError> {
    let figure = rest
        .first()
        .filter(|a| !a.starts_with("--"))
        .ok_or_else(|| CliError::Usage("figure requires a figure id".into()))?;
    let out_dir = out_dir_from(rest)?;
    let paths = emit_figure_data(figure, &out_dir)?;
    for p in paths {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn cmd_validate(rest: &[String]) -> Result<(), CliError> {
    let path = rest
        .first()
        .ok_or_else(|| CliError::Usage("validate requires a config path".into()))?;
    let text = load(path)?;
    let config = parse_config(&text).map_err(CliError::Config)?;
    println!("ok: valid {} configuration", config.name());
    Ok(())
}
