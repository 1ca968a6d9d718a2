//! `photoclone` command-line front end.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 invalid input.

mod input;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use num_complex::Complex64 as C64;
use photoclone::engine::{accumulate_output, gain_sweep, reproduce_tables, ExperimentConfig, GainSetting};
use photoclone::fock::PolarizationQubit;
use photoclone::Error;

use input::{apply_overrides, load_config, RunManifest};

#[derive(Debug, Parser)]
#[command(
    name = "photoclone",
    version,
    about = "Photon cloning by heterodyne measurement and feedback"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Configuration file (TOML or JSON) or a run manifest to replay.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Monte Carlo seed, overriding the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads, overriding the configuration.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed-form statistics at the optimal gain.
    Analytic {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        reflectivity: Option<f64>,
        /// Largest output photon number reported.
        #[arg(long)]
        n_max: Option<usize>,
        /// Photon-number cutoff; defaults to n_max + 2.
        #[arg(long)]
        cutoff: Option<usize>,
        /// `h`, `v`, `d`, `a`, `r`, `l`, or `re_h,im_h,re_v,im_v`.
        #[arg(long, allow_hyphen_values = true)]
        qubit: Option<String>,
    },
    /// Numerical average over measurement outcomes.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Fidelity over a list of gains or reflectivities.
    Sweep {
        #[command(flatten)]
        common: Common,
    },
}

/// An error together with its exit code.
#[derive(Debug)]
pub struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    pub fn validation(error: anyhow::Error) -> Self {
        Self { code: 2, error }
    }

    pub fn runtime(error: anyhow::Error) -> Self {
        Self { code: 1, error }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let invalid_input = matches!(
            e,
            Error::InvalidCutoff(_)
                | Error::UnnormalizedQubit(_)
                | Error::InvalidReflectivity(..)
                | Error::InvalidFeedback(_)
                | Error::UnreachableGain { .. }
                | Error::OutOfRange { .. }
                | Error::InvalidConfig(_)
        );
        let code = if invalid_input { 2 } else { 1 };
        Self {
            code,
            error: e.into(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Analytic {
            common,
            reflectivity,
            n_max,
            cutoff,
            qubit,
        } => cmd_analytic(common, reflectivity, n_max, cutoff, qubit),
        Command::Simulate { common } => cmd_simulate(common),
        Command::Sweep { common } => cmd_sweep(common),
    }
}

fn parse_qubit(text: &str) -> Result<PolarizationQubit, Failure> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let (h, v) = match text.trim().to_ascii_lowercase().as_str() {
        "h" => (C64::new(1.0, 0.0), C64::new(0.0, 0.0)),
        "v" => (C64::new(0.0, 0.0), C64::new(1.0, 0.0)),
        "d" => (C64::new(s, 0.0), C64::new(s, 0.0)),
        "a" => (C64::new(s, 0.0), C64::new(-s, 0.0)),
        "r" => (C64::new(s, 0.0), C64::new(0.0, -s)),
        "l" => (C64::new(s, 0.0), C64::new(0.0, s)),
        other => {
            let parts: Vec<f64> = other
                .split(',')
                .map(|p| p.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| Failure::validation(anyhow!("--qubit {text:?}: {e}")))?;
            let [hr, hi, vr, vi] = parts[..] else {
                return Err(Failure::validation(anyhow!(
                    "--qubit {text:?}: expected four numbers re_h,im_h,re_v,im_v"
                )));
            };
            (C64::new(hr, hi), C64::new(vr, vi))
        }
    };
    Ok(PolarizationQubit::new(h, v)?)
}

fn prepare_out(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir)
        .with_context(|| format!("creating {}", dir.display()))
        .map_err(Failure::runtime)
}

fn require_config(common: &Common) -> Result<ExperimentConfig, Failure> {
    let path = common
        .config
        .as_ref()
        .ok_or_else(|| Failure::validation(anyhow!("--config is required")))?;
    let config = apply_overrides(load_config(path)?, common.seed, common.workers);
    config.validate()?;
    Ok(config)
}

fn cmd_analytic(
    common: Common,
    reflectivity: Option<f64>,
    n_max: Option<usize>,
    cutoff: Option<usize>,
    qubit: Option<String>,
) -> Result<(), Failure> {
    let mut config = match &common.config {
        Some(path) => load_config(path)?,
        None => {
            let r = reflectivity
                .ok_or_else(|| Failure::validation(anyhow!("--reflectivity or --config is required")))?;
            let n = n_max.unwrap_or(4);
            ExperimentConfig::quadrature(r, PolarizationQubit::horizontal(), n + 2, n)
        }
    };
    if let Some(r) = reflectivity {
        config.reflectivity = r;
    }
    if let Some(n) = n_max {
        config.n_max = n;
        if cutoff.is_none() && common.config.is_none() {
            config.cutoff = n + 2;
        }
    }
    if let Some(c) = cutoff {
        config.cutoff = c;
    }
    if let Some(text) = &qubit {
        config.qubit = parse_qubit(text)?.into();
    }
    config.gain = GainSetting::Optimal;
    config.sweep = None;
    config.validate()?;

    prepare_out(&common.out)?;
    let manifest = RunManifest::start("analytic", &config);
    let report = reproduce_tables(&config)?.remove(0);
    let files = vec![
        output::write_json(&common.out.join("report.json"), &report).map_err(Failure::runtime)?,
        output::write_analytic_table(&common.out.join("table.csv"), &report).map_err(Failure::runtime)?,
    ];
    let manifest_path = manifest.finish(&common.out, files)?;
    for rec in &report.records {
        println!("N={} P(N)={:.6} F={:.6}", rec.n_total, rec.p_n, rec.fidelity);
    }
    println!("manifest: {}", manifest_path.display());
    Ok(())
}

fn cmd_simulate(common: Common) -> Result<(), Failure> {
    let config = require_config(&common)?;
    if config.sweep.is_some() {
        return Err(Failure::validation(anyhow!(
            "sweep: configuration lists a sweep; run the sweep subcommand instead"
        )));
    }
    prepare_out(&common.out)?;
    let manifest = RunManifest::start("simulate", &config);
    let report = accumulate_output(&config)?.report;
    for d in &report.diagnostics {
        eprintln!("note: {d}");
    }
    let files = vec![
        output::write_json(&common.out.join("report.json"), &report).map_err(Failure::runtime)?,
        output::write_simulation_table(&common.out.join("table.csv"), &report).map_err(Failure::runtime)?,
    ];
    let manifest_path = manifest.finish(&common.out, files)?;
    for rec in &report.records {
        match rec.fidelity_stderr {
            Some(se) => println!(
                "N={} P(N)={:.6} F={:.6} +- {:.2e}",
                rec.n_total, rec.p_n, rec.fidelity, se
            ),
            None => println!("N={} P(N)={:.6} F={:.6}", rec.n_total, rec.p_n, rec.fidelity),
        }
    }
    println!("truncation leakage: {:.3e}", report.truncation_leakage);
    println!("manifest: {}", manifest_path.display());
    Ok(())
}

fn cmd_sweep(common: Common) -> Result<(), Failure> {
    let config = require_config(&common)?;
    if config.sweep.is_none() {
        return Err(Failure::validation(anyhow!(
            "sweep: a gains or reflectivities list is required"
        )));
    }
    prepare_out(&common.out)?;
    let manifest = RunManifest::start("sweep", &config);
    let result = gain_sweep(&config)?;
    let files = vec![
        output::write_json(&common.out.join("sweep.json"), &result).map_err(Failure::runtime)?,
        output::write_sweep_table(&common.out.join("sweep.csv"), &result).map_err(Failure::runtime)?,
        output::write_argmax_table(&common.out.join("argmax.csv"), &result).map_err(Failure::runtime)?,
    ];
    let manifest_path = manifest.finish(&common.out, files)?;
    println!("{}", output::argmax_line(&result));
    println!("manifest: {}", manifest_path.display());
    Ok(())
}
