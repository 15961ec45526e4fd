//! `qsl-lab` command-line interface.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::divisibility::{classify_with, DEFAULT_SAMPLES};
use crate::error::{Error, Result};
use crate::ode::Tolerances;
use crate::propagator::TimeGrid;
use crate::qsl::qsl_ratio_with;
use crate::rates::BUILTIN_MODELS;
use crate::scan::{qsl_surface_scan, trajectory_panel, write_panel_csv, ConfigFile, ModelSpec, ScanConfig, DEFAULT_HORIZON};
use crate::state::PureStateParam;

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "qsl-lab", version, about = "Quantum speed limits and divisibility of phase-covariant qubit dynamics")]
struct Cli {
    /// TOML config file; command-line flags take precedence.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Propagate one pure state and print populations, coherence, fidelity and running QSL ratio (CSV).
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        tol: TolArgs,
        /// Initial state parameter in [0, 1].
        #[arg(long)]
        a: Option<f64>,
        /// Final time.
        #[arg(long)]
        tau: Option<f64>,
        /// Number of output nodes.
        #[arg(long)]
        nodes: Option<usize>,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// QSL report for one initial state and horizon (JSON).
    Qsl {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        tol: TolArgs,
        #[arg(long)]
        a: Option<f64>,
        #[arg(long)]
        tau: Option<f64>,
    },
    /// QSL ratio over an (a, tau) grid (CSV).
    Scan {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        tol: TolArgs,
        #[arg(long)]
        a_count: Option<usize>,
        #[arg(long)]
        a_min: Option<f64>,
        #[arg(long)]
        a_max: Option<f64>,
        #[arg(long)]
        tau_count: Option<usize>,
        #[arg(long)]
        tau_max: Option<f64>,
        /// Window for the divisibility verdict stored in the metadata.
        #[arg(long)]
        horizon: Option<f64>,
        /// Worker threads (overrides QSL_LAB_THREADS).
        #[arg(long)]
        threads: Option<usize>,
        /// CSV destination; metadata goes to PATH.meta.json.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Divisibility class over [0, horizon] (JSON).
    Classify {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        horizon: Option<f64>,
        /// Samples per window.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// List built-in models and their parameters.
    Models,
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// Model name (see `models`).
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    nu: Option<f64>,
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long)]
    k: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Rate table for `--model table`.
    #[arg(long, value_name = "PATH")]
    rates: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TolArgs {
    #[arg(long)]
    rtol: Option<f64>,
    #[arg(long)]
    atol: Option<f64>,
}

impl ModelArgs {
    fn resolve(&self, file: &ConfigFile) -> Result<ModelSpec> {
        let mut spec = ModelSpec::new("");
        file.apply_model(&mut spec);
        let cli = ConfigFile {
            model: self.model.clone(),
            nu: self.nu,
            omega: self.omega,
            k: self.k,
            gamma: self.gamma,
            rates: self.rates.clone(),
            ..ConfigFile::default()
        };
        cli.apply_model(&mut spec);
        if spec.name.is_empty() {
            return Err(Error::Domain(format!("no model given; available: {}", model_names())));
        }
        Ok(spec)
    }
}

impl TolArgs {
    fn resolve(&self, file: &ConfigFile) -> Tolerances {
        let d = Tolerances::default();
        Tolerances {
            rtol: self.rtol.or(file.rtol).unwrap_or(d.rtol),
            atol: self.atol.or(file.atol).unwrap_or(d.atol),
        }
    }
}

fn model_names() -> String {
    BUILTIN_MODELS.iter().map(|(n, _)| *n).collect::<Vec<_>>().join(", ")
}

fn require<T>(v: Option<T>, flag: &str) -> Result<T> {
    v.ok_or_else(|| Error::Domain(format!("missing --{flag}")))
}

fn sink<'a>(path: Option<&PathBuf>, out: &'a mut dyn Write) -> Result<Box<dyn Write + 'a>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(out),
    })
}

fn execute(cli: Cli, out: &mut dyn Write) -> Result<()> {
    let file = match &cli.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    match cli.command {
        Command::Models => {
            for (name, doc) in BUILTIN_MODELS {
                writeln!(out, "{name:<16} {doc}")?;
            }
        }
        Command::Simulate { model, tol, a, tau, nodes, output } => {
            let spec = model.resolve(&file)?;
            let m = spec.build()?;
            let a = PureStateParam::new(require(a.or(file.a), "a")?)?;
            let tau = tau.or(file.tau).unwrap_or_else(|| spec.default_tau_max());
            let nodes = nodes.or(file.nodes).unwrap_or(crate::propagator::DEFAULT_NODES);
            let tol = tol.resolve(&file);
            let grid = TimeGrid::uniform(tau, nodes)?.with_tolerances(tol.rtol, tol.atol)?;
            let rows = trajectory_panel(&m, a, &grid)?;
            let mut w = sink(output.as_ref().or(file.output.as_ref()), out)?;
            write_panel_csv(&rows, &mut w)?;
            w.flush()?;
        }
        Command::Qsl { model, tol, a, tau } => {
            let m = model.resolve(&file)?.build()?;
            let a = PureStateParam::new(require(a.or(file.a), "a")?)?;
            let tau = require(tau.or(file.tau), "tau")?;
            let report = qsl_ratio_with(&m, a, tau, tol.resolve(&file))?;
            writeln!(out, "{}", serde_json::to_string_pretty(&report).expect("report serializes"))?;
        }
        Command::Scan { model, tol, a_count, a_min, a_max, tau_count, tau_max, horizon, threads, output } => {
            let mut cfg = ScanConfig::new(model.resolve(&file)?);
            cfg.apply_file(&file);
            cfg.tol = tol.resolve(&file);
            let cli = ConfigFile { a_count, a_min, a_max, tau_count, tau_max, horizon, threads, output, ..ConfigFile::default() };
            cfg.apply_file(&cli);
            let result = qsl_surface_scan(&cfg)?;
            match &cfg.output {
                Some(p) => {
                    let mut w = BufWriter::new(File::create(p)?);
                    result.write_csv(&mut w)?;
                    w.flush()?;
                    let mut meta = p.clone().into_os_string();
                    meta.push(".meta.json");
                    std::fs::write(meta, result.metadata_json() + "\n")?;
                }
                None => result.write_csv(&mut *out)?,
            }
        }
        Command::Classify { model, horizon, samples } => {
            let m = model.resolve(&file)?.build()?;
            let horizon = horizon.or(file.horizon).unwrap_or(DEFAULT_HORIZON);
            let verdict = classify_with(&m, horizon, samples.unwrap_or(DEFAULT_SAMPLES))?;
            writeln!(out, "{}", verdict.to_json())?;
        }
    }
    Ok(())
}

/// Runs the CLI on `args` (including the program name) and returns the
/// process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let help = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let text = e.render().to_string();
            if help {
                let _ = write!(out, "{text}");
                return EXIT_OK;
            }
            let _ = write!(err, "{text}");
            return EXIT_DOMAIN;
        }
    };
    match execute(cli, out) {
        Ok(()) => EXIT_OK,
        Err(Error::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_numerical() {
                EXIT_NUMERICAL
            } else {
                EXIT_DOMAIN
            }
        }
    }
}
