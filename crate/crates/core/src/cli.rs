//! Command-line front end. Exit codes: 0 success, 1 configuration or usage
//! error, 2 runtime error.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::experiment::{
    self, load_config, output, realization_potential, ExperimentConfig, Parallelism,
};
use crate::observables::{fit_tails, TailFit, TailFitConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

const AFTER_HELP: &str = "\
Environment:
  KICKED_BEAM_THREADS  worker-pool size for ensembles (unset: auto-detect)

Exit status: 0 success, 1 configuration/usage error, 2 runtime error.";

#[derive(Debug, Parser)]
#[command(
    name = "kicked-beam",
    version,
    about = "Anderson localization of a beam kicked by a static speckle phase print",
    after_help = AFTER_HELP
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the full ensemble and write observables, profiles, potentials and a manifest.
    Run(RunArgs),
    /// Emit one potential realization as `x,V` CSV.
    Potential(PotentialArgs),
    /// Control run without potential, compared against analytic free spreading.
    Free(RunArgs),
    /// Fit exponential tails to an existing profile CSV.
    Tailfit(TailfitArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// TOML config file; defaults reproduce the reference experiment.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Base seed for the per-realization seed sequence.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Number of disorder realizations.
    #[arg(long, value_name = "N")]
    realizations: Option<usize>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Record observables every N kicks.
    #[arg(long, value_name = "N")]
    stride: Option<usize>,
    /// Replace the speckle potential by zero.
    #[arg(long)]
    no_potential: bool,
    /// Intensity fraction absorbed per reflection.
    #[arg(long, value_name = "ALPHA")]
    loss: Option<f64>,
}

#[derive(Debug, Args)]
struct PotentialArgs {
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Base seed; the potential is that of realization `--index`.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    #[arg(long, value_name = "N", default_value_t = 0)]
    index: usize,
    /// Write `potential.csv` into DIR instead of printing to stdout.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TailfitArgs {
    /// Profile CSV with `x` and `intensity` columns.
    #[arg(long, value_name = "PATH")]
    profile: PathBuf,
    /// Moving-average width (samples) for the smoothed fit.
    #[arg(long, value_name = "N", default_value_t = 11)]
    smooth: usize,
    /// Lower bound of the fit window relative to peak.
    #[arg(long, default_value_t = 1e-10)]
    window_lo: f64,
    /// Upper bound of the fit window relative to peak.
    #[arg(long, default_value_t = 1e-3)]
    window_hi: f64,
}

fn read_config(path: Option<&PathBuf>) -> Result<ExperimentConfig> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::config(p.display().to_string(), e.to_string()))?;
            load_config(&text)
        }
        None => Ok(ExperimentConfig::reference()),
    }
}

impl RunArgs {
    fn apply(&self) -> Result<ExperimentConfig> {
        let mut cfg = read_config(self.config.as_ref())?;
        if let Some(s) = self.seed {
            cfg.base_seed = s;
        }
        if let Some(n) = self.realizations {
            cfg.n_realizations = n;
        }
        if let Some(d) = &self.out {
            cfg.outputs.directory = d.clone();
        }
        if let Some(s) = self.stride {
            cfg.evolution.record_stride = s;
        }
        if self.no_potential {
            cfg.disable_potential = true;
        }
        if let Some(a) = self.loss {
            cfg.evolution.loss_per_kick = a;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn report(manifest: &experiment::RunManifest) {
    for r in &manifest.realizations {
        for w in &r.warnings {
            eprintln!("warning: realization {}: {w}", r.index);
        }
        if let Some(e) = &r.error {
            eprintln!("error: realization {} failed: {e}", r.index);
        }
    }
}

fn run_command(cmd: Command, stdout: &mut dyn Write) -> Result<()> {
    let io_err = |e| Error::io("<stdout>", e);
    match cmd {
        Command::Run(args) => {
            let cfg = args.apply()?;
            let manifest = experiment::run_ensemble(&cfg, Parallelism::from_env()?)?;
            report(&manifest);
            writeln!(
                stdout,
                "wrote {} files and {} to {}",
                manifest.files.len(),
                experiment::MANIFEST_FILE,
                cfg.outputs.directory.display()
            )
            .map_err(io_err)?;
        }
        Command::Free(args) => {
            let cfg = args.apply()?;
            let (manifest, table) = experiment::run_free(&cfg, Parallelism::from_env()?)?;
            report(&manifest);
            writeln!(stdout, "wrote {}", table.display()).map_err(io_err)?;
        }
        Command::Potential(args) => {
            let mut cfg = read_config(args.config.as_ref())?;
            if let Some(s) = args.seed {
                cfg.base_seed = s;
            }
            cfg.validate()?;
            let grid = Arc::new(cfg.grid()?);
            let pot = realization_potential(&cfg, &grid, args.index)?;
            let bytes = output::potential_csv(&pot);
            match args.out {
                Some(dir) => {
                    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
                    let path = dir.join("potential.csv");
                    output::write_artifact(&path, &bytes)?;
                    writeln!(stdout, "wrote {}", path.display()).map_err(io_err)?;
                }
                None => stdout.write_all(&bytes).map_err(io_err)?,
            }
        }
        Command::Tailfit(args) => {
            let profile = output::read_profile(&args.profile)?;
            let raw = TailFitConfig {
                rel_lo: args.window_lo,
                rel_hi: args.window_hi,
                ..TailFitConfig::default()
            };
            let smoothed = TailFitConfig {
                smoothing_window: args.smooth,
                ..raw.clone()
            };
            writeln!(
                stdout,
                "fit,side,slope,intercept,rms_residual,curvature_index,n_samples,classification,localization_length"
            )
            .map_err(io_err)?;
            for (label, cfg) in [("raw", raw), ("smoothed", smoothed)] {
                let (left, right) = fit_tails(&profile, &cfg)?;
                for t in [left, right] {
                    writeln!(stdout, "{}", tail_row(label, &t)).map_err(io_err)?;
                }
            }
        }
    }
    Ok(())
}

fn tail_row(label: &str, t: &TailFit) -> String {
    let class = if t.is_exponential() { "exponential" } else { "non-exponential" };
    let xi = t
        .localization_length()
        .map(output::fmt_float)
        .unwrap_or_else(|| "nan".into());
    format!(
        "{label},{},{},{},{},{},{},{class},{xi}",
        t.side.name(),
        output::fmt_float(t.slope),
        output::fmt_float(t.intercept),
        output::fmt_float(t.rms_residual),
        output::fmt_float(t.curvature_index),
        t.n_samples,
    )
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let mut stdout = std::io::stdout().lock();
    match run_command(cli.command, &mut stdout) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                EXIT_CONFIG
            } else {
                EXIT_RUNTIME
            }
        }
    }
}
