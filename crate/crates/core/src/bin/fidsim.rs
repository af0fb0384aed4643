use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use fidsim::config::{parse_config, preset, serialize, PresetPlan, RunConfig, Seed, PRESETS};
use fidsim::experiment::{
    emit_csv, render_residual_csv, residual_sweep, run_experiment, write_file,
};
use fidsim::validate::run_checks;
use fidsim::{FidError, Result};

const WORKERS_ENV: &str = "FIDSIM_WORKERS";

#[derive(Parser, Debug)]
#[command(
    name = "fidsim",
    version,
    about = "Free-induction-decay simulator for coupled spin-1/2 systems"
)]
struct Cli {
    /// Worker threads (default: $FIDSIM_WORKERS, else all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one configuration file.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// CSV path (default: the config's output.path, else stdout).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run a built-in figure experiment.
    Preset {
        name: String,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        realizations: Option<u64>,
        /// Print the configuration(s) instead of running.
        #[arg(long)]
        print_config: bool,
    },
    /// Run a configuration over a list of parameter values.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        param: SweepParam,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Run the self-check suite.
    Validate {
        #[arg(long, default_value_t = 4096)]
        realizations: u64,
    },
    /// List built-in presets.
    ListPresets,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SweepParam {
    M,
    Width,
    Seed,
    Realizations,
}

impl SweepParam {
    fn label(self) -> &'static str {
        match self {
            SweepParam::M => "m",
            SweepParam::Width => "width",
            SweepParam::Seed => "seed",
            SweepParam::Realizations => "realizations",
        }
    }

    fn apply(self, config: &mut RunConfig, value: f64) -> Result<()> {
        let as_count = |v: f64| {
            if v >= 0.0 && v.fract() == 0.0 && v <= u64::MAX as f64 {
                Ok(v as u64)
            } else {
                Err(FidError::Config(format!(
                    "{} must be a non-negative integer, got {v}",
                    self.label()
                )))
            }
        };
        match self {
            SweepParam::M => config.system.magnification = value,
            SweepParam::Width => config.noise.width_hz = value,
            SweepParam::Seed => config.ensemble.seed = Seed(as_count(value)?),
            SweepParam::Realizations => config.ensemble.n_realizations = as_count(value)?,
        }
        config.validate()
    }
}

fn workers(cli: Option<usize>) -> Result<Option<usize>> {
    if cli.is_some() {
        return Ok(cli);
    }
    match std::env::var(WORKERS_ENV) {
        Ok(v) if !v.trim().is_empty() => v.trim().parse().map(Some).map_err(|_| {
            FidError::Config(format!(
                "{WORKERS_ENV} must be a positive integer, got {v:?}"
            ))
        }),
        _ => Ok(None),
    }
}

fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| FidError::io(path, e))?;
    parse_config(&text)
}

fn simulate(config: &RunConfig, output: Option<&Path>, workers: Option<usize>) -> Result<()> {
    let exp = run_experiment(config, workers)?;
    match output.or(config.output.path.as_deref()) {
        Some(path) => {
            emit_csv(&exp, path)?;
            eprintln!("wrote {}", path.display());
        }
        None => print!("{}", fidsim::experiment::render_csv(&exp)?),
    }
    Ok(())
}

fn run_preset(
    name: &str,
    out_dir: &Path,
    seed: Option<u64>,
    realizations: Option<u64>,
    print_config: bool,
    workers: Option<usize>,
) -> Result<()> {
    let mut plan = preset(name)?;
    if let Some(s) = seed {
        plan.set_seed(s);
    }
    if let Some(n) = realizations {
        plan.set_realizations(n);
    }
    if print_config {
        for c in plan.configs_mut() {
            println!("{}", serialize(c)?);
        }
        return Ok(());
    }
    match plan {
        PresetPlan::Runs(runs) => {
            for run in runs {
                simulate(
                    &run.config,
                    Some(&out_dir.join(format!("{}.csv", run.stem))),
                    workers,
                )?;
            }
        }
        PresetPlan::Residual {
            base,
            magnifications,
        } => {
            let rows = residual_sweep(&base, &magnifications, workers)?;
            let path = out_dir.join(format!("{name}.csv"));
            write_file(&path, &render_residual_csv(&rows, &base)?)?;
            for r in &rows {
                let analytic = r
                    .analytic
                    .map(|a| format!("{a:.5}"))
                    .unwrap_or_else(|| "-".into());
                eprintln!(
                    "m={:<4} R_numeric={:.5} R_analytic={analytic}",
                    r.magnification, r.numeric
                );
            }
            eprintln!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn sweep(
    config: &RunConfig,
    param: SweepParam,
    values: &[f64],
    out_dir: &Path,
    workers: Option<usize>,
) -> Result<()> {
    let stem = config
        .output
        .path
        .as_deref()
        .and_then(Path::file_stem)
        .and_then(|s| s.to_str())
        .unwrap_or("sweep")
        .to_string();
    for &v in values {
        let mut c = config.clone();
        param.apply(&mut c, v)?;
        let path = out_dir.join(format!("{stem}_{}={v}.csv", param.label()));
        simulate(&c, Some(&path), workers)?;
    }
    Ok(())
}

fn validate(realizations: u64) -> Result<bool> {
    let mut all = true;
    for (check, secs) in run_checks(realizations)? {
        let status = if check.passed { "PASS" } else { "FAIL" };
        println!(
            "{status}  {:<48} {}  [{secs:.2}s]",
            check.name, check.detail
        );
        all &= check.passed;
    }
    Ok(all)
}

fn run(cli: Cli) -> Result<ExitCode> {
    let workers = workers(cli.workers)?;
    match cli.command {
        Command::Simulate { config, output } => {
            simulate(&load_config(&config)?, output.as_deref(), workers)?
        }
        Command::Preset {
            name,
            out_dir,
            seed,
            realizations,
            print_config,
        } => run_preset(&name, &out_dir, seed, realizations, print_config, workers)?,
        Command::Sweep {
            config,
            param,
            values,
            out_dir,
        } => sweep(&load_config(&config)?, param, &values, &out_dir, workers)?,
        Command::Validate { realizations } => {
            if !validate(realizations)? {
                return Ok(ExitCode::from(3));
            }
        }
        Command::ListPresets => {
            for name in PRESETS {
                println!("{name}");
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
