use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use corrwitness::config::{ExperimentConfig, KEYS, PRESETS};
use corrwitness::runner::{self, exit_code};
use corrwitness::Error;

#[derive(Parser)]
#[command(
    name = "corrwitness",
    version,
    about = "Trace-distance witness of initial system-environment correlations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep the evolution parameter and write the trace-distance curve
    Sweep(RunArgs),
    /// Simulate tomography counts and reconstruct the reduced state
    Tomo(RunArgs),
    /// Compare the initial-information bound with the largest increase
    Bound(RunArgs),
    /// Preset handling
    Presets {
        #[command(subcommand)]
        action: PresetAction,
    },
}

#[derive(Subcommand)]
enum PresetAction {
    /// List the embedded presets
    List,
    /// Print a preset as a config file
    Show { name: String },
}

#[derive(Args)]
struct RunArgs {
    /// Config file (key = value with sections)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named preset used as the starting point
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    out: Option<String>,
    #[command(flatten)]
    keys: KeyOverrides,
}

/// One flag per config key.
#[derive(Args)]
struct KeyOverrides {
    #[arg(long = "pixel_width_um", alias = "pixel-width-um")]
    pixel_width_um: Option<String>,
    #[arg(long = "slm_distance_mm", alias = "slm-distance-mm")]
    slm_distance_mm: Option<String>,
    #[arg(long = "half_window", alias = "half-window")]
    half_window: Option<String>,
    #[arg(long = "fwhm_mrad", alias = "fwhm-mrad")]
    fwhm_mrad: Option<String>,
    #[arg(long = "fwhm_of", alias = "fwhm-of")]
    fwhm_of: Option<String>,
    #[arg(long = "profile_table", alias = "profile-table")]
    profile_table: Option<String>,
    #[arg(long = "v0")]
    v0: Option<String>,
    #[arg(long = "phase1", allow_hyphen_values = true)]
    phase1: Option<String>,
    #[arg(long = "phase2", allow_hyphen_values = true)]
    phase2: Option<String>,
    #[arg(long = "a_start", alias = "a-start", allow_hyphen_values = true)]
    a_start: Option<String>,
    #[arg(long = "a_stop", alias = "a-stop", allow_hyphen_values = true)]
    a_stop: Option<String>,
    #[arg(long = "a_step", alias = "a-step")]
    a_step: Option<String>,
    #[arg(long = "a_tomo", alias = "a-tomo", allow_hyphen_values = true)]
    a_tomo: Option<String>,
    #[arg(long = "projector_set", alias = "projector-set")]
    projector_set: Option<String>,
    #[arg(long = "n_total", alias = "n-total")]
    n_total: Option<String>,
    #[arg(long = "random_trials", alias = "random-trials")]
    random_trials: Option<String>,
}

impl RunArgs {
    fn overrides(&self) -> Vec<(&'static str, &str)> {
        let k = &self.keys;
        let all: [(&'static str, &Option<String>); 18] = [
            ("pixel_width_um", &k.pixel_width_um),
            ("slm_distance_mm", &k.slm_distance_mm),
            ("half_window", &k.half_window),
            ("fwhm_mrad", &k.fwhm_mrad),
            ("fwhm_of", &k.fwhm_of),
            ("profile_table", &k.profile_table),
            ("v0", &k.v0),
            ("phase1", &k.phase1),
            ("phase2", &k.phase2),
            ("a_start", &k.a_start),
            ("a_stop", &k.a_stop),
            ("a_step", &k.a_step),
            ("a_tomo", &k.a_tomo),
            ("projector_set", &k.projector_set),
            ("n_total", &k.n_total),
            ("random_trials", &k.random_trials),
            ("seed", &self.seed),
            ("out", &self.out),
        ];
        all.into_iter()
            .filter_map(|(key, v)| v.as_deref().map(|v| (key, v)))
            .collect()
    }

    fn resolve(&self) -> Result<ExperimentConfig, Error> {
        let mut cfg = match &self.preset {
            Some(name) => ExperimentConfig::preset(name)?,
            None => ExperimentConfig::default(),
        };
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            cfg.apply_text(&text).map_err(|e| match e {
                Error::Parse { line, msg } => {
                    Error::Config(format!("{}:{line}: {msg}", path.display()))
                }
                other => other,
            })?;
        }
        for (key, value) in self.overrides() {
            cfg.set(key, value)
                .map_err(|e| Error::Config(format!("--{key}: {e}")))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Sweep(args) => {
            let out = runner::run_sweep(&args.resolve()?)?;
            let r = &out.report;
            println!(
                "increase_detected={} bound_satisfied={} argmax_a={} max_d={:.6} initial_d={:.6} i12={:.6}",
                r.increase_detected, r.bound_satisfied, r.argmax_a, r.max_d, r.initial_d, r.i12_bound
            );
            for f in out.files {
                println!("wrote {}", f.display());
            }
        }
        Command::Tomo(args) => {
            let out = runner::run_tomography(&args.resolve()?)?;
            let s = &out.summary;
            println!(
                "visibility={:.4}±{:.4} (model {:.6}) trace_distance_to_model={:.3e} converged={}",
                s.visibility,
                s.visibility_sigma,
                s.true_visibility,
                s.trace_distance_to_truth,
                s.converged
            );
            for f in out.files {
                println!("wrote {}", f.display());
            }
        }
        Command::Bound(args) => {
            let out = runner::run_bound_demo(&args.resolve()?)?;
            for c in &out.cases {
                println!(
                    "{}: I12={:.6} max_increase={:.6} margin={:.6}",
                    c.label, c.i12_bound, c.max_increase, c.margin
                );
            }
            for f in out.files {
                println!("wrote {}", f.display());
            }
        }
        Command::Presets { action } => match action {
            PresetAction::List => {
                for (name, about) in PRESETS {
                    println!("{name:<14} {about}");
                }
            }
            PresetAction::Show { name } => {
                print!("{}", ExperimentConfig::preset(&name)?.serialize())
            }
        },
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("error")).init();
    debug_assert_eq!(KEYS.len(), 18);
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
