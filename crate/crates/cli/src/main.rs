use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde_json::Value;
use zeno_core::experiments::{self, apply_override, ExperimentConfig, ExperimentKind, RunDirectory};

/// Simulations of Zeno freezing in adiabatic Grover search.
#[derive(Debug, Parser)]
#[command(name = "zeno", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Worker threads for parameter sweeps (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Print the run summary and written files.
    #[arg(long, short, global = true)]
    verbose: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Spectrum of H(f) against f and against t.
    Spectrum(RunArgs),
    /// Tabulate the interpolation schedule f(t).
    Schedule(RunArgs),
    /// One open-system trajectory.
    Evolve(RunArgs),
    /// Two-level Bloch laboratory tables.
    Bloch(RunArgs),
    /// Damped oscillator with memory kernel.
    Oscillator(RunArgs),
    /// Final success against the measurement rate Γ.
    ZenoSweep(RunArgs),
    /// Run-time and mixing-time scaling with N.
    Scaling(RunArgs),
    /// Second-order error estimate against the exact bath-qubit oracle.
    Perturbation(RunArgs),
    /// Check a configuration without running it.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// JSON configuration; defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Run directory (default: $ZENO_OUT/<experiment>).
    #[arg(long)]
    out: Option<PathBuf>,

    /// Override a configuration key, e.g. `--set bath.gamma0=0.5`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    #[arg(long)]
    seed: Option<u64>,

    /// Root for default run directories.
    #[arg(long, env = "ZENO_OUT", default_value = "runs", hide_env_values = true)]
    out_root: PathBuf,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[arg(long)]
    config: PathBuf,

    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

/// Failure classes mapped onto exit codes.
enum Failure {
    Config(anyhow::Error),
    Compute(anyhow::Error),
}

impl Failure {
    fn report(&self) -> ExitCode {
        let (stage, err, code) = match self {
            Failure::Config(e) => ("config", e, 2),
            Failure::Compute(e) => ("compute", e, 1),
        };
        let chain: Vec<String> = err.chain().map(|c| c.to_string()).collect();
        let msg = serde_json::json!({
            "status": "error",
            "stage": stage,
            "message": chain.join(": "),
        });
        eprintln!("{msg}");
        ExitCode::from(code)
    }
}

fn kind_of(cmd: &Command) -> Option<ExperimentKind> {
    Some(match cmd {
        Command::Spectrum(_) => ExperimentKind::Spectrum,
        Command::Schedule(_) => ExperimentKind::Schedule,
        Command::Evolve(_) => ExperimentKind::Evolve,
        Command::Bloch(_) => ExperimentKind::Bloch,
        Command::Oscillator(_) => ExperimentKind::Oscillator,
        Command::ZenoSweep(_) => ExperimentKind::ZenoSweep,
        Command::Scaling(_) => ExperimentKind::Scaling,
        Command::Perturbation(_) => ExperimentKind::Perturbation,
        Command::Validate(_) => return None,
    })
}

fn read_json(path: &PathBuf) -> anyhow::Result<Value> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// File (or defaults), then the subcommand's experiment, then `--set` and
/// `--seed`; validated last.
fn resolve(
    path: Option<&PathBuf>,
    kind: Option<ExperimentKind>,
    overrides: &[String],
    seed: Option<u64>,
) -> anyhow::Result<ExperimentConfig> {
    let mut value = match path {
        Some(p) => read_json(p)?,
        None => serde_json::json!({}),
    };
    let obj = value
        .as_object_mut()
        .ok_or_else(|| anyhow::anyhow!("configuration must be a JSON object"))?;
    if let Some(kind) = kind {
        let want = serde_json::to_value(kind)?;
        match obj.get("experiment") {
            Some(found) if *found != want => {
                anyhow::bail!("config declares experiment {found} but the subcommand runs {want}")
            }
            _ => {
                obj.insert("experiment".into(), want);
            }
        }
    }
    for o in overrides {
        apply_override(&mut value, o)?;
    }
    if let Some(s) = seed {
        apply_override(&mut value, &format!("seed={s}"))?;
    }
    let config: ExperimentConfig = serde_json::from_value(value).context("invalid configuration")?;
    config.validate().context("invalid configuration")?;
    Ok(config)
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Config(e.into()))?;
    }
    let kind = kind_of(&cli.command);
    let args = match &cli.command {
        Command::Validate(v) => {
            let config = resolve(Some(&v.config), None, &v.overrides, None).map_err(Failure::Config)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&config).map_err(|e| Failure::Compute(e.into()))?
            );
            println!(
                "configuration is valid ({} trajectories)",
                config.trajectory_count()
            );
            return Ok(());
        }
        Command::Spectrum(a)
        | Command::Schedule(a)
        | Command::Evolve(a)
        | Command::Bloch(a)
        | Command::Oscillator(a)
        | Command::ZenoSweep(a)
        | Command::Scaling(a)
        | Command::Perturbation(a) => a,
    };
    let config = resolve(args.config.as_ref(), kind, &args.overrides, args.seed).map_err(Failure::Config)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&config).map_err(|e| Failure::Compute(e.into()))?
    );

    let out = match &args.out {
        Some(p) => p.clone(),
        None => {
            let name = serde_json::to_value(config.experiment)
                .ok()
                .and_then(|v| v.as_str().map(str::to_owned))
                .unwrap_or_else(|| "run".into());
            args.out_root.join(name)
        }
    };
    let compute = |e: zeno_core::Error| Failure::Compute(e.into());
    let dir = RunDirectory::create(&out).map_err(compute)?;
    let summary = experiments::run(&config, &dir).map_err(compute)?;
    let inputs: Vec<String> = args.config.iter().map(|p| p.display().to_string()).collect();
    let manifest = dir.finish(&config, &inputs).map_err(compute)?;
    if cli.verbose {
        eprintln!("{}", serde_json::to_string_pretty(&summary).unwrap_or_default());
        for f in &manifest.outputs {
            eprintln!("wrote {}", dir.file(f).display());
        }
    }
    println!("results in {}", out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // clap exits with 0 for --help/--version and 2 for usage errors
            e.exit();
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => f.report(),
    }
}
