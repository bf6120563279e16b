use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pfbcp::harness::experiment_presets;
use pfbcp::io::config::{parse_config_with, parse_override, parse_sweep_config, ConfigError, Entry, DEFAULT_OUTPUT_DIR};
use pfbcp::io::{convergence, convert, simulate, RunError};

#[derive(Parser)]
#[command(name = "pfbcp", version, about = "Phase-field diblock copolymer solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation and write snapshots and an energy log.
    Simulate(SimulateArgs),
    /// Run a temporal convergence sweep and print or write the table.
    Convergence(ConvergenceArgs),
    /// List the built-in experiment presets.
    Presets,
    /// Convert a binary snapshot to a CSV grid.
    Convert {
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Overrides {
    /// Config file of `key = value` lines.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Extra `key=value` override; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Overrides,
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    scheme: Option<String>,
    /// Time step, or a comma-separated list for one run each.
    #[arg(long, allow_hyphen_values = true)]
    dt: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    t_end: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    n: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    seed: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    phi_mean: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    snapshots: Option<String>,
    /// Run presets to their full end time.
    #[arg(long)]
    extended: bool,
    /// Output directory.
    #[arg(long, env = "PFBCP_OUT_DIR", default_value = DEFAULT_OUTPUT_DIR)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct ConvergenceArgs {
    #[command(flatten)]
    common: Overrides,
    /// 1, 2 or 3.
    #[arg(long)]
    table: Option<String>,
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    dt: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    n: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    benchmark_dt: Option<String>,
    /// CSV destination; printed to stdout when absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn read_text(config: &Option<PathBuf>) -> Result<String, RunError> {
    match config {
        None => Ok(String::new()),
        Some(p) => fs::read_to_string(p).map_err(|e| RunError::Io(pfbcp::io::IoError::Fs { path: p.clone(), source: e })),
    }
}

fn collect_overrides(common: &Overrides, flags: &[(&str, &Option<String>)]) -> Result<Vec<Entry>, ConfigError> {
    let mut out: Vec<Entry> = flags
        .iter()
        .filter_map(|(k, v)| {
            v.as_ref().map(|v| Entry {
                line: None,
                key: k.to_string(),
                value: v.clone(),
            })
        })
        .collect();
    for s in &common.set {
        out.push(parse_override(s)?);
    }
    Ok(out)
}

fn run(cli: Cli) -> Result<(), RunError> {
    match cli.command {
        Command::Simulate(a) => {
            let text = read_text(&a.common.config)?;
            let extended = a.extended.then(|| "true".to_string());
            let mut entries = collect_overrides(
                &a.common,
                &[
                    ("scheme", &a.scheme),
                    ("dt", &a.dt),
                    ("t_end", &a.t_end),
                    ("n", &a.n),
                    ("seed", &a.seed),
                    ("phi_mean", &a.phi_mean),
                    ("snapshots", &a.snapshots),
                    ("extended", &extended),
                ],
            )?;
            if let Some(p) = &a.preset {
                entries.insert(
                    0,
                    Entry {
                        line: None,
                        key: "preset".into(),
                        value: p.clone(),
                    },
                );
            }
            let cfg = parse_config_with(&text, &entries, a.out_dir)?;
            for r in simulate(&cfg)? {
                println!(
                    "dt = {:e}: {} steps to t = {}, monotonicity violations {}, mass drift {:e}",
                    r.dt, r.steps, r.final_time, r.ledger.monotonicity_violations, r.ledger.total_mass_drift
                );
            }
        }
        Command::Convergence(a) => {
            let text = read_text(&a.common.config)?;
            let mut entries = collect_overrides(
                &a.common,
                &[
                    ("table", &a.table),
                    ("scheme", &a.scheme),
                    ("dt", &a.dt),
                    ("n", &a.n),
                    ("benchmark_dt", &a.benchmark_dt),
                ],
            )?;
            if let Some(o) = &a.output {
                entries.push(Entry {
                    line: None,
                    key: "output".into(),
                    value: o.display().to_string(),
                });
            }
            let cfg = parse_sweep_config(&text, &entries)?;
            let table = convergence(&cfg)?;
            if cfg.output.is_none() {
                print!("{}", table.to_csv());
            }
        }
        Command::Presets => {
            for p in experiment_presets() {
                let dts: Vec<String> = p.dts.iter().map(|d| format!("{d:e}")).collect();
                println!(
                    "{:<6} {:<12} alpha = {:<6} beta = {:<4} mean = {:<4} dt = {:<28} t_end = {:<5} {}",
                    p.name,
                    p.scheme.name(),
                    p.params.alpha,
                    p.params.beta,
                    p.phi_mean,
                    dts.join(","),
                    p.full_t_end,
                    p.description
                );
            }
        }
        Command::Convert { input, output } => {
            let path = convert(&input, output.as_deref())?;
            println!("{}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
