use std::path::Path;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use coarsesmith::scenario::{builtin, run_scenario, Dec, ScenarioSpec, BUILTINS};

#[derive(Parser)]
#[command(name = "coarsesmith", version, about = "Fixed sets, nerves and Smith homology on finite metric windows")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file or a builtin scenario by name.
    Run {
        scenario: String,
        #[arg(long)]
        prime: Option<u32>,
        /// Coefficient field for the transfer identities.
        #[arg(long)]
        field: Option<u32>,
        #[arg(long)]
        window: Option<i64>,
        #[arg(long)]
        levels: Option<usize>,
        #[arg(long = "max-dim")]
        max_dim: Option<usize>,
        /// Comma-separated scan scales.
        #[arg(long, value_delimiter = ',')]
        scales: Option<Vec<f64>>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[arg(long)]
        seed: Option<u64>,
        /// Cross-check small complexes by dense elimination.
        #[arg(long)]
        oracle: bool,
    },
    /// List the builtin scenarios.
    List,
}

fn load(name: &str) -> Result<ScenarioSpec> {
    if let Some(s) = builtin(name) {
        return Ok(s);
    }
    let path = Path::new(name);
    if !path.exists() {
        bail!("{name} is neither a builtin scenario nor a file (builtins: {})", BUILTINS.join(", "));
    }
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {name}"))?;
    Ok(ScenarioSpec::from_json(&text)?)
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run() -> Result<u8> {
    let cli = Cli::parse();
    match cli.command {
        Command::List => {
            for b in BUILTINS {
                println!("{b}");
            }
            Ok(0)
        }
        Command::Run {
            scenario,
            prime,
            field,
            window,
            levels,
            max_dim,
            scales,
            format,
            seed,
            oracle,
        } => {
            let mut spec = load(&scenario)?;
            let p = &mut spec.params;
            if prime.is_some() {
                p.prime = prime;
            }
            if field.is_some() {
                p.field = field;
            }
            if let Some(l) = levels {
                p.levels = l;
            }
            if max_dim.is_some() {
                p.max_dim = max_dim;
            }
            if let Some(s) = scales {
                p.scales = Some(s.into_iter().map(Dec).collect());
            }
            if let Some(s) = seed {
                p.seed = s;
            }
            p.oracle |= oracle;
            if let Some(n) = window {
                spec.set_window(n);
            }
            let report = run_scenario(&spec)?;
            match format {
                Format::Json => println!("{}", report.to_json()),
                Format::Text => print!("{}", report.to_text()),
            }
            Ok(report.outcome.exit_code as u8)
        }
    }
}
