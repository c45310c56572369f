use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use serde_json::json;
use yamabe_lab::{output_root, parse_config, run_command, LabError, Rayon, Verb};

/// Runs one verb and writes its artifacts under `<out>/<verb>/`.
#[derive(Debug, Parser)]
#[command(name = "yamabe-lab", version)]
struct Cli {
    verb: Verb,
    /// TOML configuration; omitted fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output root; overrides the environment and the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for independent runs.
    #[arg(long)]
    threads: Option<usize>,
}

fn run(cli: &Cli) -> Result<serde_json::Value, LabError> {
    let text = match &cli.config {
        Some(path) => std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?,
        None => String::new(),
    };
    let cfg = parse_config(&text)?;
    if let Some(n) = cli.threads {
        // Only fails if a global pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    let root = output_root(&cfg, cli.out.as_deref());
    let outcome = run_command(cli.verb, &cfg, &root, &Rayon)?;
    Ok(json!({
        "verb": cli.verb.name(),
        "dir": outcome.dir,
        "files": outcome.files,
        "checks": outcome.checks.len(),
    }))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
