mod args;
mod error;
mod files;
mod manifest;
mod model;
mod simulate;
mod theory;

use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use serde_json::Value;

use args::{Cli, Command};
use error::CliResult;
use files::Artifacts;
use manifest::{status_name, RunManifest};

/// What a subcommand reports back for the manifest.
pub struct Outcome {
    pub config: Value,
    pub failures: Vec<Value>,
    /// Set when the run finished but some method produced nothing.
    pub partial: Option<String>,
}

impl Outcome {
    pub fn new(config: Value) -> Self {
        Self { config, failures: Vec::new(), partial: None }
    }
}

fn subcommand_name(c: &Command) -> &'static str {
    match c {
        Command::Fit(_) => "fit",
        Command::Predict(_) => "predict",
        Command::Tune(_) => "tune",
        Command::Simulate(_) => "simulate",
        Command::Theory(_) => "theory",
    }
}

fn dispatch(cli: &Cli, art: &mut Artifacts) -> CliResult<Outcome> {
    let outcome = match &cli.command {
        Command::Fit(a) => model::fit(a, art)?,
        Command::Predict(a) => model::predict(a, art)?,
        Command::Tune(a) => model::tune(a, art)?,
        Command::Simulate(a) => simulate::simulate(a, cli.seed, art)?,
        Command::Theory(a) => theory::theory(a, cli.seed, art)?,
    };
    art.verify_inputs()?;
    Ok(outcome)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    let threads = rayon::current_num_threads();
    let mut art = Artifacts::new(&cli.out_dir);
    let result = dispatch(&cli, &mut art);

    let (exit_code, config, failures, message) = match result {
        Ok(o) => match o.partial {
            Some(msg) => (1, o.config, o.failures, Some(msg)),
            None => (0, o.config, o.failures, None),
        },
        Err(e) => (e.exit_code(), Value::Null, Vec::new(), Some(e.to_string())),
    };
    let manifest = RunManifest {
        subcommand: subcommand_name(&cli.command).into(),
        artifact_version: env!("CARGO_PKG_VERSION"),
        seed: cli.seed,
        threads,
        config,
        inputs: std::mem::take(&mut art.inputs),
        outputs: std::mem::take(&mut art.outputs),
        failures,
        status: status_name(exit_code),
        exit_code,
        error: message.clone(),
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    };
    if let Err(e) = art.write_json_pretty(Path::new("manifest.json"), &manifest) {
        eprintln!("error: cannot write manifest: {e}");
        return ExitCode::from(exit_code.max(2));
    }
    if let Some(m) = message {
        eprintln!("{}: {m}", if exit_code == 1 { "warning" } else { "error" });
    }
    ExitCode::from(exit_code)
}
