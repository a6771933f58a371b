mod args;
mod commands;
mod output;

use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;

use args::{Cli, Command};
use output::{CliError, CliResult, Run};

fn dispatch(command: &Command, run: &mut Run, resolved: Option<serde_json::Value>) -> CliResult<()> {
    match command {
        Command::Simulate(a) => commands::simulate(a, run),
        Command::Stationary(a) => commands::stationary(a, run),
        Command::Mixing(a) => commands::mixing(a, run),
        Command::HardcoreSample(a) => commands::hardcore(a, run),
        Command::Moments(a) => commands::moments(a, run),
        Command::Recover(a) => commands::recover(a, run),
        Command::Experiment(a) => {
            let value = match resolved {
                Some(v) => v,
                None => commands::load_experiment_config(a)?,
            };
            commands::experiment_from_value(value, run)
        }
        Command::Replay(_) => unreachable!("replay is resolved before dispatch"),
    }
}

fn real_main(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return output::usage("--threads must be >= 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    let (command, resolved) = match cli.command {
        Command::Replay(r) => {
            let m = commands::load_manifest(&r.manifest)?;
            (m.command, m.resolved)
        }
        c => (c, None),
    };
    let started = Instant::now();
    let mut run = Run::new(&cli.out_dir)?;
    dispatch(&command, &mut run, resolved)?;
    run.finish(&command, started.elapsed().as_secs_f64())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match real_main(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
