//! `psidocalc`: command-line front end for the symbol calculus.

mod args;
mod commands;
mod config;
mod reproduce;
mod report;

use args::{Cli, Command};
use clap::Parser;
use report::Outcome;
use std::io::Write;
use std::process::ExitCode;
use std::time::Instant;

fn init_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("PSIDO_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| anyhow::anyhow!("PSIDO_THREADS must be a positive integer, got `{v}`"))?;
        if n == 0 {
            anyhow::bail!("PSIDO_THREADS must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<Outcome> {
    init_threads()?;
    let file = config::load(cli.config.as_deref())?;
    let seed = cli.seed.or(file.seed).unwrap_or(0);
    let ctx = commands::Context { seed };
    match cli.command {
        Command::CheckClass(a) => commands::check_class(&ctx, config::merge(a, &file)?),
        Command::CheckAmplitude(a) => commands::check_amplitude(&ctx, config::merge(a, &file)?),
        Command::CheckNegligible(a) => commands::check_negligible(&ctx, config::merge(a, &file)?),
        Command::CheckSmoothing(a) => commands::check_smoothing(&ctx, config::merge(a, &file)?),
        Command::Certify(a) => commands::certify(&ctx, config::merge(a, &file)?),
        Command::Parametrix(a) => commands::parametrix(&ctx, config::merge(a, &file)?),
        Command::Compose(a) => commands::compose(&ctx, config::merge(a, &file)?),
        Command::Theta(a) => commands::theta(&ctx, config::merge(a, &file)?),
        Command::Apply(a) => commands::apply(&ctx, config::merge(a, &file)?),
        Command::WeakEq(a) => commands::weak_eq(&ctx, config::merge(a, &file)?),
        Command::OscInt(a) => commands::osc_int(&ctx, config::merge(a, &file)?),
        Command::Regularity(a) => commands::regularity(&ctx, config::merge(a, &file)?),
        Command::Reproduce(a) => reproduce::run(&ctx, config::merge(a, &file)?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let timing = cli.timing;
    let output = cli.output.clone();
    let t0 = Instant::now();
    match run(cli) {
        Ok(outcome) => {
            let pass = outcome.pass;
            let wall = timing.then(|| t0.elapsed().as_secs_f64());
            let text = outcome.into_report(wall).to_json();
            let written = match &output {
                Some(p) => std::fs::write(p, format!("{text}\n")).map_err(|e| format!("{}: {e}", p.display())),
                None => match writeln!(std::io::stdout().lock(), "{text}") {
                    Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.to_string()),
                    _ => Ok(()),
                },
            };
            if let Err(e) = written {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
            if pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
