mod args;
mod commands;
mod report;
mod source;

use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::Parser;
use qstrat_core::{Error, Result};
use serde_json::json;

use args::{Cli, Command};

fn run(cli: &Cli) -> Result<bool> {
    if let Some(t) = cli.common.threads {
        if t == 0 {
            return Err(Error::input("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
    }
    let start = Instant::now();
    let common = &cli.common;
    let outcome = match &cli.command {
        Command::Synth(a) => commands::synth(a, common)?,
        Command::Analyze(a) => commands::analyze(a, common)?,
        Command::Verify(a) => commands::verify(a, common)?,
        Command::Stratify(a) => commands::stratify(a, common)?,
        Command::Jones(a) => commands::jones(a, common)?,
        Command::ReifenbergCheck(a) => commands::reifenberg(a, common)?,
    };
    let mut doc = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "config": { "common": common, "args": &cli.command },
        "result": outcome.result,
    });
    if !common.deterministic {
        let now = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        doc["generated_at_unix"] = json!(now);
        doc["elapsed_seconds"] = json!(start.elapsed().as_secs_f64());
    }
    // synth writes its artifact to --out, so its report goes to stdout
    let out = match cli.command {
        Command::Synth(_) => None,
        _ => common.out.as_deref(),
    };
    report::emit(&doc, out)?;
    Ok(outcome.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(report::exit_code(&e) as u8)
        }
    }
}
