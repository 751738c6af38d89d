use std::io::{Read, Write};
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use randlab_cli::{execute, Command, Overrides, RunRequest};
use randlab_core::suite::DEFAULT_SEED;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Cmd {
    Density,
    Porosity,
    Covering,
    Tests,
    Martingale,
    Extend,
    Counterexample,
    VerifyAll,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Density => Command::Density,
            Cmd::Porosity => Command::Porosity,
            Cmd::Covering => Command::Covering,
            Cmd::Tests => Command::Tests,
            Cmd::Martingale => Command::Martingale,
            Cmd::Extend => Command::Extend,
            Cmd::Counterexample => Command::Counterexample,
            Cmd::VerifyAll => Command::VerifyAll,
        }
    }
}

/// Exact verification runs over JSON instances.
///
/// Exit status: 0 all checks hold, 1 violation, 2 schema or input error, 3 budget exhausted.
#[derive(Parser, Debug)]
#[command(name = "randlab", version)]
struct Args {
    #[arg(value_enum)]
    command: Cmd,
    /// Instance document; `-` reads standard input. Omit to generate one from the seed.
    #[arg(long)]
    instance: Option<String>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Overrides the command's depth parameter.
    #[arg(long)]
    depth: Option<usize>,
    /// Overrides the command's stage bound.
    #[arg(long)]
    stages: Option<usize>,
    /// Full JSON report.
    #[arg(long, conflicts_with = "csv")]
    json: bool,
    /// CSV table of the report.
    #[arg(long)]
    csv: bool,
    /// Report destination; standard output when absent.
    #[arg(long, short)]
    output: Option<std::path::PathBuf>,
}

fn read_instance(path: &str) -> std::io::Result<String> {
    if path == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s)?;
        Ok(s)
    } else {
        std::fs::read_to_string(path)
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    let instance = match args.instance.as_deref().map(read_instance).transpose() {
        Ok(i) => i,
        Err(e) => {
            eprintln!("cannot read instance: {e}");
            return ExitCode::from(2);
        }
    };
    let req = RunRequest {
        command: args.command.into(),
        instance,
        seed: args.seed,
        overrides: Overrides {
            depth: args.depth,
            stages: args.stages,
        },
    };
    let report = execute(&req);
    let mut text = if args.json {
        report.to_json()
    } else if args.csv {
        report.to_csv()
    } else {
        report.summary()
    };
    if !text.ends_with('\n') {
        text.push('\n');
    }
    let written = match &args.output {
        Some(path) => std::fs::write(path, text),
        None => std::io::stdout().write_all(text.as_bytes()),
    };
    if let Err(e) = written {
        eprintln!("cannot write report: {e}");
        return ExitCode::from(2);
    }
    ExitCode::from(report.exit_code() as u8)
}
