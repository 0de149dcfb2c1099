//! `segrec run <scenario-file>`: parse a scenario, execute its requests, and
//! emit a deterministic report. Exit codes: 0 success, 2 parse error, 3 when
//! any request failed.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use segrec_core::{parse_scenario, render_report, run_scenario, Outcome, ReportFormat};

#[derive(Parser)]
#[command(name = "segrec", about = "Segre/Chern current engine scenario runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and print the report.
    Run {
        /// Path to the scenario file.
        scenario_file: PathBuf,
        /// Output format.
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        /// Write the report to a file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    JsonLike,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Command::Run { scenario_file, format, out } = cli.command;

    let text = match std::fs::read_to_string(&scenario_file) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {}", scenario_file.display(), e);
            return ExitCode::from(2);
        }
    };
    let scenario = match parse_scenario(&text) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("parse error: {}: {}", scenario_file.display(), e);
            return ExitCode::from(2);
        }
    };
    let report = run_scenario(&scenario);
    let rendered = render_report(
        &report,
        match format {
            Format::Text => ReportFormat::Text,
            Format::JsonLike => ReportFormat::JsonLike,
        },
    );
    if let Some(path) = out {
        if let Err(e) = std::fs::write(&path, &rendered) {
            eprintln!("error: cannot write {}: {}", path.display(), e);
            return ExitCode::from(3);
        }
    } else {
        print!("{}", rendered);
    }
    let failed = report.items.iter().any(|i| {
        matches!(&i.outcome, Outcome::Error(_))
            || matches!(&i.outcome, Outcome::Oracle(rows) if rows.iter().any(|r| !r.pass))
    });
    if failed {
        ExitCode::from(3)
    } else {
        ExitCode::SUCCESS
    }
}
