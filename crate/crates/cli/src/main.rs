use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use katok::config::{parse_file, Command, ConfigError, Format, RunConfig, Settings};
use katok::suites;

#[derive(Parser)]
#[command(name = "katok", version, about = "Magnetic Katok examples on the two-sphere")]
struct Cli {
    #[command(subcommand)]
    action: Action,
}

#[derive(Subcommand)]
enum Action {
    /// Check the symplectomorphism Psi_s on random samples.
    VerifyPsi(Args),
    /// Integrate one trajectory and write it as a table.
    Simulate(Args),
    /// Check the Katok metric, potential and their identities.
    KatokVerify(Args),
    /// Periodic-orbit census on one energy level.
    Orbits(Args),
    /// C^2 convergence of the Katok sequence to the round data.
    Converge(Args),
    /// Reeb flow on the irrational ellipsoid.
    Ellipsoid(Args),
    /// The non-Katok family W and its convexity range.
    WFamily(Args),
    /// Run the command named in a config file.
    Run(Args),
}

#[derive(clap::Args)]
struct Args {
    /// TOML config file; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    settings: Settings,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match cli.action {
        Action::VerifyPsi(a) => (Some(Command::VerifyPsi), a),
        Action::Simulate(a) => (Some(Command::Simulate), a),
        Action::KatokVerify(a) => (Some(Command::KatokVerify), a),
        Action::Orbits(a) => (Some(Command::Orbits), a),
        Action::Converge(a) => (Some(Command::Converge), a),
        Action::Ellipsoid(a) => (Some(Command::Ellipsoid), a),
        Action::WFamily(a) => (Some(Command::WFamily), a),
        Action::Run(a) => (None, a),
    };
    let cfg = match resolve(command, &args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("katok: {e}");
            return ExitCode::from(2);
        }
    };
    let report = match suites::run(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("katok {}: {e}", cfg.command.name());
            return ExitCode::from(2);
        }
    };
    let text = match cfg.format {
        Format::Csv => match report.to_csv() {
            Ok(t) => t,
            Err(e) => {
                eprintln!("katok: cannot format csv: {e}");
                return ExitCode::from(2);
            }
        },
        Format::Json => serde_json::to_string_pretty(&report.to_json()).expect("json values serialise") + "\n",
    };
    let written = match &cfg.output {
        Some(path) => std::fs::write(path, &text),
        None => std::io::stdout().write_all(text.as_bytes()),
    };
    if let Err(e) = written {
        eprintln!("katok: cannot write output: {e}");
        return ExitCode::from(2);
    }
    if report.pass() {
        ExitCode::SUCCESS
    } else {
        eprint!("{}", report.summary());
        ExitCode::from(1)
    }
}

fn resolve(command: Option<Command>, args: &Args) -> Result<RunConfig, Box<dyn std::error::Error>> {
    let text = match &args.config {
        Some(path) => Some(std::fs::read_to_string(path).map_err(|e| ConfigError {
            file: Some(path.clone()),
            line: None,
            field: None,
            message: e.to_string(),
        })?),
        None => None,
    };
    let (file_command, file) = match (&args.config, &text) {
        (Some(path), Some(text)) => parse_file(text, Some(path))?,
        _ => (None, Settings::default()),
    };
    let command = command
        .or(file_command)
        .ok_or("`run` needs a config file with a `command` key")?;
    let merged = file.overridden_by(&args.settings);
    let source = args.config.as_deref().zip(text.as_deref());
    Ok(RunConfig::resolve(command, &merged, source)?)
}
