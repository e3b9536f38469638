use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use curvlab::cli::{load_config, run, validate, Format, COMMANDS};

#[derive(Parser)]
#[command(
    name = "curvlab",
    version,
    about = "Run a curvlab analysis from a JSON config"
)]
struct Args {
    #[command(subcommand)]
    action: Action,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Action {
    /// Check a config without running it.
    Validate { config: PathBuf },
    #[command(external_subcommand)]
    Run(Vec<String>),
}

#[derive(Parser)]
struct RunArgs {
    command: String,
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let raw = match args.action {
        Action::Validate { config } => {
            let diags = validate(&config);
            let ok = diags.len() == 1 && diags[0] == "ok";
            for d in diags {
                if ok {
                    println!("{d}");
                } else {
                    eprintln!("error: {d}");
                }
            }
            return ExitCode::from(if ok { 0 } else { 1 });
        }
        Action::Run(raw) => raw,
    };
    let ra = match RunArgs::try_parse_from(std::iter::once("curvlab".to_string()).chain(raw)) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    if !COMMANDS.contains(&ra.command.as_str()) {
        eprintln!(
            "error: unknown command \"{}\" (expected one of {})",
            ra.command,
            COMMANDS.join(", ")
        );
        return ExitCode::from(1);
    }
    let mut cfg = match load_config(&ra.config) {
        Ok(c) => c,
        Err(problems) => {
            for p in problems {
                eprintln!("error: {p}");
            }
            return ExitCode::from(1);
        }
    };
    if cfg.command.name() != ra.command {
        eprintln!(
            "error: config describes \"{}\" but \"{}\" was requested",
            cfg.command.name(),
            ra.command
        );
        return ExitCode::from(1);
    }
    if ra.seed.is_some() {
        cfg.seed = ra.seed;
    }
    let spec = cfg.output.clone().unwrap_or_default();
    let format = match ra.format {
        Some(FormatArg::Json) => Format::Json,
        Some(FormatArg::Csv) => Format::Csv,
        None => spec.format,
    };
    let result = match run(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let text = result.render(format);
    match ra.out.or(spec.path) {
        Some(path) => {
            if let Err(e) = std::fs::write(&path, text) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return ExitCode::from(1);
            }
        }
        None => print!("{text}"),
    }
    ExitCode::from(result.outcome.exit_code() as u8)
}
