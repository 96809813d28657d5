//! `cpslint`: inspect a raw trace, run a sanitisation script, or corrupt a
//! clean trace for round-trip testing.
//!
//! Exit status is 0 on success, 1 for usage, script or data errors, and 2
//! when a file cannot be read or written. Diagnostics go to stderr only.

use std::io::IsTerminal;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use cpslint_core::corrupt::{self, CorruptError, CorruptionKind, CorruptionSpec};
use cpslint_core::dsl::parse_script;
use cpslint_core::inspect;
use cpslint_core::sanitise::{self, RunOptions};

#[derive(Parser, Debug)]
#[command(name = "cpslint", version, about = "Data preparation for CPS time-series traces")]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalOpts {
    /// More detail on stderr; repeat for more.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    /// Only print errors.
    #[arg(short, long, global = true, conflicts_with = "verbose")]
    quiet: bool,
    /// Print a summary of what each rule changed to stderr.
    #[arg(long, global = true)]
    report: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Infer column types and write a baseline script.
    Inspect {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Execute a script.
    Run {
        script: PathBuf,
        /// Read this file instead of the script's import path.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Inject block-localised corruptions into a clean trace.
    Corrupt {
        input: PathBuf,
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long, default_value_t = corrupt::DEFAULT_FRACTION)]
        fraction: f64,
        #[arg(long, default_value_t = corrupt::DEFAULT_BLOCK_SIZE)]
        block_size: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        target_uart: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum KindArg {
    TypeMismatch,
    TypeMismatchTargetedUart,
    OutOfBounds,
    OutOfOrderReliableTs,
    OutOfOrderUnreliableTs,
    MissingFields,
    MissingRows,
    MisplacedEol,
}

impl From<KindArg> for CorruptionKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::TypeMismatch => CorruptionKind::TypeMismatch,
            KindArg::TypeMismatchTargetedUart => CorruptionKind::TypeMismatchTargetedUart,
            KindArg::OutOfBounds => CorruptionKind::OutOfBounds,
            KindArg::OutOfOrderReliableTs => CorruptionKind::OutOfOrderReliableTs,
            KindArg::OutOfOrderUnreliableTs => CorruptionKind::OutOfOrderUnreliableTs,
            KindArg::MissingFields => CorruptionKind::MissingFields,
            KindArg::MissingRows => CorruptionKind::MissingRows,
            KindArg::MisplacedEol => CorruptionKind::MisplacedEol,
        }
    }
}

const USER_ERROR: u8 = 1;
const IO_ERROR: u8 = 2;

struct Diag {
    color: bool,
    quiet: bool,
    verbose: u8,
}

impl Diag {
    fn new(opts: &GlobalOpts) -> Self {
        Diag {
            color: std::env::var_os("NO_COLOR").is_none() && std::io::stderr().is_terminal(),
            quiet: opts.quiet,
            verbose: opts.verbose,
        }
    }

    fn tag(&self, label: &str, code: &str) -> String {
        if self.color {
            format!("\x1b[{code}m{label}\x1b[0m")
        } else {
            label.to_string()
        }
    }

    fn error(&self, msg: impl std::fmt::Display) {
        eprintln!("{}: {msg}", self.tag("error", "1;31"));
    }

    fn warn(&self, msg: impl std::fmt::Display) {
        if !self.quiet {
            eprintln!("{}: {msg}", self.tag("warning", "1;33"));
        }
    }

    fn info(&self, msg: impl std::fmt::Display) {
        if self.verbose > 0 {
            eprintln!("{msg}");
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { USER_ERROR } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let diag = Diag::new(&cli.global);
    let result = match cli.command {
        Command::Inspect { input, out } => cmd_inspect(&diag, &input, &out),
        Command::Run { script, input } => cmd_run(&diag, cli.global.report, &script, input),
        Command::Corrupt {
            input,
            kind,
            fraction,
            block_size,
            seed,
            target_uart,
            out,
        } => {
            let spec = CorruptionSpec {
                fraction,
                block_size,
                target_uart,
                ..CorruptionSpec::new(kind.into(), seed)
            };
            cmd_corrupt(&diag, cli.global.report, &input, &out, &spec)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => ExitCode::from(code),
    }
}

fn cmd_inspect(diag: &Diag, input: &Path, out: &Path) -> Result<(), u8> {
    let inspection = inspect::inspect(input, &input.to_string_lossy(), out).map_err(|e| {
        diag.error(e);
        IO_ERROR
    })?;
    for d in inspection.diagnostics() {
        diag.warn(d);
    }
    for c in &inspection.report.columns {
        diag.info(format!("{:>6}  {}", c.inferred.keyword(), c.name));
    }
    diag.info(format!("wrote {}", out.display()));
    Ok(())
}

fn cmd_run(diag: &Diag, report: bool, script_path: &Path, input: Option<PathBuf>) -> Result<(), u8> {
    let src = std::fs::read_to_string(script_path).map_err(|e| {
        diag.error(format!("{}: {e}", script_path.display()));
        IO_ERROR
    })?;
    let script = parse_script(&src).map_err(|e| {
        diag.error(format!("{}:{e}", script_path.display()));
        USER_ERROR
    })?;
    let opts = RunOptions {
        workdir: PathBuf::new(),
        input_override: input,
    };
    let result = sanitise::run(&script, &opts).map_err(|e| {
        match &e.kind {
            sanitise::EngineErrorKind::Invalid(diags) => {
                for d in diags {
                    diag.error(format!("{}:{d}", script_path.display()));
                }
            }
            _ => diag.error(format!("{}: {e}", script_path.display())),
        }
        if e.is_io() {
            IO_ERROR
        } else {
            USER_ERROR
        }
    })?;
    if report {
        eprint!("{result}");
    }
    for e in &result.exports {
        diag.info(format!(
            "wrote {} ({} rows, {} dropped)",
            e.output.display(),
            e.report.rows_out,
            e.report.rows_dropped()
        ));
    }
    Ok(())
}

fn cmd_corrupt(diag: &Diag, report: bool, input: &Path, out: &Path, spec: &CorruptionSpec) -> Result<(), u8> {
    let manifest = corrupt::corrupt_file(input, out, spec).map_err(|e| {
        diag.error(&e);
        match e {
            CorruptError::Table(_) | CorruptError::Io { .. } => IO_ERROR,
            _ => USER_ERROR,
        }
    })?;
    if report {
        for b in &manifest.blocks {
            eprintln!("block rows {}..{} {}", b.start, b.start + b.length, b.columns.join(", "));
        }
    }
    diag.info(format!(
        "{} blocks, {} rows affected; manifest {}",
        manifest.blocks.len(),
        manifest.affected_rows(),
        corrupt::manifest_path(out).display()
    ));
    Ok(())
}
