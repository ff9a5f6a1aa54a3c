use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use x0n_core::{Error, ModelTag, SweepFilter};

mod render;

/// Exact special fibres, vertical divisors and finite parts for X0(N).
#[derive(Debug, Parser)]
#[command(name = "x0n", version)]
struct Cli {
    /// Write output to this file instead of stdout. Relative paths are
    /// resolved against the output directory when one is set.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,

    /// Directory that relative `--output` paths are resolved against.
    #[arg(long, global = true, env = "X0N_OUTPUT_DIR")]
    output_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Model {
    Edixhoven,
    Minimal,
}

impl From<Model> for ModelTag {
    fn from(m: Model) -> Self {
        match m {
            Model::Edixhoven => ModelTag::Edixhoven,
            Model::Minimal => ModelTag::Minimal,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FiberFormat {
    Json,
    Csv,
    Dot,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Filter {
    Prime,
    PrimePower,
    All,
}

impl From<Filter> for SweepFilter {
    fn from(f: Filter) -> Self {
        match f {
            Filter::Prime => SweepFilter::Prime,
            Filter::PrimePower => SweepFilter::PrimePower,
            Filter::All => SweepFilter::All,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Index, elliptic points, cusps and genus of X0(N).
    Invariants {
        level: u64,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// The special fibre over p, with intersection matrix.
    Fiber {
        level: u64,
        #[arg(long)]
        p: u64,
        #[arg(long, value_enum, default_value = "minimal")]
        model: Model,
        #[arg(long, value_enum, default_value = "json")]
        format: FiberFormat,
    },
    /// Kernel vector w and the divisors V_0 (u), V_inf (v) over p.
    Divisors {
        level: u64,
        #[arg(long)]
        p: u64,
        #[arg(long, value_enum, default_value = "minimal")]
        model: Model,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Exact per-prime coefficients of the finite part.
    FinitePart {
        level: u64,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Finite parts for a range of levels, one JSON object per line.
    Sweep {
        #[arg(long)]
        min: u64,
        #[arg(long)]
        max: u64,
        #[arg(long, value_enum, default_value = "prime")]
        filter: Filter,
    },
    /// Runs every consistency check for N.
    Verify {
        level: u64,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
}

/// Why the command stopped early, with its exit code.
#[derive(Debug)]
enum Failure {
    Library(Error),
    Io(io::Error),
    Verification(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Library(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Library(Error::InvalidInput(_)) => 2,
            Failure::Library(Error::UnsupportedLevel { .. }) => 3,
            Failure::Library(Error::GenusTooSmall { .. }) => 4,
            Failure::Library(_) | Failure::Io(_) | Failure::Verification(_) => 1,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Library(e) => e.to_string(),
            Failure::Io(e) => format!("i/o error: {e}"),
            Failure::Verification(m) => m.clone(),
        }
    }
}

fn open_output(cli: &Cli) -> io::Result<Box<dyn Write>> {
    Ok(match &cli.output {
        None => Box::new(BufWriter::new(io::stdout().lock())),
        Some(path) => {
            let path = match &cli.output_dir {
                Some(dir) if path.is_relative() => dir.join(path),
                _ => path.clone(),
            };
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent)?;
            }
            Box::new(BufWriter::new(File::create(path)?))
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message());
            ExitCode::from(failure.exit_code())
        }
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let mut out = open_output(cli)?;
    match &cli.command {
        Command::Invariants { level, format } => render::invariants(&mut out, *level, *format == Format::Json)?,
        Command::Fiber {
            level,
            p,
            model,
            format,
        } => {
            let fiber = render::fiber_for(*level, *p, (*model).into())?;
            match format {
                FiberFormat::Json => render::json(&mut out, &fiber)?,
                FiberFormat::Csv => render::fiber_csv(&mut out, &fiber)?,
                FiberFormat::Dot => out.write_all(x0n_core::fiber::dual_graph_dot(&fiber).as_bytes())?,
                FiberFormat::Text => render::fiber_text(&mut out, &fiber)?,
            }
        }
        Command::Divisors {
            level,
            p,
            model,
            format,
        } => render::divisors(&mut out, *level, *p, (*model).into(), *format == Format::Json)?,
        Command::FinitePart { level, format } => {
            render::check_cli_level(*level)?;
            let result = x0n_core::finite_part(*level)?;
            if *format == Format::Json {
                render::json(&mut out, &result)?;
            } else {
                render::finite_part_text(&mut out, &result)?;
            }
        }
        Command::Sweep { min, max, filter } => render::sweep(&mut out, *min, *max, (*filter).into())?,
        Command::Verify { level, format } => {
            render::check_cli_level(*level)?;
            let report = x0n_core::verify_level(*level)?;
            if *format == Format::Json {
                render::json(&mut out, &report)?;
            } else {
                render::verify_text(&mut out, &report)?;
            }
            out.flush()?;
            if !report.all_passed() {
                let failed = report.failures().count();
                return Err(Failure::Verification(format!(
                    "{failed} check(s) failed for N = {level}"
                )));
            }
        }
    }
    out.flush()?;
    Ok(())
}
