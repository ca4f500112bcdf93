//! `afzp`: command-line front end for the classification library.
//!
//! Exit codes: 0 pass, 1 mathematical failure, 2 input or option error.

mod commands;
mod io;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Parser, Subcommand, ValueEnum};

use commands::Output;
use io::{CliError, EXIT_INPUT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Debug, Parser)]
#[command(name = "afzp", version, about = "Exact classification of Z/pZ actions on finite-dimensional C*-algebras and AF towers")]
struct Cli {
    /// Field order N for Q(zeta_N): p, p^2 or 4p^2, and a multiple of the input's order
    #[arg(long, global = true, env = "AFZP_ORDER")]
    order: Option<u32>,
    /// Largest matrix entry tried when searching for K-level pairs
    #[arg(long, global = true, default_value_t = 3)]
    bound: i64,
    /// Number of tower stages to intertwine
    #[arg(long, global = true)]
    depth: Option<usize>,
    /// Files processed concurrently by batch commands
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Output file (a directory when a batch command gets several inputs)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check any document: systems, homomorphisms, towers, certificates
    Validate { files: Vec<PathBuf> },
    /// Decompose a system into canonical pieces
    Canon { files: Vec<PathBuf> },
    /// Crossed product presentation of a system
    Crossed { files: Vec<PathBuf> },
    /// K-theoretic invariant of a system
    Kinv { files: Vec<PathBuf> },
    /// K-level pair induced by a homomorphism
    Induced { files: Vec<PathBuf> },
    /// Check a pair against the invariants of source and target
    Checkpair { pair: PathBuf, source: PathBuf, target: PathBuf },
    /// Build an equivariant homomorphism realizing a pair
    Lift { pair: PathBuf, source: PathBuf, target: PathBuf },
    /// Unitary in the fixed-point algebra conjugating one homomorphism to another
    Equiv { first: PathBuf, second: PathBuf },
    /// Intertwine two towers and emit a certificate
    Intertwine {
        tower_a: PathBuf,
        tower_b: PathBuf,
        /// Explicit pairs [F0, G0, F1, ...] instead of searching
        #[arg(long)]
        pairs: Option<PathBuf>,
    },
    /// Re-check certificates
    Verify { files: Vec<PathBuf> },
    /// Run a built-in scenario: product-tower-p2, product-tower-p3, naive-doubling
    Demo { name: String },
}

fn check_options(cli: &Cli) -> Result<(), CliError> {
    if cli.bound < 0 {
        return Err(CliError::Input("--bound must be nonnegative".into()));
    }
    if cli.jobs == 0 {
        return Err(CliError::Input("--jobs must be at least 1".into()));
    }
    if let Some(n) = cli.order {
        if n < 2 {
            return Err(CliError::Input(format!("--order {n} is not a supported field order")));
        }
    }
    let files = match &cli.command {
        Command::Validate { files } | Command::Canon { files } | Command::Crossed { files } | Command::Kinv { files } | Command::Induced { files } | Command::Verify { files } => files,
        _ => return Ok(()),
    };
    if files.is_empty() {
        return Err(CliError::Input("no input files".into()));
    }
    Ok(())
}

/// Runs `f` on every file with up to `jobs` threads, keeping input order.
fn batch(files: &[PathBuf], jobs: usize, f: impl Fn(&Path) -> Result<Output, CliError> + Sync) -> Vec<Result<Output, CliError>> {
    let results: Vec<Mutex<Option<Result<Output, CliError>>>> = files.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..jobs.min(files.len()) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= files.len() {
                    break;
                }
                *results[i].lock().unwrap() = Some(f(&files[i]));
            });
        }
    });
    results.into_iter().map(|m| m.into_inner().unwrap().expect("every file processed")).collect()
}

/// Prints without panicking when the reader has gone away.
fn say(s: &str) {
    use std::io::Write;
    let mut stdout = std::io::stdout().lock();
    let _ = stdout.write_all(s.as_bytes()).and_then(|_| stdout.flush());
}

fn emit(out: &Output, cli: &Cli, target: Option<&Path>) -> Result<(), CliError> {
    match (target, &out.document) {
        (Some(path), Some((_, doc))) => {
            io::write_atomic(path, doc)?;
            if cli.format == Format::Text {
                say(&format!("{}\n", out.text));
            }
        }
        (None, Some((_, doc))) if cli.format == Format::Json => say(doc),
        _ => say(&format!("{}\n", out.text)),
    }
    Ok(())
}

fn output_path(dir: &Path, input: &Path, kind: &str) -> PathBuf {
    let stem = input.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into());
    dir.join(format!("{stem}.{kind}.json"))
}

fn run(cli: &Cli) -> i32 {
    if let Err(e) = check_options(cli) {
        eprintln!("{e}");
        return e.code();
    }
    let order = cli.order;
    let single = |r: Result<Output, CliError>| -> i32 {
        match r.and_then(|out| emit(&out, cli, cli.out.as_deref()).map(|_| out)) {
            Ok(out) => i32::from(!out.ok),
            Err(e) => {
                eprintln!("{e}");
                e.code()
            }
        }
    };
    let multi = |files: &[PathBuf], f: &(dyn Fn(&Path) -> Result<Output, CliError> + Sync)| -> i32 {
        if files.len() == 1 {
            return single(f(&files[0]));
        }
        if let Some(dir) = &cli.out {
            if let Err(e) = std::fs::create_dir_all(dir) {
                eprintln!("input error: {}: {e}", dir.display());
                return EXIT_INPUT;
            }
        }
        let mut code = 0;
        for (file, r) in files.iter().zip(batch(files, cli.jobs, f)) {
            let r = r.and_then(|out| {
                let target = match (&cli.out, &out.document) {
                    (Some(dir), Some((kind, _))) => Some(output_path(dir, file, kind)),
                    _ => None,
                };
                emit(&out, cli, target.as_deref()).map(|_| out)
            });
            code = code.max(match r {
                Ok(out) => i32::from(!out.ok),
                Err(e) => {
                    eprintln!("{}: {e}", file.display());
                    e.code()
                }
            });
        }
        code
    };
    match &cli.command {
        Command::Validate { files } => multi(files, &|p| commands::validate(p, order)),
        Command::Canon { files } => multi(files, &|p| commands::canon(p, order)),
        Command::Crossed { files } => multi(files, &|p| commands::crossed(p, order)),
        Command::Kinv { files } => multi(files, &|p| commands::kinv(p, order)),
        Command::Induced { files } => multi(files, &|p| commands::induced(p, order)),
        Command::Verify { files } => multi(files, &commands::verify),
        Command::Checkpair { pair, source, target } => single(commands::checkpair(pair, source, target, order)),
        Command::Lift { pair, source, target } => single(commands::lift_cmd(pair, source, target, order)),
        Command::Equiv { first, second } => single(commands::equiv(first, second, order)),
        Command::Intertwine { tower_a, tower_b, pairs } => single(commands::intertwine_cmd(tower_a, tower_b, pairs.as_deref(), cli.depth, cli.bound, order)),
        Command::Demo { name } => single(commands::demo(name, cli.depth, order)),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    ExitCode::from(run(&cli) as u8)
}
