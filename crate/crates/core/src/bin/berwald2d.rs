use std::path::PathBuf;
use std::process::ExitCode;

use berwald_core::cli::{self, CliError, Command, Scenario};
use clap::{Parser, Subcommand};

/// Flat semi-symmetric connections and generalized Berwald surfaces.
#[derive(Parser)]
#[command(name = "berwald2d", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Divergence representation, flatness, metric defect and probe holonomy.
    Verify(Args),
    /// Parallel transport of the initial vector along the curve.
    Transport(Args),
    /// Indicatrix translates along the curve as SVG and CSV.
    Figure(Args),
    /// Divergence representation on a torus or cylinder.
    Torus(Args),
}

#[derive(clap::Args)]
struct Args {
    /// Scenario file.
    #[arg(long)]
    config: PathBuf,
    /// RK4 steps per unit of curve parameter.
    #[arg(long)]
    steps: Option<usize>,
    /// Number of figure frames.
    #[arg(long)]
    frames: Option<usize>,
    /// Directory for output files.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Cmd::Verify(a) => (Command::Verify, a),
        Cmd::Transport(a) => (Command::Transport, a),
        Cmd::Figure(a) => (Command::Figure, a),
        Cmd::Torus(a) => (Command::Torus, a),
    };
    match run(command, &args) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("berwald2d: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(command: Command, args: &Args) -> Result<u8, CliError> {
    let mut scenario = Scenario::from_file(&args.config)?;
    if let Some(n) = args.steps {
        if n == 0 {
            return Err(CliError::Config("--steps must be at least 1".into()));
        }
        scenario.steps = n;
    }
    if let Some(n) = args.frames {
        scenario.figure.frames = n;
        scenario.figure.times = None;
    }
    let out = cli::run(command, &scenario)?;
    let dir = args.out.clone().or_else(|| scenario.out_dir.clone());
    match (dir, command) {
        (Some(dir), _) => {
            print!("{}", out.report);
            for path in out.write_files(&dir).map_err(|e| CliError::Config(format!("cannot write to {}: {e}", dir.display())))? {
                println!("wrote {}", path.display());
            }
        }
        // without an output directory the transport samples go to stdout
        (None, Command::Transport) => {
            eprint!("{}", out.report);
            print!("{}", out.files[0].1);
        }
        (None, Command::Figure) => {
            print!("{}", out.report);
            for path in out.write_files(std::path::Path::new(".")).map_err(|e| CliError::Config(e.to_string()))? {
                println!("wrote {}", path.display());
            }
        }
        (None, _) => print!("{}", out.report),
    }
    Ok(out.code as u8)
}
