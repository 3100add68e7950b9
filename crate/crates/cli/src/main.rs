use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use artinflat::{sweep, Caps, GeneratorKind};
use artinflat_cli::{run_file, verify_certificate_file, Limits, ModeArg, Options};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "artinflat", version, about = "Flatness checks over finite local algebras")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Exhaustive,
    Sampled,
}

#[derive(Subcommand)]
enum Command {
    /// Run an instance file
    Run {
        file: PathBuf,
        /// Seed for sampled checks and sweeps
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Trials for sampled weak torsion-freeness
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, value_enum, default_value = "exhaustive")]
        mode: Mode,
        /// Append elapsed time to each report
        #[arg(long)]
        timing: bool,
        /// Lift the limits p ≤ 97, dim ≤ 256, n ≤ 8
        #[arg(long)]
        unsafe_raise_caps: bool,
    },
    /// Seeded sweep of generated instances
    Sweep {
        #[arg(long)]
        kind: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        count: u64,
        #[arg(long)]
        timing: bool,
    },
    /// Re-check a membership certificate
    VerifyCert { file: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let code = match cli.command {
        Command::Run {
            file,
            seed,
            trials,
            mode,
            timing,
            unsafe_raise_caps,
        } => {
            let opts = Options {
                seed,
                trials,
                mode: match mode {
                    Mode::Exhaustive => ModeArg::Exhaustive,
                    Mode::Sampled => ModeArg::Sampled,
                },
                timing,
                limits: if unsafe_raise_caps { Limits::raised() } else { Limits::standard() },
            };
            match run_file(&file, opts, &mut out) {
                Ok(status) => status.exit_code(),
                Err(e) => {
                    let _ = out.flush();
                    eprintln!("error: {e}");
                    2
                }
            }
        }
        Command::Sweep { kind, seed, count, timing } => match kind.parse::<GeneratorKind>() {
            Ok(GeneratorKind::UserFile) => {
                eprintln!("error: user_file instances come from `artinflat run`");
                2
            }
            Ok(kind) => {
                let start = Instant::now();
                let rep = sweep(kind, seed, count, &Caps::default());
                let _ = write!(out, "{rep}");
                if timing {
                    let _ = writeln!(out, "elapsed_ms: {}", start.elapsed().as_millis());
                }
                u8::from(rep.violations > 0 || rep.errors > 0)
            }
            Err(e) => {
                eprintln!("error: {e}");
                2
            }
        },
        Command::VerifyCert { file } => match verify_certificate_file(&file) {
            Ok(valid) => {
                let _ = writeln!(out, "valid: {valid}");
                u8::from(!valid)
            }
            Err(e) => {
                eprintln!("error: {e}");
                2
            }
        },
    };
    ExitCode::from(code)
}
