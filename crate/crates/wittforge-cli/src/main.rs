use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use wittforge_cli::commands::run;
use wittforge_cli::config::{Command, RawOptions, RunConfig};
use wittforge_cli::{exit, exit_code};

#[derive(Parser)]
#[command(
    name = "wittforge",
    version,
    about = "Witt vectors, tilts and theta for the S+T=1 coefficients"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compute a_n for one scenario.
    Coeff(Opts),
    /// Run a verification suite.
    Verify(Opts),
    /// Manage the universal polynomial cache.
    Cache {
        #[command(subcommand)]
        action: CacheCmd,
    },
}

#[derive(Subcommand)]
enum CacheCmd {
    Build(Opts),
    List(Opts),
    Validate(Opts),
}

#[derive(Args)]
struct Opts {
    #[arg(long)]
    prime: Option<u64>,
    #[arg(long)]
    level: Option<u32>,
    /// s-plus-t, affine or cyclotomic.
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    affine_s: Option<i64>,
    #[arg(long, allow_hyphen_values = true)]
    affine_t: Option<i64>,
    /// Write the JSON report here.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Cache directory (default: $WITTFORGE_CACHE).
    #[arg(long)]
    cache: Option<PathBuf>,
    #[arg(long)]
    depth: Option<u32>,
    #[arg(long)]
    height: Option<u32>,
    #[arg(long)]
    guard: Option<u32>,
    #[arg(long)]
    suite: Option<String>,
    #[arg(long)]
    max_index: Option<usize>,
}

impl From<Opts> for RawOptions {
    fn from(o: Opts) -> Self {
        RawOptions {
            prime: o.prime,
            level: o.level,
            scenario: o.scenario,
            affine_s: o.affine_s,
            affine_t: o.affine_t,
            json: o.json,
            cache: o.cache,
            depth: o.depth,
            height: o.height,
            guard: o.guard,
            suite: o.suite,
            max_index: o.max_index,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            eprintln!(
                "wittforge: {}",
                msg.lines()
                    .next()
                    .unwrap_or("invalid arguments")
                    .trim_start_matches("error: ")
            );
            return ExitCode::from(exit::CONFIG as u8);
        }
    };
    let (command, opts) = match cli.cmd {
        Cmd::Coeff(o) => (Command::Coeff, o),
        Cmd::Verify(o) => (Command::Verify, o),
        Cmd::Cache {
            action: CacheCmd::Build(o),
        } => (Command::CacheBuild, o),
        Cmd::Cache {
            action: CacheCmd::List(o),
        } => (Command::CacheList, o),
        Cmd::Cache {
            action: CacheCmd::Validate(o),
        } => (Command::CacheValidate, o),
    };
    let env_cache = std::env::var_os("WITTFORGE_CACHE")
        .filter(|v| !v.is_empty())
        .map(PathBuf::from);
    let result = RunConfig::from_raw(command, opts.into(), env_cache).and_then(|cfg| run(&cfg));
    match result {
        Ok((report, code)) => {
            print!("{}", report.render_text());
            ExitCode::from(code as u8)
        }
        Err(e) => {
            eprintln!("wittforge: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
