use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use mameshfree::{execute, load};

/// Meshfree collocation solver for the Monge-Ampère equation.
#[derive(Debug, Parser)]
#[command(name = "mameshfree", version)]
struct Args {
    /// Run configuration (`key = value` lines).
    config: PathBuf,
    /// Worker threads; 1 gives bitwise-reproducible output.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    threads: Option<u32>,
    /// Print the effective configuration and exit.
    #[arg(long)]
    print_config: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let cfg = match load(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if args.print_config {
        print!("{}", cfg.to_text());
        return ExitCode::SUCCESS;
    }
    if let Some(n) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n as usize)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    // relative output paths are taken relative to the config file
    let base = args.config.parent().unwrap_or(Path::new("."));
    let out_dir = base.join(&cfg.output);
    match execute(&cfg, &out_dir) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
