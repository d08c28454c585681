use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use osgood_core::scenario::{bundled, execute, Scenario, BUNDLED};
use osgood_core::Error;

/// Supercritical Euler and vortex-patch simulator with its verification lab.
#[derive(Parser)]
#[command(name = "osgood", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file or a bundled scenario by name.
    Run {
        target: String,
        /// Output directory (default: the scenario's `output`, else out/<name>).
        #[arg(long)]
        output: Option<PathBuf>,
        /// Worker threads; 0 uses every core.
        #[arg(long, default_value_t = 0)]
        threads: usize,
        /// Override the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check a scenario without running it.
    Validate {
        target: String,
        #[arg(long)]
        seed: Option<u64>,
        /// Print the resolved config with every default filled in.
        #[arg(long)]
        resolved: bool,
    },
    /// List the bundled scenarios.
    List,
    /// Print the scenario schema.
    Schema,
}

fn load(target: &str, seed: Option<u64>) -> osgood_core::Result<Scenario> {
    let path = Path::new(target);
    if path.is_file() {
        return Scenario::load(path, seed);
    }
    match bundled(target) {
        Some(b) => Scenario::parse(b.text, seed),
        None => Err(Error::Config(format!("`{target}` is neither a file nor a bundled scenario (see `osgood list`)"))),
    }
}

fn fail(e: Error) -> ExitCode {
    eprintln!("error: {e}");
    match e {
        Error::Config(_) | Error::Geometry(_) => ExitCode::from(2),
        _ => ExitCode::from(1),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::List => {
            for b in BUNDLED {
                match Scenario::parse(b.text, None) {
                    Ok(sc) => println!("{:<30} {:<15} {}", b.name, sc.mode.as_str(), sc.description),
                    Err(e) => println!("{:<30} invalid: {e}", b.name),
                }
            }
            ExitCode::SUCCESS
        }
        Command::Schema => {
            print!("{}", osgood_core::scenario::schema_text());
            ExitCode::SUCCESS
        }
        Command::Validate { target, seed, resolved } => match load(&target, seed) {
            Ok(sc) => {
                if resolved {
                    print!("{}", sc.resolved.to_toml());
                } else {
                    println!("valid: {} (mode={})", sc.name, sc.mode.as_str());
                }
                ExitCode::SUCCESS
            }
            Err(e) => fail(e),
        },
        Command::Run { target, output, threads, seed } => {
            let sc = match load(&target, seed) {
                Ok(sc) => sc,
                Err(e) => return fail(e),
            };
            let dir = output.unwrap_or_else(|| sc.output.clone());
            match execute(&sc, &dir, threads) {
                Ok(out) => {
                    println!("{}: {:?} -> {}", sc.name, out.status, dir.display());
                    if let Some(reason) = out.report["blow_up"].as_str() {
                        println!("  blow-up: {reason}");
                    }
                    for c in out.report["checks"].as_array().into_iter().flatten() {
                        let mark = if c["pass"].as_bool() == Some(true) { "pass" } else { "FAIL" };
                        println!("  {mark} {}: {} (limit {})", c["name"].as_str().unwrap_or(""), c["value"], c["limit"]);
                    }
                    ExitCode::from(out.status.exit_code() as u8)
                }
                Err(e) => fail(e),
            }
        }
    }
}
