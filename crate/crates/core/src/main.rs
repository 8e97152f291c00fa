use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use nwbsim::harness::{self, SweepConfig};

#[derive(Parser)]
#[command(name = "nwbsim", version, about = "Network-wide broadcast simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a sweep and write one CSV row per NWB.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads; 0 uses every core.
        #[arg(long, env = "NWBSIM_JOBS", default_value_t = 0)]
        jobs: usize,
    },
    /// Aggregate a results CSV by the given comma-separated columns.
    Summarize {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "protocol,sr_mode,drop_p,node_count,speed_mps")]
        group_by: String,
    },
    /// Write a named preset configuration.
    Presets {
        #[arg(long)]
        name: Option<String>,
        /// Destination file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a configuration file and report the size of its matrix.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn load(path: &PathBuf) -> Result<SweepConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    SweepConfig::parse(&text).with_context(|| format!("in {}", path.display()))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, out, jobs } => {
            let cfg = load(&config)?;
            let started = Instant::now();
            let records = harness::run_sweep(&cfg, jobs)?;
            let file = File::create(&out).with_context(|| format!("creating {}", out.display()))?;
            harness::write_csv(&records, BufWriter::new(file))?;
            eprintln!(
                "wrote {} rows to {} in {:.1}s",
                records.len(),
                out.display(),
                started.elapsed().as_secs_f64()
            );
        }
        Command::Summarize { input, group_by } => {
            let file = File::open(&input).with_context(|| format!("opening {}", input.display()))?;
            let table = harness::summarize(io::BufReader::new(file), &group_by)
                .with_context(|| format!("summarizing {}", input.display()))?;
            io::stdout().write_all(table.as_bytes())?;
        }
        Command::Presets { name, out } => {
            let Some(name) = name else {
                for n in harness::PRESET_NAMES {
                    println!("{n}");
                }
                return Ok(());
            };
            let Some(cfg) = harness::preset(&name) else {
                bail!("unknown preset `{name}` (available: {})", harness::PRESET_NAMES.join(", "));
            };
            let text = cfg.to_config_text();
            match out {
                Some(path) => fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?,
                None => io::stdout().write_all(text.as_bytes())?,
            }
        }
        Command::Validate { config } => {
            let cfg = load(&config)?;
            println!(
                "ok: {} cells, {} runs, {} rows",
                cfg.cell_count(),
                cfg.run_count(),
                cfg.row_count()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
