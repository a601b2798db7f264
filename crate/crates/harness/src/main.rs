use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use log::info;
use uepsim::output::write_outputs;
use uepsim::{compare_mechanisms, run_scenario, HarnessError, ScenarioConfig};
use uepsim_core::netstate::{bfp_hull, density, quickhull, read_positions, NetworkSnapshot};
use uepsim_core::video::{synthesize_video, SynthesisSpec};

#[derive(Parser)]
#[command(name = "uepsim", version, about = "Adaptive FEC/UEP video transmission laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write `<name>.csv` and `<name>.dat`.
    Run {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run scenarios that differ only in their mechanism on shared losses.
    Compare {
        #[arg(required = true, num_args = 2..)]
        configs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Trace utilities.
    Trace {
        #[command(subcommand)]
        command: TraceCommand,
    },
    /// Convex hull area and node density of a position file.
    Hull {
        method: HullArg,
        positions: PathBuf,
        #[arg(long, default_value_t = 64)]
        strips: usize,
    },
}

#[derive(Subcommand)]
enum TraceCommand {
    /// Synthesize a frame trace from a TOML synthesis spec.
    Synth {
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum HullArg {
    Quick,
    Bfp,
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map_or_else(|| "run".into(), |s| s.to_string_lossy().into_owned())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, seed, out } => {
            let mut cfg = ScenarioConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let reports = run_scenario(&cfg)?;
            let (csv, dat) = write_outputs(&out, &stem(&config), &reports)?;
            info!("wrote {} and {}", csv.display(), dat.display());
            print!("{}", uepsim::output::reports_csv(&reports));
        }
        Command::Compare { configs, out } => {
            let cfgs = configs
                .iter()
                .map(|p| ScenarioConfig::load(p))
                .collect::<Result<Vec<_>, _>>()?;
            let rows = compare_mechanisms(&cfgs)?;
            write_outputs(&out, "compare", &rows)?;
            print!("{}", uepsim::output::reports_csv(&rows));
        }
        Command::Trace {
            command: TraceCommand::Synth { spec, out },
        } => {
            let text =
                std::fs::read_to_string(&spec).map_err(|e| HarnessError::Io(format!("{}: {e}", spec.display())))?;
            let spec: SynthesisSpec = toml::from_str(&text).map_err(|e| HarnessError::Config(vec![e.to_string()]))?;
            let (trace, _) = synthesize_video(&spec).map_err(|e| HarnessError::Config(vec![e.to_string()]))?;
            let file = File::create(&out).map_err(|e| HarnessError::Io(format!("{}: {e}", out.display())))?;
            let mut w = BufWriter::new(file);
            trace.write_to(&mut w).map_err(|e| HarnessError::Io(e.to_string()))?;
            w.flush().map_err(|e| HarnessError::Io(e.to_string()))?;
        }
        Command::Hull {
            method,
            positions,
            strips,
        } => {
            let file = File::open(&positions).map_err(|e| HarnessError::Io(format!("{}: {e}", positions.display())))?;
            let rows = read_positions(BufReader::new(file)).map_err(|e| HarnessError::Config(vec![e.to_string()]))?;
            let snap = NetworkSnapshot::new(rows.into_iter().map(|r| r.position).collect(), 0.0, None)
                .map_err(|e| HarnessError::Config(vec![e.to_string()]))?;
            let hull = match method {
                HullArg::Quick => quickhull(&snap.positions),
                HullArg::Bfp => {
                    bfp_hull(&snap.positions, strips).map_err(|e| HarnessError::Config(vec![e.to_string()]))?
                }
            };
            for v in &hull.vertices {
                println!("{} {}", v.x, v.y);
            }
            println!("area {}", hull.area);
            match density(&snap, &hull) {
                Ok(d) => println!("density_km2 {}", d * 1e6),
                Err(e) => println!("density_km2 undefined ({e})"),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()).context("uepsim failed") {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e.downcast_ref::<HarnessError>().map_or(1, HarnessError::exit_code);
            ExitCode::from(code as u8)
        }
    }
}
