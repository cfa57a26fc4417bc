use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use magnon::experiments::{self, RunConfig};

#[derive(Parser)]
#[command(name = "magnon", version, about = "Magnon wavepacket transport on a Heisenberg chain")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Single evolution: magnetisation heatmap, fidelity series, trap boundary.
    Evolve(Common),
    /// Final fidelity against t_f for each protocol and omega0.
    SweepTf(Common),
    /// Fidelity map over (t_f, d) and the fitted limit velocity.
    MapDt(Common),
    /// Disorder ensemble over the configured amplitudes.
    Disorder(Common),
    /// Field samples B_n(t) for the configured protocol.
    FieldDump(Common),
    /// Print the default configuration as JSON.
    DefaultConfig,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (overrides the config).
    #[arg(long)]
    workers: Option<usize>,
    /// Master seed for disorder sampling (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn resolve(&self) -> magnon::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        if let Some(w) = self.workers {
            cfg.workers = w;
        }
        if let Some(seed) = self.seed {
            cfg.disorder.master_seed = seed;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> magnon::Result<()> {
    let common = match &cli.command {
        Command::DefaultConfig => {
            // a closed pipe (e.g. `| head`) is not an error here
            let _ = writeln!(std::io::stdout(), "{}", RunConfig::default().to_json());
            return Ok(());
        }
        Command::Evolve(c)
        | Command::SweepTf(c)
        | Command::MapDt(c)
        | Command::Disorder(c)
        | Command::FieldDump(c) => c,
    };
    let cfg = common.resolve()?;
    let out = cfg.output_dir.clone();
    match cli.command {
        Command::Evolve(_) => {
            let r = experiments::run_evolution(&cfg, &out)?;
            println!("final fidelity {:.6}", r.final_fidelity);
        }
        Command::SweepTf(_) => {
            let rows = experiments::run_tf_sweep(&cfg, &out)?;
            println!("{} sweep rows", rows.len());
        }
        Command::MapDt(_) => {
            let r = experiments::run_dt_map(&cfg, &out)?;
            for s in &r.speed_limits {
                println!(
                    "omega0 {}: v_b = {:.4} ({} distances fitted, {} excluded)",
                    s.omega0, s.v_b, s.fitted, s.excluded
                );
            }
        }
        Command::Disorder(_) => {
            let r = experiments::run_disorder_ensemble(&cfg, &out)?;
            for s in &r.summary {
                println!("delta {}: mean F = {:.6} +- {:.6}", s.delta, s.mean_fidelity, s.std_fidelity);
            }
        }
        Command::FieldDump(_) => {
            let rows = experiments::run_field_dump(&cfg, &out)?;
            println!("{rows} field rows");
        }
        Command::DefaultConfig => unreachable!(),
    }
    println!("outputs in {}", out.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
