use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use vibropref::acquisition::Strategy;
use vibropref::http::{self, AppState};
use vibropref::learner::Learner;
use vibropref::session::{load_session, SystemClock};
use vibropref::signal::denormalize;
use vibropref::simulator::{run_batch, write_outputs, SimulationConfig};

#[derive(Parser)]
#[command(version, about = "Vibrotactile preference learning engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Serve the session HTTP API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
        /// Directory for per-session JSON logs, rewritten after every change.
        #[arg(long)]
        log_dir: Option<PathBuf>,
    },
    /// Run seeded simulations against synthetic ground-truth users.
    Simulate {
        /// Number of seeds, starting at --first-seed.
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        #[arg(long, default_value_t = 0)]
        first_seed: u64,
        #[arg(long, default_value_t = 40)]
        rounds: usize,
        #[arg(long, default_value_t = Strategy::InfoGain)]
        strategy: Strategy,
        #[arg(long)]
        nominal_noise: Option<f64>,
        #[arg(long)]
        candidates: Option<usize>,
        #[arg(long, default_value = "sim_out")]
        out: PathBuf,
    },
    /// Refit a saved session log and print its recommendation.
    Replay {
        #[arg(long)]
        log: PathBuf,
    },
}

fn run(cli: Cli) -> vibropref::Result<()> {
    match cli.command {
        Command::Serve { port, host, log_dir } => {
            if let Some(dir) = &log_dir {
                std::fs::create_dir_all(dir)?;
            }
            let state = AppState::new(Arc::new(SystemClock), log_dir);
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(http::serve(SocketAddr::new(host, port), state))?;
        }
        Command::Simulate { seeds, first_seed, rounds, strategy, nominal_noise, candidates, out } => {
            let mut cfg = SimulationConfig { rounds, ..Default::default() }.with_strategy(strategy);
            if let Some(sigma) = nominal_noise {
                cfg.model.acquisition.nominal_noise = sigma;
            }
            if let Some(n) = candidates {
                cfg.model.acquisition.candidate_count = n;
            }
            cfg.model.validate()?;
            let seeds: Vec<u64> = (first_seed..first_seed + seeds).collect();
            let traces = run_batch(&cfg, &seeds)?;
            write_outputs(&out, &traces)?;
            for t in &traces {
                println!(
                    "seed {:>4}  rho {:>7.4}  accuracy {:.3}  percentile {:6.2}",
                    t.seed,
                    t.final_spearman().unwrap_or(f64::NAN),
                    t.holdout_accuracy,
                    t.recommendation_percentile
                );
            }
            println!("wrote {} traces to {}", traces.len(), out.display());
        }
        Command::Replay { log } => {
            let state = load_session(&log)?;
            let learner = Learner::with_records(state.config.model, state.seed, &state.records())?;
            let rec = learner.recommend()?;
            println!(
                "session {} (seed {}, phase {}, {} rounds)",
                state.id,
                state.seed,
                state.phase,
                state.rounds.len()
            );
            println!("recommendation {}", serde_json::to_string(&denormalize(&rec.point)).expect("params serialize"));
            println!("posterior mean {}", rec.posterior_mean);
            if let Some(logged) = &state.recommendation {
                let same = logged.stimulus.point.same_as(&rec.point);
                println!("matches logged recommendation: {same}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
