use std::io::Write as _;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};

use indigo::api::{preset_list, router};
use indigo::registry::Registry;
use indigo::run::{parse_config, run};
use indigo_core::journal::{journal_file_name, read_journal, replay, FileSink};
use indigo_core::simulation::{run_simulation, session_id, SimulationConfig};
use indigo_core::{Error, ErrorCode, Result};

#[derive(Parser)]
#[command(name = "indigo", version, about = "Human and AI plan optimization sessions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Serve the HTTP API.
    Serve {
        #[arg(long, env = "INDIGO_ADDR", default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        #[arg(long, env = "INDIGO_DATA_DIR", default_value = "indigo-data")]
        data_dir: PathBuf,
    },
    /// Run a session headless from a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run seeded oracle sessions and write one CSV row per seed.
    Simulate {
        /// Inclusive range such as 0..19.
        #[arg(long)]
        seeds: String,
        #[arg(long)]
        oracle: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write each session's journal here.
        #[arg(long)]
        journal_dir: Option<PathBuf>,
    },
    /// Rebuild a session from its journal and print it.
    Replay {
        journal: PathBuf,
        /// Stop after the event with this seq.
        #[arg(long)]
        at_seq: Option<u64>,
        /// Print the full state as JSON.
        #[arg(long)]
        json: bool,
    },
    /// List the built-in scoring schema presets.
    Presets,
}

fn exit_code(e: &Error) -> u8 {
    match e.code() {
        ErrorCode::Corruption => 2,
        _ => 1,
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Validation(format!("{}: {}", path.display(), e)))
}

fn parse_seeds(s: &str) -> Result<std::ops::RangeInclusive<u64>> {
    let bad = || Error::Validation(format!("seeds must look like a..b, got `{}`", s));
    let (a, b) = s.split_once("..").ok_or_else(bad)?;
    let a: u64 = a.trim().parse().map_err(|_| bad())?;
    let b: u64 = b.trim().parse().map_err(|_| bad())?;
    if a > b {
        return Err(bad());
    }
    Ok(a..=b)
}

fn simulate(seeds: &str, oracle: &Path, out: &Path, journal_dir: Option<&Path>) -> Result<()> {
    let seeds = parse_seeds(seeds)?;
    let config: SimulationConfig =
        serde_json::from_str(&read(oracle)?).map_err(|e| Error::Validation(format!("oracle config: {}", e)))?;
    if let Some(dir) = journal_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::Storage(e.to_string()))?;
    }
    let mut writer = csv::Writer::from_path(out).map_err(|e| Error::Validation(format!("{}: {}", out.display(), e)))?;
    let (mut total, mut converged) = (0, 0);
    for seed in seeds {
        let sink = match journal_dir {
            Some(dir) => {
                let path = dir.join(journal_file_name(&session_id(seed)));
                if path.exists() {
                    std::fs::remove_file(&path).map_err(|e| Error::Storage(e.to_string()))?;
                }
                Some(Box::new(FileSink::open(path)?) as Box<dyn indigo_core::JournalSink>)
            }
            None => None,
        };
        let (outcome, _) = run_simulation(&config, seed, sink)?;
        total += 1;
        converged += outcome.converged as usize;
        writer.serialize(&outcome).map_err(|e| Error::Storage(e.to_string()))?;
    }
    writer.flush().map_err(|e| Error::Storage(e.to_string()))?;
    println!("{} sessions, {} converged, results in {}", total, converged, out.display());
    Ok(())
}

fn replay_cmd(path: &Path, at_seq: Option<u64>, as_json: bool) -> Result<()> {
    let mut events = read_journal(path)?;
    if let Some(n) = at_seq {
        events.retain(|e| e.seq <= n);
    }
    let state = replay(&events)?;
    if as_json {
        println!("{}", serde_json::to_string_pretty(&state).expect("state serializes"));
        return Ok(());
    }
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "session: {}", state.session_id);
    let _ = writeln!(out, "events: {} (last seq {})", events.len(), state.last_seq);
    let _ = writeln!(out, "phase: {}", state.phase);
    let _ = writeln!(out, "iterations: {}", state.iterations.len());
    for r in &state.iterations {
        let winner = r.winning_proposal.as_ref().map_or("HOLD_STEADY".to_string(), |p| p.to_string());
        let _ =
            writeln!(out, "  #{} aggregate {:.4} scores {} winner {}", r.index, r.aggregate.0, r.merged_scores, winner);
    }
    let _ = writeln!(out, "plan revision {}:", state.plan.revision);
    for item in &state.plan.items {
        let _ = writeln!(out, "  [{}] {}", item.item_id, item.text);
    }
    Ok(())
}

fn serve(addr: SocketAddr, data_dir: PathBuf) -> Result<()> {
    let rt = tokio::runtime::Runtime::new().map_err(|e| Error::Storage(e.to_string()))?;
    rt.block_on(async move {
        std::fs::create_dir_all(&data_dir).map_err(|e| Error::Storage(e.to_string()))?;
        let registry = Arc::new(Registry::new(Some(data_dir.clone())));
        for (path, err) in registry.load() {
            eprintln!("skipping {}: {}", path.display(), err);
        }
        let listener = tokio::net::TcpListener::bind(addr).await.map_err(|e| Error::Storage(e.to_string()))?;
        eprintln!("listening on http://{} with data in {}", addr, data_dir.display());
        axum::serve(listener, router(registry))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(|e| Error::Storage(e.to_string()))
    })
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Serve { addr, data_dir } => serve(addr, data_dir),
        Command::Run { config } => {
            let (summary, _) = run(parse_config(&read(&config)?)?)?;
            println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
            Ok(())
        }
        Command::Simulate { seeds, oracle, out, journal_dir } => {
            simulate(&seeds, &oracle, &out, journal_dir.as_deref())
        }
        Command::Replay { journal, at_seq, json } => replay_cmd(&journal, at_seq, json),
        Command::Presets => {
            println!("{}", serde_json::to_string_pretty(&preset_list()).expect("presets serialize"));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error [{}]: {}", e.code().as_str(), e);
            ExitCode::from(exit_code(&e))
        }
    }
}
