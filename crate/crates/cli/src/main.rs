use std::fs;
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use apar_core::harness::{run_bench, write_csv, BenchConfig};
use apar_core::net::{run_worker, ServeConfig, DEFAULT_PORT};
use apar_core::{compile, Compiled};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "apar", version, about = "Automatic parallelization of pure-by-default programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the dependency graph of the entry function.
    Graph {
        file: PathBuf,
        #[arg(long, default_value = "main")]
        entry: String,
        /// Also write the graph in DOT format.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Run a program sequentially, on local workers, or as a TCP coordinator.
    Run {
        file: PathBuf,
        #[arg(long, default_value = "main")]
        entry: String,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
        workers: u32,
        #[arg(long, value_enum, default_value_t = Mode::Local)]
        mode: Mode,
        #[arg(long, default_value_t = format!("127.0.0.1:{DEFAULT_PORT}"))]
        listen: String,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
        min_workers: u32,
        /// Run the reference interpreter instead of the scheduler.
        #[arg(long, conflicts_with = "mode")]
        seq: bool,
        /// Seconds to wait for workers in serve mode.
        #[arg(long, default_value_t = 30)]
        timeout_secs: u64,
    },
    /// Serve tasks for a coordinator until it shuts down.
    Worker {
        #[arg(long)]
        connect: String,
    },
    /// Time the synthetic matrix benchmark.
    Bench {
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        tasks: u32,
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        size: u32,
        #[arg(long, value_delimiter = ',', default_value = "1,2,4", value_parser = clap::value_parser!(u32).range(1..))]
        workers: Vec<u32>,
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Timed repetitions per configuration after the warm-up run.
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
        reps: u32,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Local,
    Serve,
}

fn init_logging() {
    let level = match std::env::var("APAR_LOG").as_deref() {
        Ok("trace") => log::LevelFilter::Trace,
        Ok("info") => log::LevelFilter::Info,
        _ => log::LevelFilter::Off,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp_millis().init();
}

fn load(file: &Path, entry: &str) -> Result<Compiled> {
    let source = fs::read_to_string(file).with_context(|| format!("reading {}", file.display()))?;
    compile(&source, entry).with_context(|| format!("{}", file.display()))
}

fn graph(file: &Path, entry: &str, dot: Option<&Path>) -> Result<()> {
    let compiled = load(file, entry)?;
    print!("{}", compiled.graph.summary());
    if let Some(path) = dot {
        fs::write(path, compiled.graph.to_dot()).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn run(
    file: &Path,
    entry: &str,
    workers: usize,
    mode: Mode,
    listen: &str,
    min_workers: usize,
    seq: bool,
    timeout: Duration,
) -> Result<()> {
    let compiled = load(file, entry)?;
    let start = Instant::now();
    let (value, output, workers) = if seq {
        let run = compiled.run_sequential()?;
        (run.value, run.output, 1)
    } else if mode == Mode::Local {
        let report = compiled.run_local(workers)?;
        (report.value, report.output, report.workers)
    } else {
        let listener = TcpListener::bind(listen).with_context(|| format!("listening on {listen}"))?;
        eprintln!("listening on {}, waiting for {min_workers} worker(s)", listener.local_addr()?);
        let config = ServeConfig { min_workers, handshake_timeout: timeout };
        let report = compiled.serve(listener, &config)?;
        (report.value, report.output, report.workers)
    };
    let wall_ms = start.elapsed().as_secs_f64() * 1000.0;
    print!("{output}");
    println!("result={value} tasks={} workers={workers} wall_ms={wall_ms:.3}", compiled.graph.len());
    Ok(())
}

fn bench(config: BenchConfig, csv: Option<&Path>) -> Result<()> {
    let rows = run_bench(&config)?;
    println!("mode,workers,tasks,size,wall_ms,result_checksum");
    for r in &rows {
        println!("{},{},{},{},{:.3},{}", r.mode, r.workers, r.tasks, r.size, r.wall_ms, r.result_checksum);
    }
    if let Some(path) = csv {
        write_csv(path, &rows)?;
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Graph { file, entry, dot } => graph(&file, &entry, dot.as_deref()),
        Command::Run { file, entry, workers, mode, listen, min_workers, seq, timeout_secs } => run(
            &file,
            &entry,
            workers as usize,
            mode,
            &listen,
            min_workers as usize,
            seq,
            Duration::from_secs(timeout_secs),
        ),
        Command::Worker { connect } => {
            let summary = run_worker(connect.as_str()).with_context(|| format!("worker for {connect}"))?;
            log::info!("{} ran {} task(s)", summary.worker_id, summary.tasks_run);
            Ok(())
        }
        Command::Bench { tasks, size, workers, csv, reps } => {
            if workers.is_empty() {
                bail!("--workers needs at least one count");
            }
            let config = BenchConfig {
                tasks: tasks as usize,
                size: size as usize,
                workers: workers.into_iter().map(|w| w as usize).collect(),
                reps: reps as usize,
            };
            bench(config, csv.as_deref())
        }
    }
}

fn main() -> ExitCode {
    init_logging();
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
