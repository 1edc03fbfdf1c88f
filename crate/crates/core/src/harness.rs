//! Matrix benchmark harness.
//!
//! Synthesizes a program with `tasks` independent matrix tasks feeding one
//! reduction, then times it under the sequential interpreter and under the
//! local transport for each requested worker count.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::session::{compile, Compiled, Error};

pub const CSV_HEADER: [&str; 6] = ["mode", "workers", "tasks", "size", "wall_ms", "result_checksum"];

const CSV_COMMENT: &str = "# mode=seq is the single-thread interpreter baseline; \
mode=local workers=1 is the framework-overhead reference in place of a shared-memory runtime baseline\n";

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("tasks and size must be at least 1")]
    BadConfig,
    #[error("worker counts must be at least 1")]
    ZeroWorkers,
    #[error(transparent)]
    Run(#[from] Error),
    #[error("program printed {0:?}, expected a single integer")]
    NotAChecksum(String),
    #[error("checksum mismatch: {mode} workers={workers} gave {got}, baseline gave {expected}")]
    Mismatch { mode: String, workers: usize, got: i64, expected: i64 },
    #[error("writing {path}: {message}")]
    Csv { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchConfig {
    pub tasks: usize,
    pub size: usize,
    pub workers: Vec<usize>,
    /// Timed repetitions per configuration; the median is reported.
    pub reps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub mode: String,
    pub workers: usize,
    pub tasks: usize,
    pub size: usize,
    pub wall_ms: f64,
    pub result_checksum: i64,
}

/// Program text with `tasks` independent `checksum (matMul A B)` lines
/// (seeds `i` and `1000 + i`) summed into `total` and printed.
pub fn bench_program(tasks: usize, size: usize) -> String {
    let mut src = String::from("main :: IO ()\nmain = do\n");
    for i in 1..=tasks {
        let _ = writeln!(
            src,
            "    let c{i} = checksum (matMul (genMatrix {i} {size} {size}) (genMatrix {} {size} {size}))",
            1000 + i
        );
    }
    let terms: Vec<String> = (1..=tasks).map(|i| format!("c{i}")).collect();
    let _ = writeln!(src, "    let total = {}", terms.join(" + "));
    src.push_str("    print total\n");
    src
}

fn checksum_of(output: &str) -> Result<i64, BenchError> {
    output.trim().parse().map_err(|_| BenchError::NotAChecksum(output.to_string()))
}

fn median(mut samples: Vec<Duration>) -> f64 {
    samples.sort();
    samples[samples.len() / 2].as_secs_f64() * 1000.0
}

fn time_runs(reps: usize, mut run: impl FnMut() -> Result<String, BenchError>) -> Result<(f64, i64), BenchError> {
    let warm = checksum_of(&run()?)?;
    let mut samples = Vec::with_capacity(reps);
    for _ in 0..reps.max(1) {
        let start = Instant::now();
        let out = run()?;
        samples.push(start.elapsed());
        let got = checksum_of(&out)?;
        if got != warm {
            return Err(BenchError::NotAChecksum(out));
        }
    }
    Ok((median(samples), warm))
}

pub fn run_bench(config: &BenchConfig) -> Result<Vec<BenchRow>, BenchError> {
    if config.tasks == 0 || config.size == 0 {
        return Err(BenchError::BadConfig);
    }
    if config.workers.contains(&0) {
        return Err(BenchError::ZeroWorkers);
    }
    let compiled: Compiled = compile(&bench_program(config.tasks, config.size), "main")?;
    let row = |mode: &str, workers, (wall_ms, result_checksum)| BenchRow {
        mode: mode.to_string(),
        workers,
        tasks: config.tasks,
        size: config.size,
        wall_ms,
        result_checksum,
    };

    let mut rows = Vec::with_capacity(config.workers.len() + 1);
    let seq = time_runs(config.reps, || Ok(compiled.run_sequential()?.output))?;
    log::info!("seq: {:.1} ms", seq.0);
    rows.push(row("seq", 1, seq));
    for &w in &config.workers {
        let timed = time_runs(config.reps, || Ok(compiled.run_local(w)?.output))?;
        log::info!("local w={w}: {:.1} ms", timed.0);
        if timed.1 != seq.1 {
            return Err(BenchError::Mismatch { mode: "local".into(), workers: w, got: timed.1, expected: seq.1 });
        }
        rows.push(row("local", w, timed));
    }
    Ok(rows)
}

/// CSV text: a comment line, the header, one line per row.
pub fn to_csv(rows: &[BenchRow]) -> Result<String, BenchError> {
    let fail = |e: csv::Error| BenchError::Csv { path: "<memory>".into(), message: e.to_string() };
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(CSV_HEADER).map_err(fail)?;
    for r in rows {
        writer
            .write_record([
                r.mode.clone(),
                r.workers.to_string(),
                r.tasks.to_string(),
                r.size.to_string(),
                format!("{:.3}", r.wall_ms),
                r.result_checksum.to_string(),
            ])
            .map_err(fail)?;
    }
    let body = writer.into_inner().map_err(|e| BenchError::Csv { path: "<memory>".into(), message: e.to_string() })?;
    Ok(format!("{CSV_COMMENT}{}", String::from_utf8(body).expect("csv output is UTF-8")))
}

/// Writes the CSV; a partially written file is removed on failure.
pub fn write_csv(path: &Path, rows: &[BenchRow]) -> Result<(), BenchError> {
    let text = to_csv(rows)?;
    let fail = |e: std::io::Error| BenchError::Csv { path: path.display().to_string(), message: e.to_string() };
    let written = fs::File::create(path).and_then(|mut f| {
        f.write_all(text.as_bytes())?;
        f.sync_all()
    });
    if let Err(e) = written {
        let _ = fs::remove_file(path);
        return Err(fail(e));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn program_shape() {
        let src = bench_program(2, 3);
        assert_eq!(
            src,
            "main :: IO ()\nmain = do\n    let c1 = checksum (matMul (genMatrix 1 3 3) (genMatrix 1001 3 3))\n    let c2 = checksum (matMul (genMatrix 2 3 3) (genMatrix 1002 3 3))\n    let total = c1 + c2\n    print total\n"
        );
        let c = compile(&src, "main").unwrap();
        assert_eq!(c.graph.len(), 4);
        assert_eq!(c.graph.nodes[2].data_deps().count(), 2);
    }

    #[test]
    fn rows_agree_and_csv_is_well_formed() {
        let config = BenchConfig { tasks: 1, size: 4, workers: vec![1, 2], reps: 1 };
        let rows = run_bench(&config).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows.iter().all(|r| r.result_checksum == rows[0].result_checksum));
        let csv = to_csv(&rows).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert!(lines[0].starts_with('#'));
        assert_eq!(lines[1], "mode,workers,tasks,size,wall_ms,result_checksum");
        assert!(lines[2].starts_with("seq,1,1,4,"));
        assert!(lines[4].starts_with("local,2,1,4,"));
    }

    #[test]
    fn bad_configs() {
        let zero = BenchConfig { tasks: 0, size: 4, workers: vec![1], reps: 1 };
        assert!(matches!(run_bench(&zero), Err(BenchError::BadConfig)));
        let zero_workers = BenchConfig { tasks: 1, size: 4, workers: vec![0], reps: 1 };
        assert!(matches!(run_bench(&zero_workers), Err(BenchError::ZeroWorkers)));
    }

    #[test]
    fn failed_write_leaves_no_file() {
        let dir = std::env::temp_dir().join("apar-no-such-dir-for-csv");
        let path = dir.join("out.csv");
        assert!(write_csv(&path, &[]).is_err());
        assert!(!path.exists());
    }
}
