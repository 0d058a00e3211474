//! Command-line harness: configuration resolution, dispatch and artifact
//! writing for the `kpzlab` binary.

pub mod commands;
pub mod config;
pub mod report;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use kpzlab::Error;
use serde_json::json;

use config::{resolve, Command, Lock, RunArgs};
use report::{Outcome, Report, Status};

pub const EXIT_FAIL: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_CERTIFICATION: u8 = 3;
pub const EXIT_RUNTIME: u8 = 4;

fn write(dir: &Path, name: &str, contents: &str) -> std::io::Result<()> {
    fs::write(dir.join(name), contents)
}

fn pretty<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("reports serialize") + "\n"
}

/// Runs one command and writes its artifacts; returns the exit status.
pub fn run(command: Command, args: RunArgs) -> u8 {
    let params = match resolve(command, args.config.as_deref(), &args.params) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let out = args.out.unwrap_or_else(|| PathBuf::from("kpzlab-out").join(command.name()));
    let threads = args.threads.unwrap_or(0);
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start {threads} worker threads: {e}");
            return EXIT_RUNTIME;
        }
    };
    let lock = Lock::new(&params);
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let clock = Instant::now();
    let result = pool.install(|| commands::execute(command, &params));
    let elapsed = clock.elapsed().as_secs_f64();

    let (status, outcome, error, certificates) = match result {
        Ok(o) => {
            let status = if o.assertions.iter().all(|a| a.passed) { Status::Pass } else { Status::Fail };
            (status, o, None, None)
        }
        Err(Error::InsufficientCertification { message, certificates }) => {
            (Status::InsufficientCertification, Outcome::default(), Some(message), Some(certificates))
        }
        Err(e @ (Error::Precondition(_) | Error::Config(_) | Error::Ordering(_) | Error::InsufficientData { .. })) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_RUNTIME;
        }
    };

    let report = Report {
        command: command.name(),
        config_hash: &lock.hash,
        status,
        assertions: &outcome.assertions,
        results: &outcome.results,
        error: error.clone(),
        certificates: certificates.as_deref(),
    };
    let sidecar = json!({
        "started_unix_seconds": started,
        "elapsed_seconds": elapsed,
        "threads": pool.current_num_threads(),
        "version": env!("CARGO_PKG_VERSION"),
    });
    let written = (|| -> std::io::Result<()> {
        fs::create_dir_all(&out)?;
        write(&out, "config.lock.json", &pretty(&lock))?;
        for (name, contents) in &outcome.files {
            write(&out, name, contents)?;
        }
        write(&out, "report.json", &pretty(&report))?;
        write(&out, "run.json", &pretty(&sidecar))
    })();
    if let Err(e) = written {
        eprintln!("error: cannot write to {}: {e}", out.display());
        return EXIT_RUNTIME;
    }

    for a in &outcome.assertions {
        if a.passed {
            println!("{a}");
        } else {
            eprintln!("{a}");
        }
    }
    match status {
        Status::Pass => {
            println!("{}: all {} assertions passed ({})", command.name(), outcome.assertions.len(), out.display());
            0
        }
        Status::Fail => {
            let failed = outcome.assertions.iter().filter(|a| !a.passed).count();
            eprintln!(
                "{}: {failed} of {} assertions failed ({})",
                command.name(),
                outcome.assertions.len(),
                out.display()
            );
            EXIT_FAIL
        }
        Status::InsufficientCertification => {
            eprintln!("{}: insufficient certification: {}", command.name(), error.unwrap_or_default());
            for c in certificates.unwrap_or_default() {
                eprintln!("  {}", serde_json::to_string(&c).expect("certificates serialize"));
            }
            EXIT_CERTIFICATION
        }
    }
}
