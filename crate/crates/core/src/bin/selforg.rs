use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use selforg::runner::{parse_config, run_task, RunOptions, RunStatus, Task, TruncationFlag};
use selforg::Error;

/// Steady states, trajectories and spectra of atoms self-ordering in a
/// driven, damped cavity.
#[derive(Parser, Debug)]
#[command(version, about)]
struct Cli {
    /// JSON run configuration
    #[arg(long)]
    config: PathBuf,
    /// overrides the task of the configuration
    #[arg(long)]
    task: Option<Task>,
    /// overrides the output directory of the configuration
    #[arg(long)]
    out: Option<PathBuf>,
    /// omit timings so that reruns produce identical files
    #[arg(long)]
    reproducible: bool,
    /// worker threads for sweeps and dense kernels
    #[arg(long)]
    threads: Option<usize>,
    /// also write the basis and the sparse operators
    #[arg(long)]
    dump_operators: bool,
}

const EXIT_CONFIG: u8 = 2;
const EXIT_CONVERGENCE: u8 = 3;
const EXIT_TRUNCATION: u8 = 4;

fn run(cli: Cli) -> Result<u8, (u8, String)> {
    let config_error = |e: String| (EXIT_CONFIG, e);
    let text = std::fs::read_to_string(&cli.config).map_err(|e| config_error(format!("{}: {}", cli.config.display(), e)))?;
    let mut cfg = parse_config(&text).map_err(|e| config_error(e.to_string()))?;
    if let Some(task) = cli.task {
        cfg.task = task;
        cfg.validate().map_err(|e| config_error(e.to_string()))?;
    }
    if let Some(out) = cli.out {
        cfg.output_dir = out;
    }
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| config_error(format!("--threads: {}", e)))?;
    }
    let opts = RunOptions {
        reproducible: cli.reproducible,
        dump_operators: cli.dump_operators,
        flush_dir: (cfg.task == Task::PhaseDiagram).then(|| cfg.output_dir.clone()),
    };
    let dataset = run_task(&cfg, &opts).map_err(|e| match e {
        Error::Io(_) => (1, e.to_string()),
        _ => config_error(e.to_string()),
    })?;
    dataset.write(&cfg.output_dir).map_err(|e| (1, e.to_string()))?;
    let t = dataset.truncation;
    eprintln!(
        "truncation: top photon level {:.3e} ({:?}), top modes {:.3e} ({:?})",
        t.top_photon_population, t.photon_flag, t.top_mode_population, t.mode_flag
    );
    if let RunStatus::Failed(msg) = &dataset.status {
        eprintln!("convergence failure: {}", msg);
        return Ok(EXIT_CONVERGENCE);
    }
    if t.flag == TruncationFlag::Fail {
        return Ok(EXIT_TRUNCATION);
    }
    Ok(0)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err((code, msg)) => {
            eprintln!("error: {}", msg);
            ExitCode::from(code)
        }
    }
}
