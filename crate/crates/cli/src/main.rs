use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

mod config;
mod tasks;

use config::{ExperimentConfig, Task};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum TaskArg {
    Pressure,
    Rate,
    Variational,
    Check,
    Oracle,
}

impl From<TaskArg> for Task {
    fn from(t: TaskArg) -> Self {
        match t {
            TaskArg::Pressure => Task::Pressure,
            TaskArg::Rate => Task::Rate,
            TaskArg::Variational => Task::Variational,
            TaskArg::Check => Task::Check,
            TaskArg::Oracle => Task::Oracle,
        }
    }
}

/// Perturbed free energy densities and rate functions for spin chains.
///
/// Exit status: 0 when every check passes, 1 when any check fails,
/// 2 on a configuration or computation error.
#[derive(Parser, Debug)]
#[command(name = "fed", version)]
struct Cli {
    task: TaskArg,
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `seed` in the config.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
}

fn fail(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("fed: {msg}");
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let task = Task::from(cli.task);
    let mut cfg = match ExperimentConfig::load(&cli.config) {
        Ok(cfg) => cfg,
        Err(e) => return fail(format!("{}: {e}", cli.config.display())),
    };
    if let Some(t) = cfg.task {
        if t != task {
            return fail(format!(
                "{}: config is for task `{}`, not `{}`",
                cli.config.display(),
                t.name(),
                task.name()
            ));
        }
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            return fail(e);
        }
    }
    let out = cli.out.clone().unwrap_or_else(|| cfg.output.clone());

    let report = match tasks::run(task, &cfg) {
        Ok(r) => r,
        Err(e) => return fail(e),
    };
    if let Err(e) = std::fs::create_dir_all(&out) {
        return fail(format!("{}: {e}", out.display()));
    }
    let summary = report.summary(task, &cfg);
    let files = report
        .files
        .iter()
        .map(|(name, text)| (name.as_str(), text.as_str()))
        .chain(std::iter::once(("summary.txt", summary.as_str())));
    for (name, text) in files {
        let path = out.join(name);
        if let Err(e) = std::fs::write(&path, text) {
            return fail(format!("{}: {e}", path.display()));
        }
    }
    print!("{summary}");
    if report.all_pass() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
