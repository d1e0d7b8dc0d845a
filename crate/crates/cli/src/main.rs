use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pdmp::config::RunConfig;
use pdmp::experiments::{self, ExperimentOptions};
use pdmp::Error;

#[derive(Parser)]
#[command(name = "pdmp", version, about = "Piecewise deterministic Monte Carlo samplers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one sampler from a TOML config; writes skeleton.csv, summary.json and timing.json.
    Run {
        config: PathBuf,
        /// Output directory (overrides `[output] dir`; default `out`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a benchmark sweep: fig1, fig2, fig4, time_fig5, fig5, fig6 or table1.
    Experiment {
        name: String,
        /// 10^6 events per run instead of the desk-scale 10^5.
        #[arg(long)]
        paper_scale: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "results")]
        out: PathBuf,
        /// Override the number of replicate chains per cell.
        #[arg(long)]
        replicates: Option<usize>,
        /// Override the number of events per run.
        #[arg(long)]
        events: Option<usize>,
    },
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::NonConvergence { .. } => 3,
        Error::InvalidConfig { .. }
        | Error::Unknown { .. }
        | Error::InvalidStrategy { .. }
        | Error::DimensionMismatch { .. }
        | Error::InvalidVelocity(_)
        | Error::MissingHvp => 2,
        _ => 1,
    }
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), Error> {
    let mut text = serde_json::to_string_pretty(value).expect("json values serialise");
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn cmd_run(config: &Path, out: Option<PathBuf>) -> Result<(), Error> {
    let cfg = RunConfig::from_path(config).map_err(|e| match e {
        Error::Io(io) => Error::InvalidConfig {
            field: "config".into(),
            message: format!("{}: {io}", config.display()),
        },
        other => other,
    })?;
    let dir = out
        .or_else(|| cfg.output.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let (skeleton, summary) = cfg.execute()?;
    fs::create_dir_all(&dir)?;
    skeleton.write_csv(fs::File::create(dir.join("skeleton.csv"))?)?;

    // wall time is the only non-reproducible field; keep it out of summary.json
    let mut json = serde_json::to_value(&summary).expect("summary serialises");
    let wall = json
        .as_object_mut()
        .and_then(|m| m.remove("wall_time"))
        .unwrap_or(serde_json::Value::Null);
    write_json(&dir.join("summary.json"), &json)?;
    write_json(&dir.join("timing.json"), &serde_json::json!({ "wall_time": wall }))?;
    eprintln!(
        "{} events, {} gradient evaluations -> {}",
        summary.stats.n_events,
        summary.total_grad_evals,
        dir.display()
    );
    Ok(())
}

fn cmd_experiment(name: &str, opts: ExperimentOptions, out: &Path) -> Result<(), Error> {
    let output = experiments::run_experiment(name, &opts)?;
    for path in experiments::write_outputs(&output, out)? {
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, out } => cmd_run(&config, out),
        Command::Experiment {
            name,
            paper_scale,
            seed,
            out,
            replicates,
            events,
        } => cmd_experiment(
            &name,
            ExperimentOptions {
                seed,
                paper_scale,
                n_events: events,
                replicates,
            },
            &out,
        ),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
