//! Benchmark sweeps: one CSV row per (cell, replicate) run.
//!
//! | name        | model     | target              | sweep                                   |
//! |-------------|-----------|---------------------|-----------------------------------------|
//! | `fig1`      | zigzag    | gaussian, d = 30    | fixed `t_max`, Brent bound              |
//! | `fig2`      | zigzag    | gaussian, d = 30    | initial `t_max`, Brent bound, adaptive  |
//! | `fig4`      | bps       | two_scale_mixture   | `t_max` x N                             |
//! | `time_fig5` | bps       | two_scale_mixture   | same runs as `fig4`, timing focus       |
//! | `fig5`      | zigzag    | local_mixture_20    | N x strategy, adaptive                  |
//! | `fig6`      | boomerang | local_mixture_20    | N x strategy, adaptive                  |
//! | `table1`    | fec       | banana, d = 30      | N x strategy, adaptive                  |
//!
//! Row files depend only on `(name, seed, overrides)`. Wall-clock times go to a
//! separate timing file.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::diff::Strategy;
use crate::error::{Error, Result};
use crate::models::ModelSpec;
use crate::rng::RandomStream;
use crate::runner::run_jobs;
use crate::sampler::{run, run_autozz_baseline, RunStats, SamplerConfig};
use crate::stats::{path_mean, path_second_moment};
use crate::targets::TargetSpec;

pub const EXPERIMENTS: &[&str] = &["fig1", "fig2", "fig4", "time_fig5", "fig5", "fig6", "table1"];

pub const DESK_EVENTS: usize = 100_000;
pub const PAPER_EVENTS: usize = 1_000_000;

#[derive(Debug, Clone, Default)]
pub struct ExperimentOptions {
    pub seed: u64,
    pub paper_scale: bool,
    pub n_events: Option<usize>,
    pub replicates: Option<usize>,
}

/// One point of a sweep.
#[derive(Debug, Clone)]
pub struct Cell {
    pub model: ModelSpec,
    pub target: TargetSpec,
    pub sampler: SamplerConfig,
    /// Run the automatic Zig-Zag baseline instead of the general loop.
    pub baseline: bool,
}

#[derive(Debug, Clone)]
pub struct Plan {
    pub name: String,
    pub cells: Vec<Cell>,
    pub replicates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRow {
    pub experiment: String,
    pub cell: usize,
    pub replicate: usize,
    pub model: String,
    pub target: String,
    pub dim: usize,
    pub refresh_rate: f64,
    pub strategy: String,
    pub signed: bool,
    pub n_segments: usize,
    pub t_max0: f64,
    pub adapt: bool,
    pub alpha_plus: f64,
    pub alpha_minus: f64,
    pub seed: u64,
    pub n_events: u64,
    pub n_opt_evals: u64,
    pub n_thinning_evals: u64,
    pub total_grad_evals: u64,
    pub n_hvp_evals: u64,
    pub n_envelopes: u64,
    pub n_proposals: u64,
    pub n_rejections: u64,
    pub n_horizon_hits: u64,
    pub n_bound_errors: u64,
    pub bound_error_excess_sum: f64,
    pub mean_bound_error_excess: f64,
    pub thinning_ar: f64,
    pub total_time: f64,
    pub final_tmax: f64,
    pub mean_tmax: f64,
    pub mean_x0: f64,
    pub mean_x1: f64,
    pub mean_avg: f64,
    pub second_moment_x0: f64,
    pub second_moment_x1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimingRow {
    pub cell: usize,
    pub replicate: usize,
    pub wall_time: f64,
}

/// Replicate averages per `(N, signed)` in the layout of the high-dimensional table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table1Row {
    #[serde(rename = "N")]
    pub n: usize,
    pub signed: bool,
    pub time: f64,
    pub mean_tmax: f64,
    pub thinning_ar: f64,
    pub n_rejections: f64,
    pub n_horizon_hits: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub plan: Plan,
    pub rows: Vec<RunRow>,
    pub timings: Vec<TimingRow>,
}

fn adaptive(n_events: usize, n_segments: usize, strategy: Strategy) -> SamplerConfig {
    SamplerConfig {
        n_events,
        t_max: 1.0,
        n_segments,
        alpha_plus: 1.01,
        alpha_minus: 1.04,
        adapt: true,
        strategy: if n_segments == 0 { None } else { Some(strategy) },
        ..SamplerConfig::default()
    }
}

/// Sweep definition for `name`.
pub fn plan(name: &str, opts: &ExperimentOptions) -> Result<Plan> {
    let k = opts
        .n_events
        .unwrap_or(if opts.paper_scale { PAPER_EVENTS } else { DESK_EVENTS });
    let mut cells = Vec::new();
    let default_reps;
    match name {
        "fig1" | "fig2" => {
            default_reps = 10;
            let adapt = name == "fig2";
            for t_max in [0.01, 0.0316, 0.1, 0.316, 1.0, 3.16, 10.0] {
                cells.push(Cell {
                    model: ModelSpec::named("zigzag"),
                    target: TargetSpec::named("gaussian", Some(30)),
                    sampler: SamplerConfig {
                        n_events: k,
                        t_max,
                        n_segments: 0,
                        alpha_plus: if adapt { 1.1 } else { 1.0 },
                        alpha_minus: if adapt { 1.1 } else { 1.0 },
                        adapt,
                        ..SamplerConfig::default()
                    },
                    baseline: true,
                });
            }
        }
        "fig4" | "time_fig5" => {
            default_reps = 10;
            // t_max = 0 stands for the adaptive horizon started at 1
            for t_max in [0.0, 0.01, 0.1, 1.0] {
                for n in [0, 5, 10, 20, 50, 100] {
                    let mut s = adaptive(k, n, Strategy::Signed);
                    if t_max > 0.0 {
                        s.t_max = t_max;
                        s.adapt = false;
                    }
                    cells.push(Cell {
                        model: ModelSpec::named("bps").with_refresh(0.1),
                        target: TargetSpec::named("two_scale_mixture", None),
                        sampler: s,
                        baseline: false,
                    });
                }
            }
        }
        "fig5" | "fig6" => {
            default_reps = 20;
            let (model, strategies): (ModelSpec, &[Strategy]) = if name == "fig5" {
                (
                    ModelSpec::named("zigzag"),
                    &[Strategy::Plain, Strategy::Vectorized, Strategy::VectorizedSigned],
                )
            } else {
                (
                    ModelSpec::named("boomerang").with_refresh(0.1),
                    &[Strategy::Plain, Strategy::Signed],
                )
            };
            let mut target = TargetSpec::named("local_mixture_20", None);
            // the Boomerang chain should sample the mixture itself
            target.boomerang_adjust = name == "fig6";
            cells.push(Cell {
                model: model.clone(),
                target: target.clone(),
                sampler: adaptive(k, 0, Strategy::Plain),
                baseline: false,
            });
            for n in [5, 10, 20, 50] {
                for &s in strategies {
                    cells.push(Cell {
                        model: model.clone(),
                        target: target.clone(),
                        sampler: adaptive(k, n, s),
                        baseline: false,
                    });
                }
            }
        }
        "table1" => {
            default_reps = 20;
            let model = ModelSpec::named("fec");
            let target = TargetSpec::named("banana", Some(30));
            cells.push(Cell {
                model: model.clone(),
                target: target.clone(),
                sampler: adaptive(k, 0, Strategy::Plain),
                baseline: false,
            });
            for n in [3, 5, 10, 20] {
                for s in [Strategy::Plain, Strategy::Signed] {
                    cells.push(Cell {
                        model: model.clone(),
                        target: target.clone(),
                        sampler: adaptive(k, n, s),
                        baseline: false,
                    });
                }
            }
        }
        other => {
            return Err(Error::Unknown {
                kind: "experiment",
                name: other.to_string(),
            })
        }
    }
    let replicates = opts.replicates.unwrap_or(default_reps);
    if replicates == 0 {
        return Err(Error::config("replicates", "must be at least 1"));
    }
    Ok(Plan {
        name: name.to_string(),
        cells,
        replicates,
    })
}

/// Seed of replicate `replicate` in cell `cell`.
pub fn job_seed(base: u64, cell: usize, replicate: usize) -> u64 {
    RandomStream::new(base)
        .split(cell as u64)
        .split(replicate as u64)
        .seed()
}

/// Runs one cell with the given seed.
pub fn run_cell(cell: &Cell, seed: u64) -> Result<(RunStats, Vec<f64>, Vec<f64>)> {
    let model = cell.model.build()?;
    let target = cell.target.build()?;
    let mut cfg = cell.sampler.clone();
    cfg.seed = seed;
    let (skeleton, stats) = if cell.baseline {
        run_autozz_baseline(model.as_ref(), target.as_ref(), &cfg)?
    } else {
        run(model.as_ref(), target.as_ref(), &cfg)?
    };
    let mean = path_mean(&skeleton, model.flow())?;
    let second = path_second_moment(&skeleton, model.flow())?;
    Ok((stats, mean, second))
}

fn row(plan: &Plan, c: usize, r: usize, seed: u64, out: &(RunStats, Vec<f64>, Vec<f64>)) -> RunRow {
    let cell = &plan.cells[c];
    let (stats, mean, second) = out;
    let model = cell.model.build().expect("validated");
    let strategy = cell.sampler.effective_strategy(model.as_ref());
    let at = |v: &Vec<f64>, i: usize| v.get(i).copied().unwrap_or(f64::NAN);
    RunRow {
        experiment: plan.name.clone(),
        cell: c,
        replicate: r,
        model: cell.model.name.clone(),
        target: cell.target.name.clone(),
        dim: mean.len(),
        refresh_rate: cell.model.refresh_rate,
        strategy: strategy.name().to_string(),
        signed: strategy.is_signed(),
        n_segments: cell.sampler.n_segments,
        t_max0: cell.sampler.t_max,
        adapt: cell.sampler.adapt,
        alpha_plus: cell.sampler.alpha_plus,
        alpha_minus: if cell.baseline {
            cell.sampler.alpha_plus
        } else {
            cell.sampler.alpha_minus
        },
        seed,
        n_events: stats.n_events,
        n_opt_evals: stats.n_opt_evals,
        n_thinning_evals: stats.n_thinning_evals,
        total_grad_evals: stats.total_grad_evals(),
        n_hvp_evals: stats.n_hvp_evals,
        n_envelopes: stats.n_envelopes,
        n_proposals: stats.n_proposals,
        n_rejections: stats.n_rejections,
        n_horizon_hits: stats.n_horizon_hits,
        n_bound_errors: stats.n_bound_errors,
        bound_error_excess_sum: stats.bound_error_excess_sum,
        mean_bound_error_excess: stats.mean_bound_error_excess(),
        thinning_ar: stats.thinning_ar(),
        total_time: stats.total_time,
        final_tmax: stats.final_tmax,
        mean_tmax: stats.mean_tmax,
        mean_x0: at(mean, 0),
        mean_x1: at(mean, 1),
        mean_avg: mean.iter().sum::<f64>() / mean.len() as f64,
        second_moment_x0: at(second, 0),
        second_moment_x1: at(second, 1),
    }
}

/// Runs every (cell, replicate) job of the plan on the worker pool.
pub fn execute(plan: Plan, base_seed: u64) -> Result<ExperimentOutput> {
    let reps = plan.replicates;
    let jobs = plan.cells.len() * reps;
    let results = run_jobs(jobs, |j| {
        let (c, r) = (j / reps, j % reps);
        let seed = job_seed(base_seed, c, r);
        run_cell(&plan.cells[c], seed).map(|out| (seed, out))
    });
    let mut rows = Vec::with_capacity(jobs);
    let mut timings = Vec::with_capacity(jobs);
    for (j, res) in results.into_iter().enumerate() {
        let (seed, out) = res?;
        let (c, r) = (j / reps, j % reps);
        timings.push(TimingRow {
            cell: c,
            replicate: r,
            wall_time: out.0.wall_time,
        });
        rows.push(row(&plan, c, r, seed, &out));
    }
    Ok(ExperimentOutput {
        plan,
        rows,
        timings,
    })
}

pub fn run_experiment(name: &str, opts: &ExperimentOptions) -> Result<ExperimentOutput> {
    execute(plan(name, opts)?, opts.seed)
}

/// Per-cell replicate means in the high-dimensional table layout.
pub fn table1_summary(out: &ExperimentOutput) -> Vec<Table1Row> {
    let reps = out.plan.replicates as f64;
    out.plan
        .cells
        .iter()
        .enumerate()
        .map(|(c, cell)| {
            let rows: Vec<(&RunRow, &TimingRow)> = out
                .rows
                .iter()
                .zip(&out.timings)
                .filter(|(r, _)| r.cell == c)
                .collect();
            let mean = |f: &dyn Fn(&RunRow, &TimingRow) -> f64| {
                rows.iter().map(|(r, t)| f(r, t)).sum::<f64>() / reps
            };
            Table1Row {
                n: cell.sampler.n_segments,
                signed: rows[0].0.signed,
                time: mean(&|_, t| t.wall_time),
                mean_tmax: mean(&|r, _| r.mean_tmax),
                thinning_ar: mean(&|r, _| r.thinning_ar),
                n_rejections: mean(&|r, _| r.n_rejections as f64),
                n_horizon_hits: mean(&|r, _| r.n_horizon_hits as f64),
            }
        })
        .collect()
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `<name>.csv`, `<name>_timing.csv` and, for `table1`,
/// `table1_summary.csv` into `dir`.
pub fn write_outputs(out: &ExperimentOutput, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let name = &out.plan.name;
    let mut written = vec![dir.join(format!("{name}.csv")), dir.join(format!("{name}_timing.csv"))];
    write_rows(&written[0], &out.rows)?;
    write_rows(&written[1], &out.timings)?;
    if name == "table1" {
        let p = dir.join("table1_summary.csv");
        write_rows(&p, &table1_summary(out))?;
        written.push(p);
    }
    Ok(written)
}
