//! The PDMP main loop: envelope, thinning, jumps and horizon adaptation.
//!
//! Each envelope covers `[0, t_max]` from the current state. A candidate from
//! the envelope is thinned against the true rate:
//!
//! * accepted: the state moves to the event, the velocity jumps, a new
//!   envelope is built;
//! * rejected: the exponential budget grows by a fresh `Exp(1)` and, when
//!   adapting, `t_max` shrinks by `alpha_minus` while the envelope is kept;
//! * horizon reached: the state moves by `t_max`, which then grows by
//!   `alpha_plus`, and a new envelope is built;
//! * bound error (rate above the envelope): nothing is accepted, the envelope
//!   is rebuilt from the same state with half the horizon.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::bounds::{upper_bound_brent, upper_bound_grid, uniform_grid, BrentOptions, Envelope};
use crate::diff::{DerivativeBackend, Potential, RateEvaluator, RateForm, Strategy};
use crate::error::{Error, Result};
use crate::events::{next_event_within, thinning_step, NextEvent, Thinning};
use crate::models::PdmpModel;
use crate::process::{Skeleton, State};
use crate::rng::RandomStream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerConfig {
    /// Skeleton points to collect.
    pub n_events: usize,
    /// Initial horizon.
    pub t_max: f64,
    /// Grid segments per envelope; 0 selects the Brent constant bound.
    pub n_segments: usize,
    #[serde(default = "one")]
    pub alpha_plus: f64,
    #[serde(default = "one")]
    pub alpha_minus: f64,
    /// When false, every fresh envelope uses the initial horizon.
    #[serde(default)]
    pub adapt: bool,
    /// Defaults to the model's preferred strategy.
    #[serde(default)]
    pub strategy: Option<Strategy>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_floor")]
    pub t_max_floor: f64,
    #[serde(default = "default_cap")]
    pub t_max_cap: f64,
    #[serde(default)]
    pub derivative: DerivativeBackend,
    #[serde(default = "default_brent_tol")]
    pub brent_rel_tol: f64,
    #[serde(default = "default_brent_iter")]
    pub brent_max_iter: usize,
    #[serde(default)]
    pub initial_position: Option<Vec<f64>>,
    #[serde(default)]
    pub initial_velocity: Option<Vec<f64>>,
    /// Gradient evaluations allowed between two accepted events.
    #[serde(default = "default_eval_cap")]
    pub max_evals_without_event: u64,
}

fn one() -> f64 {
    1.0
}
fn default_floor() -> f64 {
    1e-6
}
fn default_cap() -> f64 {
    1e4
}
fn default_brent_tol() -> f64 {
    BrentOptions::default().rel_tol
}
fn default_brent_iter() -> usize {
    BrentOptions::default().max_iter
}
fn default_eval_cap() -> u64 {
    1_000_000_000
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            n_events: 1000,
            t_max: 1.0,
            n_segments: 10,
            alpha_plus: 1.01,
            alpha_minus: 1.04,
            adapt: true,
            strategy: None,
            seed: 0,
            t_max_floor: default_floor(),
            t_max_cap: default_cap(),
            derivative: DerivativeBackend::Auto,
            brent_rel_tol: default_brent_tol(),
            brent_max_iter: default_brent_iter(),
            initial_position: None,
            initial_velocity: None,
            max_evals_without_event: default_eval_cap(),
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        let field = |f: &str| format!("sampler.{f}");
        if self.n_events == 0 {
            return Err(Error::config(field("n_events"), "must be at least 1"));
        }
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return Err(Error::config(field("t_max"), "must be positive and finite"));
        }
        if !(self.alpha_plus >= 1.0 && self.alpha_plus.is_finite()) {
            return Err(Error::config(field("alpha_plus"), "must be >= 1"));
        }
        if !(self.alpha_minus >= 1.0 && self.alpha_minus.is_finite()) {
            return Err(Error::config(field("alpha_minus"), "must be >= 1"));
        }
        if !(self.t_max_floor > 0.0) {
            return Err(Error::config(field("t_max_floor"), "must be positive"));
        }
        if !(self.t_max_floor <= self.t_max && self.t_max <= self.t_max_cap) {
            return Err(Error::config(
                field("t_max"),
                "must lie within [t_max_floor, t_max_cap]",
            ));
        }
        if !(self.brent_rel_tol > 0.0) || self.brent_max_iter == 0 {
            return Err(Error::config(field("brent_rel_tol"), "Brent settings must be positive"));
        }
        match (self.n_segments, self.strategy) {
            (0, Some(s)) if s != Strategy::BrentBaseline && s != Strategy::Plain => {
                Err(Error::config(
                    field("strategy"),
                    "the Brent bound (n_segments = 0) bounds the plain rate",
                ))
            }
            (n, Some(Strategy::BrentBaseline)) if n > 0 => Err(Error::config(
                field("strategy"),
                "brent_baseline requires n_segments = 0",
            )),
            _ => Ok(()),
        }
    }

    /// Strategy actually used with `model`.
    pub fn effective_strategy(&self, model: &dyn PdmpModel) -> Strategy {
        if self.n_segments == 0 {
            Strategy::BrentBaseline
        } else {
            self.strategy.unwrap_or_else(|| model.default_strategy())
        }
    }

    fn brent(&self) -> BrentOptions {
        BrentOptions {
            rel_tol: self.brent_rel_tol,
            max_iter: self.brent_max_iter,
        }
    }
}

/// Counters and timings of one run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub n_events: u64,
    /// Gradient evaluations spent building envelopes.
    pub n_opt_evals: u64,
    /// Gradient evaluations spent in thinning decisions.
    pub n_thinning_evals: u64,
    /// Gradient evaluations counted by the rate evaluator.
    pub n_grad_evals: u64,
    pub n_hvp_evals: u64,
    pub n_envelopes: u64,
    /// Accepted plus rejected thinning proposals (bound errors excluded).
    pub n_proposals: u64,
    pub n_rejections: u64,
    pub n_horizon_hits: u64,
    pub n_bound_errors: u64,
    /// Sum of `ratio - 1` over bound errors.
    pub bound_error_excess_sum: f64,
    /// Sum of `rate / level` over proposals.
    pub acceptance_ratio_sum: f64,
    pub total_time: f64,
    pub final_tmax: f64,
    /// Horizon averaged over process time.
    pub mean_tmax: f64,
    pub wall_time: f64,
}

impl RunStats {
    pub fn total_grad_evals(&self) -> u64 {
        self.n_opt_evals + self.n_thinning_evals
    }

    /// Mean acceptance probability `rate / level` over thinning proposals.
    pub fn thinning_ar(&self) -> f64 {
        if self.n_proposals == 0 {
            0.0
        } else {
            self.acceptance_ratio_sum / self.n_proposals as f64
        }
    }

    pub fn mean_bound_error_excess(&self) -> f64 {
        if self.n_bound_errors == 0 {
            0.0
        } else {
            self.bound_error_excess_sum / self.n_bound_errors as f64
        }
    }
}

/// Why an envelope was (re)built.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuildCause {
    Start,
    Accept,
    Horizon,
    BoundError,
}

/// Observable steps of a run, for diagnostics and tests.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TraceEvent {
    Envelope { horizon: f64, cause: BuildCause },
    Accept { t: f64 },
    Reject { tau: f64, horizon: f64 },
    HorizonHit { horizon: f64 },
    BoundError { ratio: f64, horizon: f64 },
}

/// Runs the grid-envelope sampler (or the Brent baseline when
/// `n_segments = 0`) until `n_events` events are accepted.
pub fn run(
    model: &dyn PdmpModel,
    potential: &dyn Potential,
    config: &SamplerConfig,
) -> Result<(Skeleton, RunStats)> {
    run_traced(model, potential, config, |_| {})
}

/// The automatic Zig-Zag baseline: constant Brent envelope, Zig-Zag model,
/// and a single factor `alpha_plus` for both growing and shrinking the
/// horizon when `adapt` is set.
pub fn run_autozz_baseline(
    model: &dyn PdmpModel,
    potential: &dyn Potential,
    config: &SamplerConfig,
) -> Result<(Skeleton, RunStats)> {
    if model.rate_form() != RateForm::Coordinatewise {
        return Err(Error::config("model.name", "the automatic Zig-Zag baseline needs zigzag"));
    }
    if config.n_segments != 0 {
        return Err(Error::config("sampler.n_segments", "the baseline uses n_segments = 0"));
    }
    let mut cfg = config.clone();
    cfg.alpha_minus = cfg.alpha_plus;
    run(model, potential, &cfg)
}

/// [`run`] with every step reported to `trace`.
pub fn run_traced(
    model: &dyn PdmpModel,
    potential: &dyn Potential,
    config: &SamplerConfig,
    mut trace: impl FnMut(TraceEvent),
) -> Result<(Skeleton, RunStats)> {
    config.validate()?;
    let started = Instant::now();
    let dim = potential.dim();
    let strategy = config.effective_strategy(model);
    let form = model.rate_form();
    let mut eval = RateEvaluator::new(potential, model.flow(), form, strategy, config.derivative)?;
    let mut stream = RandomStream::new(config.seed);

    let x0 = match &config.initial_position {
        Some(x) if x.len() != dim => {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: x.len(),
            })
        }
        Some(x) => x.clone(),
        None => vec![0.0; dim],
    };
    let v0 = match &config.initial_velocity {
        Some(v) => v.clone(),
        None => model.init_velocity(dim, &mut stream),
    };
    model.check_velocity(&v0)?;
    let mut state = State::new(x0, v0)?;
    let mut skeleton = Skeleton::new(state.clone());
    let mut stats = RunStats::default();

    let n_segments = config.n_segments;
    let brent = config.brent();
    let refresh = form.refresh();
    let build = |eval: &mut RateEvaluator<'_>, s: &State, horizon: f64| -> Result<Envelope> {
        if n_segments == 0 {
            Ok(upper_bound_brent(|t| eval.rate(s, t), horizon, brent)?.envelope)
        } else {
            let nodes = eval.grid_nodes(s, &uniform_grid(horizon, n_segments))?;
            upper_bound_grid(&nodes, strategy, refresh)
        }
    };

    let mut tmax = config.t_max;
    let mut horizon = tmax;
    let mut time = 0.0;
    let mut tmax_integral = 0.0;

    let before = eval.grad_evals();
    let mut env = build(&mut eval, &state, horizon)?;
    stats.n_opt_evals += eval.grad_evals() - before;
    stats.n_envelopes += 1;
    trace(TraceEvent::Envelope {
        horizon,
        cause: BuildCause::Start,
    });
    let mut budget = stream.exp1();
    let mut evals_at_last_event = eval.grad_evals();

    while skeleton.events.len() < config.n_events {
        let cause = match next_event_within(&env, budget, horizon) {
            NextEvent::HorizonReached => {
                model.flow().apply(&mut state.x, &mut state.v, horizon);
                time += horizon;
                tmax_integral += horizon * horizon;
                stats.n_horizon_hits += 1;
                trace(TraceEvent::HorizonHit { horizon });
                tmax = if config.adapt {
                    (tmax * config.alpha_plus).min(config.t_max_cap)
                } else {
                    config.t_max
                };
                horizon = tmax;
                Some(BuildCause::Horizon)
            }
            NextEvent::Candidate { tau, segment } => {
                let level = env.levels()[segment];
                let before = eval.grad_evals();
                let step = thinning_step(&mut eval, &state, tau, level, &mut stream)?;
                stats.n_thinning_evals += eval.grad_evals() - before;
                match step.outcome {
                    Thinning::Accept => {
                        stats.n_proposals += 1;
                        stats.acceptance_ratio_sum += step.ratio;
                        let (x, v, g) = eval.last_point();
                        state.x.copy_from_slice(x);
                        state.v.copy_from_slice(v);
                        let g = g.to_vec();
                        model.jump(&state.x, &mut state.v, &g, &mut stream)?;
                        time += tau;
                        tmax_integral += horizon * tau;
                        skeleton.push(time, &state);
                        trace(TraceEvent::Accept { t: time });
                        evals_at_last_event = eval.grad_evals();
                        if !config.adapt {
                            tmax = config.t_max;
                        }
                        horizon = tmax;
                        Some(BuildCause::Accept)
                    }
                    Thinning::Reject => {
                        stats.n_proposals += 1;
                        stats.n_rejections += 1;
                        stats.acceptance_ratio_sum += step.ratio;
                        budget += stream.exp1();
                        if config.adapt {
                            tmax = (tmax / config.alpha_minus).max(config.t_max_floor);
                            horizon = tmax.min(env.t_max());
                        }
                        trace(TraceEvent::Reject { tau, horizon });
                        None
                    }
                    Thinning::BoundError(ratio) => {
                        stats.n_bound_errors += 1;
                        stats.bound_error_excess_sum += ratio - 1.0;
                        trace(TraceEvent::BoundError { ratio, horizon });
                        horizon *= 0.5;
                        if config.adapt {
                            tmax = horizon;
                        }
                        Some(BuildCause::BoundError)
                    }
                }
            }
        };
        if let Some(cause) = cause {
            let before = eval.grad_evals();
            env = build(&mut eval, &state, horizon)?;
            stats.n_opt_evals += eval.grad_evals() - before;
            stats.n_envelopes += 1;
            trace(TraceEvent::Envelope { horizon, cause });
            budget = stream.exp1();
        }
        let spent = eval.grad_evals() - evals_at_last_event;
        if spent > config.max_evals_without_event {
            return Err(Error::NonConvergence { evaluations: spent });
        }
    }

    stats.n_events = skeleton.events.len() as u64;
    stats.n_grad_evals = eval.grad_evals();
    stats.n_hvp_evals = eval.hvp_evals();
    stats.total_time = time;
    stats.final_tmax = tmax;
    stats.mean_tmax = if time > 0.0 { tmax_integral / time } else { tmax };
    stats.wall_time = started.elapsed().as_secs_f64();
    Ok((skeleton, stats))
}
