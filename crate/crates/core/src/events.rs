//! Candidate event times from an envelope and the thinning decision.

use crate::bounds::Envelope;
use crate::diff::RateEvaluator;
use crate::error::Result;
use crate::process::State;
use crate::rng::RandomStream;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NextEvent {
    /// Proposed time `tau` inside segment `segment` of the envelope.
    Candidate { tau: f64, segment: usize },
    /// The exponential budget outlasts the horizon.
    HorizonReached,
}

/// Inverts the envelope integral: the `tau` with `int_0^tau Lambda = e`.
pub fn next_event(env: &Envelope, e: f64) -> NextEvent {
    next_event_within(env, e, env.t_max())
}

/// Like [`next_event`], but candidates later than `horizon` (which may be
/// shorter than the envelope's own `t_max`) count as reaching the horizon.
///
/// Zero-level segments consume no budget and never hold a candidate.
pub fn next_event_within(env: &Envelope, e: f64, horizon: f64) -> NextEvent {
    debug_assert!(e > 0.0);
    let cum = env.cumulative();
    if e >= env.total() {
        return NextEvent::HorizonReached;
    }
    // first segment whose right cumulative exceeds e; its level is positive
    let i = cum[1..].partition_point(|&c| c <= e);
    let level = env.levels()[i];
    let tau = (env.grid()[i] + (e - cum[i]) / level).min(env.grid()[i + 1]);
    if tau > horizon {
        NextEvent::HorizonReached
    } else {
        NextEvent::Candidate { tau, segment: i }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Thinning {
    Accept,
    Reject,
    /// True rate above the envelope; carries `lambda / Lambda > 1`.
    BoundError(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThinningStep {
    pub outcome: Thinning,
    pub rate: f64,
    pub ratio: f64,
}

/// Evaluates the true rate at `tau` and accepts with probability
/// `rate / level`. Costs one gradient evaluation, which the evaluator counts.
///
/// After the call the evaluator's [`RateEvaluator::last_point`] holds the
/// state and gradient at `tau`, so an accepted jump needs no extra gradient.
pub fn thinning_step(
    eval: &mut RateEvaluator<'_>,
    s: &State,
    tau: f64,
    level: f64,
    stream: &mut RandomStream,
) -> Result<ThinningStep> {
    let rate = eval.rate(s, tau)?;
    Ok(decide(rate, level, stream))
}

/// The accept/reject decision for a known rate and envelope level.
pub fn decide(rate: f64, level: f64, stream: &mut RandomStream) -> ThinningStep {
    let ratio = if rate <= 0.0 {
        0.0
    } else if level > 0.0 {
        rate / level
    } else {
        f64::INFINITY
    };
    let outcome = if ratio > 1.0 {
        Thinning::BoundError(ratio)
    } else if stream.uniform() <= ratio {
        Thinning::Accept
    } else {
        Thinning::Reject
    };
    ThinningStep {
        outcome,
        rate,
        ratio,
    }
}
