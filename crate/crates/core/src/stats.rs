//! Continuous-time averages along a skeleton.
//!
//! Every segment of the path is integrated in closed form, so the moments are
//! exact time averages over `[0, T]` with `T` the time of the last event.

use crate::error::{Error, Result};
use crate::process::{Flow, Skeleton};

/// `int_0^dt x(s) ds` for one coordinate.
fn segment_first(flow: Flow, x: f64, v: f64, dt: f64) -> f64 {
    match flow {
        Flow::Linear => x * dt + 0.5 * v * dt * dt,
        Flow::Circular => x * dt.sin() + v * (1.0 - dt.cos()),
    }
}

/// `int_0^dt x(s)^2 ds` for one coordinate.
fn segment_second(flow: Flow, x: f64, v: f64, dt: f64) -> f64 {
    match flow {
        Flow::Linear => x * x * dt + x * v * dt * dt + v * v * dt * dt * dt / 3.0,
        Flow::Circular => {
            let s2 = (2.0 * dt).sin() / 4.0;
            let s = dt.sin();
            x * x * (0.5 * dt + s2) + x * v * s * s + v * v * (0.5 * dt - s2)
        }
    }
}

fn time_average(
    skeleton: &Skeleton,
    flow: Flow,
    seg: fn(Flow, f64, f64, f64) -> f64,
) -> Result<Vec<f64>> {
    let total = skeleton.final_time;
    if skeleton.events.is_empty() || !(total > 0.0) {
        return Err(Error::config("skeleton", "needs at least one segment of positive length"));
    }
    let mut acc = vec![0.0; skeleton.dim()];
    for (x, v, dt) in skeleton.segments() {
        for i in 0..acc.len() {
            acc[i] += seg(flow, x[i], v[i], dt);
        }
    }
    acc.iter_mut().for_each(|a| *a /= total);
    Ok(acc)
}

/// Time-averaged position `(1/T) int_0^T x(t) dt`.
pub fn path_mean(skeleton: &Skeleton, flow: Flow) -> Result<Vec<f64>> {
    time_average(skeleton, flow, segment_first)
}

/// Time-averaged coordinate-wise square `(1/T) int_0^T x(t)^2 dt`.
pub fn path_second_moment(skeleton: &Skeleton, flow: Flow) -> Result<Vec<f64>> {
    time_average(skeleton, flow, segment_second)
}

/// Positions at the (not necessarily sorted) query times.
pub fn sample_at_times(skeleton: &Skeleton, flow: Flow, times: &[f64]) -> Result<Vec<Vec<f64>>> {
    let end = skeleton.final_time;
    let starts: Vec<f64> = std::iter::once(0.0)
        .chain(skeleton.events.iter().map(|e| e.t))
        .collect();
    times
        .iter()
        .map(|&t| {
            if !(0.0..=end).contains(&t) {
                return Err(Error::OutOfRange { t, end });
            }
            let k = starts.partition_point(|&s| s <= t).saturating_sub(1);
            let (t0, x, v) = if k == 0 {
                (0.0, &skeleton.initial.x, &skeleton.initial.v)
            } else {
                let e = &skeleton.events[k - 1];
                (e.t, &e.x, &e.v)
            };
            let mut x = x.clone();
            let mut v = v.clone();
            flow.apply(&mut x, &mut v, t - t0);
            Ok(x)
        })
        .collect()
}
