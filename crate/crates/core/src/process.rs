//! Process state, deterministic flows and skeletons.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Position and velocity of the process.
///
/// Velocity constraints (signs, sphere, Gaussian) belong to the model, not to
/// the state, so every sampler shares one skeleton format.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub x: Vec<f64>,
    pub v: Vec<f64>,
}

impl State {
    pub fn new(x: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::config("state", "dimension must be at least 1"));
        }
        if x.len() != v.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                got: v.len(),
            });
        }
        Ok(Self { x, v })
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }
}

/// Between-event dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flow {
    /// `(x, v) -> (x + t v, v)`.
    Linear,
    /// Rotation `(x cos t + v sin t, -x sin t + v cos t)`.
    Circular,
}

impl Flow {
    /// Moves `(x, v)` forward by `dt` in place.
    pub fn apply(self, x: &mut [f64], v: &mut [f64], dt: f64) {
        debug_assert!(dt >= 0.0);
        if dt == 0.0 {
            return;
        }
        match self {
            Flow::Linear => {
                for (xi, vi) in x.iter_mut().zip(v.iter()) {
                    *xi += dt * vi;
                }
            }
            Flow::Circular => {
                let (s, c) = dt.sin_cos();
                for (xi, vi) in x.iter_mut().zip(v.iter_mut()) {
                    let (x0, v0) = (*xi, *vi);
                    *xi = x0 * c + v0 * s;
                    *vi = -x0 * s + v0 * c;
                }
            }
        }
    }

    /// Time derivative of the velocity at `(x, v)`: zero for straight lines,
    /// `-x` for the rotation.
    pub fn velocity_derivative(self, x: &[f64], out: &mut [f64]) {
        match self {
            Flow::Linear => out.iter_mut().for_each(|o| *o = 0.0),
            Flow::Circular => out.iter_mut().zip(x).for_each(|(o, xi)| *o = -xi),
        }
    }
}

/// Returns the state reached after following `flow` for `dt`.
///
/// # Panics
/// If `dt` is negative or not finite.
pub fn advance(flow: Flow, s: &State, dt: f64) -> State {
    assert!(dt >= 0.0 && dt.is_finite(), "advance needs dt >= 0, got {dt}");
    let mut out = s.clone();
    flow.apply(&mut out.x, &mut out.v, dt);
    out
}

/// One skeleton point: the state right after a velocity jump.
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub t: f64,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
}

/// The event points of a run together with the starting point.
///
/// The continuous path is recovered by following the flow from each point to
/// the next one.
#[derive(Debug, Clone, PartialEq)]
pub struct Skeleton {
    pub initial: State,
    pub events: Vec<Event>,
    pub final_time: f64,
    pub final_state: State,
}

impl Skeleton {
    pub fn new(initial: State) -> Self {
        Self {
            final_state: initial.clone(),
            initial,
            events: Vec::new(),
            final_time: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.initial.dim()
    }

    pub fn push(&mut self, t: f64, state: &State) {
        self.events.push(Event {
            t,
            x: state.x.clone(),
            v: state.v.clone(),
        });
        self.final_time = t;
        self.final_state = state.clone();
    }

    /// `(t, x, v)` of the initial point followed by every event point.
    pub fn points(&self) -> impl Iterator<Item = (f64, &[f64], &[f64])> {
        std::iter::once((0.0, self.initial.x.as_slice(), self.initial.v.as_slice())).chain(
            self.events
                .iter()
                .map(|e| (e.t, e.x.as_slice(), e.v.as_slice())),
        )
    }

    /// Segments `(start_x, start_v, duration)` of the path up to `final_time`.
    pub fn segments(&self) -> impl Iterator<Item = (&[f64], &[f64], f64)> {
        let pts: Vec<_> = self.points().collect();
        let n = pts.len();
        (0..n.saturating_sub(1)).map(move |k| {
            let (t0, x, v) = pts[k];
            (x, v, pts[k + 1].0 - t0)
        })
    }

    /// Largest position discontinuity between consecutive points, i.e. the
    /// sup-norm gap between each point and the flow of its predecessor.
    pub fn continuity_defect(&self, flow: Flow) -> f64 {
        let pts: Vec<_> = self.points().collect();
        let mut worst: f64 = 0.0;
        for w in pts.windows(2) {
            let (t0, x0, v0) = w[0];
            let (t1, x1, _) = w[1];
            let mut x = x0.to_vec();
            let mut v = v0.to_vec();
            flow.apply(&mut x, &mut v, t1 - t0);
            for (a, b) in x.iter().zip(x1) {
                worst = worst.max((a - b).abs());
            }
        }
        worst
    }

    /// Writes the skeleton as CSV with header `t,x0..x{d-1},v0..v{d-1}`.
    ///
    /// The first row is the initial point at `t = 0`; every following row is
    /// one event. Values carry 17 significant digits.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let d = self.dim();
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string()];
        header.extend((0..d).map(|i| format!("x{i}")));
        header.extend((0..d).map(|i| format!("v{i}")));
        w.write_record(&header)?;
        let mut row = Vec::with_capacity(2 * d + 1);
        for (t, x, v) in self.points() {
            row.clear();
            row.push(format!("{t:.16e}"));
            row.extend(x.iter().map(|a| format!("{a:.16e}")));
            row.extend(v.iter().map(|a| format!("{a:.16e}")));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads back a skeleton written by [`Skeleton::write_csv`].
    pub fn read_csv<R: std::io::Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let width = r.headers()?.len();
        if width < 3 || (width - 1) % 2 != 0 {
            return Err(Error::config("skeleton header", "expected t,x0..,v0.."));
        }
        let d = (width - 1) / 2;
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let vals: Vec<f64> = rec
                .iter()
                .map(|f| {
                    f.parse::<f64>()
                        .map_err(|e| Error::config("skeleton row", e.to_string()))
                })
                .collect::<Result<_>>()?;
            rows.push(vals);
        }
        let first = rows
            .first()
            .ok_or_else(|| Error::config("skeleton", "no rows"))?;
        let initial = State::new(first[1..=d].to_vec(), first[d + 1..].to_vec())?;
        let mut sk = Skeleton::new(initial);
        for row in &rows[1..] {
            let s = State::new(row[1..=d].to_vec(), row[d + 1..].to_vec())?;
            sk.push(row[0], &s);
        }
        Ok(sk)
    }
}
