//! Piecewise-constant envelopes of the event rate.
//!
//! [`upper_bound_grid`] builds one level per grid segment from the rate and its
//! derivative at the nodes: the larger endpoint value, or the height where the
//! two endpoint tangents cross when that is higher. [`upper_bound_brent`] is the
//! constant-level baseline obtained by maximising the rate with Brent's method.

use crate::diff::Strategy;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvelopeKind {
    Grid,
    Constant,
}

/// Piecewise-constant dominating rate on `[0, t_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    grid: Vec<f64>,
    levels: Vec<f64>,
    cumulative: Vec<f64>,
    kind: EnvelopeKind,
}

impl Envelope {
    /// `grid` holds the `N + 1` node times starting at 0, `levels` the `N`
    /// segment levels.
    pub fn new(grid: Vec<f64>, levels: Vec<f64>, kind: EnvelopeKind) -> Result<Self> {
        if levels.is_empty() || grid.len() != levels.len() + 1 {
            return Err(Error::config(
                "envelope",
                format!("{} nodes for {} levels", grid.len(), levels.len()),
            ));
        }
        if grid[0] != 0.0 || grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::config("envelope", "grid must start at 0 and increase"));
        }
        if levels.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
            return Err(Error::NonFiniteInput {
                what: "envelope level",
                t: 0.0,
            });
        }
        if kind == EnvelopeKind::Constant && levels.len() != 1 {
            return Err(Error::config("envelope", "constant envelope needs one segment"));
        }
        let mut cumulative = Vec::with_capacity(grid.len());
        cumulative.push(0.0);
        let mut acc = 0.0;
        for (i, l) in levels.iter().enumerate() {
            acc += l * (grid[i + 1] - grid[i]);
            cumulative.push(acc);
        }
        Ok(Self {
            grid,
            levels,
            cumulative,
            kind,
        })
    }

    pub fn constant(t_max: f64, level: f64) -> Result<Self> {
        Self::new(vec![0.0, t_max], vec![level], EnvelopeKind::Constant)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    /// `I_k`: integral of the envelope over `[0, t_k]`.
    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    pub fn kind(&self) -> EnvelopeKind {
        self.kind
    }

    pub fn n_segments(&self) -> usize {
        self.levels.len()
    }

    pub fn t_max(&self) -> f64 {
        *self.grid.last().unwrap()
    }

    pub fn total(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    /// Segment holding `t` (segments are closed on the left); the last
    /// segment also holds `t_max`.
    pub fn segment_of(&self, t: f64) -> usize {
        let n = self.levels.len();
        self.grid[1..n].partition_point(|&g| g <= t)
    }

    pub fn level_at(&self, t: f64) -> f64 {
        self.levels[self.segment_of(t)]
    }

    /// Integral of the envelope over `[0, t]`, `t` clamped to the horizon.
    pub fn integral_to(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, self.t_max());
        let i = self.segment_of(t);
        self.cumulative[i] + self.levels[i] * (t - self.grid[i])
    }
}

/// Uniform grid `t_i = i t_max / N`, `i = 0..=N`.
pub fn uniform_grid(t_max: f64, n: usize) -> Vec<f64> {
    (0..=n)
        .map(|i| if i == n { t_max } else { t_max * i as f64 / n as f64 })
        .collect()
}

/// Channel values and derivatives at the grid nodes, node-major
/// (`values[k * n_channels + c]`).
#[derive(Debug, Clone, PartialEq)]
pub struct NodeData {
    pub times: Vec<f64>,
    pub n_channels: usize,
    pub values: Vec<f64>,
    pub derivs: Vec<f64>,
}

impl NodeData {
    /// Single-channel node data from a function and its derivative.
    pub fn from_fn(times: &[f64], f: impl Fn(f64) -> f64, df: impl Fn(f64) -> f64) -> Self {
        Self {
            times: times.to_vec(),
            n_channels: 1,
            values: times.iter().map(|&t| f(t)).collect(),
            derivs: times.iter().map(|&t| df(t)).collect(),
        }
    }
}

/// Bound on `[t0, t1]` from endpoint values and slopes: `max(y0, y1, m)` where
/// `m` is the height of the tangent intersection, its abscissa clipped to the
/// segment. Equal (or nearly equal) slopes fall back to `m = y0`.
pub fn segment_bound(t0: f64, t1: f64, y0: f64, y1: f64, d0: f64, d1: f64) -> f64 {
    let gap = d0 - d1;
    let m = if d0 == d1 || gap.abs() < 1e-12 * (1.0 + d0.abs()) {
        y0
    } else {
        let x = ((y1 - y0 + d0 * t0 - d1 * t1) / gap).clamp(t0, t1);
        d0 * x + y0 - d0 * t0
    };
    y0.max(y1).max(m)
}

/// Combines per-channel values (or bounds) into the model rate (or its bound).
///
/// Unsigned strategies sum their channels as they are; signed strategies take
/// positive parts channel by channel and add the refresh rate.
pub fn recombine(strategy: Strategy, refresh: f64, channels: &[f64]) -> f64 {
    if strategy.is_signed() {
        channels.iter().map(|c| c.max(0.0)).sum::<f64>() + refresh
    } else {
        channels.iter().sum()
    }
}

/// Grid envelope from node data.
pub fn upper_bound_grid(nodes: &NodeData, strategy: Strategy, refresh: f64) -> Result<Envelope> {
    let nc = nodes.n_channels;
    let n_nodes = nodes.times.len();
    if n_nodes < 2 || nodes.values.len() != n_nodes * nc || nodes.derivs.len() != n_nodes * nc {
        return Err(Error::config("node data", "need values and derivatives at N+1 >= 2 nodes"));
    }
    if let Some(k) = nodes
        .values
        .iter()
        .zip(&nodes.derivs)
        .position(|(y, d)| !y.is_finite() || !d.is_finite())
    {
        return Err(Error::NonFiniteInput {
            what: "node data",
            t: nodes.times[k / nc],
        });
    }
    let mut levels = Vec::with_capacity(n_nodes - 1);
    let mut bounds = vec![0.0; nc];
    for i in 0..n_nodes - 1 {
        let (t0, t1) = (nodes.times[i], nodes.times[i + 1]);
        for (c, b) in bounds.iter_mut().enumerate() {
            let a = i * nc + c;
            let z = (i + 1) * nc + c;
            *b = segment_bound(
                t0,
                t1,
                nodes.values[a],
                nodes.values[z],
                nodes.derivs[a],
                nodes.derivs[z],
            );
        }
        levels.push(recombine(strategy, refresh, &bounds).max(0.0));
    }
    Envelope::new(nodes.times.clone(), levels, EnvelopeKind::Grid)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrentOptions {
    /// Relative tolerance on the abscissa.
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Default for BrentOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-6,
            max_iter: 100,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BrentBound {
    pub envelope: Envelope,
    pub level: f64,
    /// Rate evaluations spent.
    pub evaluations: u64,
    /// Abscissa where the reported level was attained.
    pub argmax: f64,
}

/// Constant envelope `max over [0, t_max]` of `rate`, found with Brent's method.
///
/// Both endpoints are evaluated first. Brent's bounded minimisation of `-rate`
/// then runs one iteration; if the two interior points seen so far line up
/// monotonically with the endpoints, the search stops and the larger endpoint
/// is returned. Otherwise Brent continues until the bracket is below
/// `rel_tol` or `max_iter` is reached, and the level is the best value seen.
/// Nothing here guarantees a global maximum.
pub fn upper_bound_brent<F>(mut rate: F, t_max: f64, opts: BrentOptions) -> Result<BrentBound>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::config("t_max", "must be positive and finite"));
    }
    let mut evaluations = 0u64;
    let mut eval = |t: f64| -> Result<f64> {
        evaluations += 1;
        let y = rate(t)?;
        if !y.is_finite() {
            return Err(Error::NonFiniteInput { what: "rate", t });
        }
        Ok(y)
    };

    let y_lo = eval(0.0)?;
    let y_hi = eval(t_max)?;
    let (mut best_t, mut best_y) = if y_hi >= y_lo { (t_max, y_hi) } else { (0.0, y_lo) };

    const GOLDEN: f64 = 0.381_966_011_250_105_1;
    let (mut a, mut b) = (0.0, t_max);
    // minimise f = -rate
    let mut x = a + GOLDEN * (b - a);
    let mut w = x;
    let mut v = x;
    let mut fx = -eval(x)?;
    let mut fw = fx;
    let mut fv = fx;
    let mut d: f64 = 0.0;
    let mut e: f64 = 0.0;
    let mut interior = vec![(x, -fx)];

    for iter in 0..opts.max_iter {
        let mid = 0.5 * (a + b);
        let tol1 = opts.rel_tol * x.abs() + 1e-12 * t_max;
        let tol2 = 2.0 * tol1;
        if (x - mid).abs() <= tol2 - 0.5 * (b - a) {
            break;
        }
        let mut golden = true;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            let e_old = e;
            if p.abs() < (0.5 * q * e_old).abs() && p > q * (a - x) && p < q * (b - x) {
                e = d;
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = if x < mid { tol1 } else { -tol1 };
                }
                golden = false;
            }
        }
        if golden {
            e = if x >= mid { a - x } else { b - x };
            d = GOLDEN * e;
        }
        let u = if d.abs() >= tol1 { x + d } else { x + tol1.copysign(d) };
        let fu = -eval(u)?;
        interior.push((u, -fu));
        if fu <= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
        if iter == 0 && monotone_through(y_lo, y_hi, t_max, &interior) {
            break;
        }
    }
    for &(t, y) in &interior {
        if y > best_y {
            best_y = y;
            best_t = t;
        }
    }
    Ok(BrentBound {
        envelope: Envelope::constant(t_max, best_y.max(0.0))?,
        level: best_y.max(0.0),
        evaluations,
        argmax: best_t,
    })
}

fn monotone_through(y_lo: f64, y_hi: f64, t_max: f64, interior: &[(f64, f64)]) -> bool {
    let mut pts: Vec<(f64, f64)> = Vec::with_capacity(interior.len() + 2);
    pts.push((0.0, y_lo));
    pts.extend_from_slice(interior);
    pts.push((t_max, y_hi));
    pts.sort_by(|p, q| p.0.total_cmp(&q.0));
    let up = pts.windows(2).all(|w| w[1].1 >= w[0].1);
    let down = pts.windows(2).all(|w| w[1].1 <= w[0].1);
    up || down
}
