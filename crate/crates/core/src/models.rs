//! The shipped samplers: Zig-Zag, Bouncy Particle, Boomerang and Forward
//! Event-Chain.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::diff::{dot, RateForm, Strategy};
use crate::error::{Error, Result};
use crate::process::Flow;
use crate::rng::RandomStream;

/// A PDMP given by its flow, rate form and velocity jump kernel.
pub trait PdmpModel: Send + Sync {
    fn name(&self) -> &'static str;

    fn flow(&self) -> Flow;

    fn rate_form(&self) -> RateForm;

    /// Draw from the invariant velocity marginal.
    fn init_velocity(&self, dim: usize, stream: &mut RandomStream) -> Vec<f64>;

    fn check_velocity(&self, v: &[f64]) -> Result<()>;

    /// Velocity jump at an event located at `x` with gradient `grad`.
    fn jump(&self, x: &[f64], v: &mut [f64], grad: &[f64], stream: &mut RandomStream)
        -> Result<()>;

    /// Strategy used when none is configured.
    fn default_strategy(&self) -> Strategy {
        match self.rate_form() {
            RateForm::Coordinatewise => Strategy::VectorizedSigned,
            RateForm::Inner { .. } => Strategy::Signed,
        }
    }
}

/// `F_m(v)`: flips coordinate `m`.
pub fn flip(v: &mut [f64], m: usize) {
    v[m] = -v[m];
}

/// Zig-Zag jump: flips coordinate `m` drawn with probability `rates[m] / sum`.
/// Leaves `v` unchanged when every rate is zero.
pub fn zigzag_kernel(v: &mut [f64], rates: &[f64], stream: &mut RandomStream) -> Option<usize> {
    let m = stream.categorical(rates)?;
    flip(v, m);
    Some(m)
}

/// `R_n(v) = v - 2 <v, n> / <n, n> n`.
pub fn reflect(v: &mut [f64], n: &[f64]) {
    let nn = dot(n, n);
    if nn == 0.0 {
        return;
    }
    let c = 2.0 * dot(v, n) / nn;
    v.iter_mut().zip(n).for_each(|(a, b)| *a -= c * b);
}

/// Bouncy-particle jump: reflect on the gradient with probability
/// `<grad, v>_+ / (<grad, v>_+ + refresh)`, else redraw from a standard normal.
pub fn bps_kernel(v: &mut [f64], grad: &[f64], refresh: f64, stream: &mut RandomStream) -> bool {
    let bounce = dot(grad, v).max(0.0);
    let zero_grad = grad.iter().all(|g| *g == 0.0);
    let reflect_now = !zero_grad && stream.uniform() * (bounce + refresh) <= bounce && bounce > 0.0;
    if reflect_now {
        reflect(v, grad);
    } else {
        for a in v.iter_mut() {
            *a = stream.normal();
        }
    }
    reflect_now
}

/// Settings of the forward event-chain kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FecSpec {
    /// Probability of rotating the orthogonal component at an event.
    pub rotation_prob: f64,
    /// Rotation angles are uniform on `(-max_angle, max_angle)`.
    pub max_angle: f64,
}

impl Default for FecSpec {
    fn default() -> Self {
        Self {
            rotation_prob: 0.1,
            max_angle: PI / 8.0,
        }
    }
}

/// Forward event-chain jump on the unit sphere.
///
/// The component along `g = grad / |grad|` is redrawn with magnitude `a` of
/// density proportional to `a (1 - a^2)^((d-3)/2)` on `(0, 1)` and pointed
/// against the gradient; the orthogonal part keeps its direction, is rescaled
/// to `sqrt(1 - a^2)` and, with probability `rotation_prob`, is rotated by a
/// small angle inside a random 2-plane of the orthogonal complement (in
/// `d = 2` the complement is a line and the rotation is a sign flip).
///
/// Returns whether a rotation happened.
pub fn fec_kernel(
    v: &mut [f64],
    grad: &[f64],
    spec: &FecSpec,
    stream: &mut RandomStream,
) -> Result<bool> {
    let d = v.len();
    let gn = dot(grad, grad).sqrt();
    if !(gn >= 1e-14) {
        return Err(Error::DegenerateGradient { norm: gn });
    }
    let g: Vec<f64> = grad.iter().map(|a| a / gn).collect();
    if d == 1 {
        v[0] = -g[0];
        return Ok(false);
    }
    let par = dot(v, &g);
    let mut perp: Vec<f64> = v.iter().zip(&g).map(|(a, b)| a - par * b).collect();
    let mut pn = dot(&perp, &perp).sqrt();
    if pn < 1e-12 {
        // no orthogonal direction left: pick one at random
        perp = stream.normal_vec(d);
        let c = dot(&perp, &g);
        perp.iter_mut().zip(&g).for_each(|(p, b)| *p -= c * b);
        pn = dot(&perp, &perp).sqrt();
    }
    perp.iter_mut().for_each(|p| *p /= pn);

    let rotated = stream.bernoulli(spec.rotation_prob);
    if rotated {
        if d == 2 {
            perp.iter_mut().for_each(|p| *p = -*p);
        } else {
            // second axis of the rotation plane, orthogonal to g and perp
            let mut w = stream.normal_vec(d);
            let cg = dot(&w, &g);
            let cp = dot(&w, &perp);
            w.iter_mut()
                .zip(g.iter().zip(&perp))
                .for_each(|(a, (b, c))| *a -= cg * b + cp * c);
            let wn = dot(&w, &w).sqrt();
            if wn > 1e-12 {
                let theta = stream.uniform_range(-spec.max_angle, spec.max_angle);
                let (s, c) = theta.sin_cos();
                perp.iter_mut()
                    .zip(&w)
                    .for_each(|(p, wi)| *p = c * *p + s * wi / wn);
            }
        }
    }

    let u = stream.uniform();
    let a = (1.0 - u.powf(2.0 / (d as f64 - 1.0))).max(0.0).sqrt();
    let b = (1.0 - a * a).sqrt();
    for i in 0..d {
        v[i] = -a * g[i] + b * perp[i];
    }
    let n = dot(v, v).sqrt();
    v.iter_mut().for_each(|x| *x /= n);
    Ok(rotated)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ZigZag;

impl PdmpModel for ZigZag {
    fn name(&self) -> &'static str {
        "zigzag"
    }
    fn flow(&self) -> Flow {
        Flow::Linear
    }
    fn rate_form(&self) -> RateForm {
        RateForm::Coordinatewise
    }
    fn init_velocity(&self, dim: usize, stream: &mut RandomStream) -> Vec<f64> {
        stream.signs(dim)
    }
    fn check_velocity(&self, v: &[f64]) -> Result<()> {
        if v.iter().all(|a| *a == 1.0 || *a == -1.0) {
            Ok(())
        } else {
            Err(Error::InvalidVelocity("zig-zag velocities are +-1".into()))
        }
    }
    fn jump(
        &self,
        _x: &[f64],
        v: &mut [f64],
        grad: &[f64],
        stream: &mut RandomStream,
    ) -> Result<()> {
        let rates: Vec<f64> = grad.iter().zip(v.iter()).map(|(g, a)| (g * a).max(0.0)).collect();
        zigzag_kernel(v, &rates, stream);
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BouncyParticle {
    pub refresh: f64,
}

impl PdmpModel for BouncyParticle {
    fn name(&self) -> &'static str {
        "bps"
    }
    fn flow(&self) -> Flow {
        Flow::Linear
    }
    fn rate_form(&self) -> RateForm {
        RateForm::Inner {
            refresh: self.refresh,
        }
    }
    fn init_velocity(&self, dim: usize, stream: &mut RandomStream) -> Vec<f64> {
        stream.normal_vec(dim)
    }
    fn check_velocity(&self, v: &[f64]) -> Result<()> {
        finite(v)
    }
    fn jump(
        &self,
        _x: &[f64],
        v: &mut [f64],
        grad: &[f64],
        stream: &mut RandomStream,
    ) -> Result<()> {
        bps_kernel(v, grad, self.refresh, stream);
        Ok(())
    }
}

/// Boomerang sampler. Its flow preserves a standard Gaussian reference, so the
/// chain targets `exp(-U(x) - |x|^2 / 2)` for the supplied potential `U`.
#[derive(Debug, Clone, Copy)]
pub struct Boomerang {
    pub refresh: f64,
}

impl PdmpModel for Boomerang {
    fn name(&self) -> &'static str {
        "boomerang"
    }
    fn flow(&self) -> Flow {
        Flow::Circular
    }
    fn rate_form(&self) -> RateForm {
        RateForm::Inner {
            refresh: self.refresh,
        }
    }
    fn init_velocity(&self, dim: usize, stream: &mut RandomStream) -> Vec<f64> {
        stream.normal_vec(dim)
    }
    fn check_velocity(&self, v: &[f64]) -> Result<()> {
        finite(v)
    }
    fn jump(
        &self,
        _x: &[f64],
        v: &mut [f64],
        grad: &[f64],
        stream: &mut RandomStream,
    ) -> Result<()> {
        bps_kernel(v, grad, self.refresh, stream);
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ForwardEventChain {
    pub spec: FecSpec,
}

impl PdmpModel for ForwardEventChain {
    fn name(&self) -> &'static str {
        "fec"
    }
    fn flow(&self) -> Flow {
        Flow::Linear
    }
    fn rate_form(&self) -> RateForm {
        RateForm::Inner { refresh: 0.0 }
    }
    fn init_velocity(&self, dim: usize, stream: &mut RandomStream) -> Vec<f64> {
        stream.sphere(dim)
    }
    fn check_velocity(&self, v: &[f64]) -> Result<()> {
        let n = dot(v, v).sqrt();
        if (n - 1.0).abs() <= 1e-9 {
            Ok(())
        } else {
            Err(Error::InvalidVelocity(format!("unit norm expected, got {n}")))
        }
    }
    fn jump(
        &self,
        _x: &[f64],
        v: &mut [f64],
        grad: &[f64],
        stream: &mut RandomStream,
    ) -> Result<()> {
        fec_kernel(v, grad, &self.spec, stream).map(|_| ())
    }
}

fn finite(v: &[f64]) -> Result<()> {
    if v.iter().all(|a| a.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidVelocity("non-finite component".into()))
    }
}

/// Model settings as they appear in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub name: String,
    #[serde(default)]
    pub refresh_rate: f64,
    #[serde(default = "default_rotation_prob")]
    pub fec_rotation_prob: f64,
    #[serde(default = "default_max_angle")]
    pub fec_max_angle: f64,
}

fn default_rotation_prob() -> f64 {
    FecSpec::default().rotation_prob
}

fn default_max_angle() -> f64 {
    FecSpec::default().max_angle
}

impl ModelSpec {
    pub fn named(name: &str) -> Self {
        Self {
            name: name.to_string(),
            refresh_rate: 0.0,
            fec_rotation_prob: default_rotation_prob(),
            fec_max_angle: default_max_angle(),
        }
    }

    pub fn with_refresh(mut self, refresh: f64) -> Self {
        self.refresh_rate = refresh;
        self
    }

    /// Looks the model up in the registry (`zigzag`, `bps`, `boomerang`, `fec`).
    pub fn build(&self) -> Result<Box<dyn PdmpModel>> {
        if !(self.refresh_rate >= 0.0 && self.refresh_rate.is_finite()) {
            return Err(Error::config("model.refresh_rate", "must be a finite value >= 0"));
        }
        if !(0.0..=1.0).contains(&self.fec_rotation_prob) {
            return Err(Error::config("model.fec_rotation_prob", "must lie in [0, 1]"));
        }
        Ok(match self.name.as_str() {
            "zigzag" => Box::new(ZigZag),
            "bps" => Box::new(BouncyParticle {
                refresh: self.refresh_rate,
            }),
            "boomerang" => Box::new(Boomerang {
                refresh: self.refresh_rate,
            }),
            "fec" => Box::new(ForwardEventChain {
                spec: FecSpec {
                    rotation_prob: self.fec_rotation_prob,
                    max_angle: self.fec_max_angle,
                },
            }),
            other => {
                return Err(Error::Unknown {
                    kind: "model",
                    name: other.to_string(),
                })
            }
        })
    }
}
