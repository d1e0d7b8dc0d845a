//! Event rates along the flow and their time derivatives.
//!
//! A [`RateEvaluator`] follows the flow from a state for a time `t`, evaluates
//! the potential gradient there and splits the rate into the channels a
//! bounding [`Strategy`] works on, each paired with its exact time derivative.

use serde::{Deserialize, Serialize};

use crate::bounds::NodeData;
use crate::error::{Error, Result};
use crate::process::{Flow, State};

/// A target through its potential `U = -log pi` (up to a constant).
pub trait Potential: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    /// Writes `grad U(x)` into `out`.
    fn gradient(&self, x: &[f64], out: &mut [f64]);

    /// Whether [`Potential::hessian_vector`] is implemented.
    fn has_hessian_vector(&self) -> bool {
        false
    }

    /// Writes `Hess U(x) w` into `out`.
    fn hessian_vector(&self, _x: &[f64], _w: &[f64], _out: &mut [f64]) -> Result<()> {
        Err(Error::MissingHvp)
    }

    /// Gradient and Hessian-vector product at the same point. Override when
    /// the two share work.
    fn gradient_and_hessian_vector(
        &self,
        x: &[f64],
        w: &[f64],
        grad: &mut [f64],
        hv: &mut [f64],
    ) -> Result<()> {
        self.gradient(x, grad);
        self.hessian_vector(x, w, hv)
    }
}

impl<P: Potential + ?Sized> Potential for Box<P> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }
    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        (**self).gradient(x, out)
    }
    fn has_hessian_vector(&self) -> bool {
        (**self).has_hessian_vector()
    }
    fn hessian_vector(&self, x: &[f64], w: &[f64], out: &mut [f64]) -> Result<()> {
        (**self).hessian_vector(x, w, out)
    }
    fn gradient_and_hessian_vector(
        &self,
        x: &[f64],
        w: &[f64],
        grad: &mut [f64],
        hv: &mut [f64],
    ) -> Result<()> {
        (**self).gradient_and_hessian_vector(x, w, grad, hv)
    }
}

/// Shape of a model's event rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateForm {
    /// `sum_i (d_i U(x) v_i)_+`, the Zig-Zag form.
    Coordinatewise,
    /// `<grad U(x), v>_+ + refresh`, the bouncy-particle form.
    Inner { refresh: f64 },
}

impl RateForm {
    pub fn refresh(self) -> f64 {
        match self {
            RateForm::Coordinatewise => 0.0,
            RateForm::Inner { refresh } => refresh,
        }
    }

    fn label(self) -> &'static str {
        match self {
            RateForm::Coordinatewise => "coordinatewise",
            RateForm::Inner { .. } => "inner-product",
        }
    }
}

/// How the rate is split into channels before bounding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Bound the full rate, positive parts included.
    Plain,
    /// Bound `<grad U, v>` and re-apply positive part and refresh afterwards.
    Signed,
    /// One channel `(d_i U v_i)_+` per coordinate.
    Vectorized,
    /// One channel `d_i U v_i` per coordinate, positive parts taken on the bounds.
    VectorizedSigned,
    /// Constant bound from a Brent maximisation of the full rate.
    BrentBaseline,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::Plain => "plain",
            Strategy::Signed => "signed",
            Strategy::Vectorized => "vectorized",
            Strategy::VectorizedSigned => "vectorized_signed",
            Strategy::BrentBaseline => "brent_baseline",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Ok(match name {
            "plain" => Strategy::Plain,
            "signed" => Strategy::Signed,
            "vectorized" => Strategy::Vectorized,
            "vectorized_signed" => Strategy::VectorizedSigned,
            "brent_baseline" => Strategy::BrentBaseline,
            other => {
                return Err(Error::Unknown {
                    kind: "strategy",
                    name: other.to_string(),
                })
            }
        })
    }

    pub fn is_vectorized(self) -> bool {
        matches!(self, Strategy::Vectorized | Strategy::VectorizedSigned)
    }

    /// Whether channels carry the raw smooth quantity (no positive part).
    pub fn is_signed(self) -> bool {
        matches!(self, Strategy::Signed | Strategy::VectorizedSigned)
    }

    pub fn check(self, form: RateForm) -> Result<()> {
        let ok = match self {
            Strategy::Signed => matches!(form, RateForm::Inner { .. }),
            Strategy::Vectorized | Strategy::VectorizedSigned => form == RateForm::Coordinatewise,
            Strategy::Plain | Strategy::BrentBaseline => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidStrategy {
                strategy: self.name(),
                form: form.label(),
            })
        }
    }
}

/// Source of the `Hess U v` term in channel derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeBackend {
    /// Hessian-vector product when the potential has one, finite differences otherwise.
    #[default]
    Auto,
    /// Hessian-vector product only.
    HessianVector,
    /// Central differences of the gradient along the velocity.
    FiniteDifference,
}

/// Step for the gradient finite differences at `x`.
pub fn fd_step(x: &[f64]) -> f64 {
    let sup = x.iter().fold(0.0_f64, |m, a| m.max(a.abs()));
    1e-6_f64.max(1e-8 * (1.0 + sup))
}

/// Evaluates rate channels for one chain; keeps its own evaluation counters.
///
/// Gradient cost per call: one gradient for any number of channels, plus one
/// Hessian-vector product (or two more gradients with finite differences) when
/// derivatives are requested.
pub struct RateEvaluator<'a> {
    potential: &'a dyn Potential,
    flow: Flow,
    form: RateForm,
    strategy: Strategy,
    use_hvp: bool,
    grad_evals: u64,
    hvp_evals: u64,
    x: Vec<f64>,
    v: Vec<f64>,
    g: Vec<f64>,
    hv: Vec<f64>,
    vdot: Vec<f64>,
    scratch: Vec<f64>,
    scratch2: Vec<f64>,
}

impl<'a> RateEvaluator<'a> {
    pub fn new(
        potential: &'a dyn Potential,
        flow: Flow,
        form: RateForm,
        strategy: Strategy,
        backend: DerivativeBackend,
    ) -> Result<Self> {
        strategy.check(form)?;
        let use_hvp = match backend {
            DerivativeBackend::Auto => potential.has_hessian_vector(),
            DerivativeBackend::HessianVector => {
                if strategy != Strategy::BrentBaseline && !potential.has_hessian_vector() {
                    return Err(Error::MissingHvp);
                }
                true
            }
            DerivativeBackend::FiniteDifference => false,
        };
        let d = potential.dim();
        Ok(Self {
            potential,
            flow,
            form,
            strategy,
            use_hvp,
            grad_evals: 0,
            hvp_evals: 0,
            x: vec![0.0; d],
            v: vec![0.0; d],
            g: vec![0.0; d],
            hv: vec![0.0; d],
            vdot: vec![0.0; d],
            scratch: vec![0.0; d],
            scratch2: vec![0.0; d],
        })
    }

    pub fn dim(&self) -> usize {
        self.potential.dim()
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    pub fn form(&self) -> RateForm {
        self.form
    }

    pub fn flow(&self) -> Flow {
        self.flow
    }

    pub fn n_channels(&self) -> usize {
        if self.strategy.is_vectorized() {
            self.dim()
        } else {
            1
        }
    }

    /// Gradient evaluations so far (finite-difference gradients included).
    pub fn grad_evals(&self) -> u64 {
        self.grad_evals
    }

    /// Hessian-vector products so far.
    pub fn hvp_evals(&self) -> u64 {
        self.hvp_evals
    }

    fn locate(&mut self, s: &State, t: f64) -> Result<()> {
        if s.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: s.dim(),
            });
        }
        self.x.copy_from_slice(&s.x);
        self.v.copy_from_slice(&s.v);
        self.flow.apply(&mut self.x, &mut self.v, t);
        self.potential.gradient(&self.x, &mut self.g);
        self.grad_evals += 1;
        self.check_gradient(t)
    }

    /// Like `locate` followed by `hessian_term`, sharing work between the
    /// gradient and the Hessian-vector product when possible.
    fn locate_with_hessian(&mut self, s: &State, t: f64) -> Result<()> {
        if !self.use_hvp {
            self.locate(s, t)?;
            return self.hessian_term(t);
        }
        if s.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: s.dim(),
            });
        }
        self.x.copy_from_slice(&s.x);
        self.v.copy_from_slice(&s.v);
        self.flow.apply(&mut self.x, &mut self.v, t);
        self.potential
            .gradient_and_hessian_vector(&self.x, &self.v, &mut self.g, &mut self.hv)?;
        self.grad_evals += 1;
        self.hvp_evals += 1;
        self.check_gradient(t)?;
        self.check_hessian_term(t)
    }

    fn check_gradient(&self, t: f64) -> Result<()> {
        if self.g.iter().any(|a| !a.is_finite()) {
            return Err(Error::NonFiniteInput {
                what: "gradient",
                t,
            });
        }
        Ok(())
    }

    fn hessian_term(&mut self, t: f64) -> Result<()> {
        if self.use_hvp {
            self.potential
                .hessian_vector(&self.x, &self.v, &mut self.hv)?;
            self.hvp_evals += 1;
        } else {
            let h = fd_step(&self.x);
            for i in 0..self.x.len() {
                self.scratch[i] = self.x[i] + h * self.v[i];
            }
            self.potential.gradient(&self.scratch, &mut self.hv);
            for i in 0..self.x.len() {
                self.scratch[i] = self.x[i] - h * self.v[i];
            }
            self.potential.gradient(&self.scratch, &mut self.scratch2);
            self.grad_evals += 2;
            for (hv, gm) in self.hv.iter_mut().zip(&self.scratch2) {
                *hv = (*hv - gm) / (2.0 * h);
            }
        }
        self.check_hessian_term(t)
    }

    fn check_hessian_term(&mut self, t: f64) -> Result<()> {
        if self.hv.iter().any(|a| !a.is_finite()) {
            return Err(Error::NonFiniteInput {
                what: "rate derivative",
                t,
            });
        }
        self.flow.velocity_derivative(&self.x, &mut self.vdot);
        Ok(())
    }

    /// Channel values and time derivatives at time `t` along the flow from `s`.
    ///
    /// For unsigned channels the derivative is the smooth part's derivative
    /// where the channel is positive and 0 elsewhere. `BrentBaseline` reports
    /// the full rate with a zero derivative and costs no Hessian term.
    pub fn channels(
        &mut self,
        s: &State,
        t: f64,
        values: &mut [f64],
        derivs: &mut [f64],
    ) -> Result<()> {
        debug_assert!(t >= 0.0);
        debug_assert_eq!(values.len(), self.n_channels());
        if self.strategy == Strategy::BrentBaseline {
            self.locate(s, t)?;
            values[0] = self.current_rate();
            derivs[0] = 0.0;
            return Ok(());
        }
        self.locate_with_hessian(s, t)?;
        let (v, g, hv, vdot) = (&self.v, &self.g, &self.hv, &self.vdot);
        match self.form {
            RateForm::Coordinatewise => {
                let comp = |i: usize| (g[i] * v[i], hv[i] * v[i] + g[i] * vdot[i]);
                match self.strategy {
                    Strategy::Plain => {
                        let (mut val, mut der) = (0.0, 0.0);
                        for i in 0..v.len() {
                            let (c, dc) = comp(i);
                            if c > 0.0 {
                                val += c;
                                der += dc;
                            }
                        }
                        values[0] = val;
                        derivs[0] = der;
                    }
                    Strategy::Vectorized => {
                        for i in 0..v.len() {
                            let (c, dc) = comp(i);
                            (values[i], derivs[i]) = if c > 0.0 { (c, dc) } else { (0.0, 0.0) };
                        }
                    }
                    Strategy::VectorizedSigned => {
                        for i in 0..v.len() {
                            (values[i], derivs[i]) = comp(i);
                        }
                    }
                    Strategy::Signed | Strategy::BrentBaseline => unreachable!(),
                }
            }
            RateForm::Inner { refresh } => {
                let c = dot(g, v);
                let dc = dot(hv, v) + dot(g, vdot);
                match self.strategy {
                    Strategy::Plain => {
                        (values[0], derivs[0]) = if c > 0.0 {
                            (c + refresh, dc)
                        } else {
                            (refresh, 0.0)
                        };
                    }
                    Strategy::Signed => {
                        values[0] = c;
                        derivs[0] = dc;
                    }
                    _ => unreachable!(),
                }
            }
        }
        if values.iter().chain(derivs.iter()).any(|a| !a.is_finite()) {
            return Err(Error::NonFiniteInput { what: "rate", t });
        }
        Ok(())
    }

    /// Batched channel evaluation at every grid node.
    pub fn grid_nodes(&mut self, s: &State, times: &[f64]) -> Result<NodeData> {
        let nc = self.n_channels();
        let mut values = vec![0.0; times.len() * nc];
        let mut derivs = vec![0.0; times.len() * nc];
        for (k, &t) in times.iter().enumerate() {
            self.channels(
                s,
                t,
                &mut values[k * nc..(k + 1) * nc],
                &mut derivs[k * nc..(k + 1) * nc],
            )?;
        }
        Ok(NodeData {
            times: times.to_vec(),
            n_channels: nc,
            values,
            derivs,
        })
    }

    /// True rate `lambda(t; s)` (positive parts and refresh applied); one gradient.
    ///
    /// The flowed point and its gradient stay available through
    /// [`RateEvaluator::last_point`].
    pub fn rate(&mut self, s: &State, t: f64) -> Result<f64> {
        self.locate(s, t)?;
        Ok(self.current_rate())
    }

    /// Per-coordinate Zig-Zag rates `(d_i U v_i)_+` at the last located point.
    pub fn last_coordinate_rates(&self) -> Vec<f64> {
        self.g
            .iter()
            .zip(&self.v)
            .map(|(g, v)| (g * v).max(0.0))
            .collect()
    }

    /// `(x, v, grad U(x))` at the last located point.
    pub fn last_point(&self) -> (&[f64], &[f64], &[f64]) {
        (&self.x, &self.v, &self.g)
    }

    fn current_rate(&self) -> f64 {
        true_rate(self.form, &self.g, &self.v)
    }
}

/// The model rate from a gradient and a velocity.
pub fn true_rate(form: RateForm, grad: &[f64], v: &[f64]) -> f64 {
    match form {
        RateForm::Coordinatewise => grad.iter().zip(v).map(|(g, v)| (g * v).max(0.0)).sum(),
        RateForm::Inner { refresh } => dot(grad, v).max(0.0) + refresh,
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
