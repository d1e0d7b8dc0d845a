//! Benchmark potentials with closed-form gradients and Hessian-vector products.

use serde::{Deserialize, Serialize};

use crate::diff::{dot, Potential};
use crate::error::{Error, Result};
use crate::rng::RandomStream;

/// `U(x) = |x|^2 / 2`.
#[derive(Debug, Clone, Copy)]
pub struct StandardGaussian {
    dim: usize,
}

impl StandardGaussian {
    pub fn new(dim: usize) -> Self {
        assert!(dim >= 1);
        Self { dim }
    }
}

impl Potential for StandardGaussian {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &[f64]) -> f64 {
        0.5 * dot(x, x)
    }
    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(x);
    }
    fn has_hessian_vector(&self) -> bool {
        true
    }
    fn hessian_vector(&self, _x: &[f64], w: &[f64], out: &mut [f64]) -> Result<()> {
        out.copy_from_slice(w);
        Ok(())
    }
}

/// `U = 0`: with a bouncy-particle model and refresh `r` the event rate is the constant `r`.
#[derive(Debug, Clone, Copy)]
pub struct Flat {
    dim: usize,
}

impl Flat {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }
}

impl Potential for Flat {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, _x: &[f64]) -> f64 {
        0.0
    }
    fn gradient(&self, _x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
    }
    fn has_hessian_vector(&self) -> bool {
        true
    }
    fn hessian_vector(&self, _x: &[f64], _w: &[f64], out: &mut [f64]) -> Result<()> {
        out.iter_mut().for_each(|o| *o = 0.0);
        Ok(())
    }
}

/// Mixture of isotropic Gaussians `sum_k w_k N(mu_k, s_k^2 I)`.
///
/// All quantities go through responsibilities computed with a log-sum-exp,
/// so gradients stay finite far away from every component.
#[derive(Debug, Clone)]
pub struct GaussianMixture {
    dim: usize,
    log_weights: Vec<f64>,
    means: Vec<Vec<f64>>,
    inv_var: Vec<f64>,
    log_norm: Vec<f64>,
}

impl GaussianMixture {
    pub fn new(weights: Vec<f64>, means: Vec<Vec<f64>>, scales: Vec<f64>) -> Result<Self> {
        let k = weights.len();
        if k == 0 || means.len() != k || scales.len() != k {
            return Err(Error::config("mixture", "weights, means and scales must match"));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-12 || weights.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::config("mixture.weights", "must be positive and sum to 1"));
        }
        if scales.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::config("mixture.scales", "must be positive"));
        }
        let dim = means[0].len();
        if dim == 0 || means.iter().any(|m| m.len() != dim) {
            return Err(Error::config("mixture.means", "must share one positive dimension"));
        }
        Ok(Self {
            dim,
            log_weights: weights.iter().map(|w| w.ln()).collect(),
            inv_var: scales.iter().map(|s| 1.0 / (s * s)).collect(),
            log_norm: scales.iter().map(|s| -(dim as f64) * s.ln()).collect(),
            means,
        })
    }

    /// `N((0,0), I) / 2 + N((1,1), sigma^2 I) / 2`.
    pub fn two_scale(sigma: f64) -> Result<Self> {
        Self::new(
            vec![0.5, 0.5],
            vec![vec![0.0, 0.0], vec![1.0, 1.0]],
            vec![1.0, sigma],
        )
    }

    /// Twenty unit-variance components in the plane, equal weights, with
    /// means drawn once from `N(0, 9 I)` using `seed`.
    pub fn local_mixture_20(seed: u64) -> Self {
        let mut stream = RandomStream::new(seed);
        let means = (0..20)
            .map(|_| (0..2).map(|_| 3.0 * stream.normal()).collect())
            .collect();
        Self::new(vec![1.0 / 20.0; 20], means, vec![1.0; 20]).expect("valid mixture")
    }

    pub fn means(&self) -> &[Vec<f64>] {
        &self.means
    }

    pub fn weights(&self) -> Vec<f64> {
        self.log_weights.iter().map(|l| l.exp()).collect()
    }

    /// Log of each component's weighted (unnormalised) density and their log-sum-exp.
    fn log_terms(&self, x: &[f64], terms: &mut [f64]) -> f64 {
        let max = self.log_terms_unnormalised(x, terms);
        let s: f64 = terms.iter().map(|t| (t - max).exp()).sum();
        max + s.ln()
    }

    #[inline]
    fn log_term(&self, k: usize, x: &[f64]) -> f64 {
        let sq: f64 = x
            .iter()
            .zip(&self.means[k])
            .map(|(a, m)| (a - m) * (a - m))
            .sum();
        self.log_weights[k] + self.log_norm[k] - 0.5 * self.inv_var[k] * sq
    }

    /// Calls `f(k, exp(t_k - max))` for every component and returns the sum of
    /// the weights. Log terms are cached on the stack for small mixtures.
    #[inline]
    fn for_each_weight(&self, x: &[f64], mut f: impl FnMut(usize, f64)) -> f64 {
        const CACHED: usize = 32;
        let n = self.means.len();
        let mut cache = [0.0; CACHED];
        let mut max = f64::NEG_INFINITY;
        for k in 0..n {
            let t = self.log_term(k, x);
            if k < CACHED {
                cache[k] = t;
            }
            max = max.max(t);
        }
        let mut total = 0.0;
        for k in 0..n {
            let t = if k < CACHED { cache[k] } else { self.log_term(k, x) };
            let e = (t - max).exp();
            total += e;
            f(k, e);
        }
        total
    }

    /// Fills `terms` with per-component log densities and returns their maximum.
    fn log_terms_unnormalised(&self, x: &[f64], terms: &mut [f64]) -> f64 {
        let mut max = f64::NEG_INFINITY;
        for (k, t) in terms.iter_mut().enumerate() {
            *t = self.log_term(k, x);
            max = max.max(*t);
        }
        max
    }
}

impl Potential for GaussianMixture {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        let mut terms = vec![0.0; self.means.len()];
        -self.log_terms(x, &mut terms)
    }

    // Both derivatives accumulate unnormalised weights exp(t_k - max) and
    // divide by their sum at the end, so no per-call buffers are needed.
    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        let total = self.for_each_weight(x, |k, e| {
            let c = e * self.inv_var[k];
            for ((o, a), m) in out.iter_mut().zip(x).zip(&self.means[k]) {
                *o += c * (a - m);
            }
        });
        out.iter_mut().for_each(|o| *o /= total);
    }

    fn has_hessian_vector(&self) -> bool {
        true
    }

    /// `H w = sum_k r_k (w / s_k^2 - a_k <a_k, w>) + g <g, w>` with
    /// `a_k = (x - mu_k) / s_k^2` and `g = sum_k r_k a_k`.
    fn hessian_vector(&self, x: &[f64], w: &[f64], out: &mut [f64]) -> Result<()> {
        let mut g = vec![0.0; self.dim];
        self.gradient_and_hessian_vector(x, w, &mut g, out)
    }

    fn gradient_and_hessian_vector(
        &self,
        x: &[f64],
        w: &[f64],
        g: &mut [f64],
        out: &mut [f64],
    ) -> Result<()> {
        let d = self.dim;
        g.iter_mut().for_each(|o| *o = 0.0);
        out.iter_mut().for_each(|o| *o = 0.0);
        let total = self.for_each_weight(x, |k, e| {
            let iv = self.inv_var[k];
            let mu = &self.means[k];
            let aw: f64 = (0..d).map(|i| (x[i] - mu[i]) * iv * w[i]).sum();
            for i in 0..d {
                let a = (x[i] - mu[i]) * iv;
                out[i] += e * (w[i] * iv - a * aw);
                g[i] += e * a;
            }
        });
        g.iter_mut().for_each(|o| *o /= total);
        out.iter_mut().for_each(|o| *o /= total);
        let gw = dot(g, w);
        for i in 0..d {
            out[i] += g[i] * gw;
        }
        Ok(())
    }
}

/// `U(x) = x1^2 / 2 + (x2 - x1^2 + 1)^2 + sum_{i>=3} x_i^2`.
#[derive(Debug, Clone, Copy)]
pub struct Banana {
    dim: usize,
}

impl Banana {
    pub fn new(dim: usize) -> Self {
        assert!(dim >= 2, "banana needs at least two dimensions");
        Self { dim }
    }
}

impl Potential for Banana {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &[f64]) -> f64 {
        let r = x[1] - x[0] * x[0] + 1.0;
        0.5 * x[0] * x[0] + r * r + x[2..].iter().map(|a| a * a).sum::<f64>()
    }
    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let r = x[1] - x[0] * x[0] + 1.0;
        out[0] = x[0] - 4.0 * x[0] * r;
        out[1] = 2.0 * r;
        for i in 2..self.dim {
            out[i] = 2.0 * x[i];
        }
    }
    fn has_hessian_vector(&self) -> bool {
        true
    }
    fn hessian_vector(&self, x: &[f64], w: &[f64], out: &mut [f64]) -> Result<()> {
        let r = x[1] - x[0] * x[0] + 1.0;
        let h00 = 1.0 - 4.0 * r + 8.0 * x[0] * x[0];
        let h01 = -4.0 * x[0];
        out[0] = h00 * w[0] + h01 * w[1];
        out[1] = h01 * w[0] + 2.0 * w[1];
        for i in 2..self.dim {
            out[i] = 2.0 * w[i];
        }
        Ok(())
    }
}

/// `U(x) - |x|^2 / 2`: the input that makes a Boomerang chain target `exp(-U)`.
pub struct ReferenceAdjusted<P> {
    inner: P,
}

impl<P: Potential> ReferenceAdjusted<P> {
    pub fn new(inner: P) -> Self {
        Self { inner }
    }
}

impl<P: Potential> Potential for ReferenceAdjusted<P> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.inner.value(x) - 0.5 * dot(x, x)
    }
    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        self.inner.gradient(x, out);
        out.iter_mut().zip(x).for_each(|(o, a)| *o -= a);
    }
    fn has_hessian_vector(&self) -> bool {
        self.inner.has_hessian_vector()
    }
    fn hessian_vector(&self, x: &[f64], w: &[f64], out: &mut [f64]) -> Result<()> {
        self.inner.hessian_vector(x, w, out)?;
        out.iter_mut().zip(w).for_each(|(o, a)| *o -= a);
        Ok(())
    }
    fn gradient_and_hessian_vector(
        &self,
        x: &[f64],
        w: &[f64],
        grad: &mut [f64],
        hv: &mut [f64],
    ) -> Result<()> {
        self.inner.gradient_and_hessian_vector(x, w, grad, hv)?;
        grad.iter_mut().zip(x).for_each(|(o, a)| *o -= a);
        hv.iter_mut().zip(w).for_each(|(o, a)| *o -= a);
        Ok(())
    }
}

/// Target settings as they appear in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    /// `gaussian`, `two_scale_mixture`, `local_mixture_20`, `banana` or `flat`.
    pub name: String,
    #[serde(default)]
    pub dim: Option<usize>,
    /// Seed of the random means of `local_mixture_20`.
    #[serde(default)]
    pub seed: Option<u64>,
    /// Scale of the narrow mode of `two_scale_mixture`.
    #[serde(default)]
    pub sigma: Option<f64>,
    /// Subtract `|x|^2 / 2` so a Boomerang chain targets this potential.
    #[serde(default)]
    pub boomerang_adjust: bool,
}

pub const TWO_SCALE_SIGMA: f64 = 0.03;
pub const LOCAL_MIXTURE_SEED: u64 = 2024;

impl TargetSpec {
    pub fn named(name: &str, dim: Option<usize>) -> Self {
        Self {
            name: name.to_string(),
            dim,
            seed: None,
            sigma: None,
            boomerang_adjust: false,
        }
    }

    pub fn build(&self) -> Result<Box<dyn Potential>> {
        let need_dim = |default: Option<usize>, min: usize| -> Result<usize> {
            let d = self
                .dim
                .or(default)
                .ok_or_else(|| Error::config("target.dim", "required for this target"))?;
            if d < min {
                return Err(Error::config("target.dim", format!("must be at least {min}")));
            }
            Ok(d)
        };
        let fixed_2d = || -> Result<()> {
            match self.dim {
                None | Some(2) => Ok(()),
                Some(_) => Err(Error::config("target.dim", "this target is two-dimensional")),
            }
        };
        let base: Box<dyn Potential> = match self.name.as_str() {
            "gaussian" | "gaussian_std" => Box::new(StandardGaussian::new(need_dim(None, 1)?)),
            "flat" => Box::new(Flat::new(need_dim(None, 1)?)),
            "banana" => Box::new(Banana::new(need_dim(Some(30), 2)?)),
            "two_scale_mixture" => {
                fixed_2d()?;
                let sigma = self.sigma.unwrap_or(TWO_SCALE_SIGMA);
                if !(sigma > 0.0) {
                    return Err(Error::config("target.sigma", "must be positive"));
                }
                Box::new(GaussianMixture::two_scale(sigma)?)
            }
            "local_mixture_20" => {
                fixed_2d()?;
                Box::new(GaussianMixture::local_mixture_20(
                    self.seed.unwrap_or(LOCAL_MIXTURE_SEED),
                ))
            }
            other => {
                return Err(Error::Unknown {
                    kind: "target",
                    name: other.to_string(),
                })
            }
        };
        Ok(if self.boomerang_adjust {
            Box::new(ReferenceAdjusted::new(base))
        } else {
            base
        })
    }
}
