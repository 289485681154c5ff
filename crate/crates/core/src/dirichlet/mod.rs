//! Dirichlet distributions in concentration and natural parameterisation,
//! closed-form divergences between them, and sampling.
//!
//! The natural parameters are `θ = a - 1` with sufficient statistic `ln μ`,
//! so the log-normaliser is `F(θ) = Σ ln Γ(θ_k + 1) - ln Γ(Σ (θ_k + 1))`.
//! Because the carrier measure vanishes, every integral of a product of
//! Dirichlet densities raised to powers is an exponential of `F` terms. That
//! is what makes the Hölder divergence closed form.

mod oracle;
mod quadrature;

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, streams};
use crate::specfun::{digamma_pos, ln_gamma_pos, trigamma_pos};

pub use oracle::{oracle_holder, oracle_js, oracle_kl, OracleEstimate, OracleMethod};
pub use quadrature::{integrate_adaptive, QuadratureResult};

/// Concentration vector of a Dirichlet distribution over `K >= 2` classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct DirichletParams {
    concentration: Vec<f64>,
}

impl DirichletParams {
    pub fn new(concentration: Vec<f64>) -> Result<Self> {
        if concentration.len() < 2 {
            return Err(Error::Dimension(format!(
                "a Dirichlet needs at least 2 classes, got {}",
                concentration.len()
            )));
        }
        if let Some((k, &a)) = concentration
            .iter()
            .enumerate()
            .find(|(_, a)| !(a.is_finite() && **a > 0.0))
        {
            return Err(Error::Domain(format!(
                "concentration[{k}] = {a} must be positive and finite"
            )));
        }
        Ok(Self { concentration })
    }

    /// The flat Dirichlet `Dir([1, ..., 1])`.
    pub fn uniform(k: usize) -> Result<Self> {
        Self::new(vec![1.0; k])
    }

    pub fn concentration(&self) -> &[f64] {
        &self.concentration
    }

    pub fn dim(&self) -> usize {
        self.concentration.len()
    }

    /// Total concentration `S = Σ a_k`.
    pub fn strength(&self) -> f64 {
        self.concentration.iter().sum()
    }

    pub fn mean(&self) -> Vec<f64> {
        let s = self.strength();
        self.concentration.iter().map(|a| a / s).collect()
    }

    pub fn natural(&self) -> NaturalParams {
        NaturalParams {
            theta: self.concentration.iter().map(|a| a - 1.0).collect(),
        }
    }

    /// Log density at a point of the simplex.
    pub fn ln_density(&self, mu: &[f64]) -> f64 {
        let norm = ln_gamma_pos(self.strength())
            - self.concentration.iter().map(|&a| ln_gamma_pos(a)).sum::<f64>();
        norm + self
            .concentration
            .iter()
            .zip(mu)
            .map(|(&a, &m)| if a == 1.0 { 0.0 } else { (a - 1.0) * m.ln() })
            .sum::<f64>()
    }

    fn check_same_dim(&self, other: &Self) -> Result<()> {
        if self.dim() == other.dim() {
            Ok(())
        } else {
            Err(Error::Dimension(format!(
                "Dirichlet dimensions differ: {} vs {}",
                self.dim(),
                other.dim()
            )))
        }
    }
}

impl TryFrom<Vec<f64>> for DirichletParams {
    type Error = Error;

    fn try_from(value: Vec<f64>) -> Result<Self> {
        Self::new(value)
    }
}

impl From<DirichletParams> for Vec<f64> {
    fn from(value: DirichletParams) -> Self {
        value.concentration
    }
}

/// Natural parameters `θ = a - 1`; every component must exceed `-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct NaturalParams {
    theta: Vec<f64>,
}

impl NaturalParams {
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        if let Some((k, &t)) = theta
            .iter()
            .enumerate()
            .find(|(_, t)| !(t.is_finite() && **t > -1.0))
        {
            return Err(Error::Domain(format!(
                "natural parameter theta[{k}] = {t} must be finite and > -1"
            )));
        }
        if theta.is_empty() {
            return Err(Error::Dimension("empty natural parameter vector".into()));
        }
        Ok(Self { theta })
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn to_concentration(&self) -> Result<DirichletParams> {
        DirichletParams::new(self.theta.iter().map(|t| t + 1.0).collect())
    }

    /// `factor · θ`, validated.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.theta.iter().map(|t| factor * t).collect())
    }

    /// `θ + other`, validated.
    pub fn sum(&self, other: &Self) -> Result<Self> {
        if self.theta.len() != other.theta.len() {
            return Err(Error::Dimension(format!(
                "natural parameter lengths differ: {} vs {}",
                self.theta.len(),
                other.theta.len()
            )));
        }
        Self::new(self.theta.iter().zip(&other.theta).map(|(a, b)| a + b).collect())
    }
}

/// Conjugate Hölder exponents `(γ, γ̄)` with `1/γ + 1/γ̄ = 1` and `γ > 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct HolderExponent {
    gamma: f64,
    conjugate: f64,
}

impl HolderExponent {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 1.0) {
            return Err(Error::Domain(format!(
                "Hölder exponent must be finite and > 1, got {gamma}"
            )));
        }
        Ok(Self {
            gamma,
            conjugate: gamma / (gamma - 1.0),
        })
    }

    /// `γ = γ̄ = 2`, the Cauchy–Schwarz case.
    pub fn cauchy_schwarz() -> Self {
        Self {
            gamma: 2.0,
            conjugate: 2.0,
        }
    }

    pub fn gamma(self) -> f64 {
        self.gamma
    }

    pub fn conjugate(self) -> f64 {
        self.conjugate
    }
}

impl TryFrom<f64> for HolderExponent {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Self::new(value)
    }
}

impl From<HolderExponent> for f64 {
    fn from(value: HolderExponent) -> Self {
        value.gamma
    }
}

/// The divergences available as a regulariser or for evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DivergenceKind {
    Holder { gamma: HolderExponent },
    Kl,
    CauchySchwarz,
    /// Monte Carlo Jensen–Shannon estimate; evaluation only.
    JensenShannonMc { samples: usize, seed: u64 },
}

impl DivergenceKind {
    pub fn holder(gamma: f64) -> Result<Self> {
        Ok(Self::Holder {
            gamma: HolderExponent::new(gamma)?,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Holder { .. } => "holder",
            Self::Kl => "kl",
            Self::CauchySchwarz => "cauchy_schwarz",
            Self::JensenShannonMc { .. } => "jensen_shannon_mc",
        }
    }
}

/// A divergence value with its Monte Carlo standard error (zero for closed forms).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            std_error: 0.0,
        }
    }
}

fn log_normalizer_slice(theta: &[f64]) -> f64 {
    let k = theta.len() as f64;
    let total: f64 = theta.iter().sum::<f64>() + k;
    theta.iter().map(|t| ln_gamma_pos(t + 1.0)).sum::<f64>() - ln_gamma_pos(total)
}

/// `∂F/∂θ_k = ψ(θ_k + 1) - ψ(Σ θ + K)`.
fn log_normalizer_grad(theta: &[f64]) -> Vec<f64> {
    let total = theta.iter().sum::<f64>() + theta.len() as f64;
    let psi_total = digamma_pos(total);
    theta.iter().map(|t| digamma_pos(t + 1.0) - psi_total).collect()
}

/// Dirichlet log-normaliser `F(θ) = Σ ln Γ(θ_k + 1) - ln Γ(Σ (θ_k + 1))`.
pub fn log_normalizer(theta: &NaturalParams) -> f64 {
    log_normalizer_slice(&theta.theta)
}

fn scaled_natural(
    which: &str,
    theta: &NaturalParams,
    factor: f64,
) -> Result<NaturalParams> {
    theta.scaled(factor).map_err(|_| {
        let (k, t) = theta
            .theta
            .iter()
            .enumerate()
            .find(|(_, t)| !(factor * **t > -1.0))
            .map(|(k, t)| (k, *t))
            .unwrap_or((0, f64::NAN));
        Error::Domain(format!(
            "{which}: scaled natural parameter {factor} * theta[{k}] = {} is not > -1",
            factor * t
        ))
    })
}

/// Closed-form Hölder pseudo-divergence
/// `(1/γ) F(γ θ_p) + (1/γ̄) F(γ̄ θ_q) - F(θ_p + θ_q)`.
pub fn holder_divergence(p: &DirichletParams, q: &DirichletParams, h: HolderExponent) -> Result<f64> {
    holder_divergence_with_grad(p, q, h).map(|(v, _, _)| v)
}

/// Hölder divergence together with its gradients with respect to the
/// concentrations of `p` and of `q`.
pub fn holder_divergence_with_grad(
    p: &DirichletParams,
    q: &DirichletParams,
    h: HolderExponent,
) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    p.check_same_dim(q)?;
    let tp = p.natural();
    let tq = q.natural();
    let gp = scaled_natural("p", &tp, h.gamma)?;
    let gq = scaled_natural("q", &tq, h.conjugate)?;
    let joint = tp.sum(&tq).map_err(|e| {
        Error::Domain(format!("theta_p + theta_q leaves the natural domain: {e}"))
    })?;

    let value = log_normalizer(&gp) / h.gamma + log_normalizer(&gq) / h.conjugate
        - log_normalizer(&joint);

    let d_gp = log_normalizer_grad(&gp.theta);
    let d_gq = log_normalizer_grad(&gq.theta);
    let d_joint = log_normalizer_grad(&joint.theta);
    let grad_p = d_gp.iter().zip(&d_joint).map(|(a, b)| a - b).collect();
    let grad_q = d_gq.iter().zip(&d_joint).map(|(a, b)| a - b).collect();
    Ok((value, grad_p, grad_q))
}

/// Closed-form `KL(p ‖ q)` between Dirichlets.
pub fn kl_divergence(p: &DirichletParams, q: &DirichletParams) -> Result<f64> {
    kl_divergence_with_grad(p, q).map(|(v, _)| v)
}

/// `KL(p ‖ q)` and its gradient with respect to the concentration of `p`.
pub fn kl_divergence_with_grad(p: &DirichletParams, q: &DirichletParams) -> Result<(f64, Vec<f64>)> {
    p.check_same_dim(q)?;
    let (a, b) = (p.concentration(), q.concentration());
    let (sa, sb) = (p.strength(), q.strength());
    let psi_sa = digamma_pos(sa);
    let mut value = ln_gamma_pos(sa) - ln_gamma_pos(sb);
    for (&ak, &bk) in a.iter().zip(b) {
        value += ln_gamma_pos(bk) - ln_gamma_pos(ak) + (ak - bk) * (digamma_pos(ak) - psi_sa);
    }
    let tri_sa = trigamma_pos(sa);
    let grad = a
        .iter()
        .zip(b)
        .map(|(&ak, &bk)| (ak - bk) * trigamma_pos(ak) - tri_sa * (sa - sb))
        .collect();
    Ok((value, grad))
}

/// Evaluate the requested divergence. Closed forms report a zero standard error.
pub fn divergence(kind: DivergenceKind, p: &DirichletParams, q: &DirichletParams) -> Result<Estimate> {
    match kind {
        DivergenceKind::Holder { gamma } => holder_divergence(p, q, gamma).map(Estimate::exact),
        DivergenceKind::CauchySchwarz => {
            holder_divergence(p, q, HolderExponent::cauchy_schwarz()).map(Estimate::exact)
        }
        DivergenceKind::Kl => kl_divergence(p, q).map(Estimate::exact),
        DivergenceKind::JensenShannonMc { samples, seed } => jensen_shannon_mc(p, q, samples, seed),
    }
}

/// Monte Carlo estimate of `½ KL(p ‖ m) + ½ KL(q ‖ m)` with `m = ½ (p + q)`.
pub fn jensen_shannon_mc(
    p: &DirichletParams,
    q: &DirichletParams,
    samples: usize,
    seed: u64,
) -> Result<Estimate> {
    jensen_shannon_mc_on(p, q, samples, seed, (streams::JS_P, streams::JS_Q))
}

/// `ln own - ln(½ e^own + ½ e^other)`, computed stably.
pub(crate) fn js_log_ratio(own: f64, other: f64) -> f64 {
    let hi = own.max(other);
    let ln_mix = 0.5_f64.ln() + hi + ((own - hi).exp() + (other - hi).exp()).ln();
    own - ln_mix
}

pub(crate) fn jensen_shannon_mc_on(
    p: &DirichletParams,
    q: &DirichletParams,
    samples: usize,
    seed: u64,
    (stream_p, stream_q): (u64, u64),
) -> Result<Estimate> {
    p.check_same_dim(q)?;
    if samples < 2 {
        return Err(Error::Argument(format!(
            "Jensen–Shannon estimate needs at least 2 samples, got {samples}"
        )));
    }
    let half = |from: &DirichletParams, to: &DirichletParams, stream: u64| {
        let mut rng = rng::stream(seed, stream);
        let sampler = Sampler::new(from);
        let mut stats = RunningMoments::default();
        let mut point = vec![0.0; from.dim()];
        for _ in 0..samples {
            sampler.draw_into(&mut rng, &mut point);
            stats.push(js_log_ratio(from.ln_density(&point), to.ln_density(&point)));
        }
        stats
    };
    let sp = half(p, q, stream_p);
    let sq = half(q, p, stream_q);
    let value = 0.5 * (sp.mean() + sq.mean());
    let std_error = 0.5 * (sp.variance() / samples as f64 + sq.variance() / samples as f64).sqrt();
    Ok(Estimate { value, std_error })
}

/// `E_{μ ~ Dir(a)}[ln μ_class] = ψ(a_class) - ψ(S)`.
pub fn expected_log_likelihood(a: &DirichletParams, class_index: usize) -> Result<f64> {
    let ak = a.concentration().get(class_index).ok_or_else(|| {
        Error::Dimension(format!(
            "class index {class_index} out of range for K = {}",
            a.dim()
        ))
    })?;
    Ok(digamma_pos(*ak) - digamma_pos(a.strength()))
}

/// Draw `n` points from `Dir(a)` by normalising independent gamma variates.
/// Deterministic for a given seed.
pub fn sample(a: &DirichletParams, seed: u64, n: usize) -> Vec<Vec<f64>> {
    let mut rng = rng::stream(seed, streams::DIRICHLET_SAMPLE);
    let sampler = Sampler::new(a);
    (0..n)
        .map(|_| {
            let mut point = vec![0.0; a.dim()];
            sampler.draw_into(&mut rng, &mut point);
            point
        })
        .collect()
}

/// Per-component gamma distributions of one Dirichlet.
pub(crate) struct Sampler {
    gammas: Vec<Gamma<f64>>,
}

impl Sampler {
    pub(crate) fn new(a: &DirichletParams) -> Self {
        let gammas = a
            .concentration()
            .iter()
            // Shapes are validated positive; scale is 1.
            .map(|&ak| Gamma::new(ak, 1.0).expect("valid gamma shape"))
            .collect();
        Self { gammas }
    }

    pub(crate) fn draw_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let mut total = 0.0;
        for (slot, g) in out.iter_mut().zip(&self.gammas) {
            *slot = g.sample(rng);
            total += *slot;
        }
        for slot in out.iter_mut() {
            *slot /= total;
        }
    }
}

/// Welford accumulator for a sample mean and variance.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct RunningMoments {
    n: usize,
    mean: f64,
    m2: f64,
}

impl RunningMoments {
    pub(crate) fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub(crate) fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance.
    pub(crate) fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }
}

#[cfg(test)]
mod tests;
