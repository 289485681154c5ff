//! Direct numerical evaluation of divergences between Dirichlets, used to
//! check the closed forms. Nothing here touches the log-normaliser of scaled
//! natural parameters: the integrals are computed from the densities
//! themselves.

use serde::{Deserialize, Serialize};

use super::quadrature::integrate_adaptive_with_error;
use super::{jensen_shannon_mc_on, js_log_ratio, DirichletParams, HolderExponent, RunningMoments, Sampler};
use crate::error::{Error, Result};
use crate::rng::{self, streams};

const OUTER_REL_TOL: f64 = 1e-12;
const INNER_REL_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleMethod {
    /// Adaptive Gauss–Kronrod over the simplex; K = 2 or 3 only.
    Quadrature,
    /// Plain Monte Carlo under the distributions themselves; any K.
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleEstimate {
    pub method: OracleMethod,
    pub estimate: f64,
    /// Quadrature: propagated error estimate. Monte Carlo: three standard errors.
    pub error_bound: f64,
    /// Monte Carlo only.
    pub std_error: Option<f64>,
}

/// Integral of `f` over the probability simplex of dimension `k` (2 or 3).
/// Returns the value and an absolute error estimate.
fn simplex_integral<F>(k: usize, f: F, budget: usize) -> Result<(f64, f64)>
where
    F: Fn(&[f64]) -> f64,
{
    match k {
        2 => {
            let r = integrate_adaptive_with_error(
                |t| (f(&[t, 1.0 - t]), 0.0),
                0.0,
                1.0,
                OUTER_REL_TOL,
                0.0,
                budget,
            );
            Ok((r.value, r.error))
        }
        3 => {
            // μ = (u, (1-u) v, (1-u)(1-v)), Jacobian (1-u).
            let r = integrate_adaptive_with_error(
                |u| {
                    let w = 1.0 - u;
                    let inner = integrate_adaptive_with_error(
                        |v| (f(&[u, w * v, w * (1.0 - v)]) * w, 0.0),
                        0.0,
                        1.0,
                        INNER_REL_TOL,
                        0.0,
                        budget,
                    );
                    (inner.value, inner.error)
                },
                0.0,
                1.0,
                OUTER_REL_TOL,
                0.0,
                budget,
            );
            Ok((r.value, r.error))
        }
        _ => Err(Error::Unsupported(format!(
            "simplex quadrature supports K = 2 or 3, got K = {k}"
        ))),
    }
}

fn check_pair(p: &DirichletParams, q: &DirichletParams) -> Result<()> {
    p.check_same_dim(q)
}

/// Evaluate the Hölder pseudo-divergence
/// `-ln( ∫pq / ((∫p^γ)^{1/γ} (∫q^γ̄)^{1/γ̄}) )` numerically.
///
/// `budget` is the subinterval cap per adaptive integral for quadrature and
/// the sample count per distribution for Monte Carlo.
pub fn oracle_holder(
    p: &DirichletParams,
    q: &DirichletParams,
    h: HolderExponent,
    method: OracleMethod,
    budget: usize,
    seed: u64,
) -> Result<OracleEstimate> {
    check_pair(p, q)?;
    let (g, gbar) = (h.gamma(), h.conjugate());
    for (name, d, e) in [("p", p, g), ("q", q, gbar)] {
        if let Some((k, a)) = d
            .concentration()
            .iter()
            .enumerate()
            .find(|(_, &a)| !(e * (a - 1.0) > -1.0))
        {
            return Err(Error::Domain(format!(
                "{name}: density^{e} is not integrable (concentration[{k}] = {a})"
            )));
        }
    }
    match method {
        OracleMethod::Quadrature => {
            let (ipq, epq) = simplex_integral(
                p.dim(),
                |mu| (p.ln_density(mu) + q.ln_density(mu)).exp(),
                budget,
            )?;
            let (ip, ep) = simplex_integral(p.dim(), |mu| (g * p.ln_density(mu)).exp(), budget)?;
            let (iq, eq) = simplex_integral(q.dim(), |mu| (gbar * q.ln_density(mu)).exp(), budget)?;
            let estimate = -(ipq.ln() - ip.ln() / g - iq.ln() / gbar);
            let error_bound =
                epq / ipq + ep / (g * ip) + eq / (gbar * iq) + 8.0 * f64::EPSILON * (1.0 + estimate.abs());
            Ok(OracleEstimate {
                method,
                estimate,
                error_bound,
                std_error: None,
            })
        }
        OracleMethod::MonteCarlo => {
            let n = budget;
            if n < 2 {
                return Err(Error::Argument("Monte Carlo oracle needs at least 2 samples".into()));
            }
            let mut point = vec![0.0; p.dim()];

            // Under p: q(μ) estimates ∫pq and p(μ)^{γ-1} estimates ∫p^γ.
            let mut rng = rng::stream(seed, streams::ORACLE_P);
            let sampler = Sampler::new(p);
            let mut xs = Vec::with_capacity(n);
            let mut ys = Vec::with_capacity(n);
            for _ in 0..n {
                sampler.draw_into(&mut rng, &mut point);
                xs.push(q.ln_density(&point).exp());
                ys.push(((g - 1.0) * p.ln_density(&point)).exp());
            }
            // Under q: q(μ)^{γ̄-1} estimates ∫q^γ̄.
            let mut rng = rng::stream(seed, streams::ORACLE_Q);
            let sampler = Sampler::new(q);
            let mut zs = Vec::with_capacity(n);
            for _ in 0..n {
                sampler.draw_into(&mut rng, &mut point);
                zs.push(((gbar - 1.0) * q.ln_density(&point)).exp());
            }
            let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
            let (mx, my, mz) = (mean(&xs), mean(&ys), mean(&zs));
            let estimate = -(mx.ln() - my.ln() / g - mz.ln() / gbar);

            // Delta method: linearise the estimate in the three sample means.
            let mut under_p = RunningMoments::default();
            for (x, y) in xs.iter().zip(&ys) {
                under_p.push(-x / mx + y / (g * my));
            }
            let mut under_q = RunningMoments::default();
            for z in &zs {
                under_q.push(z / (gbar * mz));
            }
            let std_error = ((under_p.variance() + under_q.variance()) / n as f64).sqrt();
            Ok(OracleEstimate {
                method,
                estimate,
                error_bound: 3.0 * std_error,
                std_error: Some(std_error),
            })
        }
    }
}

/// Evaluate `KL(p ‖ q) = ∫ p ln(p/q)` numerically.
pub fn oracle_kl(
    p: &DirichletParams,
    q: &DirichletParams,
    method: OracleMethod,
    budget: usize,
    seed: u64,
) -> Result<OracleEstimate> {
    check_pair(p, q)?;
    match method {
        OracleMethod::Quadrature => {
            let (value, err) = simplex_integral(
                p.dim(),
                |mu| {
                    let lp = p.ln_density(mu);
                    let dens = lp.exp();
                    if dens == 0.0 {
                        0.0
                    } else {
                        dens * (lp - q.ln_density(mu))
                    }
                },
                budget,
            )?;
            Ok(OracleEstimate {
                method,
                estimate: value,
                error_bound: err + 8.0 * f64::EPSILON * (1.0 + value.abs()),
                std_error: None,
            })
        }
        OracleMethod::MonteCarlo => {
            if budget < 2 {
                return Err(Error::Argument("Monte Carlo oracle needs at least 2 samples".into()));
            }
            let mut rng = rng::stream(seed, streams::ORACLE_P);
            let sampler = Sampler::new(p);
            let mut point = vec![0.0; p.dim()];
            let mut stats = RunningMoments::default();
            for _ in 0..budget {
                sampler.draw_into(&mut rng, &mut point);
                stats.push(p.ln_density(&point) - q.ln_density(&point));
            }
            let std_error = (stats.variance() / budget as f64).sqrt();
            Ok(OracleEstimate {
                method,
                estimate: stats.mean(),
                error_bound: 3.0 * std_error,
                std_error: Some(std_error),
            })
        }
    }
}

/// Evaluate the Jensen–Shannon divergence numerically. The Monte Carlo
/// variant draws from streams disjoint from [`super::jensen_shannon_mc`],
/// so the two are independent for the same seed.
pub fn oracle_js(
    p: &DirichletParams,
    q: &DirichletParams,
    method: OracleMethod,
    budget: usize,
    seed: u64,
) -> Result<OracleEstimate> {
    check_pair(p, q)?;
    match method {
        OracleMethod::Quadrature => {
            let (value, err) = simplex_integral(
                p.dim(),
                |mu| {
                    let (lp, lq) = (p.ln_density(mu), q.ln_density(mu));
                    let term = |l: f64, other: f64| {
                        let d = l.exp();
                        if d == 0.0 {
                            0.0
                        } else {
                            d * js_log_ratio(l, other)
                        }
                    };
                    0.5 * (term(lp, lq) + term(lq, lp))
                },
                budget,
            )?;
            Ok(OracleEstimate {
                method,
                estimate: value,
                error_bound: err + 8.0 * f64::EPSILON * (1.0 + value.abs()),
                std_error: None,
            })
        }
        OracleMethod::MonteCarlo => {
            let e = jensen_shannon_mc_on(p, q, budget, seed, (streams::ORACLE_P, streams::ORACLE_Q))?;
            Ok(OracleEstimate {
                method,
                estimate: e.value,
                error_bound: 3.0 * e.std_error,
                std_error: Some(e.std_error),
            })
        }
    }
}
