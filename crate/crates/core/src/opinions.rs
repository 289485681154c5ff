//! Subjective-logic opinions over a K-class frame and the reduced
//! Dempster–Shafer combination used to fuse views.
//!
//! Evidence `e` maps to an opinion through `a = e + 1`, `S = Σ a`,
//! `b_k = e_k / S`, `u = K / S`. Two opinions combine as
//!
//! ```text
//! b_k = (b¹_k b²_k + b¹_k u² + b²_k u¹) / (1 - C)
//! u   = u¹ u² / (1 - C),      C = Σ_{i≠j} b¹_i b²_j
//! ```
//!
//! Every operation here also has a reverse-mode counterpart so that a loss
//! on the fused opinion can be differentiated back to each view's evidence.

use serde::{Deserialize, Serialize};

use crate::dirichlet::DirichletParams;
use crate::error::{Error, Result};

/// Tolerance on `Σ b + u = 1` when validating an opinion.
pub const NORMALIZATION_TOL: f64 = 1e-12;
/// Combination is refused once the conflict mass reaches `1 - CONFLICT_TOL`.
pub const CONFLICT_TOL: f64 = 1e-12;

/// Non-negative per-class evidence produced by an evidence head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Evidence(Vec<f64>);

impl Evidence {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::Dimension(format!(
                "evidence needs at least 2 classes, got {}",
                values.len()
            )));
        }
        if let Some((k, e)) = values
            .iter()
            .enumerate()
            .find(|(_, e)| !(e.is_finite() && **e >= 0.0))
        {
            return Err(Error::Domain(format!("evidence[{k}] = {e} must be finite and >= 0")));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Dirichlet concentration `a = e + 1`.
    pub fn concentration(&self) -> DirichletParams {
        DirichletParams::new(self.0.iter().map(|e| e + 1.0).collect())
            .expect("evidence + 1 is a valid concentration")
    }
}

impl TryFrom<Vec<f64>> for Evidence {
    type Error = Error;

    fn try_from(value: Vec<f64>) -> Result<Self> {
        Self::new(value)
    }
}

impl From<Evidence> for Vec<f64> {
    fn from(value: Evidence) -> Self {
        value.0
    }
}

/// Belief masses over K singletons plus the uncertainty mass on the frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawOpinion")]
pub struct Opinion {
    beliefs: Vec<f64>,
    uncertainty: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOpinion {
    beliefs: Vec<f64>,
    uncertainty: f64,
}

impl TryFrom<RawOpinion> for Opinion {
    type Error = Error;

    fn try_from(raw: RawOpinion) -> Result<Self> {
        Self::new(raw.beliefs, raw.uncertainty)
    }
}

impl Opinion {
    pub fn new(beliefs: Vec<f64>, uncertainty: f64) -> Result<Self> {
        if beliefs.len() < 2 {
            return Err(Error::Dimension(format!(
                "an opinion needs at least 2 classes, got {}",
                beliefs.len()
            )));
        }
        let in_unit = |x: f64| x.is_finite() && (0.0..=1.0).contains(&x);
        if let Some((k, b)) = beliefs.iter().enumerate().find(|(_, b)| !in_unit(**b)) {
            return Err(Error::Domain(format!("belief[{k}] = {b} is outside [0, 1]")));
        }
        if !in_unit(uncertainty) {
            return Err(Error::Domain(format!("uncertainty {uncertainty} is outside [0, 1]")));
        }
        let total = beliefs.iter().sum::<f64>() + uncertainty;
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::Domain(format!(
                "beliefs plus uncertainty sum to {total}, expected 1"
            )));
        }
        Ok(Self {
            beliefs,
            uncertainty,
        })
    }

    /// Total ignorance: no belief, `u = 1`.
    pub fn vacuous(k: usize) -> Result<Self> {
        Self::new(vec![0.0; k], 1.0)
    }

    pub fn beliefs(&self) -> &[f64] {
        &self.beliefs
    }

    pub fn uncertainty(&self) -> f64 {
        self.uncertainty
    }

    pub fn dim(&self) -> usize {
        self.beliefs.len()
    }

    /// Index of the largest belief; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (k, &b) in self.beliefs.iter().enumerate().skip(1) {
            if b > self.beliefs[best] {
                best = k;
            }
        }
        best
    }
}

/// Gradient of a scalar with respect to an opinion's masses, treating the
/// beliefs and the uncertainty as independent coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct OpinionGrad {
    pub beliefs: Vec<f64>,
    pub uncertainty: f64,
}

impl OpinionGrad {
    pub fn zeros(k: usize) -> Self {
        Self {
            beliefs: vec![0.0; k],
            uncertainty: 0.0,
        }
    }
}

pub fn opinion_from_evidence(e: &Evidence) -> Opinion {
    let k = e.dim() as f64;
    let strength = e.values().iter().sum::<f64>() + k;
    Opinion {
        beliefs: e.values().iter().map(|x| x / strength).collect(),
        uncertainty: k / strength,
    }
}

/// Pull a gradient on the opinion back to the evidence.
pub fn opinion_from_evidence_backward(e: &Evidence, grad: &OpinionGrad) -> Vec<f64> {
    let k = e.dim() as f64;
    let strength = e.values().iter().sum::<f64>() + k;
    let s2 = strength * strength;
    // ∂b_k/∂e_j = δ_kj / S - e_k / S²,  ∂u/∂e_j = -K / S².
    let shared = e.values().iter().zip(&grad.beliefs).map(|(ek, gk)| ek * gk).sum::<f64>() / s2
        + grad.uncertainty * k / s2;
    grad.beliefs.iter().map(|g| g / strength - shared).collect()
}

/// Inverse of [`opinion_from_evidence`]: `a_k = 1 + K b_k / u`.
pub fn dirichlet_from_opinion(o: &Opinion) -> Result<DirichletParams> {
    if o.uncertainty <= 0.0 {
        return Err(Error::Singularity(
            "uncertainty is zero, which corresponds to infinite evidence".into(),
        ));
    }
    let scale = o.dim() as f64 / o.uncertainty;
    DirichletParams::new(o.beliefs.iter().map(|b| 1.0 + scale * b).collect())
}

/// Pull a gradient on the concentration back to the opinion's masses.
pub fn dirichlet_from_opinion_backward(o: &Opinion, grad_a: &[f64]) -> OpinionGrad {
    let k = o.dim() as f64;
    let u = o.uncertainty;
    OpinionGrad {
        beliefs: grad_a.iter().map(|g| g * k / u).collect(),
        uncertainty: -grad_a
            .iter()
            .zip(&o.beliefs)
            .map(|(g, b)| g * k * b)
            .sum::<f64>()
            / (u * u),
    }
}

/// Conflict mass `C = Σ_{i≠j} b¹_i b²_j`.
pub fn conflict(o1: &Opinion, o2: &Opinion) -> f64 {
    let s1: f64 = o1.beliefs.iter().sum();
    let s2: f64 = o2.beliefs.iter().sum();
    let agree: f64 = o1.beliefs.iter().zip(&o2.beliefs).map(|(a, b)| a * b).sum();
    s1 * s2 - agree
}

fn check_dims(o1: &Opinion, o2: &Opinion) -> Result<()> {
    if o1.dim() == o2.dim() {
        Ok(())
    } else {
        Err(Error::Dimension(format!(
            "cannot combine opinions over {} and {} classes",
            o1.dim(),
            o2.dim()
        )))
    }
}

/// Reduced Dempster combination of two opinions. Symmetric in its arguments
/// bit for bit.
pub fn combine_pair(o1: &Opinion, o2: &Opinion) -> Result<Opinion> {
    check_dims(o1, o2)?;
    let c = conflict(o1, o2);
    if c >= 1.0 - CONFLICT_TOL {
        return Err(Error::TotalConflict { conflict: c });
    }
    let norm = 1.0 - c;
    let (u1, u2) = (o1.uncertainty, o2.uncertainty);
    let beliefs = o1
        .beliefs
        .iter()
        .zip(&o2.beliefs)
        .map(|(&b1, &b2)| (b1 * b2 + (b1 * u2 + b2 * u1)) / norm)
        .collect();
    Ok(Opinion {
        beliefs,
        uncertainty: u1 * u2 / norm,
    })
}

/// Reverse mode of [`combine_pair`].
pub fn combine_pair_backward(o1: &Opinion, o2: &Opinion, grad: &OpinionGrad) -> (OpinionGrad, OpinionGrad) {
    let (b1, b2) = (&o1.beliefs, &o2.beliefs);
    let (u1, u2) = (o1.uncertainty, o2.uncertainty);
    let s1: f64 = b1.iter().sum();
    let s2: f64 = b2.iter().sum();
    let norm = 1.0 - conflict(o1, o2);

    // value_k = num_k / N and u = u1 u2 / N, with N = 1 - C.
    let mut weighted_num = grad.uncertainty * u1 * u2;
    for k in 0..b1.len() {
        weighted_num += grad.beliefs[k] * (b1[k] * b2[k] + b1[k] * u2 + b2[k] * u1);
    }
    // dL/dC = -dL/dN = Σ g·num / N².
    let grad_c = weighted_num / (norm * norm);

    let mut g1 = OpinionGrad::zeros(b1.len());
    let mut g2 = OpinionGrad::zeros(b1.len());
    let mut gb_dot_b1 = 0.0;
    let mut gb_dot_b2 = 0.0;
    for k in 0..b1.len() {
        let gk = grad.beliefs[k];
        g1.beliefs[k] = gk * (b2[k] + u2) / norm + grad_c * (s2 - b2[k]);
        g2.beliefs[k] = gk * (b1[k] + u1) / norm + grad_c * (s1 - b1[k]);
        gb_dot_b1 += gk * b1[k];
        gb_dot_b2 += gk * b2[k];
    }
    g1.uncertainty = (gb_dot_b2 + grad.uncertainty * u2) / norm;
    g2.uncertainty = (gb_dot_b1 + grad.uncertainty * u1) / norm;
    (g1, g2)
}

/// Left fold of [`combine_pair`] over the list.
pub fn combine_all(opinions: &[Opinion]) -> Result<Opinion> {
    FusionTape::record(opinions).map(|t| t.fused().clone())
}

/// Intermediate results of a left-fold fusion, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct FusionTape {
    inputs: Vec<Opinion>,
    /// `partials[i]` is the fold of `inputs[..=i]`.
    partials: Vec<Opinion>,
}

impl FusionTape {
    pub fn record(opinions: &[Opinion]) -> Result<Self> {
        let first = opinions
            .first()
            .ok_or_else(|| Error::Argument("cannot combine an empty list of opinions".into()))?;
        let mut partials = Vec::with_capacity(opinions.len());
        partials.push(first.clone());
        for o in &opinions[1..] {
            let next = combine_pair(partials.last().expect("non-empty"), o)?;
            partials.push(next);
        }
        Ok(Self {
            inputs: opinions.to_vec(),
            partials,
        })
    }

    pub fn fused(&self) -> &Opinion {
        self.partials.last().expect("non-empty")
    }

    /// Gradients with respect to every input opinion, in input order.
    pub fn backward(&self, grad: &OpinionGrad) -> Vec<OpinionGrad> {
        let n = self.inputs.len();
        let mut out = vec![OpinionGrad::zeros(self.fused().dim()); n];
        let mut carry = grad.clone();
        for i in (1..n).rev() {
            let (g_acc, g_in) = combine_pair_backward(&self.partials[i - 1], &self.inputs[i], &carry);
            out[i] = g_in;
            carry = g_acc;
        }
        out[0] = carry;
        out
    }
}
