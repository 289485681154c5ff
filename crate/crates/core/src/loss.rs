//! The training objective: an evidential term on the fused opinion, one on
//! the pseudo-view and one per view, each regularised by a divergence of the
//! label-removed Dirichlet from the uniform one.
//!
//! Everything here is minimised. Gradients are with respect to concentrations
//! for [`evidential_term`] and with respect to evidence for [`total_loss`]
//! (the two coincide per view since `a = e + 1`).

use serde::{Deserialize, Serialize};

use crate::dirichlet::{
    holder_divergence_with_grad, kl_divergence_with_grad, DirichletParams, DivergenceKind, HolderExponent,
};
use crate::error::{Error, Result};
use crate::opinions::{
    dirichlet_from_opinion, dirichlet_from_opinion_backward, opinion_from_evidence,
    opinion_from_evidence_backward, Evidence, FusionTape, Opinion,
};
use crate::specfun::{digamma_pos, trigamma_pos};

/// Linear warm-up of the regulariser weight, `λ_t = min(1, t / t_anneal)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnealSchedule {
    pub t_anneal: usize,
}

impl Default for AnnealSchedule {
    fn default() -> Self {
        Self { t_anneal: 10 }
    }
}

/// `t_anneal = 0` means the full weight from the first epoch.
pub fn lambda_at(schedule: AnnealSchedule, epoch: usize) -> f64 {
    if schedule.t_anneal == 0 {
        return 1.0;
    }
    (epoch as f64 / schedule.t_anneal as f64).min(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub fused: f64,
    /// Zero when the model has no pseudo-view.
    pub pseudo: f64,
    pub per_view: Vec<f64>,
    pub total: f64,
}

/// Gradients of the total loss with respect to each evidence vector.
#[derive(Debug, Clone, PartialEq)]
pub struct LossGrads {
    pub views: Vec<Vec<f64>>,
    pub pseudo: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct LossOutput {
    pub breakdown: LossBreakdown,
    pub grads: LossGrads,
    pub fused: Opinion,
}

/// Value and concentration gradient of one evidential term.
#[derive(Debug, Clone, PartialEq)]
pub struct EvidentialTerm {
    pub value: f64,
    /// `ψ(S) - ψ(a_y)`, the negative expected log-likelihood of the label.
    pub likelihood: f64,
    /// Unweighted divergence of the label-removed Dirichlet from uniform.
    pub regularizer: f64,
    pub grad: Vec<f64>,
}

fn check_label(label: usize, k: usize) -> Result<()> {
    if label < k {
        Ok(())
    } else {
        Err(Error::Dimension(format!("label {label} is out of range for {k} classes")))
    }
}

/// Replace the label's concentration by 1, keeping every other entry.
pub fn adjusted_concentration(a: &DirichletParams, label: usize) -> Result<DirichletParams> {
    check_label(label, a.dim())?;
    let mut c = a.concentration().to_vec();
    c[label] = 1.0;
    DirichletParams::new(c)
}

/// Divergence from the uniform Dirichlet and its gradient in the first argument.
fn regularizer_with_grad(kind: DivergenceKind, adjusted: &DirichletParams) -> Result<(f64, Vec<f64>)> {
    let uniform = DirichletParams::uniform(adjusted.dim())?;
    match kind {
        DivergenceKind::Holder { gamma } => {
            holder_divergence_with_grad(adjusted, &uniform, gamma).map(|(v, g, _)| (v, g))
        }
        DivergenceKind::CauchySchwarz => {
            holder_divergence_with_grad(adjusted, &uniform, HolderExponent::cauchy_schwarz())
                .map(|(v, g, _)| (v, g))
        }
        DivergenceKind::Kl => kl_divergence_with_grad(adjusted, &uniform),
        DivergenceKind::JensenShannonMc { .. } => Err(Error::Unsupported(
            "the Monte Carlo Jensen-Shannon estimate has no gradient and cannot be used for training".into(),
        )),
    }
}

/// `ψ(S) - ψ(a_y) + λ D(Dir(ã) ‖ Dir(1))` and its gradient in `a`.
pub fn evidential_term(
    a: &DirichletParams,
    label: usize,
    lambda: f64,
    kind: DivergenceKind,
) -> Result<EvidentialTerm> {
    let k = a.dim();
    check_label(label, k)?;
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::Domain(format!("regulariser weight must be finite and >= 0, got {lambda}")));
    }
    if let Some((i, v)) = a.concentration().iter().enumerate().find(|(_, v)| **v < 1.0) {
        return Err(Error::Domain(format!(
            "concentration[{i}] = {v} is below 1, which no non-negative evidence produces"
        )));
    }
    let conc = a.concentration();
    let s = a.strength();
    let likelihood = digamma_pos(s) - digamma_pos(conc[label]);
    let tri_s = trigamma_pos(s);
    let mut grad = vec![tri_s; k];
    grad[label] -= trigamma_pos(conc[label]);

    let adjusted = adjusted_concentration(a, label)?;
    let (regularizer, reg_grad) = regularizer_with_grad(kind, &adjusted)?;
    for (i, (g, r)) in grad.iter_mut().zip(&reg_grad).enumerate() {
        // The label entry of ã is the constant 1.
        if i != label {
            *g += lambda * r;
        }
    }
    Ok(EvidentialTerm {
        value: likelihood + lambda * regularizer,
        likelihood,
        regularizer,
        grad,
    })
}

/// Total objective for one sample. The fused opinion combines every view
/// opinion, followed by the pseudo-view opinion when one is given.
pub fn total_loss(
    views: &[Evidence],
    pseudo: Option<&Evidence>,
    label: usize,
    lambda: f64,
    kind: DivergenceKind,
) -> Result<LossOutput> {
    let first = views
        .first()
        .ok_or_else(|| Error::Argument("the loss needs at least one view".into()))?;
    let k = first.dim();
    if let Some(bad) = views.iter().chain(pseudo).find(|e| e.dim() != k) {
        return Err(Error::Dimension(format!(
            "evidence vectors disagree on the class count: {k} vs {}",
            bad.dim()
        )));
    }
    check_label(label, k)?;

    let inputs: Vec<&Evidence> = views.iter().chain(pseudo).collect();
    let opinions: Vec<Opinion> = inputs.iter().map(|e| opinion_from_evidence(e)).collect();
    let tape = FusionTape::record(&opinions)?;
    let fused_opinion = tape.fused().clone();
    let fused_a = dirichlet_from_opinion(&fused_opinion)?;
    let fused_term = evidential_term(&fused_a, label, lambda, kind)?;

    let upstream = dirichlet_from_opinion_backward(&fused_opinion, &fused_term.grad);
    let mut grads: Vec<Vec<f64>> = tape
        .backward(&upstream)
        .iter()
        .zip(&inputs)
        .map(|(g, e)| opinion_from_evidence_backward(e, g))
        .collect();

    let mut per_input = Vec::with_capacity(inputs.len());
    for (e, g) in inputs.iter().zip(&mut grads) {
        let term = evidential_term(&e.concentration(), label, lambda, kind)?;
        for (gi, ti) in g.iter_mut().zip(&term.grad) {
            *gi += ti;
        }
        per_input.push(term.value);
    }

    let pseudo_grad = pseudo.map(|_| grads.pop().expect("pseudo gradient is last"));
    let pseudo_value = if pseudo.is_some() {
        per_input.pop().expect("pseudo term is last")
    } else {
        0.0
    };
    let total = fused_term.value + pseudo_value + per_input.iter().sum::<f64>();
    Ok(LossOutput {
        breakdown: LossBreakdown {
            fused: fused_term.value,
            pseudo: pseudo_value,
            per_view: per_input,
            total,
        },
        grads: LossGrads {
            views: grads,
            pseudo: pseudo_grad,
        },
        fused: fused_opinion,
    })
}
