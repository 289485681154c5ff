//! Adam training of the multi-view evidence model, uncertainty-aware
//! prediction and evaluation.
//!
//! Training is fully sequential: samples within a batch are reduced in
//! order, and the batch order comes from one seeded shuffle stream, so a
//! run is reproducible bit for bit.

mod metrics;

pub use metrics::{
    classification_report, clustering_accuracy, confusion_matrix, min_cost_assignment, report_from_confusion,
    ClassificationReport,
};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::MultiViewDataset;
use crate::dirichlet::DivergenceKind;
use crate::error::{Error, Result};
use crate::loss::{lambda_at, total_loss, AnnealSchedule, LossBreakdown};
use crate::network::{MlpConfig, MultiViewModel};
use crate::opinions::{combine_all, opinion_from_evidence, Opinion};
use crate::rng::{self, streams};

/// Network shapes: one MLP per view plus an optional pseudo-view MLP over
/// the concatenated view features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Architecture {
    pub views: Vec<MlpConfig>,
    pub pseudo_hidden: Option<Vec<usize>>,
    pub pseudo_seed: u64,
}

impl Architecture {
    /// Same hidden widths for every view of `ds`. View `m` is seeded with
    /// `seed + m` and the pseudo-view with `seed + M`.
    pub fn for_dataset(ds: &MultiViewDataset, hidden: &[usize], pseudo_hidden: Option<Vec<usize>>, seed: u64) -> Result<Self> {
        let views = ds
            .view_dims()
            .iter()
            .enumerate()
            .map(|(m, &d)| MlpConfig::new(d, hidden.to_vec(), ds.num_classes(), seed.wrapping_add(m as u64)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            views,
            pseudo_hidden,
            pseudo_seed: seed.wrapping_add(ds.num_views() as u64),
        })
    }

    pub fn init(&self) -> Result<MultiViewModel> {
        MultiViewModel::init(&self.views, self.pseudo_hidden.clone(), self.pseudo_seed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamParams {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Step decay: the rate is multiplied by `factor` every `every` epochs
/// (default `epochs / 2`, at least 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LrDecay {
    pub factor: f64,
    pub every: Option<usize>,
}

impl Default for LrDecay {
    fn default() -> Self {
        Self {
            factor: 0.5,
            every: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub adam: AdamParams,
    /// Decoupled: `p -= lr · weight_decay · p` after the Adam step.
    pub weight_decay: f64,
    pub lr_decay: LrDecay,
    pub divergence: DivergenceKind,
    pub anneal: AnnealSchedule,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            batch_size: 16,
            learning_rate: 0.01,
            adam: AdamParams::default(),
            weight_decay: 1e-4,
            lr_decay: LrDecay::default(),
            divergence: DivergenceKind::holder(1.7).expect("1.7 > 1"),
            anneal: AnnealSchedule::default(),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Argument("epochs and batch_size must be at least 1".into()));
        }
        let nonneg = |v: f64| v >= 0.0 && v.is_finite();
        if !nonneg(self.learning_rate) || !nonneg(self.weight_decay) {
            return Err(Error::Argument("learning_rate and weight_decay must be finite and >= 0".into()));
        }
        let AdamParams { beta1, beta2, eps } = self.adam;
        if !((0.0..1.0).contains(&beta1) && (0.0..1.0).contains(&beta2) && eps > 0.0) {
            return Err(Error::Argument("Adam needs betas in [0, 1) and eps > 0".into()));
        }
        if !(self.lr_decay.factor > 0.0 && self.lr_decay.factor.is_finite()) || self.lr_decay.every == Some(0) {
            return Err(Error::Argument("lr decay factor must be > 0 and its period >= 1".into()));
        }
        if let DivergenceKind::JensenShannonMc { .. } = self.divergence {
            return Err(Error::Unsupported(
                "the Monte Carlo Jensen-Shannon divergence cannot be used for training".into(),
            ));
        }
        Ok(())
    }

    /// Learning rate used during `epoch` (0-based).
    pub fn learning_rate_at(&self, epoch: usize) -> f64 {
        let every = self.lr_decay.every.unwrap_or((self.epochs / 2).max(1));
        self.learning_rate * self.lr_decay.factor.powi((epoch / every) as i32)
    }
}

/// Mean loss terms over one epoch, with the schedule values used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub lambda: f64,
    pub learning_rate: f64,
    pub loss: LossBreakdown,
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64, wd: f64, hp: AdamParams) {
        self.t += 1;
        let c1 = 1.0 - hp.beta1.powi(self.t);
        let c2 = 1.0 - hp.beta2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = hp.beta1 * self.m[i] + (1.0 - hp.beta1) * grad[i];
            self.v[i] = hp.beta2 * self.v[i] + (1.0 - hp.beta2) * grad[i] * grad[i];
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= lr * (m_hat / (v_hat.sqrt() + hp.eps) + wd * params[i]);
        }
    }
}

fn check_compatible(model: &MultiViewModel, ds: &MultiViewDataset) -> Result<()> {
    let dims: Vec<usize> = model.views().iter().map(|v| v.config().input_dim).collect();
    if dims != ds.view_dims() || model.num_classes() != ds.num_classes() {
        return Err(Error::Dimension(format!(
            "model expects view dims {dims:?} over {} classes, dataset has {:?} over {}",
            model.num_classes(),
            ds.view_dims(),
            ds.num_classes()
        )));
    }
    Ok(())
}

/// Per-sample loss and the gradient of every model parameter.
pub fn sample_loss_and_grad(
    model: &MultiViewModel,
    x_views: &[&[f64]],
    label: usize,
    lambda: f64,
    kind: DivergenceKind,
) -> Result<(LossBreakdown, Vec<f64>)> {
    let fwd = model.forward(x_views)?;
    let evidence: Vec<_> = fwd.views.iter().map(|f| f.evidence.clone()).collect();
    let pseudo = fwd.pseudo.as_ref().map(|f| f.evidence.clone());
    let out = total_loss(&evidence, pseudo.as_ref(), label, lambda, kind)?;
    let grads = model.backward(&fwd, &out.grads.views, out.grads.pseudo.as_deref())?;
    Ok((out.breakdown, grads.flat()))
}

fn add_breakdown(acc: &mut LossBreakdown, b: &LossBreakdown) {
    acc.fused += b.fused;
    acc.pseudo += b.pseudo;
    acc.total += b.total;
    for (a, v) in acc.per_view.iter_mut().zip(&b.per_view) {
        *a += v;
    }
}

fn scale_breakdown(b: &mut LossBreakdown, s: f64) {
    b.fused *= s;
    b.pseudo *= s;
    b.total *= s;
    for v in &mut b.per_view {
        *v *= s;
    }
}

/// Train a freshly initialised model and return it with the per-epoch history.
pub fn train(ds: &MultiViewDataset, arch: &Architecture, cfg: &TrainConfig) -> Result<(MultiViewModel, Vec<EpochRecord>)> {
    cfg.validate()?;
    let model = arch.init()?;
    train_from(model, ds, cfg)
}

/// Continue training an existing model.
pub fn train_from(
    mut model: MultiViewModel,
    ds: &MultiViewDataset,
    cfg: &TrainConfig,
) -> Result<(MultiViewModel, Vec<EpochRecord>)> {
    cfg.validate()?;
    check_compatible(&model, ds)?;
    let n = ds.num_samples();
    let mut params = model.flat();
    let mut adam = Adam::new(params.len());
    let mut order: Vec<usize> = (0..n).collect();
    let mut shuffle_rng = rng::stream(cfg.seed, streams::SHUFFLE);
    let mut history = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let lambda = lambda_at(cfg.anneal, epoch);
        let lr = cfg.learning_rate_at(epoch);
        order.shuffle(&mut shuffle_rng);
        let mut epoch_loss = LossBreakdown {
            fused: 0.0,
            pseudo: 0.0,
            per_view: vec![0.0; ds.num_views()],
            total: 0.0,
        };
        for batch in order.chunks(cfg.batch_size) {
            let mut grad = vec![0.0; params.len()];
            for &i in batch {
                let (b, g) = sample_loss_and_grad(&model, &ds.sample(i), ds.labels()[i], lambda, cfg.divergence)?;
                add_breakdown(&mut epoch_loss, &b);
                for (acc, gi) in grad.iter_mut().zip(&g) {
                    *acc += gi;
                }
            }
            let inv = 1.0 / batch.len() as f64;
            for g in &mut grad {
                *g *= inv;
            }
            adam.step(&mut params, &grad, lr, cfg.weight_decay, cfg.adam);
            model.set_flat(&params)?;
        }
        scale_breakdown(&mut epoch_loss, 1.0 / n as f64);
        history.push(EpochRecord {
            epoch,
            lambda,
            learning_rate: lr,
            loss: epoch_loss,
        });
    }
    Ok((model, history))
}

/// Opinions for one sample. `fused` combines the view opinions followed by
/// the pseudo-view opinion, if the model has one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub fused: Opinion,
    pub per_view: Vec<Opinion>,
    pub pseudo: Option<Opinion>,
}

impl Prediction {
    pub fn label(&self) -> usize {
        self.fused.argmax()
    }
}

pub fn predict_with_uncertainty(model: &MultiViewModel, x_views: &[&[f64]]) -> Result<Prediction> {
    let fwd = model.forward(x_views)?;
    let per_view: Vec<Opinion> = fwd.views.iter().map(|f| opinion_from_evidence(&f.evidence)).collect();
    let pseudo = fwd.pseudo.as_ref().map(|f| opinion_from_evidence(&f.evidence));
    let all: Vec<Opinion> = per_view.iter().cloned().chain(pseudo.clone()).collect();
    Ok(Prediction {
        fused: combine_all(&all)?,
        per_view,
        pseudo,
    })
}

/// Evaluation summary. `accuracy` and the macro scores use the argmax of the
/// fused beliefs with ties going to the lowest class index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub num_samples: usize,
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub fused_accuracy: f64,
    pub per_view_accuracy: Vec<f64>,
    pub pseudo_accuracy: Option<f64>,
    pub clustering_accuracy: f64,
    pub mean_fused_uncertainty: f64,
    pub mean_view_uncertainty: Vec<f64>,
}

pub fn evaluate(model: &MultiViewModel, ds: &MultiViewDataset) -> Result<Metrics> {
    check_compatible(model, ds)?;
    let n = ds.num_samples();
    let m = ds.num_views();
    let mut fused_pred = Vec::with_capacity(n);
    let mut view_correct = vec![0usize; m];
    let mut view_u = vec![0.0; m];
    let mut pseudo_correct = 0usize;
    let mut fused_u = 0.0;
    for i in 0..n {
        let y = ds.labels()[i];
        let p = predict_with_uncertainty(model, &ds.sample(i))?;
        fused_pred.push(p.label());
        fused_u += p.fused.uncertainty();
        for (v, o) in p.per_view.iter().enumerate() {
            view_correct[v] += usize::from(o.argmax() == y);
            view_u[v] += o.uncertainty();
        }
        if let Some(o) = &p.pseudo {
            pseudo_correct += usize::from(o.argmax() == y);
        }
    }
    let nf = n as f64;
    let report = classification_report(&fused_pred, ds.labels(), ds.num_classes())?;
    Ok(Metrics {
        num_samples: n,
        accuracy: report.accuracy,
        macro_precision: report.macro_precision,
        macro_recall: report.macro_recall,
        macro_f1: report.macro_f1,
        fused_accuracy: report.accuracy,
        per_view_accuracy: view_correct.iter().map(|&c| c as f64 / nf).collect(),
        pseudo_accuracy: model.pseudo().map(|_| pseudo_correct as f64 / nf),
        clustering_accuracy: clustering_accuracy(&fused_pred, ds.labels())?,
        mean_fused_uncertainty: fused_u / nf,
        mean_view_uncertainty: view_u.iter().map(|u| u / nf).collect(),
    })
}
