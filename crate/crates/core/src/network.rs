//! Evidence networks: ReLU MLPs whose output layer is passed through a
//! softplus so that every class receives non-negative evidence, plus the
//! multi-view wrapper with a pseudo-view head over concatenated features.
//!
//! Backpropagation is written out by hand. Parameters are stored per layer
//! as a row-major `out × in` weight matrix followed by the bias; the flat
//! view concatenates layers in order using that same layout.

use std::path::Path;

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::opinions::Evidence;
use crate::rng::{self, streams};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlpConfig {
    pub input_dim: usize,
    pub hidden_dims: Vec<usize>,
    pub num_classes: usize,
    pub seed: u64,
}

impl MlpConfig {
    pub fn new(input_dim: usize, hidden_dims: Vec<usize>, num_classes: usize, seed: u64) -> Result<Self> {
        let cfg = Self {
            input_dim,
            hidden_dims,
            num_classes,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden_dims.contains(&0) {
            return Err(Error::Argument("all layer widths must be at least 1".into()));
        }
        if self.num_classes < 2 {
            return Err(Error::Argument(format!(
                "need at least 2 classes, got {}",
                self.num_classes
            )));
        }
        Ok(())
    }

    /// Width of the representation fed to the evidence head.
    pub fn feature_dim(&self) -> usize {
        self.hidden_dims.last().copied().unwrap_or(self.input_dim)
    }

    fn layer_dims(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.hidden_dims.len() + 1);
        let mut fan_in = self.input_dim;
        for &h in self.hidden_dims.iter().chain(std::iter::once(&self.num_classes)) {
            dims.push((fan_in, h));
            fan_in = h;
        }
        dims
    }

    /// `Σ (in · out + out)` over layers.
    pub fn param_count(&self) -> usize {
        self.layer_dims().iter().map(|(i, o)| i * o + o).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub in_dim: usize,
    pub out_dim: usize,
    /// Row-major `out_dim × in_dim`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Self {
            in_dim,
            out_dim,
            weights: vec![0.0; in_dim * out_dim],
            bias: vec![0.0; out_dim],
        }
    }

    fn affine(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .chunks_exact(self.in_dim)
            .zip(&self.bias)
            .map(|(row, b)| row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>() + b)
            .collect()
    }
}

/// Weights and biases of one evidence MLP.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    config: MlpConfig,
    layers: Vec<Layer>,
}

/// Everything the backward pass needs from a forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    input: Vec<f64>,
    /// Pre-activation of every layer, the head last.
    pre: Vec<Vec<f64>>,
    /// Post-ReLU activations of the hidden layers.
    hidden: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct Forward {
    pub evidence: Evidence,
    /// Penultimate representation (last hidden activation, or the input).
    pub features: Vec<f64>,
    pub cache: ForwardCache,
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// He-initialised parameters: weights `N(0, 2 / fan_in)`, biases zero.
pub fn init(config: &MlpConfig) -> Result<ModelParams> {
    config.validate()?;
    let mut rng = rng::stream(config.seed, streams::INIT);
    let layers = config
        .layer_dims()
        .into_iter()
        .map(|(fan_in, fan_out)| {
            let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("positive std");
            let mut layer = Layer::zeros(fan_in, fan_out);
            for w in &mut layer.weights {
                *w = normal.sample(&mut rng);
            }
            layer
        })
        .collect();
    Ok(ModelParams {
        config: config.clone(),
        layers,
    })
}

impl ModelParams {
    /// All-zero parameters of the configured shape.
    pub fn zeros(config: &MlpConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config: config.clone(),
            layers: config
                .layer_dims()
                .into_iter()
                .map(|(i, o)| Layer::zeros(i, o))
                .collect(),
        })
    }

    pub fn config(&self) -> &MlpConfig {
        &self.config
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn len(&self) -> usize {
        self.config.param_count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for layer in &self.layers {
            out.extend_from_slice(&layer.weights);
            out.extend_from_slice(&layer.bias);
        }
        out
    }

    pub fn from_flat(config: &MlpConfig, flat: &[f64]) -> Result<Self> {
        let mut params = Self::zeros(config)?;
        params.set_flat(flat)?;
        Ok(params)
    }

    pub fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.len() {
            return Err(Error::Dimension(format!(
                "flat parameter vector has {} entries, expected {}",
                flat.len(),
                self.len()
            )));
        }
        let mut rest = flat;
        for layer in &mut self.layers {
            let (w, tail) = rest.split_at(layer.weights.len());
            let (b, tail) = tail.split_at(layer.bias.len());
            layer.weights.copy_from_slice(w);
            layer.bias.copy_from_slice(b);
            rest = tail;
        }
        Ok(())
    }

    pub fn forward_evidence(&self, x: &[f64]) -> Result<Forward> {
        if x.len() != self.config.input_dim {
            return Err(Error::Dimension(format!(
                "input has {} features, network expects {}",
                x.len(),
                self.config.input_dim
            )));
        }
        let n_hidden = self.layers.len() - 1;
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut hidden = Vec::with_capacity(n_hidden);
        let mut current = x.to_vec();
        for layer in &self.layers[..n_hidden] {
            let z = layer.affine(&current);
            current = z.iter().map(|v| v.max(0.0)).collect();
            pre.push(z);
            hidden.push(current.clone());
        }
        let head = self.layers[n_hidden].affine(&current);
        let evidence = Evidence::new(head.iter().map(|&z| softplus(z)).collect())?;
        pre.push(head);
        Ok(Forward {
            evidence,
            features: current,
            cache: ForwardCache {
                input: x.to_vec(),
                pre,
                hidden,
            },
        })
    }

    /// Reverse pass. `grad_features`, when present, is an extra upstream
    /// gradient on the penultimate representation (from the pseudo-view).
    /// Returns parameter gradients shaped like `self` and the input gradient.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        grad_evidence: &[f64],
        grad_features: Option<&[f64]>,
    ) -> Result<(ModelParams, Vec<f64>)> {
        self.check_cache(cache)?;
        if grad_evidence.len() != self.config.num_classes {
            return Err(Error::Dimension(format!(
                "evidence gradient has {} entries, expected {}",
                grad_evidence.len(),
                self.config.num_classes
            )));
        }
        let n_layers = self.layers.len();
        let mut grads = ModelParams::zeros(&self.config)?;

        // Through the softplus head.
        let mut delta: Vec<f64> = grad_evidence
            .iter()
            .zip(&cache.pre[n_layers - 1])
            .map(|(g, &z)| g * sigmoid(z))
            .collect();

        for li in (0..n_layers).rev() {
            let layer = &self.layers[li];
            let input = if li == 0 { &cache.input } else { &cache.hidden[li - 1] };
            let g = &mut grads.layers[li];
            for (o, &d) in delta.iter().enumerate() {
                g.bias[o] = d;
                let row = &mut g.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
                for (w, &xi) in row.iter_mut().zip(input) {
                    *w = d * xi;
                }
            }
            let mut upstream = vec![0.0; layer.in_dim];
            for (row, &d) in layer.weights.chunks_exact(layer.in_dim).zip(&delta) {
                for (u, w) in upstream.iter_mut().zip(row) {
                    *u += d * w;
                }
            }
            if li == n_layers - 1 {
                if let Some(extra) = grad_features {
                    if extra.len() != upstream.len() {
                        return Err(Error::Dimension(format!(
                            "feature gradient has {} entries, expected {}",
                            extra.len(),
                            upstream.len()
                        )));
                    }
                    for (u, e) in upstream.iter_mut().zip(extra) {
                        *u += e;
                    }
                }
            }
            if li == 0 {
                return Ok((grads, upstream));
            }
            // Through the ReLU of the previous hidden layer.
            delta = upstream
                .iter()
                .zip(&cache.pre[li - 1])
                .map(|(u, &z)| if z > 0.0 { *u } else { 0.0 })
                .collect();
        }
        unreachable!("the loop returns at the input layer")
    }

    fn check_cache(&self, cache: &ForwardCache) -> Result<()> {
        let consistent = cache.input.len() == self.config.input_dim
            && cache.pre.len() == self.layers.len()
            && cache.hidden.len() + 1 == self.layers.len()
            && cache.pre.iter().zip(&self.layers).all(|(z, l)| z.len() == l.out_dim);
        if consistent {
            Ok(())
        } else {
            Err(Error::Contract(
                "forward cache was not produced by a network of this shape".into(),
            ))
        }
    }
}

/// Per-view evidence networks plus an optional pseudo-view network over the
/// concatenation of the views' penultimate features (in view order).
#[derive(Debug, Clone, PartialEq)]
pub struct MultiViewModel {
    views: Vec<ModelParams>,
    pseudo: Option<ModelParams>,
}

#[derive(Debug, Clone)]
pub struct MultiViewForward {
    pub views: Vec<Forward>,
    pub pseudo: Option<Forward>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiViewGrads {
    pub views: Vec<ModelParams>,
    pub pseudo: Option<ModelParams>,
}

impl MultiViewGrads {
    pub fn flat(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.views.iter().flat_map(ModelParams::flat).collect();
        if let Some(p) = &self.pseudo {
            out.extend(p.flat());
        }
        out
    }
}

impl MultiViewModel {
    /// Initialise every view network, and a pseudo-view network with the
    /// given hidden widths when `pseudo_hidden` is set.
    pub fn init(view_configs: &[MlpConfig], pseudo_hidden: Option<Vec<usize>>, pseudo_seed: u64) -> Result<Self> {
        let k = Self::check_views(view_configs)?;
        let views = view_configs.iter().map(init).collect::<Result<Vec<_>>>()?;
        let pseudo = match pseudo_hidden {
            Some(hidden) => {
                let input = view_configs.iter().map(MlpConfig::feature_dim).sum();
                Some(init(&MlpConfig::new(input, hidden, k, pseudo_seed)?)?)
            }
            None => None,
        };
        Ok(Self { views, pseudo })
    }

    pub fn from_parts(views: Vec<ModelParams>, pseudo: Option<ModelParams>) -> Result<Self> {
        let configs: Vec<MlpConfig> = views.iter().map(|v| v.config.clone()).collect();
        let k = Self::check_views(&configs)?;
        if let Some(p) = &pseudo {
            let input: usize = configs.iter().map(MlpConfig::feature_dim).sum();
            if p.config.input_dim != input || p.config.num_classes != k {
                return Err(Error::Dimension(format!(
                    "pseudo-view network takes {} inputs over {} classes, expected {input} over {k}",
                    p.config.input_dim, p.config.num_classes
                )));
            }
        }
        Ok(Self { views, pseudo })
    }

    fn check_views(configs: &[MlpConfig]) -> Result<usize> {
        let first = configs
            .first()
            .ok_or_else(|| Error::Argument("a model needs at least one view".into()))?;
        if let Some(bad) = configs.iter().find(|c| c.num_classes != first.num_classes) {
            return Err(Error::Dimension(format!(
                "views disagree on the class count: {} vs {}",
                first.num_classes, bad.num_classes
            )));
        }
        Ok(first.num_classes)
    }

    pub fn views(&self) -> &[ModelParams] {
        &self.views
    }

    pub fn pseudo(&self) -> Option<&ModelParams> {
        self.pseudo.as_ref()
    }

    pub fn num_views(&self) -> usize {
        self.views.len()
    }

    pub fn num_classes(&self) -> usize {
        self.views[0].config.num_classes
    }

    pub fn param_count(&self) -> usize {
        self.views.iter().map(ModelParams::len).sum::<usize>()
            + self.pseudo.as_ref().map_or(0, ModelParams::len)
    }

    fn check_view_count(&self, n: usize) -> Result<()> {
        if n == self.views.len() {
            Ok(())
        } else {
            Err(Error::Dimension(format!(
                "got {n} views, model has {}",
                self.views.len()
            )))
        }
    }

    /// Concatenated penultimate features of every view, in view order.
    pub fn pseudo_features(&self, x_views: &[&[f64]]) -> Result<Vec<f64>> {
        self.check_view_count(x_views.len())?;
        let mut out = Vec::new();
        for (net, x) in self.views.iter().zip(x_views) {
            out.extend(net.forward_evidence(x)?.features);
        }
        Ok(out)
    }

    pub fn forward(&self, x_views: &[&[f64]]) -> Result<MultiViewForward> {
        self.check_view_count(x_views.len())?;
        let views = self
            .views
            .iter()
            .zip(x_views)
            .map(|(net, x)| net.forward_evidence(x))
            .collect::<Result<Vec<_>>>()?;
        let pseudo = match &self.pseudo {
            Some(net) => {
                let concat: Vec<f64> = views.iter().flat_map(|f| f.features.iter().copied()).collect();
                Some(net.forward_evidence(&concat)?)
            }
            None => None,
        };
        Ok(MultiViewForward { views, pseudo })
    }

    /// Reverse pass for the whole model. The pseudo-view's input gradient is
    /// split back onto each view's penultimate features.
    pub fn backward(
        &self,
        fwd: &MultiViewForward,
        grad_views: &[Vec<f64>],
        grad_pseudo: Option<&[f64]>,
    ) -> Result<MultiViewGrads> {
        self.check_view_count(grad_views.len())?;
        self.check_view_count(fwd.views.len())?;
        let (pseudo_grads, feature_grads) = match (&self.pseudo, &fwd.pseudo, grad_pseudo) {
            (Some(net), Some(f), Some(g)) => {
                let (pg, input_grad) = net.backward(&f.cache, g, None)?;
                let mut split = Vec::with_capacity(self.views.len());
                let mut rest = input_grad.as_slice();
                for v in &self.views {
                    let (head, tail) = rest.split_at(v.config.feature_dim());
                    split.push(Some(head.to_vec()));
                    rest = tail;
                }
                (Some(pg), split)
            }
            (None, None, None) => (None, vec![None; self.views.len()]),
            _ => {
                return Err(Error::Contract(
                    "pseudo-view network, forward pass and gradient must all be present or all absent".into(),
                ))
            }
        };
        let views = self
            .views
            .iter()
            .zip(&fwd.views)
            .zip(grad_views)
            .zip(&feature_grads)
            .map(|(((net, f), g), fg)| net.backward(&f.cache, g, fg.as_deref()).map(|(p, _)| p))
            .collect::<Result<Vec<_>>>()?;
        Ok(MultiViewGrads {
            views,
            pseudo: pseudo_grads,
        })
    }

    /// All parameters, views first then the pseudo-view network.
    pub fn flat(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.views.iter().flat_map(ModelParams::flat).collect();
        if let Some(p) = &self.pseudo {
            out.extend(p.flat());
        }
        out
    }

    pub fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(Error::Dimension(format!(
                "flat parameter vector has {} entries, expected {}",
                flat.len(),
                self.param_count()
            )));
        }
        let mut rest = flat;
        for net in self.views.iter_mut().chain(self.pseudo.iter_mut()) {
            let (head, tail) = rest.split_at(net.len());
            net.set_flat(head)?;
            rest = tail;
        }
        Ok(())
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let entry = |p: &ModelParams| NetworkEntry {
            config: p.config.clone(),
            params: p.flat(),
        };
        Checkpoint {
            format: CHECKPOINT_FORMAT.to_string(),
            num_classes: self.num_classes(),
            views: self.views.iter().map(entry).collect(),
            pseudo: self.pseudo.as_ref().map(entry),
        }
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        if ckpt.format != CHECKPOINT_FORMAT {
            return Err(Error::Argument(format!(
                "unsupported checkpoint format {:?}",
                ckpt.format
            )));
        }
        let load = |e: &NetworkEntry| ModelParams::from_flat(&e.config, &e.params);
        let views = ckpt.views.iter().map(load).collect::<Result<Vec<_>>>()?;
        let pseudo = ckpt.pseudo.as_ref().map(load).transpose()?;
        let model = Self::from_parts(views, pseudo)?;
        if model.num_classes() != ckpt.num_classes {
            return Err(Error::Dimension(format!(
                "checkpoint declares {} classes but its networks have {}",
                ckpt.num_classes,
                model.num_classes()
            )));
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(&self.to_checkpoint())?;
        std::fs::write(path, json).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_checkpoint(&serde_json::from_str(&text)?)
    }
}

pub const CHECKPOINT_FORMAT: &str = "evifuse-checkpoint-v1";

/// On-disk model: configuration (including seed) and flat parameters of
/// every network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format: String,
    pub num_classes: usize,
    pub views: Vec<NetworkEntry>,
    pub pseudo: Option<NetworkEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkEntry {
    pub config: MlpConfig,
    pub params: Vec<f64>,
}
