//! End-to-end experiment configuration and the noise and Hölder-exponent
//! sweeps built on it.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{generate_synthetic, inject_noise_mirrored, load_manifest, split, MultiViewDataset, SyntheticSpec};
use crate::dirichlet::DivergenceKind;
use crate::error::{Error, Result};
use crate::network::MultiViewModel;
use crate::trainer::{evaluate, train, Architecture, EpochRecord, Metrics, TrainConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    Synthetic(SyntheticSpec),
    /// Path to a dataset manifest, relative to the config file when loaded
    /// through [`ExperimentConfig::from_file`].
    Manifest(PathBuf),
}

impl DataSource {
    pub fn load(&self) -> Result<MultiViewDataset> {
        match self {
            Self::Synthetic(spec) => generate_synthetic(spec),
            Self::Manifest(path) => load_manifest(path),
        }
    }
}

/// Which split receives the injected noise in a noise sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseTarget {
    /// Train on clean data, evaluate on noisy test data.
    #[default]
    Test,
    /// Corrupt the whole dataset before splitting and training.
    TrainAndTest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    /// Noise variances σ², not standard deviations.
    #[serde(default = "default_variances")]
    pub variances: Vec<f64>,
    /// View to corrupt; `None` corrupts every view.
    /// View to corrupt; `null` corrupts every view.
    #[serde(default = "default_noise_view")]
    pub view: Option<usize>,
    #[serde(default)]
    pub target: NoiseTarget,
    #[serde(default)]
    pub seed: u64,
    /// Number of mirrored noise pairs `(+σz, -σz)` averaged per variance;
    /// pair `r` uses seed `seed + r`.
    #[serde(default = "default_replicates")]
    pub replicates: usize,
}

fn default_noise_view() -> Option<usize> {
    Some(1)
}

fn default_replicates() -> usize {
    4
}

fn default_variances() -> Vec<f64> {
    vec![0.0, 0.01, 0.02, 0.05]
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            variances: default_variances(),
            view: default_noise_view(),
            target: NoiseTarget::default(),
            seed: 0,
            replicates: default_replicates(),
        }
    }
}

fn default_test_fraction() -> f64 {
    0.3
}

fn default_hidden() -> Vec<usize> {
    vec![16]
}

fn default_pseudo_hidden() -> Option<Vec<usize>> {
    Some(vec![16])
}

fn default_gamma_grid() -> Vec<f64> {
    vec![1.2, 1.5, 1.7, 1.9, 2.0]
}

/// Everything needed to reproduce a run. `train.seed` drives the split, the
/// network initialisation and the batch order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub data: DataSource,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    #[serde(default = "default_hidden")]
    pub hidden_dims: Vec<usize>,
    /// Hidden widths of the pseudo-view network; `null` disables it.
    #[serde(default = "default_pseudo_hidden")]
    pub pseudo_hidden: Option<Vec<usize>>,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default = "default_gamma_grid")]
    pub gamma_grid: Vec<f64>,
}

impl ExperimentConfig {
    /// The complementary-view synthetic task with default training settings.
    pub fn toy(seed: u64) -> Self {
        Self {
            data: DataSource::Synthetic(SyntheticSpec::complementary_toy(seed)),
            test_fraction: default_test_fraction(),
            hidden_dims: default_hidden(),
            pseudo_hidden: default_pseudo_hidden(),
            train: TrainConfig {
                seed,
                ..TrainConfig::default()
            },
            noise: NoiseConfig {
                seed,
                ..NoiseConfig::default()
            },
            gamma_grid: default_gamma_grid(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Parse a config file, resolving a relative manifest path against the
    /// file's directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::from_json(&text)?;
        if let DataSource::Manifest(p) = &mut cfg.data {
            if p.is_relative() {
                *p = path.parent().unwrap_or(Path::new("")).join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::Argument(format!(
                "test_fraction must lie in (0, 1), got {}",
                self.test_fraction
            )));
        }
        self.train.validate()
    }

    pub fn architecture(&self, ds: &MultiViewDataset) -> Result<Architecture> {
        Architecture::for_dataset(ds, &self.hidden_dims, self.pseudo_hidden.clone(), self.train.seed)
    }

    pub fn split(&self, ds: &MultiViewDataset) -> Result<(MultiViewDataset, MultiViewDataset)> {
        split(ds, self.test_fraction, self.train.seed)
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub model: MultiViewModel,
    pub history: Vec<EpochRecord>,
    pub metrics: Metrics,
}

impl RunOutput {
    pub fn loss_decreased(&self) -> bool {
        match (self.history.first(), self.history.last()) {
            (Some(a), Some(b)) => b.loss.total < a.loss.total,
            _ => false,
        }
    }
}

fn run_on(cfg: &ExperimentConfig, ds: &MultiViewDataset) -> Result<RunOutput> {
    let (train_ds, test_ds) = cfg.split(ds)?;
    let arch = cfg.architecture(ds)?;
    let (model, history) = train(&train_ds, &arch, &cfg.train)?;
    let metrics = evaluate(&model, &test_ds)?;
    Ok(RunOutput { model, history, metrics })
}

/// Load, split, train and evaluate on the held-out part.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    run_on(cfg, &cfg.data.load()?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoisePoint {
    pub variance: f64,
    pub sigma: f64,
    pub fused_accuracy: f64,
    pub mean_uncertainty: f64,
    pub per_view_accuracy: Vec<f64>,
}

/// Every noisy copy of `ds` evaluated at one variance.
fn noisy_copies(ds: &MultiViewDataset, noise: &NoiseConfig, sigma: f64) -> Result<Vec<MultiViewDataset>> {
    let mut out = Vec::with_capacity(2 * noise.replicates);
    for r in 0..noise.replicates {
        let (plus, minus) = inject_noise_mirrored(ds, noise.view, sigma, noise.seed.wrapping_add(r as u64))?;
        out.push(plus);
        out.push(minus);
    }
    Ok(out)
}

fn mean_point(variance: f64, metrics: &[Metrics]) -> NoisePoint {
    let n = metrics.len() as f64;
    let views = metrics[0].per_view_accuracy.len();
    NoisePoint {
        variance,
        sigma: variance.sqrt(),
        fused_accuracy: metrics.iter().map(|m| m.fused_accuracy).sum::<f64>() / n,
        mean_uncertainty: metrics.iter().map(|m| m.mean_fused_uncertainty).sum::<f64>() / n,
        per_view_accuracy: (0..views)
            .map(|v| metrics.iter().map(|m| m.per_view_accuracy[v]).sum::<f64>() / n)
            .collect(),
    }
}

/// Fused accuracy and mean fused uncertainty as Gaussian noise of each
/// variance in `cfg.noise.variances` is injected, averaged over mirrored
/// noise pairs. The same noise draws are scaled across the sweep.
pub fn sweep_noise(cfg: &ExperimentConfig) -> Result<Vec<NoisePoint>> {
    cfg.validate()?;
    let noise = &cfg.noise;
    if noise.replicates == 0 {
        return Err(Error::Argument("noise sweep needs at least one replicate".into()));
    }
    if let Some(bad) = noise.variances.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
        return Err(Error::Argument(format!("noise variance must be finite and >= 0, got {bad}")));
    }
    let ds = cfg.data.load()?;
    match noise.target {
        NoiseTarget::Test => {
            let (train_ds, test_ds) = cfg.split(&ds)?;
            let (model, _) = train(&train_ds, &cfg.architecture(&ds)?, &cfg.train)?;
            noise
                .variances
                .iter()
                .map(|&v| {
                    let metrics = noisy_copies(&test_ds, noise, v.sqrt())?
                        .iter()
                        .map(|d| evaluate(&model, d))
                        .collect::<Result<Vec<_>>>()?;
                    Ok(mean_point(v, &metrics))
                })
                .collect()
        }
        NoiseTarget::TrainAndTest => noise
            .variances
            .iter()
            .map(|&v| {
                let metrics = noisy_copies(&ds, noise, v.sqrt())?
                    .iter()
                    .map(|d| run_on(cfg, d).map(|o| o.metrics))
                    .collect::<Result<Vec<_>>>()?;
                Ok(mean_point(v, &metrics))
            })
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaPoint {
    pub gamma: f64,
    pub fused_accuracy: f64,
    pub mean_uncertainty: f64,
    pub first_epoch_loss: f64,
    pub final_epoch_loss: f64,
    pub loss_decreased: bool,
}

/// Retrain with a Hölder regulariser at every exponent in `grid`, keeping
/// everything else (data, split, seeds) fixed.
pub fn sweep_gamma(cfg: &ExperimentConfig, grid: &[f64]) -> Result<Vec<GammaPoint>> {
    cfg.validate()?;
    let ds = cfg.data.load()?;
    grid.iter()
        .map(|&gamma| {
            let mut c = cfg.clone();
            c.train.divergence = DivergenceKind::holder(gamma)?;
            let out = run_on(&c, &ds)?;
            Ok(GammaPoint {
                gamma,
                fused_accuracy: out.metrics.fused_accuracy,
                mean_uncertainty: out.metrics.mean_fused_uncertainty,
                first_epoch_loss: out.history.first().map_or(f64::NAN, |r| r.loss.total),
                final_epoch_loss: out.history.last().map_or(f64::NAN, |r| r.loss.total),
                loss_decreased: out.loss_decreased(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::toy(3);
        if let DataSource::Synthetic(s) = &mut cfg.data {
            s.samples_per_class = 30;
        }
        cfg.train.epochs = 6;
        cfg
    }

    #[test]
    fn config_defaults_and_round_trip() {
        let cfg = ExperimentConfig::from_json(r#"{"data": {"manifest": "m.json"}}"#).unwrap();
        assert_eq!(cfg.test_fraction, 0.3);
        assert_eq!(cfg.train, TrainConfig::default());
        assert_eq!(cfg.train.divergence, DivergenceKind::holder(1.7).unwrap());
        assert_eq!(cfg.noise.variances, vec![0.0, 0.01, 0.02, 0.05]);
        assert_eq!(cfg.noise, NoiseConfig::default());

        let partial = r#"{"data": {"manifest": "m.json"}, "noise": {"replicates": 2}}"#;
        assert_eq!(ExperimentConfig::from_json(partial).unwrap().noise.view, Some(1));
        let all = r#"{"data": {"manifest": "m.json"}, "noise": {"view": null}}"#;
        assert_eq!(ExperimentConfig::from_json(all).unwrap().noise.view, None);

        let toy = ExperimentConfig::toy(5);
        let back = ExperimentConfig::from_json(&serde_json::to_string(&toy).unwrap()).unwrap();
        assert_eq!(back, toy);

        assert!(ExperimentConfig::from_json(r#"{"data": {"manifest": "m"}, "bogus": 1}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"data": {"manifest": "m"}, "train": {"epoch": 3}}"#).is_err());
    }

    #[test]
    fn manifest_path_is_relative_to_config() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        std::fs::write(&path, r#"{"data": {"manifest": "sub/m.json"}}"#).unwrap();
        let cfg = ExperimentConfig::from_file(&path).unwrap();
        assert_eq!(cfg.data, DataSource::Manifest(dir.path().join("sub/m.json")));
    }

    #[test]
    fn run_is_reproducible() {
        let a = run(&small()).unwrap();
        let b = run(&small()).unwrap();
        assert_eq!(a.metrics, b.metrics);
        assert_eq!(a.model, b.model);
    }

    #[test]
    fn sweeps_report_one_point_per_setting() {
        let cfg = small();
        let noise = sweep_noise(&cfg).unwrap();
        assert_eq!(noise.len(), 4);
        assert_eq!(noise[2].sigma, 0.02f64.sqrt());
        let gammas = sweep_gamma(&cfg, &[1.5, 2.0]).unwrap();
        assert_eq!(gammas.iter().map(|g| g.gamma).collect::<Vec<_>>(), vec![1.5, 2.0]);
        assert_eq!(gammas, sweep_gamma(&cfg, &[1.5, 2.0]).unwrap());
        assert!(sweep_gamma(&cfg, &[1.0]).is_err());
    }
}
