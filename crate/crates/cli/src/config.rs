//! Turning `--config` plus explicit flags into an experiment config.

use std::fmt;
use std::path::Path;

use anyhow::{Context, Result};
use evifuse_core::experiment::{DataSource, ExperimentConfig};
use evifuse_core::DivergenceKind;

use crate::args::{ExperimentArgs, RegularizerArg};

/// Environment variable holding the default seed.
pub const SEED_ENV: &str = "EVIFUSE_SEED";

/// A problem with how the command was invoked; exits with status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

pub fn env_seed() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| usage(format!("{SEED_ENV}={v:?} is not a non-negative integer"))),
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(usage(format!("{SEED_ENV}: {e}"))),
    }
}

fn load_config(path: &Path, env: Option<u64>) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    // A config that does not parse is a bad invocation, like an unknown flag.
    let raw: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let mut cfg = ExperimentConfig::from_file(path).map_err(|e| match e {
        evifuse_core::Error::Json(_) => usage(format!("{}: {e}", path.display())),
        other => other.into(),
    })?;
    if raw.pointer("/train/seed").is_none() {
        if let Some(seed) = env {
            cfg.train.seed = seed;
        }
    }
    Ok(cfg)
}

/// Precedence, lowest first: built-in toy task or config file, then
/// `EVIFUSE_SEED` when the config sets no seed, then explicit flags.
pub fn build(args: &ExperimentArgs) -> Result<ExperimentConfig> {
    let env = env_seed()?;
    let mut cfg = match &args.config {
        Some(path) => load_config(path, env)?,
        None => ExperimentConfig::toy(env.unwrap_or(0)),
    };
    if let Some(path) = &args.data {
        cfg.data = DataSource::Manifest(path.clone());
    }
    if let Some(seed) = args.seed {
        cfg.train.seed = seed;
    }
    let t = &mut cfg.train;
    if let Some(v) = args.epochs {
        t.epochs = v;
    }
    if let Some(v) = args.batch_size {
        t.batch_size = v;
    }
    if let Some(v) = args.learning_rate {
        t.learning_rate = v;
    }
    if let Some(v) = args.weight_decay {
        t.weight_decay = v;
    }
    if let Some(v) = args.t_anneal {
        t.anneal.t_anneal = v;
    }
    t.divergence = regularizer(t.divergence, args.regularizer, args.gamma)?;
    if let Some(v) = args.test_fraction {
        cfg.test_fraction = v;
    }
    if let Some(h) = &args.hidden {
        cfg.hidden_dims = h.clone();
    }
    if args.no_pseudo {
        cfg.pseudo_hidden = None;
    }
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    Ok(cfg)
}

fn regularizer(current: DivergenceKind, kind: Option<RegularizerArg>, gamma: Option<f64>) -> Result<DivergenceKind> {
    let holder = |g: f64| DivergenceKind::holder(g).map_err(|e| usage(e.to_string()));
    match (kind, gamma) {
        (None, None) => Ok(current),
        (Some(RegularizerArg::Holder), Some(g)) | (None, Some(g)) => holder(g),
        (Some(RegularizerArg::Holder), None) => match current {
            DivergenceKind::Holder { .. } => Ok(current),
            _ => holder(1.7),
        },
        (Some(RegularizerArg::Kl), None) => Ok(DivergenceKind::Kl),
        (Some(RegularizerArg::Cs), None) => Ok(DivergenceKind::CauchySchwarz),
        (Some(_), Some(_)) => Err(usage("--gamma only applies to --regularizer holder")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::Parser;

    use crate::args::{Cli, Command};

    fn experiment(argv: &[&str]) -> ExperimentArgs {
        let mut full = vec!["evifuse", "train"];
        full.extend_from_slice(argv);
        match Cli::try_parse_from(full).unwrap().command {
            Command::Train(t) => t.experiment,
            _ => unreachable!(),
        }
    }

    #[test]
    fn flags_override_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"data": {"manifest": "m.json"}, "train": {"epochs": 7, "seed": 3}, "hidden_dims": [4]}"#).unwrap();
        let p = path.to_str().unwrap();

        let cfg = build(&experiment(&["--config", p])).unwrap();
        assert_eq!((cfg.train.epochs, cfg.train.seed, cfg.hidden_dims.clone()), (7, 3, vec![4]));

        let cfg = build(&experiment(&["--config", p, "--epochs", "2", "--seed", "9", "--hidden", "5,6"])).unwrap();
        assert_eq!((cfg.train.epochs, cfg.train.seed, cfg.hidden_dims), (2, 9, vec![5, 6]));
    }

    #[test]
    fn regularizer_flags() {
        let h17 = DivergenceKind::holder(1.7).unwrap();
        assert_eq!(regularizer(h17, None, None).unwrap(), h17);
        assert_eq!(
            regularizer(DivergenceKind::Kl, None, Some(1.5)).unwrap(),
            DivergenceKind::holder(1.5).unwrap()
        );
        assert_eq!(
            regularizer(h17, Some(RegularizerArg::Cs), None).unwrap(),
            DivergenceKind::CauchySchwarz
        );
        assert_eq!(regularizer(DivergenceKind::Kl, Some(RegularizerArg::Holder), None).unwrap(), h17);
        let err = regularizer(h17, Some(RegularizerArg::Kl), Some(1.5)).unwrap_err();
        assert!(err.downcast_ref::<UsageError>().is_some());
        let err = regularizer(h17, None, Some(0.9)).unwrap_err();
        assert!(err.downcast_ref::<UsageError>().is_some());
    }

    #[test]
    fn invalid_values_are_usage_errors() {
        let err = build(&experiment(&["--test-fraction", "1.5"])).unwrap_err();
        assert!(err.downcast_ref::<UsageError>().is_some());
        let err = build(&experiment(&["--batch-size", "0"])).unwrap_err();
        assert!(err.downcast_ref::<UsageError>().is_some());
    }

    #[test]
    fn relative_manifest_resolves_against_config_dir() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"data": {"manifest": "d/manifest.json"}}"#).unwrap();
        let cfg = build(&experiment(&["--config", path.to_str().unwrap()])).unwrap();
        assert_eq!(cfg.data, DataSource::Manifest(dir.path().join("d/manifest.json")));
    }
}
