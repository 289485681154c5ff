use std::path::Path;

use anyhow::{bail, Context, Result};
use serde_json::{json, Value};

use evifuse_core::data::save_manifest;
use evifuse_core::dirichlet::{
    divergence, jensen_shannon_mc, oracle_holder, oracle_js, oracle_kl, OracleEstimate, OracleMethod,
};
use evifuse_core::experiment::{self, DataSource, NoiseTarget};
use evifuse_core::network::MultiViewModel;
use evifuse_core::opinions::{combine_all, Opinion};
use evifuse_core::trainer::evaluate;
use evifuse_core::{DirichletParams, DivergenceKind, HolderExponent};

use crate::args::{
    DivergenceArg, DivergenceArgs, EvalArgs, FuseArgs, GenDataArgs, NoiseTargetArg, SplitArg, SweepGammaArgs,
    SweepNoiseArgs, TrainArgs,
};
use crate::config::{build, env_seed, usage};

/// Longest concentration accepted inline; longer ones go in a file.
const MAX_INLINE_DIM: usize = 16;

pub fn gen_data(args: &GenDataArgs) -> Result<Value> {
    let cfg = build(&args.experiment)?;
    let DataSource::Synthetic(mut spec) = cfg.data else {
        return Err(usage("gen-data needs a synthetic data source in the config"));
    };
    if let Some(n) = args.samples_per_class {
        spec.samples_per_class = n;
    }
    if let Some(s) = args.sigma {
        spec.sigma = vec![s; spec.num_views()];
    }
    if let Some(seed) = args.data_seed {
        spec.seed = seed;
    }
    let ds = evifuse_core::data::generate_synthetic(&spec)?;
    let manifest = save_manifest(&ds, &args.out)?;
    eprintln!("wrote {} samples to {}", ds.num_samples(), manifest.display());
    Ok(json!({
        "manifest": manifest,
        "num_samples": ds.num_samples(),
        "num_views": ds.num_views(),
        "view_dims": ds.view_dims(),
        "num_classes": ds.num_classes(),
        "class_counts": ds.class_counts(),
        "spec": spec,
    }))
}

pub fn train(args: &TrainArgs) -> Result<Value> {
    let cfg = build(&args.experiment)?;
    let out = experiment::run(&cfg)?;
    if let Some(path) = &args.out {
        out.model.save(path)?;
    }
    if let (Some(first), Some(last)) = (out.history.first(), out.history.last()) {
        eprintln!(
            "loss {:.4} -> {:.4} over {} epochs; test fused accuracy {:.4}",
            first.loss.total,
            last.loss.total,
            out.history.len(),
            out.metrics.fused_accuracy
        );
    }
    Ok(json!({
        "config": cfg,
        "history": out.history,
        "metrics": out.metrics,
        "checkpoint": args.out,
    }))
}

pub fn eval(args: &EvalArgs) -> Result<Value> {
    let cfg = build(&args.experiment)?;
    let model = MultiViewModel::load(&args.model)?;
    let ds = cfg.data.load()?;
    let part = match args.split {
        SplitArg::All => ds,
        SplitArg::Train => cfg.split(&ds)?.0,
        SplitArg::Test => cfg.split(&ds)?.1,
    };
    let metrics = evaluate(&model, &part)?;
    eprintln!("fused accuracy {:.4} on {} samples", metrics.fused_accuracy, metrics.num_samples);
    Ok(serde_json::to_value(metrics)?)
}

fn concentration(inline: &Option<Vec<f64>>, file: &Option<std::path::PathBuf>, name: &str) -> Result<DirichletParams> {
    match (inline, file) {
        (Some(v), None) => {
            if v.len() > MAX_INLINE_DIM {
                return Err(usage(format!(
                    "--{name} has {} entries; pass more than {MAX_INLINE_DIM} with --{name}-file",
                    v.len()
                )));
            }
            Ok(DirichletParams::new(v.clone())?)
        }
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            Ok(serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?)
        }
        _ => Err(usage(format!("give exactly one of --{name} and --{name}-file"))),
    }
}

pub fn divergence_cmd(args: &DivergenceArgs) -> Result<Value> {
    let p = concentration(&args.p, &args.p_file, "p")?;
    let q = concentration(&args.q, &args.q_file, "q")?;
    if p.dim() != q.dim() {
        return Err(usage(format!("p has {} entries but q has {}", p.dim(), q.dim())));
    }
    let seed = match args.seed {
        Some(s) => s,
        None => env_seed()?.unwrap_or(0),
    };
    let method = if p.dim() <= 3 {
        OracleMethod::Quadrature
    } else {
        OracleMethod::MonteCarlo
    };
    let budget = match method {
        OracleMethod::Quadrature => args.budget,
        OracleMethod::MonteCarlo => args.samples,
    };
    let exponent = |g: Option<f64>| -> Result<HolderExponent> {
        match g {
            Some(g) => Ok(HolderExponent::new(g).map_err(|e| usage(e.to_string()))?),
            None => Err(usage("--kind holder needs --gamma")),
        }
    };
    let (kind, h): (DivergenceKind, Option<HolderExponent>) = match args.kind {
        DivergenceArg::Holder => {
            let h = exponent(args.gamma)?;
            (DivergenceKind::Holder { gamma: h }, Some(h))
        }
        DivergenceArg::Cs => (DivergenceKind::CauchySchwarz, Some(HolderExponent::cauchy_schwarz())),
        DivergenceArg::Kl => (DivergenceKind::Kl, None),
        DivergenceArg::Js => (
            DivergenceKind::JensenShannonMc {
                samples: args.samples,
                seed,
            },
            None,
        ),
    };
    if args.gamma.is_some() && args.kind != DivergenceArg::Holder {
        return Err(usage("--gamma only applies to --kind holder"));
    }

    let experimental = args.kind == DivergenceArg::Js;
    if experimental {
        eprintln!("note: the Jensen-Shannon estimate is experimental (Monte Carlo only)");
    }
    let estimate = match kind {
        DivergenceKind::JensenShannonMc { samples, seed } => jensen_shannon_mc(&p, &q, samples, seed)?,
        _ => divergence(kind, &p, &q)?,
    };
    let oracle: OracleEstimate = match (args.kind, h) {
        (DivergenceArg::Holder | DivergenceArg::Cs, Some(h)) => oracle_holder(&p, &q, h, method, budget, seed)?,
        (DivergenceArg::Kl, _) => oracle_kl(&p, &q, method, budget, seed)?,
        (DivergenceArg::Js, _) => oracle_js(&p, &q, method, budget, seed)?,
        _ => unreachable!("every Hölder kind carries an exponent"),
    };
    let difference = (estimate.value - oracle.estimate).abs();
    // The closed form carries its own rounding error on top of the oracle's.
    let tolerance =
        oracle.error_bound + 3.0 * estimate.std_error + 16.0 * f64::EPSILON * (1.0 + estimate.value.abs());
    let agrees = difference <= tolerance;
    if !agrees {
        eprintln!("closed form and oracle differ by {difference:e} (tolerance {tolerance:e})");
    }
    if args.validate && !agrees {
        bail!(
            "validation failed: value {} vs oracle {} differ by {difference:e}, above the tolerance {tolerance:e}",
            estimate.value,
            oracle.estimate
        );
    }
    Ok(json!({
        "kind": kind.name(),
        "gamma": h.map(|h| h.gamma()),
        "conjugate": h.map(|h| h.conjugate()),
        "p": p,
        "q": q,
        "value": estimate.value,
        "std_error": (estimate.std_error > 0.0).then_some(estimate.std_error),
        "oracle": oracle,
        "difference": difference,
        "tolerance": tolerance,
        "agrees": agrees,
        "experimental": experimental,
    }))
}

pub fn fuse(args: &FuseArgs) -> Result<Value> {
    let path: &Path = &args.opinions;
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let opinions: Vec<Opinion> =
        serde_json::from_str(&text).with_context(|| format!("parsing opinions in {}", path.display()))?;
    Ok(serde_json::to_value(combine_all(&opinions)?)?)
}

pub fn sweep_noise(args: &SweepNoiseArgs) -> Result<Value> {
    let mut cfg = build(&args.experiment)?;
    if let Some(v) = &args.variances {
        cfg.noise.variances = v.clone();
    }
    if let Some(view) = &args.view {
        cfg.noise.view = if view == "all" {
            None
        } else {
            Some(
                view.parse()
                    .map_err(|_| usage(format!("--view takes a view index or \"all\", got {view:?}")))?,
            )
        };
    }
    if let Some(t) = args.target {
        cfg.noise.target = match t {
            NoiseTargetArg::Test => NoiseTarget::Test,
            NoiseTargetArg::TrainAndTest => NoiseTarget::TrainAndTest,
        };
    }
    if let Some(r) = args.replicates {
        cfg.noise.replicates = r;
    }
    if let Some(s) = args.noise_seed {
        cfg.noise.seed = s;
    }
    Ok(serde_json::to_value(experiment::sweep_noise(&cfg)?)?)
}

pub fn sweep_gamma(args: &SweepGammaArgs) -> Result<Value> {
    let cfg = build(&args.experiment)?;
    let grid = args.grid.clone().unwrap_or_else(|| cfg.gamma_grid.clone());
    if let Some(bad) = grid.iter().find(|g| !(**g > 1.0)) {
        return Err(usage(format!("every exponent in --grid must exceed 1, got {bad}")));
    }
    let points = experiment::sweep_gamma(&cfg, &grid)?;
    for p in &points {
        eprintln!("gamma {:.3}: fused accuracy {:.4}", p.gamma, p.fused_accuracy);
    }
    Ok(serde_json::to_value(points)?)
}
