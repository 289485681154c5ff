use approx::assert_abs_diff_eq;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

fn dir(a: &[f64]) -> DirichletParams {
    DirichletParams::new(a.to_vec()).unwrap()
}

fn nat(t: &[f64]) -> NaturalParams {
    NaturalParams::new(t.to_vec()).unwrap()
}

#[test]
fn params_validation() {
    assert!(matches!(DirichletParams::new(vec![1.0]), Err(Error::Dimension(_))));
    assert!(matches!(DirichletParams::new(vec![1.0, 0.0]), Err(Error::Domain(_))));
    assert!(matches!(DirichletParams::new(vec![1.0, f64::NAN]), Err(Error::Domain(_))));
    assert!(matches!(NaturalParams::new(vec![0.0, -1.0]), Err(Error::Domain(_))));
    assert!(matches!(HolderExponent::new(1.0), Err(Error::Domain(_))));
}

#[test]
fn natural_params_round_trip() {
    // Exact whenever a - 1 is representable.
    let a = dir(&[0.375, 2.5, 7.0]);
    assert_eq!(a.natural().to_concentration().unwrap(), a);
    let a = dir(&[0.3, 1e-3, 123.456]);
    for (x, y) in a.natural().to_concentration().unwrap().concentration().iter().zip(a.concentration()) {
        assert!((x - y).abs() <= f64::EPSILON * y.max(1.0));
    }
}

#[test]
fn holder_exponent_conjugacy() {
    for g in [1.1, 1.2, 1.7, 2.0, 3.5] {
        let h = HolderExponent::new(g).unwrap();
        assert!((1.0 / h.gamma() + 1.0 / h.conjugate() - 1.0).abs() <= 1e-14);
    }
    assert_eq!(HolderExponent::new(2.0).unwrap(), HolderExponent::cauchy_schwarz());
}

#[test]
fn log_normalizer_examples() {
    assert_abs_diff_eq!(log_normalizer(&nat(&[0.0, 0.0])), 0.0, epsilon = 1e-14);
    assert_abs_diff_eq!(log_normalizer(&nat(&[0.0, 0.0, 0.0])), -2f64.ln(), epsilon = 1e-12);
    // ln Γ(3) + ln Γ(1) - ln Γ(4) = ln 2 - ln 6
    assert_abs_diff_eq!(log_normalizer(&nat(&[2.0, 0.0])), -3f64.ln(), epsilon = 1e-12);
}

#[test]
fn log_normalizer_agrees_with_concentration_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let k = rng.random_range(2..8);
        let a: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..30.0)).collect();
        let s: f64 = a.iter().sum();
        let direct = a.iter().map(|&x| ln_gamma_pos(x)).sum::<f64>() - ln_gamma_pos(s);
        let f = log_normalizer(&dir(&a).natural());
        assert!((f - direct).abs() <= 1e-12 * direct.abs().max(1.0));
    }
}

#[test]
fn holder_examples() {
    let h17 = HolderExponent::new(1.7).unwrap();
    assert_abs_diff_eq!(holder_divergence(&dir(&[1.0, 1.0]), &dir(&[1.0, 1.0]), h17).unwrap(), 0.0, epsilon = 1e-15);
    let cs = holder_divergence(&dir(&[2.0, 1.0]), &dir(&[1.0, 1.0]), HolderExponent::new(2.0).unwrap()).unwrap();
    assert_abs_diff_eq!(cs, 0.5 * (4.0f64 / 3.0).ln(), epsilon = 1e-14);
    assert_abs_diff_eq!(cs, 0.143_841_036_2, epsilon = 1e-10);
    // Two-dimensional simplex quadrature of the three defining integrals,
    // evaluated in 30-digit arithmetic.
    let v = holder_divergence(&dir(&[3.0, 2.0, 4.0]), &dir(&[2.0, 2.0, 2.0]), h17).unwrap();
    assert_abs_diff_eq!(v, 0.168_567_650_131_171_4, epsilon = 1e-12);
}

#[test]
fn holder_domain_error_names_component() {
    // γ̄ = 6 at γ = 1.2; θ_q[1] = -0.5 gives 6 · -0.5 = -3.
    let err = holder_divergence(&dir(&[2.0, 2.0]), &dir(&[1.0, 0.5]), HolderExponent::new(1.2).unwrap()).unwrap_err();
    match err {
        Error::Domain(msg) => assert!(msg.contains("theta[1]"), "{msg}"),
        other => panic!("unexpected {other:?}"),
    }
    assert!(matches!(
        holder_divergence(&dir(&[2.0, 2.0]), &dir(&[1.0, 1.0, 1.0]), HolderExponent::cauchy_schwarz()),
        Err(Error::Dimension(_))
    ));
}

#[test]
fn kl_examples() {
    assert_abs_diff_eq!(kl_divergence(&dir(&[3.0, 1.0, 2.0]), &dir(&[3.0, 1.0, 2.0])).unwrap(), 0.0, epsilon = 1e-14);
    let forward = kl_divergence(&dir(&[2.0, 1.0]), &dir(&[1.0, 1.0])).unwrap();
    assert_abs_diff_eq!(forward, 2f64.ln() - 0.5, epsilon = 1e-14);
    // 1 - ln 2 by one-dimensional quadrature.
    let backward = kl_divergence(&dir(&[1.0, 1.0]), &dir(&[2.0, 1.0])).unwrap();
    assert_abs_diff_eq!(backward, 0.306_852_819_440_054_7, epsilon = 1e-14);
    assert!(backward > 0.0 && (backward - forward).abs() > 0.1);
}

#[test]
fn kl_is_nonnegative() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..1000 {
        let k = rng.random_range(2..6);
        let a: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..20.0)).collect();
        let b: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..20.0)).collect();
        assert!(kl_divergence(&dir(&a), &dir(&b)).unwrap() >= -1e-12);
    }
}

#[test]
fn cauchy_schwarz_is_symmetric_and_proper() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let h = HolderExponent::cauchy_schwarz();
    for _ in 0..500 {
        let k = rng.random_range(2..7);
        let a: Vec<f64> = (0..k).map(|_| rng.random_range(1.0..10.0)).collect();
        let b: Vec<f64> = (0..k).map(|_| rng.random_range(1.0..10.0)).collect();
        let (p, q) = (dir(&a), dir(&b));
        let pq = holder_divergence(&p, &q, h).unwrap();
        let qp = holder_divergence(&q, &p, h).unwrap();
        assert!((pq - qp).abs() <= 1e-12);
        assert_eq!(divergence(DivergenceKind::CauchySchwarz, &p, &q).unwrap().value, pq);
        assert!(holder_divergence(&p, &p, h).unwrap().abs() <= 1e-12);
    }
}

#[test]
fn divergence_dispatch() {
    let (p, q) = (dir(&[2.0, 1.0]), dir(&[1.0, 1.0]));
    let cs = divergence(DivergenceKind::CauchySchwarz, &p, &q).unwrap();
    assert_abs_diff_eq!(cs.value, 0.143_841_036_2, epsilon = 1e-10);
    assert_eq!(cs.std_error, 0.0);
    let kl = divergence(DivergenceKind::Kl, &p, &q).unwrap();
    assert_abs_diff_eq!(kl.value, 0.193_147_180_5, epsilon = 1e-10);
    let js = divergence(DivergenceKind::JensenShannonMc { samples: 20_000, seed: 1 }, &p, &p).unwrap();
    assert!(js.value.abs() <= 1e-12 + js.std_error, "{js:?}");
}

#[test]
fn jensen_shannon_is_bounded_and_matches_quadrature() {
    let (p, q) = (dir(&[2.0, 1.0]), dir(&[1.0, 3.0]));
    let js = jensen_shannon_mc(&p, &q, 200_000, 3).unwrap();
    // ∫ over [0,1] of the JS integrand.
    let exact = integrate_adaptive(
        |t| {
            let mu = [t, 1.0 - t];
            let (a, b) = (p.ln_density(&mu).exp(), q.ln_density(&mu).exp());
            let m = 0.5 * (a + b);
            let term = |x: f64| if x == 0.0 { 0.0 } else { x * (x / m).ln() };
            0.5 * (term(a) + term(b))
        },
        0.0,
        1.0,
        1e-12,
        0.0,
        200,
    )
    .value;
    assert!(js.value > 0.0 && js.value < 2f64.ln());
    assert!((js.value - exact).abs() <= 4.0 * js.std_error, "{js:?} vs {exact}");
}

#[test]
fn js_oracle_agrees_with_estimator() {
    let (p, q) = (dir(&[2.0, 1.0, 3.0]), dir(&[1.0, 3.0, 1.5]));
    let quad = oracle_js(&p, &q, OracleMethod::Quadrature, 200, 0).unwrap();
    let mc = oracle_js(&p, &q, OracleMethod::MonteCarlo, 200_000, 3).unwrap();
    let js = jensen_shannon_mc(&p, &q, 200_000, 3).unwrap();
    assert_ne!(mc.estimate, js.value);
    assert!((js.value - quad.estimate).abs() <= 4.0 * js.std_error, "{js:?} vs {quad:?}");
    assert!((mc.estimate - quad.estimate).abs() <= mc.error_bound + 1e-9, "{mc:?} vs {quad:?}");
    let same = oracle_js(&p, &p, OracleMethod::Quadrature, 200, 0).unwrap();
    assert!(same.estimate.abs() <= 1e-12);
}

#[test]
fn expected_log_likelihood_examples() {
    assert_abs_diff_eq!(expected_log_likelihood(&dir(&[1.0, 1.0]), 0).unwrap(), -1.0, epsilon = 1e-14);
    assert_abs_diff_eq!(expected_log_likelihood(&dir(&[2.0, 1.0]), 0).unwrap(), -0.5, epsilon = 1e-14);
    assert!(matches!(expected_log_likelihood(&dir(&[2.0, 1.0]), 2), Err(Error::Dimension(_))));
}

#[test]
fn expected_log_likelihood_matches_sample_average() {
    let a = dir(&[5.0, 3.0, 2.0]);
    let mut stats = RunningMoments::default();
    for point in sample(&a, 99, 1_000_000) {
        stats.push(point[1].ln());
    }
    let se = (stats.variance() / 1e6).sqrt();
    let closed = expected_log_likelihood(&a, 1).unwrap();
    assert!(closed < 0.0);
    assert!((stats.mean() - closed).abs() <= 3.0 * se, "{} vs {closed} (se {se})", stats.mean());
}

#[test]
fn sampling_contract() {
    let pts = sample(&dir(&[1.0, 1.0]), 1, 100_000);
    let m0 = pts.iter().map(|p| p[0]).sum::<f64>() / pts.len() as f64;
    assert!((m0 - 0.5).abs() <= 0.005);
    let pts = sample(&dir(&[8.0, 2.0]), 2, 100_000);
    let m0 = pts.iter().map(|p| p[0]).sum::<f64>() / pts.len() as f64;
    assert!((m0 - 0.8).abs() <= 0.005);
    for p in &pts {
        assert!(p.iter().all(|&x| x >= 0.0));
        assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }
    let a = dir(&[0.7, 3.0, 1.5]);
    assert_eq!(sample(&a, 42, 3), sample(&a, 42, 3));
    assert_ne!(sample(&a, 42, 3), sample(&a, 43, 3));
}

#[test]
fn oracle_examples() {
    let h17 = HolderExponent::new(1.7).unwrap();
    let uni = dir(&[1.0, 1.0]);
    let o = oracle_holder(&uni, &uni, h17, OracleMethod::Quadrature, 200, 0).unwrap();
    assert!(o.estimate.abs() <= 1e-10 && o.error_bound <= 1e-10, "{o:?}");

    let o = oracle_holder(&dir(&[2.0, 1.0]), &uni, HolderExponent::cauchy_schwarz(), OracleMethod::Quadrature, 200, 0).unwrap();
    assert!((o.estimate - 0.143_841_036_225_890_46).abs() <= 1e-8);
    assert!(o.error_bound <= 1e-8);

    let o = oracle_holder(&dir(&[3.0, 2.0, 4.0]), &dir(&[2.0, 2.0, 2.0]), h17, OracleMethod::Quadrature, 200, 0).unwrap();
    assert!((o.estimate - 0.168_567_650_131_171_4).abs() <= 1e-9, "{o:?}");

    assert!(matches!(
        oracle_holder(&dir(&[1.0; 4]), &dir(&[1.0; 4]), h17, OracleMethod::Quadrature, 200, 0),
        Err(Error::Unsupported(_))
    ));
}

#[test]
fn monte_carlo_oracle_agrees_with_closed_form_in_five_classes() {
    let (p, q) = (dir(&[3.0, 2.0, 4.0, 1.0, 2.0]), dir(&[2.0; 5]));
    let h = HolderExponent::new(1.7).unwrap();
    let o = oracle_holder(&p, &q, h, OracleMethod::MonteCarlo, 1_000_000, 17).unwrap();
    let closed = holder_divergence(&p, &q, h).unwrap();
    let se = o.std_error.unwrap();
    assert!((o.estimate - closed).abs() <= 3.0 * se, "{} vs {closed} (se {se})", o.estimate);
    // Deterministic for a seed.
    let again = oracle_holder(&p, &q, h, OracleMethod::MonteCarlo, 1_000, 17).unwrap();
    assert_eq!(again, oracle_holder(&p, &q, h, OracleMethod::MonteCarlo, 1_000, 17).unwrap());
}

#[test]
fn kl_oracle_matches_closed_form() {
    let (p, q) = (dir(&[2.0, 1.0]), dir(&[1.0, 1.0]));
    let o = oracle_kl(&p, &q, OracleMethod::Quadrature, 200, 0).unwrap();
    assert!((o.estimate - (2f64.ln() - 0.5)).abs() <= 1e-10);
    let (p, q) = (dir(&[2.5, 1.5, 4.0]), dir(&[1.2, 3.0, 2.0]));
    let o = oracle_kl(&p, &q, OracleMethod::Quadrature, 200, 0).unwrap();
    assert!((o.estimate - kl_divergence(&p, &q).unwrap()).abs() <= 1e-8, "{o:?}");
}

fn central_difference<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|k| {
            let mut up = x.to_vec();
            let mut dn = x.to_vec();
            up[k] += h;
            dn[k] -= h;
            (f(&up) - f(&dn)) / (2.0 * h)
        })
        .collect()
}

#[test]
fn holder_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..50 {
        let k = rng.random_range(2..6);
        let a: Vec<f64> = (0..k).map(|_| rng.random_range(1.0..8.0)).collect();
        let b: Vec<f64> = (0..k).map(|_| rng.random_range(1.0..8.0)).collect();
        let h = HolderExponent::new(rng.random_range(1.1..2.5)).unwrap();
        let (_, gp, gq) = holder_divergence_with_grad(&dir(&a), &dir(&b), h).unwrap();
        let fp = central_difference(|x| holder_divergence(&dir(x), &dir(&b), h).unwrap(), &a, 1e-6);
        let fq = central_difference(|x| holder_divergence(&dir(&a), &dir(x), h).unwrap(), &b, 1e-6);
        for (an, fd) in gp.iter().chain(&gq).zip(fp.iter().chain(&fq)) {
            assert!((an - fd).abs() <= 1e-6 * an.abs().max(1.0), "{an} vs {fd}");
        }
    }
}

#[test]
fn kl_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..50 {
        let k = rng.random_range(2..6);
        let a: Vec<f64> = (0..k).map(|_| rng.random_range(0.5..8.0)).collect();
        let b: Vec<f64> = (0..k).map(|_| rng.random_range(0.5..8.0)).collect();
        let (_, g) = kl_divergence_with_grad(&dir(&a), &dir(&b)).unwrap();
        let fd = central_difference(|x| kl_divergence(&dir(x), &dir(&b)).unwrap(), &a, 1e-6);
        for (an, f) in g.iter().zip(&fd) {
            assert!((an - f).abs() <= 1e-6 * an.abs().max(1.0), "{an} vs {f}");
        }
    }
}

#[test]
fn serde_shapes() {
    let json = serde_json::to_string(&DivergenceKind::holder(1.7).unwrap()).unwrap();
    assert_eq!(json, r#"{"kind":"holder","gamma":1.7}"#);
    let back: DivergenceKind = serde_json::from_str(&json).unwrap();
    assert_eq!(back, DivergenceKind::holder(1.7).unwrap());
    assert!(serde_json::from_str::<DivergenceKind>(r#"{"kind":"holder","gamma":0.5}"#).is_err());
    assert!(serde_json::from_str::<DirichletParams>("[1.0, -2.0]").is_err());
}
