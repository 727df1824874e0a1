use fedpdmc::diagnostics::{
    effective_switching_rate, ks_two_sample_test, marginals, reference_mh_sample, wasserstein1_marginal, DiagnosticsReport,
    MhConfig,
};
use fedpdmc::federated::EvalCounts;
use fedpdmc::models::data::logistic_data;
use fedpdmc::models::{GaussianModel, LogisticModel};
use fedpdmc::rng::{std_normal, stream};
use fedpdmc::{run_pdmc, trajectory_discretize, PhaseState, SamplerSpec};
use proptest::prelude::*;

fn moments(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    (m, xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n)
}

#[test]
fn zigzag_rate_on_standard_normal() {
    // E|Z|/2 = 1/sqrt(2π)
    let target = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    let spec = SamplerSpec::zigzag(1);
    let init = PhaseState::new(vec![0.0], vec![1.0]).unwrap();
    let s = run_pdmc(&GaussianModel::<f64>::standard(1), &spec, &init, 20_000.0, &mut stream(3, 1)).unwrap();
    let rate = effective_switching_rate(&s).unwrap();
    assert!((rate - target).abs() < 0.02, "{rate}");
}

#[test]
fn reference_standard_normal() {
    let chain =
        reference_mh_sample(&GaussianModel::<f64>::standard(1), &[0.0], 100_000, &MhConfig::default(), &mut stream(1, 2))
            .unwrap();
    let (m, v) = moments(&chain.marginal(0));
    assert!(m.abs() < 0.02, "{m}");
    assert!((v - 1.0).abs() < 0.05, "{v}");
    assert!((0.1..=0.5).contains(&chain.acceptance));
}

#[test]
fn reference_correlated_gaussian() {
    let r = 0.8;
    let det = 1.0 - r * r;
    let precision = vec![1.0 / det, -r / det, -r / det, 1.0 / det];
    let model = GaussianModel::new(vec![0.0, 0.0], precision).unwrap();
    let chain = reference_mh_sample(&model, &[0.0, 0.0], 100_000, &MhConfig::default(), &mut stream(2, 2)).unwrap();
    let (a, b) = (chain.marginal(0), chain.marginal(1));
    let (ma, va) = moments(&a);
    let (mb, vb) = moments(&b);
    let cov = a.iter().zip(&b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / a.len() as f64;
    assert!((va - 1.0).abs() < 0.05 && (vb - 1.0).abs() < 0.05, "{va} {vb}");
    assert!((cov - r).abs() < 0.05 * r, "{cov}");
}

#[test]
fn reference_self_consistency_on_logistic() {
    let (data, _) = logistic_data::<f64, _>(50, 2, &mut stream(5, u64::MAX));
    let model = LogisticModel::new(vec![data]).unwrap();
    let full = model.full_potential();
    let cfg = MhConfig::default();
    let a = reference_mh_sample(&full, &[0.0, 0.0], 20_000, &cfg, &mut stream(6, 1)).unwrap();
    let b = reference_mh_sample(&full, &[0.0, 0.0], 20_000, &cfg, &mut stream(6, 2)).unwrap();

    let spec = SamplerSpec::zigzag(2);
    let init = PhaseState::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
    let s = run_pdmc(&full, &spec, &init, 2_000.0, &mut stream(6, 3)).unwrap();
    let zz = marginals(&trajectory_discretize(&s, 0.1).unwrap());
    for k in 0..2 {
        let ref_ref = wasserstein1_marginal(&a.marginal(k), &b.marginal(k)).unwrap();
        let ref_zz = wasserstein1_marginal(&a.marginal(k), &zz[k]).unwrap();
        let zz_ref = wasserstein1_marginal(&b.marginal(k), &zz[k]).unwrap();
        assert!(ref_ref < 2.0 * ref_zz.max(zz_ref) + 0.02, "k={k} {ref_ref} vs {ref_zz}");
        // both samplers target the same posterior
        assert!(ref_zz < 0.1 && zz_ref < 0.1, "k={k} {ref_zz} {zz_ref}");
    }
}

#[test]
fn ess_adjusted_ks_accepts_matching_chains() {
    let spec = SamplerSpec::zigzag(1);
    let model = GaussianModel::<f64>::standard(1);
    let init = PhaseState::new(vec![0.0], vec![1.0]).unwrap();
    let run = |seed| {
        let s = run_pdmc(&model, &spec, &init, 5_000.0, &mut stream(seed, 1)).unwrap();
        marginals(&trajectory_discretize(&s, 0.05).unwrap()).remove(0)
    };
    let (a, b) = (run(1), run(2));
    let ea = fedpdmc::diagnostics::ess(&a).unwrap().ess;
    let eb = fedpdmc::diagnostics::ess(&b).unwrap().ess;
    let t = ks_two_sample_test(&a, &b, ea, eb).unwrap();
    assert!(t.passes(0.01), "{t:?}");
    let shifted: Vec<f64> = b.iter().map(|x| x + 0.5).collect();
    assert!(!ks_two_sample_test(&a, &shifted, ea, eb).unwrap().passes(0.01));
}

#[test]
fn report_json_keys() {
    let spec = SamplerSpec::zigzag(2);
    let init = PhaseState::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
    let s = run_pdmc(&GaussianModel::<f64>::standard(2), &spec, &init, 200.0, &mut stream(1, 1)).unwrap();
    let m = marginals(&trajectory_discretize(&s, 0.1).unwrap());
    let evals = EvalCounts { sequential: 4000, parallel: 1000 };
    let r = DiagnosticsReport::build(&s, &m, evals, 2, Some(&m), serde_json::json!({"seed": 1})).unwrap();
    assert!(r.w1_per_coordinate.iter().all(|&w| w == 0.0));
    assert!(r.ess_per_coordinate.iter().all(|&e| e > 0.0 && e <= m[0].len() as f64));
    assert!((r.ess_per_gradient_eval.parallel[0] / r.ess_per_gradient_eval.sequential[0] - 4.0).abs() < 1e-12);
    let v = serde_json::to_value(&r).unwrap();
    let mut keys: Vec<&String> = v.as_object().unwrap().keys().collect();
    keys.sort();
    assert_eq!(
        keys,
        [
            "ess_per_coordinate",
            "ess_per_gradient_eval",
            "event_rate",
            "gradient_evals_total",
            "w1_per_coordinate",
            "wall_metadata"
        ]
    );
}

fn sample(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = stream(seed, 7);
    (0..n).map(|_| std_normal::<f64, _>(&mut rng) * 2.0).collect()
}

proptest! {
    #[test]
    fn w1_is_a_pseudometric(s in 0u64..1000, n in 1usize..60) {
        let (a, b, c) = (sample(s, n), sample(s + 1, n), sample(s + 2, n));
        let ab = wasserstein1_marginal(&a, &b).unwrap();
        let ba = wasserstein1_marginal(&b, &a).unwrap();
        prop_assert_eq!(ab, ba);
        prop_assert!(ab >= 0.0);
        let bc = wasserstein1_marginal(&b, &c).unwrap();
        let ac = wasserstein1_marginal(&a, &c).unwrap();
        prop_assert!(ac <= ab + bc + 1e-12);
        prop_assert_eq!(wasserstein1_marginal(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn w1_translation(s in 0u64..1000, n in 1usize..40, m in 1usize..40, c in -5.0f64..5.0) {
        let a = sample(s, n);
        let b: Vec<f64> = sample(s + 1, m);
        let a2: Vec<f64> = a.iter().map(|x| x + c).collect();
        let b2: Vec<f64> = b.iter().map(|x| x + c).collect();
        let d1 = wasserstein1_marginal(&a, &b).unwrap();
        let d2 = wasserstein1_marginal(&a2, &b2).unwrap();
        prop_assert!((d1 - d2).abs() < 1e-9);
        prop_assert!((wasserstein1_marginal(&a, &a2).unwrap() - c.abs()).abs() < 1e-9);
    }
}
