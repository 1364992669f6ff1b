use ovbsense_core::dgp::{simulate, DgpConfig};
use ovbsense_core::dml::{
    cross_fit_nuisances, estimate_sigma2, fit_dml, fit_dml_with_folds, make_folds, riesz_att, solve_theta, DmlSettings,
    FoldAssignment,
};
use ovbsense_core::learners::{LearnerConfig, TreeParams};
use ovbsense_core::model::{Dataset, Estimand, Matrix};
use ovbsense_core::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn ridge() -> LearnerConfig {
    LearnerConfig::ridge(1.0)
}

fn logistic() -> LearnerConfig {
    LearnerConfig::logistic(0.0)
}

fn random_dataset(n: usize, seed: u64, outcome: impl Fn(&[f64], f64, &mut ChaCha8Rng) -> f64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Matrix::zeros(n, 2);
    let mut y = Vec::with_capacity(n);
    let mut d = Vec::with_capacity(n);
    for i in 0..n {
        for j in 0..2 {
            x.set(i, j, rng.sample(StandardNormal));
        }
        let di = if rng.random_bool(0.5) { 1.0 } else { 0.0 };
        let yi = outcome(x.row(i), di, &mut rng);
        d.push(di);
        y.push(yi);
    }
    Dataset::new(y, d, x, vec!["x1".into(), "x2".into()]).unwrap()
}

#[test]
fn constant_outcome_gives_constant_regressions() {
    let ds = random_dataset(400, 1, |_, _, _| 2.5);
    let folds = make_folds(400, 5, 0).unwrap();
    for cfg in [ridge(), LearnerConfig::boosted_trees(TreeParams::default())] {
        let fits = cross_fit_nuisances(&ds, &folds, &cfg, &logistic(), 0.01).unwrap();
        for (a, b) in fits.g0_hat.iter().zip(&fits.g1_hat) {
            assert!((a - 2.5).abs() < 1e-9 && (b - 2.5).abs() < 1e-9);
        }
    }
}

#[test]
fn independent_treatment_propensity_near_half() {
    let ds = random_dataset(4000, 2, |x, _, _| x[0]);
    let folds = make_folds(4000, 5, 0).unwrap();
    let fits = cross_fit_nuisances(&ds, &folds, &ridge(), &logistic(), 0.01).unwrap();
    let mean = fits.m_hat.iter().sum::<f64>() / 4000.0;
    assert!((mean - 0.5).abs() < 0.05);
    assert!(fits.m_hat.iter().all(|m| (0.01..=0.99).contains(m)));
}

#[test]
fn out_of_fold_control_regression_is_accurate() {
    let noise_sd = 1.0;
    let ds = random_dataset(3000, 3, |x, d, rng| x[0] + 0.5 * d + noise_sd * rng.sample::<f64, _>(StandardNormal));
    let folds = make_folds(3000, 5, 0).unwrap();
    let fits = cross_fit_nuisances(&ds, &folds, &ridge(), &logistic(), 0.01).unwrap();
    // oracle: g(0, x) = x1
    let se: f64 = (0..ds.n()).map(|i| (fits.g0_hat[i] - ds.x().get(i, 0)).powi(2)).sum::<f64>() / ds.n() as f64;
    assert!(se.sqrt() < 2.0 * noise_sd, "rmse vs truth {}", se.sqrt());
    assert!(se.sqrt() < 0.1);
}

#[test]
fn empty_arm_in_training_complement_is_reported() {
    let x = Matrix::new(4, 1, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
    let ds = Dataset::new(vec![1.0, 2.0, 3.0, 4.0], vec![1.0, 0.0, 0.0, 0.0], x, vec!["x".into()]).unwrap();
    let folds = FoldAssignment::from_labels(vec![0, 0, 1, 1], 2, 0).unwrap();
    let err = cross_fit_nuisances(&ds, &folds, &ridge(), &logistic(), 0.01).unwrap_err();
    assert_eq!(err, Error::EmptyArmInFold { fold: 0, arm: "treated" });
    assert!(err.to_string().contains("fold 0"));
}

#[test]
fn unconfounded_constant_effect_recovered() {
    let sim = simulate(&DgpConfig::reference(5000, 17)).unwrap();
    for est in [Estimand::att(), Estimand::ate()] {
        let fit = fit_dml(&sim.ds, &est, &DmlSettings::default()).unwrap();
        let e = &fit.estimate;
        assert!((e.theta_hat - 0.5).abs() < 3.0 * e.se, "{:?}: {} ± {}", est.kind, e.theta_hat, e.se);
        assert!(e.ci.0 < 0.5 && 0.5 < e.ci.1);
    }
}

#[test]
fn boosted_trees_pipeline_recovers_effect() {
    let sim = simulate(&DgpConfig::reference(4000, 8)).unwrap();
    let settings = DmlSettings {
        learner_g: LearnerConfig::boosted_trees(TreeParams { n_trees: 200, ..TreeParams::default() }),
        learner_m: LearnerConfig::boosted_trees(TreeParams::default()),
        ..DmlSettings::default()
    };
    let e = fit_dml(&sim.ds, &Estimand::att(), &settings).unwrap().estimate;
    assert!((e.theta_hat - 0.5).abs() < 3.0 * e.se, "{} ± {}", e.theta_hat, e.se);
}

#[test]
fn residual_variance_estimates_noise() {
    let ds = random_dataset(10_000, 4, |x, d, rng| x[0] - x[1] + d + 2.0 * rng.sample::<f64, _>(StandardNormal));
    let folds = make_folds(ds.n(), 5, 1).unwrap();
    let fits = cross_fit_nuisances(&ds, &folds, &ridge(), &logistic(), 0.01).unwrap();
    let (sigma2, psi) = estimate_sigma2(&ds, &fits).unwrap();
    assert!((sigma2 - 4.0).abs() < 0.2, "{sigma2}");
    assert!(psi.iter().sum::<f64>().abs() / ds.n() as f64 <= 1e-10 * sigma2);
}

#[test]
fn corrupting_a_fold_only_moves_other_rows() {
    let ds = random_dataset(500, 5, |x, d, rng| x[0] + d + 0.3 * rng.sample::<f64, _>(StandardNormal));
    let folds = make_folds(ds.n(), 5, 3).unwrap();
    let base = cross_fit_nuisances(&ds, &folds, &ridge(), &logistic(), 0.01).unwrap();

    let target = 2;
    let y: Vec<f64> =
        (0..ds.n()).map(|i| if folds.fold_of()[i] == target { ds.y()[i] + 50.0 } else { ds.y()[i] }).collect();
    let d: Vec<f64> = ds.d().iter().map(|&v| f64::from(v)).collect();
    let corrupted = Dataset::new(y, d, ds.x().clone(), ds.covariate_names().to_vec()).unwrap();
    let after = cross_fit_nuisances(&corrupted, &folds, &ridge(), &logistic(), 0.01).unwrap();
    for i in 0..ds.n() {
        let same = base.g0_hat[i] == after.g0_hat[i] && base.g1_hat[i] == after.g1_hat[i];
        if folds.fold_of()[i] == target {
            assert!(same, "row {i} in the corrupted fold changed");
        } else {
            assert!(!same, "row {i} trained on corrupted labels did not change");
        }
    }
}

#[test]
fn relabelling_folds_leaves_estimate_unchanged() {
    let sim = simulate(&DgpConfig::confounded(1200, 0.5, 0.5, 6)).unwrap();
    let folds = make_folds(sim.ds.n(), 4, 2).unwrap();
    let relabelled = FoldAssignment::from_labels(folds.fold_of().iter().map(|f| 3 - f).collect(), 4, 2).unwrap();
    for est in [Estimand::att(), Estimand::ate()] {
        let settings = DmlSettings::default();
        let a = fit_dml_with_folds(&sim.ds, &est, &settings, &folds).unwrap();
        let b = fit_dml_with_folds(&sim.ds, &est, &settings, &relabelled).unwrap();
        assert!((a.estimate.theta_hat - b.estimate.theta_hat).abs() < 1e-12);
    }
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let sim = simulate(&DgpConfig::reference(1500, 9)).unwrap();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| fit_dml(&sim.ds, &Estimand::att(), &DmlSettings::default()).unwrap())
    };
    let (a, b) = (run(1), run(4));
    assert_eq!(a.estimate, b.estimate);
    assert_eq!(a.sensitivity, b.sensitivity);
}

#[test]
fn psi_centred_at_root() {
    let sim = simulate(&DgpConfig::confounded(2000, 0.7, 0.3, 10)).unwrap();
    for est in [Estimand::att(), Estimand::ate()] {
        let fit = fit_dml(&sim.ds, &est, &DmlSettings::default()).unwrap();
        let e = solve_theta(&sim.ds, &fit.fits, &est).unwrap();
        let n = e.psi.len() as f64;
        let mean = e.psi.iter().sum::<f64>() / n;
        let sd = (e.psi.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / n).sqrt();
        assert!(mean.abs() <= 1e-10 * sd);
    }
}

#[test]
fn att_riesz_has_mean_zero_with_true_propensity() {
    let n = 20_000;
    let cfg = DgpConfig::reference(n, 31);
    let sim = simulate(&cfg).unwrap();
    let p = sim.ds.treated_share();
    let alpha: Vec<f64> = (0..n)
        .map(|i| riesz_att(sim.ds.treated(i), cfg.propensity_given_x(sim.ds.x().row(i)).unwrap(), p).unwrap())
        .collect();
    let mean = alpha.iter().sum::<f64>() / n as f64;
    let sd = (alpha.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    assert!(mean.abs() < 3.0 / (n as f64).sqrt() * sd, "{mean} vs sd {sd}");
}
