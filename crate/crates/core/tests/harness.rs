use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, StandardNormal};
use stabsim::bounds::TheoremId;
use stabsim::harness::*;
use stabsim::operators::{ModelSpec, ObservableSpec};

fn config(model: NoiseModel, delta: f64) -> ExperimentConfig {
    ExperimentConfig {
        model: ModelSpec::tfim_chain(3, 1.0, 0.9, 0.5),
        observable: ObservableSpec::single(vec![0], 'Z'),
        initial_state: InitialState::default(),
        noise: NoiseConfig {
            model,
            delta,
            lambda: None,
            m: 1,
            ensemble: Default::default(),
            dt: None,
            n_grid: None,
            tol: 1e-8,
            trajectories: 50,
            fixed_directions: false,
        },
        grid: Grid { t: vec![0.5, 1.0], n: vec![8], ..Default::default() },
        trials: 3,
        master_seed: 7,
        theorems: vec![],
        worst_case: false,
    }
}

const ALL_NOISY: [NoiseModel; 7] = [
    NoiseModel::M1,
    NoiseModel::M2,
    NoiseModel::DiscreteIto,
    NoiseModel::AnalogConstant,
    NoiseModel::GaussianProcess,
    NoiseModel::WhiteNoise,
    NoiseModel::Lindblad,
];

#[test]
fn zero_noise_trials_match_the_reference() {
    for model in ALL_NOISY {
        let mut cfg = config(model, 0.0);
        cfg.grid.n = vec![1 << 14];
        if model.as_str() == "gaussian_process" {
            cfg.noise.lambda = Some(0.5);
        }
        let sweep = run_sweep(&cfg, &SweepOptions::default()).unwrap();
        for rec in &sweep.records {
            let s = rec.sample.as_ref().unwrap_or_else(|| panic!("{model:?}: {:?}", rec.error));
            // the product formula still carries a tiny Trotter error
            assert!(s.delta_rho <= 1e-8, "{model:?}: {}", s.delta_rho);
        }
        assert!(audit_bounds(&sweep).violations.is_empty());
    }
}

#[test]
fn trials_are_deterministic_and_distinct() {
    for model in ALL_NOISY {
        let cfg = config(model, 0.05);
        let a = run_trial(&cfg, 1, 2).unwrap();
        let b = run_trial(&cfg, 1, 2).unwrap();
        assert_eq!(a, b, "{model:?}");
        if !matches!(model, NoiseModel::Lindblad) {
            let c = run_trial(&cfg, 1, 0).unwrap();
            assert_ne!(a.delta_rho, c.delta_rho, "{model:?}");
        }
    }
}

#[test]
fn single_point_sweep_reduces_to_run_trial() {
    let mut cfg = config(NoiseModel::M1, 0.1);
    cfg.grid.t = vec![1.0];
    cfg.trials = 1;
    let sweep = run_sweep(&cfg, &SweepOptions::default()).unwrap();
    assert_eq!(sweep.records.len(), 1);
    assert_eq!(sweep.records[0].sample.as_ref().unwrap(), &run_trial(&cfg, 0, 0).unwrap());
}

#[test]
fn schedule_does_not_change_results() {
    let cfg = config(NoiseModel::WhiteNoise, 0.1);
    let one = run_sweep(&cfg, &SweepOptions { threads: Some(1), ..Default::default() }).unwrap();
    let many = run_sweep(&cfg, &SweepOptions { threads: Some(4), ..Default::default() }).unwrap();
    let strip = |s: &SweepResult| s.records.iter().map(|r| (r.point, r.trial, r.sample.clone())).collect::<Vec<_>>();
    assert_eq!(strip(&one), strip(&many));
    assert_eq!(one.summaries, many.summaries);
}

#[test]
fn standard_error_shrinks_with_trial_count() {
    let mut cfg = config(NoiseModel::M1, 0.2);
    cfg.grid.t = vec![1.0];
    cfg.trials = 250;
    let small = run_sweep(&cfg, &SweepOptions::default()).unwrap();
    cfg.trials = 1000;
    let large = run_sweep(&cfg, &SweepOptions::default()).unwrap();
    let ratio = small.summaries[0].delta_rho.stderr / large.summaries[0].delta_rho.stderr;
    assert!((ratio - 2.0).abs() <= 0.6, "stderr ratio {ratio}");
}

#[test]
fn csv_and_resume_are_byte_stable() {
    let cfg = config(NoiseModel::M2, 0.05);
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_sweep_to_dir(&cfg, a.path(), &SweepOptions::default()).unwrap();
    // interrupted run: keep two records and a torn line
    let full = std::fs::read_to_string(a.path().join("results.jsonl")).unwrap();
    let mut lines: Vec<&str> = full.lines().collect();
    lines.truncate(2);
    let partial = format!("{}\n{{\"point\":", lines.join("\n"));
    std::fs::write(b.path().join("results.jsonl"), partial).unwrap();
    let resumed = run_sweep_to_dir(&cfg, b.path(), &SweepOptions::default()).unwrap();
    assert_eq!(resumed.records.len(), 6);
    let csv_a = std::fs::read(a.path().join("results.csv")).unwrap();
    let csv_b = std::fs::read(b.path().join("results.csv")).unwrap();
    assert_eq!(csv_a, csv_b);
    let header = String::from_utf8(csv_a).unwrap();
    assert!(header.starts_with(&CSV_COLUMNS.join(",")));

    let mut other = cfg.clone();
    other.master_seed += 1;
    assert!(run_sweep_to_dir(&other, a.path(), &SweepOptions::default()).is_err());
}

#[test]
fn failed_trials_are_recorded() {
    let mut cfg = config(NoiseModel::WhiteNoise, 0.1);
    cfg.noise.dt = Some(-1.0);
    cfg.trials = 2;
    let sweep = run_sweep(&cfg, &SweepOptions::default()).unwrap();
    assert_eq!(sweep.records.len(), 4);
    assert!(sweep.records.iter().all(|r| r.sample.is_none() && r.error.is_some()));
    assert_eq!(sweep.summaries[0].failures, 2);
}

#[test]
fn invalid_configs_are_rejected() {
    let mut cfg = config(NoiseModel::M1, 0.1);
    cfg.grid.t.clear();
    assert!(Experiment::new(cfg).is_err());
    let mut cfg = config(NoiseModel::M1, 0.1);
    cfg.trials = 0;
    assert!(Experiment::new(cfg).is_err());
    let mut cfg = config(NoiseModel::M1, 0.1);
    cfg.grid.n.clear();
    assert!(Experiment::new(cfg).is_err());
    let text = config(NoiseModel::M1, 0.1).to_json().replace("\"trials\"", "\"trails\"");
    assert!(ExperimentConfig::from_json(&text).is_err());
}

#[test]
fn overrides_are_type_checked() {
    let cfg = config(NoiseModel::M1, 0.1);
    let o = cfg.with_overrides(&["trials=2".into(), "noise.delta=0.3".into(), "grid.t=[2.0]".into()]).unwrap();
    assert_eq!(o.trials, 2);
    assert_eq!(o.noise.delta, 0.3);
    assert_eq!(o.grid.t, vec![2.0]);
    assert!(cfg.with_overrides(&["trials=many".into()]).is_err());
    assert!(cfg.with_overrides(&["bogus=1".into()]).is_err());
    assert!(cfg.with_overrides(&["trials".into()]).is_err());
}

#[test]
fn config_round_trips() {
    for model in ALL_NOISY {
        let mut cfg = config(model, 0.01);
        cfg.grid.lambda = vec![Some(0.1), None];
        cfg.theorems = vec![TheoremId::T4, TheoremId::Trotter];
        let back = ExperimentConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.to_json(), cfg.to_json());
    }
}

#[test]
fn default_theorems_follow_the_noise_model() {
    let mut cfg = config(NoiseModel::M1, 0.1);
    assert_eq!(cfg.theorem_ids(), vec![TheoremId::T6]);
    cfg.worst_case = true;
    assert_eq!(cfg.theorem_ids(), vec![TheoremId::T2]);
    cfg.noise.model = NoiseModel::None;
    assert_eq!(cfg.theorem_ids(), vec![TheoremId::Trotter]);
}

#[test]
fn worst_case_probes_respect_the_analog_bound() {
    let mut cfg = config(NoiseModel::AnalogConstant, 0.01);
    cfg.worst_case = true;
    cfg.grid = Grid { t: vec![0.5, 1.0, 2.0], ..Default::default() };
    cfg.trials = 6;
    let sweep = run_sweep(&cfg, &SweepOptions::default()).unwrap();
    for rec in &sweep.records {
        let s = rec.sample.as_ref().unwrap();
        assert!(s.delta_wc.unwrap() >= s.delta_rho - 1e-12);
    }
    let audit = audit_bounds(&sweep);
    assert!(audit.violations.is_empty());
    assert_eq!(audit.checked, 3);
}

#[test]
fn m1_at_balanced_trotter_number_stays_below_its_bound() {
    let mut cfg = config(NoiseModel::M1, 0.1);
    cfg.grid = Grid { t: vec![1.0], n: vec![8], ..Default::default() };
    let exp = Experiment::new(cfg.clone()).unwrap();
    let params = exp.context(&exp.points[0]).unwrap().bound_params().unwrap();
    let n = stabsim::bounds::optimal_params(TheoremId::T2, &params, Some(3)).unwrap().n_opt.unwrap();
    cfg.grid.n = vec![n];
    cfg.trials = 200;
    let sweep = run_sweep(&cfg, &SweepOptions::default()).unwrap();
    let rhs = sweep.summaries[0].bounds[0].rhs;
    assert_eq!(sweep.summaries[0].bounds[0].theorem, TheoremId::T6);
    let below = sweep.records.iter().filter(|r| r.sample.as_ref().unwrap().delta_rho <= rhs).count();
    assert!(below * 100 >= 99 * cfg.trials, "{below} of {} below {rhs}", cfg.trials);
}

#[test]
fn pauli_white_noise_exceeds_the_halved_variance_form() {
    // with X² = I every direction contributes δ²t to E‖ψ′−ψ‖², twice the
    // per-direction share in δ²tm|Θ|/2; GUE-normalized directions have
    // E⟨X²⟩ < 1/2 and stay below it
    let (delta, t) = (0.1, 1.0);
    let mut cfg = config(NoiseModel::WhiteNoise, delta);
    cfg.grid = Grid { t: vec![t], ..Default::default() };
    cfg.trials = 400;
    let theta = 2.0;
    let halved = delta * delta * t * theta / 2.0;
    for (ensemble, lo, hi) in [
        (stabsim::operators::EnsembleKind::PauliRademacher, 1.8 * halved, 2.0 * halved),
        (stabsim::operators::EnsembleKind::GueNormalized, 0.0, halved),
    ] {
        cfg.noise.ensemble = ensemble;
        let sweep = run_sweep(&cfg, &SweepOptions::default()).unwrap();
        let hs = sweep.summaries[0].hs_squared.as_ref().unwrap();
        assert!(hs.mean - 3.0 * hs.stderr <= hi && hs.mean + 3.0 * hs.stderr >= lo, "{ensemble:?}: {} ± {}", hs.mean, hs.stderr);
    }
}

#[test]
fn halved_rhs_is_detected() {
    // a single noiseless product step, audited against the Trotter bound
    let mut cfg = config(NoiseModel::None, 0.0);
    cfg.worst_case = true;
    cfg.grid = Grid { t: vec![1.0], n: vec![1], ..Default::default() };
    cfg.theorems = vec![TheoremId::Trotter];
    cfg.trials = 1;
    let sweep = run_sweep(&cfg, &SweepOptions::default()).unwrap();
    assert!(audit_bounds(&sweep).violations.is_empty());
    let wc = sweep.records[0].sample.as_ref().unwrap().delta_wc.unwrap();
    let rhs = sweep.summaries[0].bounds[0].rhs;
    let scale = 0.5 * wc / rhs;
    let audit = audit_bounds_scaled(&sweep, scale);
    assert_eq!(audit.violations.len(), 1);
    assert_eq!(audit.violations[0].trial, Some(0));
}

#[test]
fn fit_recovers_exact_power_laws() {
    let pts: Vec<(f64, f64)> = (1..=8).map(|k| (k as f64, 3.0 * (k as f64).powi(2))).collect();
    let f = fit_scaling(&pts, FitWindow::All, 0.0).unwrap();
    assert!((f.exponent - 2.0).abs() < 1e-9);
    assert!((f.r2 - 1.0).abs() < 1e-12);
    let flat: Vec<(f64, f64)> = (1..=5).map(|k| (k as f64, 0.7)).collect();
    assert!(fit_scaling(&flat, FitWindow::All, 0.0).unwrap().exponent.abs() < 1e-12);
    assert!(fit_scaling(&pts[..3], FitWindow::All, 0.0).is_err());
    let mut bad = pts.clone();
    bad[2].1 = 0.0;
    assert!(fit_scaling(&bad, FitWindow::All, 0.0).is_err());
}

#[test]
fn fit_with_noise_and_auto_window() {
    let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(5);
    let pts: Vec<(f64, f64)> = (0..12)
        .map(|k| {
            let x = 2f64.powi(k);
            let e: f64 = StandardNormal.sample(&mut rng);
            (x, x.sqrt() * (1.0 + 0.01 * e))
        })
        .collect();
    let f = fit_scaling(&pts, FitWindow::Auto, 0.0).unwrap();
    assert!((f.exponent - 0.5).abs() < 0.02);
    // a pre-asymptotic plateau at small x is dropped
    let kinked: Vec<(f64, f64)> = (0..10).map(|k| 2f64.powi(k)).map(|x| (x, if x < 4.0 { 4.0 } else { x })).collect();
    let all = fit_scaling(&kinked, FitWindow::All, 0.0).unwrap();
    let f = fit_scaling(&kinked, FitWindow::Auto, 0.0).unwrap();
    assert!(all.r2 < 0.98 && f.r2 >= 0.98 && f.window.0 > 0, "{f:?}");
    assert!((f.exponent - 1.0).abs() < (all.exponent - 1.0).abs());
    let r = fit_scaling(&kinked, FitWindow::Range(3, 8), 0.0).unwrap();
    assert_eq!(r.window, (3, 8));
}

#[test]
fn log_corrected_fit() {
    // y = x log(1/x) on small x: the corrected fit sees a pure power law
    let pts: Vec<(f64, f64)> = (1..=6).map(|k| 10f64.powi(-k - 2)).map(|x| (x, x * (1.0 / x).ln())).collect();
    let plain = fit_scaling(&pts, FitWindow::All, 0.0).unwrap();
    let corrected = fit_scaling(&pts, FitWindow::All, 1.0).unwrap();
    assert!((corrected.exponent - 1.0).abs() < (plain.exponent - 1.0).abs());
}

#[test]
fn gaussian_tail_is_recovered() {
    let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(9);
    let xs: Vec<f64> = (0..50000).map(|_| StandardNormal.sample(&mut rng)).map(|x: f64| x.abs()).collect();
    let tail = tail_estimate(&xs, &[1.0, 2.0, 3.0, 100.0]).unwrap();
    assert!((tail[1].exceedance - 0.0455).abs() < 0.006);
    assert!(tail[1].upper99 >= tail[1].exceedance);
    assert_eq!(tail[3].exceedance, 0.0);
    assert!(tail.windows(2).all(|w| w[1].exceedance <= w[0].exceedance));
    assert!(tail_estimate(&xs[..99], &[1.0]).is_err());
    let norm = normalized_tail_check(&xs, &[1.0, 2.0, 3.0]).unwrap();
    assert!(norm.iter().all(|c| c.3));
}

#[test]
fn heavy_tail_is_rejected() {
    // exponential samples have far more mass beyond 3·√2·rms than 2e^{−9}
    let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(10);
    let xs: Vec<f64> = (0..5000).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let norm = normalized_tail_check(&xs, &[1.0, 2.0, 3.0]).unwrap();
    assert!(!norm[2].3);
}

#[test]
fn clopper_pearson_matches_closed_form() {
    // with no successes the bound is 1 − α^{1/n}
    let n = 200;
    let u = clopper_pearson_upper(0, n, 0.99);
    let exact = 1.0 - 0.01f64.powf(1.0 / n as f64);
    assert!((u - exact).abs() < 1e-9, "{u} vs {exact}");
    assert_eq!(clopper_pearson_upper(n, n, 0.99), 1.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn stats_are_consistent(xs in prop::collection::vec(0.0f64..10.0, 1..60)) {
        let s = Stats::of(&xs);
        prop_assert_eq!(s.count, xs.len());
        prop_assert!(s.q50 <= s.q90 && s.q90 <= s.q99 && s.q99 <= s.max);
        prop_assert!(s.mean <= s.max + 1e-12);
        prop_assert!(s.std >= 0.0);
    }

    #[test]
    fn exceedance_is_monotone(xs in prop::collection::vec(0.0f64..1.0, 100..200), a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let t = tail_estimate(&xs, &[lo, hi]).unwrap();
        prop_assert!(t[1].exceedance <= t[0].exceedance);
        prop_assert!(t[0].upper99 >= t[0].exceedance);
    }

    #[test]
    fn fitted_exponent_is_scale_invariant(c in 0.1f64..10.0, k in -3.0f64..3.0) {
        let pts: Vec<(f64, f64)> = (1..=6).map(|i| i as f64).map(|x| (x, c * x.powf(k))).collect();
        let f = fit_scaling(&pts, FitWindow::All, 0.0).unwrap();
        prop_assert!((f.exponent - k).abs() < 1e-9);
    }
}
