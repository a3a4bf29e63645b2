use glasses::acquisition::{expected_loss_1, AcquisitionContext};
use glasses::glasses::{derive_seed, glasses_acquisition, run, select_next, GlassesConfig, HorizonMode, RunHistory, Strategy};
use glasses::gp::{fit, Dataset, FitOptions, GpModel, KernelSpec};
use glasses::optim::{direct_minimize, BoxDomain};
use glasses::test_functions::lookup;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_model(rng: &mut ChaCha8Rng) -> (GpModel, BoxDomain) {
    let dim = rng.random_range(1..=2);
    let n = rng.random_range(1..=8);
    let dom = BoxDomain::cube(0.0, 1.0, dim).unwrap();
    let xs: Vec<Vec<f64>> = (0..n).map(|_| (0..dim).map(|_| rng.random()).collect()).collect();
    let ys: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
    let kernel = KernelSpec::new(
        rng.random_range(0.2..3.0),
        vec![rng.random_range(0.05..1.0); dim],
        rng.random_range(0.0..0.5),
        rng.random_range(0.0..0.05),
    )
    .unwrap();
    (GpModel::new(Dataset::new(xs, ys).unwrap(), kernel).unwrap(), dom)
}

fn lookahead(n: usize) -> GlassesConfig {
    GlassesConfig::with_strategy(Strategy::Lookahead(HorizonMode::Fixed(n)))
}

fn sincos_initial(points: &[f64]) -> Dataset {
    let f = lookup("SinCos").unwrap();
    let xs: Vec<Vec<f64>> = points.iter().map(|x| vec![*x]).collect();
    let ys = xs.iter().map(|x| f.evaluate(x).unwrap()).collect();
    Dataset::new(xs, ys).unwrap()
}

#[test]
fn one_step_is_the_myopic_loss() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..100 {
        let (m, dom) = random_model(&mut rng);
        let x: Vec<f64> = (0..dom.dim()).map(|_| rng.random()).collect();
        let eta = m.dataset().best_output();
        let (mean, var) = m.predict_point(&x);
        let want = expected_loss_1(mean, var, eta).unwrap();
        let got = glasses_acquisition(&m, &x, 1, eta, &dom).unwrap();
        assert!((got - want).abs() <= 1e-8, "{got} vs {want}");
    }
}

#[test]
fn observed_incumbent_has_no_expected_gain() {
    let d = Dataset::new(vec![vec![0.2], vec![0.5], vec![0.9]], vec![0.4, -1.0, 0.7]).unwrap();
    let m = GpModel::new(d, KernelSpec::new(1.0, vec![0.2], 0.0, 0.0).unwrap()).unwrap();
    let dom = BoxDomain::cube(0.0, 1.0, 1).unwrap();
    let got = glasses_acquisition(&m, &[0.5], 1, -1.0, &dom).unwrap();
    // What remains is σφ(0) with σ² the jitter-sized posterior variance.
    let (_, var) = m.predict_point(&[0.5]);
    assert!(var <= 10.0 * m.jitter());
    assert!((got + 1.0).abs() <= var.sqrt(), "{got}");
}

#[test]
fn single_step_selection_is_myopic() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..5 {
        let (m, dom) = random_model(&mut rng);
        let eta = m.dataset().best_output();
        let cfg = lookahead(1);
        let got = select_next(&m, 1, eta, &dom, &cfg).unwrap();
        let ctx = AcquisitionContext::new(&m);
        let want = direct_minimize(|x| ctx.expected_loss(x), &dom, 1000 * dom.dim()).unwrap();
        assert_eq!(got.point, want.best_point);
        assert_eq!(got.value, want.best_value);
    }
}

#[test]
fn sincos_selection_beats_observed_points() {
    let f = lookup("SinCos").unwrap();
    let d = sincos_initial(&[1.0, 4.5, 8.0]);
    let m = fit(&d, f.domain(), &FitOptions::default()).unwrap();
    let eta = d.best_output();
    let chosen = select_next(&m, 5, eta, f.domain(), &lookahead(5)).unwrap();
    for x in d.points() {
        let at_data = glasses_acquisition(&m, x, 5, eta, f.domain()).unwrap();
        assert!(chosen.value <= at_data, "{} > {at_data} at {x:?}", chosen.value);
    }
}

#[test]
fn mirrored_data_gives_mirrored_choice() {
    let dom = BoxDomain::cube(-1.0, 1.0, 1).unwrap();
    let xs = [-0.8, -0.1, 0.35, 0.7];
    let ys = [0.3, -0.6, 0.1, -0.2];
    let kernel = KernelSpec::new(1.0, vec![0.3], 0.01, 1e-4).unwrap();
    let build = |sign: f64| {
        let d = Dataset::new(xs.iter().map(|x| vec![sign * x]).collect(), ys.to_vec()).unwrap();
        GpModel::new(d, kernel.clone()).unwrap()
    };
    let (left, right) = (build(1.0), build(-1.0));
    for n in [1, 3] {
        let a = select_next(&left, n, -0.6, &dom, &lookahead(n)).unwrap();
        let b = select_next(&right, n, -0.6, &dom, &lookahead(n)).unwrap();
        assert!((a.point[0] + b.point[0]).abs() <= 1e-3, "n={n}: {:?} vs {:?}", a.point, b.point);
    }
}

fn sincos_run(budget: usize, cfg: &GlassesConfig, seed: u64) -> RunHistory {
    let f = lookup("SinCos").unwrap();
    let init = sincos_initial(&[0.7, 3.1, 6.4, 9.2]);
    run(|x: &[f64]| f.evaluate(x), &init, budget, f.domain(), cfg, seed).unwrap()
}

#[test]
fn zero_budget_recommends_posterior_minimiser() {
    let f = lookup("SinCos").unwrap();
    let cfg = lookahead(3);
    let h = sincos_run(0, &cfg, 4);
    assert!(h.evaluations.is_empty());
    let init = sincos_initial(&[0.7, 3.1, 6.4, 9.2]);
    let opts = FitOptions {
        seed: derive_seed(h.seed, 0),
        ..cfg.fit.clone()
    };
    let m = fit(&init, f.domain(), &opts).unwrap();
    let want = direct_minimize(|x| m.predict_mean(x), f.domain(), 1000).unwrap();
    assert_eq!(h.recommendation, want.best_point);
    assert_eq!(h.recommendation_mean, want.best_value);
}

#[test]
fn single_evaluation_budget_is_myopic() {
    let full = sincos_run(1, &GlassesConfig::with_strategy(Strategy::Lookahead(HorizonMode::FullRemaining)), 9);
    let myopic = sincos_run(1, &lookahead(1), 9);
    assert_eq!(full.evaluations, myopic.evaluations);
    assert_eq!(full.recommendation, myopic.recommendation);
}

#[test]
fn run_history_invariants() {
    let f = lookup("SinCos").unwrap();
    let cfg = GlassesConfig::with_strategy(Strategy::Lookahead(HorizonMode::FullRemaining));
    let budget = 5;
    let h = sincos_run(budget, &cfg, 12);
    assert_eq!(h.evaluations.len(), budget);
    for (j, e) in h.evaluations.iter().enumerate() {
        assert_eq!(e.lookahead, budget - j);
        assert!(f.domain().contains(&e.x));
    }
    for w in h.evaluations.windows(2) {
        assert!(w[1].eta <= w[0].eta);
    }
    assert!(f.domain().contains(&h.recommendation));
    let again = sincos_run(budget, &cfg, 12);
    assert_eq!(serde_json::to_string(&h).unwrap(), serde_json::to_string(&again).unwrap());
}

#[test]
fn fixed_horizon_is_clamped_by_remaining_budget() {
    let h = sincos_run(4, &lookahead(3), 2);
    let steps: Vec<usize> = h.evaluations.iter().map(|e| e.lookahead).collect();
    assert_eq!(steps, vec![3, 3, 2, 1]);
}
