use glasses::ep::{ep_region_moments, expected_min, EpOptions, PolyhedralRegion};
use glasses::normal;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn random_gaussian(n: usize, rng: &mut ChaCha8Rng) -> (DVector<f64>, DMatrix<f64>) {
    let mu = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
    let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let sigma = &a * a.transpose() / n as f64 + DMatrix::identity(n, n) * 0.05;
    (mu, sigma)
}

fn arb_problem(max_n: usize) -> impl Strategy<Value = (DVector<f64>, DMatrix<f64>, f64)> {
    (1..=max_n, any::<u64>()).prop_map(|(n, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mu, sigma) = random_gaussian(n, &mut rng);
        (mu, sigma, rng.random_range(-1.0..1.0))
    })
}

fn permute(mu: &DVector<f64>, sigma: &DMatrix<f64>, perm: &[usize]) -> (DVector<f64>, DMatrix<f64>) {
    let n = perm.len();
    (
        DVector::from_fn(n, |i, _| mu[perm[i]]),
        DMatrix::from_fn(n, n, |i, j| sigma[(perm[i], perm[j])]),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn never_above_incumbent((mu, sigma, eta) in arb_problem(5)) {
        let r = expected_min(&mu, &sigma, eta, &EpOptions::default()).unwrap();
        prop_assert!(r.value <= eta + 1e-6, "{} > {eta}", r.value);
    }

    #[test]
    fn exchangeable((mu, sigma, eta) in arb_problem(5), shift in 0usize..5) {
        let n = mu.len();
        let perm: Vec<usize> = (0..n).map(|i| (n - 1 - i + shift) % n).collect();
        let (pm, ps) = permute(&mu, &sigma, &perm);
        let a = expected_min(&mu, &sigma, eta, &EpOptions::default()).unwrap().value;
        let b = expected_min(&pm, &ps, eta, &EpOptions::default()).unwrap().value;
        prop_assert!((a - b).abs() <= 1e-8, "{a} vs {b}");
    }

    #[test]
    fn masses_nearly_partition((mu, sigma, eta) in arb_problem(5)) {
        let r = expected_min(&mu, &sigma, eta, &EpOptions::default()).unwrap();
        let total = r.total_mass();
        prop_assert!((0.95..=1.05).contains(&total), "total mass {total}");
    }

    #[test]
    fn region_results_are_valid((mu, sigma, eta) in arb_problem(5), j in 0usize..5) {
        let n = mu.len();
        let region = PolyhedralRegion::minimum_at(n, j % n, eta).unwrap();
        let r = ep_region_moments(&mu, &sigma, &region, &EpOptions::default()).unwrap();
        prop_assert!(r.log_mass <= 1e-9);
        for i in 0..n {
            for k in 0..n {
                prop_assert!((r.covariance[(i, k)] - r.covariance[(k, i)]).abs() <= 1e-8);
            }
        }
        prop_assert!(r.covariance.clone().symmetric_eigenvalues().min() >= -1e-8);
    }
}

#[test]
fn point_mass_collapses_to_minimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in 1..=6 {
        for _ in 0..5 {
            let mu: DVector<f64> = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
            let eta: f64 = rng.random_range(-1.0..1.0);
            let sigma = DMatrix::identity(n, n) * 1e-12;
            let want: f64 = mu.min().min(eta);
            let got = expected_min(&mu, &sigma, eta, &EpOptions::default()).unwrap().value;
            assert!((got - want).abs() <= 1e-4, "n={n}: {got} vs {want}");
            if n > 1 {
                let far = PolyhedralRegion::orthant_above(n, mu.max() + 1.0).unwrap();
                let r = ep_region_moments(&mu, &sigma, &far, &EpOptions::default()).unwrap();
                assert!(r.underflow && r.mass() == 0.0);
            }
        }
    }
}

#[test]
fn minimum_of_two_standard_normals() {
    // E[min(a, b)] for iid standard normals is −1/√π.
    let mu = DVector::zeros(2);
    let sigma = DMatrix::identity(2, 2);
    let got = expected_min(&mu, &sigma, 1e6, &EpOptions::default()).unwrap().value;
    let want = -1.0 / std::f64::consts::PI.sqrt();
    assert!((got - want).abs() <= 1e-4, "{got} vs {want}");
}

#[test]
fn single_coordinate_matches_closed_form() {
    let r = expected_min(&DVector::from_element(1, 0.0), &DMatrix::identity(1, 1), 0.0, &EpOptions::default()).unwrap();
    assert!((r.value + normal::INV_SQRT_2PI).abs() <= 1e-8);
}

#[test]
fn independent_orthant_factorises() {
    let region = PolyhedralRegion::orthant_above(2, 0.0).unwrap();
    let r = ep_region_moments(&DVector::zeros(2), &DMatrix::identity(2, 2), &region, &EpOptions::default()).unwrap();
    assert!((r.mass() - 0.25).abs() < 1e-10);
    let half_normal_mean = (2.0 / std::f64::consts::PI).sqrt();
    for i in 0..2 {
        assert!((r.mean[i] - half_normal_mean).abs() < 1e-6);
    }
}

#[test]
fn unconstrained_region_is_the_prior() {
    let region = PolyhedralRegion::new(2, vec![]).unwrap();
    let mu = DVector::from_vec(vec![0.3, -1.0]);
    let sigma = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 0.5]);
    let r = ep_region_moments(&mu, &sigma, &region, &EpOptions::default()).unwrap();
    assert_eq!(r.log_mass, 0.0);
    assert_eq!(r.mean, mu);
    assert!((r.covariance - sigma).abs().max() < 1e-9);
}

#[test]
fn correlated_quadrant_against_exact_probability() {
    // P(a ≥ 0, b ≥ 0) = 1/4 + asin(ρ)/2π for a centred bivariate normal.
    for rho in [-0.6, -0.2, 0.3, 0.7] {
        let sigma = DMatrix::from_row_slice(2, 2, &[1.0, rho, rho, 1.0]);
        let region = PolyhedralRegion::orthant_above(2, 0.0).unwrap();
        let r = ep_region_moments(&DVector::zeros(2), &sigma, &region, &EpOptions::default()).unwrap();
        let exact = 0.25 + f64::asin(rho) / (2.0 * std::f64::consts::PI);
        assert!((r.mass() - exact).abs() <= 0.03 * exact, "rho {rho}: {} vs {exact}", r.mass());
    }
}

#[test]
fn orthant_against_monte_carlo() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mu, sigma) = random_gaussian(3, &mut rng);
    let lower: Vec<f64> = (0..3).map(|i| mu[i] + rng.random_range(-0.5..0.5)).collect();
    let region = PolyhedralRegion::new(
        3,
        (0..3)
            .map(|i| {
                let mut normal = vec![0.0; 3];
                normal[i] = 1.0;
                glasses::ep::HalfSpace::new(normal, lower[i]).unwrap()
            })
            .collect(),
    )
    .unwrap();
    let ep = ep_region_moments(&mu, &sigma, &region, &EpOptions::default()).unwrap();

    let l = sigma.clone().cholesky().unwrap().l();
    let samples = 10_000_000usize;
    let mut hits = 0usize;
    let mut sum = [0.0f64; 3];
    let mut z = DVector::zeros(3);
    for _ in 0..samples {
        for i in 0..3 {
            z[i] = rng.sample::<f64, _>(StandardNormal);
        }
        let y = &mu + &l * &z;
        if (0..3).all(|i| y[i] >= lower[i]) {
            hits += 1;
            for i in 0..3 {
                sum[i] += y[i];
            }
        }
    }
    // EP's own bias on correlated orthants is around 1%, well above the
    // Monte-Carlo error at this sample size.
    let p = hits as f64 / samples as f64;
    assert!((ep.mass() - p).abs() <= 0.02 * p, "mass {} vs {p}", ep.mass());
    for (i, s) in sum.iter().enumerate() {
        let mc = s / hits as f64;
        assert!((ep.mean[i] - mc).abs() <= 0.02 * mc.abs(), "mean {i}: {} vs {mc}", ep.mean[i]);
    }
}
