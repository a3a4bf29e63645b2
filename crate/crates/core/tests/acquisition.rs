use glasses::acquisition::{expected_loss_1, gp_lcb, mpi, AcquisitionContext};
use glasses::gp::{Dataset, GpModel, KernelSpec};
use proptest::prelude::*;

proptest! {
    #[test]
    fn never_above_incumbent(mean in -50.0f64..50.0, var in 0.0f64..100.0, eta in -50.0f64..50.0) {
        prop_assert!(expected_loss_1(mean, var, eta).unwrap() <= eta);
    }

    #[test]
    fn mpi_is_a_probability(mean in -1e3f64..1e3, var in 0.0f64..1e3, eta in -1e3f64..1e3) {
        let p = mpi(mean, var, eta).unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
    }

    #[test]
    fn collapses_to_min_as_variance_vanishes(mean in -10.0f64..10.0, eta in -10.0f64..10.0) {
        let v = expected_loss_1(mean, 1e-12, eta).unwrap();
        prop_assert!((v - mean.min(eta)).abs() <= 1e-5);
    }

    #[test]
    fn lcb_is_below_mean(mean in -10.0f64..10.0, var in 0.0f64..10.0, beta in 0.0f64..5.0) {
        prop_assert!(gp_lcb(mean, var, beta).unwrap() <= mean);
    }
}

#[test]
fn more_uncertainty_at_incumbent_lowers_loss() {
    for eta in [-3.0, 0.0, 2.5] {
        let mut prev = f64::INFINITY;
        for k in 0..200 {
            let var = k as f64 * 0.05;
            let v = expected_loss_1(eta, var, eta).unwrap();
            assert!(v <= prev, "var {var}: {v} > {prev}");
            prev = v;
        }
    }
}

#[test]
fn incumbent_tracks_dataset_minimum() {
    let d = Dataset::new(vec![vec![0.0], vec![0.5], vec![1.0]], vec![2.0, -1.5, 0.3]).unwrap();
    let m = GpModel::new(d, KernelSpec::new(1.0, vec![0.3], 0.0, 1e-6).unwrap()).unwrap();
    let ctx = AcquisitionContext::new(&m);
    assert_eq!(ctx.incumbent(), -1.5);
    assert!(ctx.gp_lcb(&[0.2], -1.0).is_err());
}
