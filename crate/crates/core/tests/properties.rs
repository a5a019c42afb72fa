use genf_core::metrics::{mae, mse, smape, MetricSet};
use genf_core::rng::{seeded, uniform};
use genf_core::synth::{ar1_forecaster, Ar1Benchmark};
use genf_core::theory::{b_alpha, corollary_check, empirical_bv, u_dir, u_iter, TheoryParams};
use proptest::prelude::*;

fn random_params(seed: u64) -> TheoryParams {
    let mut rng = seeded(seed);
    TheoryParams {
        l1: uniform(&mut rng, 0.0, 1.0),
        l2: uniform(&mut rng, 0.0, 1.0),
        sigma_i_sq: uniform(&mut rng, 0.0, 0.5),
        sigma_d_sq: uniform(&mut rng, 0.0, 0.5),
        beta0: uniform(&mut rng, 0.0, 2.0),
        beta1: uniform(&mut rng, 0.0, 0.5),
        beta2: uniform(&mut rng, 0.0, 2.0),
        alpha: uniform(&mut rng, 0.0, 4.0),
        n: 2 + (seed % 11) as usize,
        l: 1,
    }
}

#[test]
fn corollary_agrees_with_grid() {
    let mut held = 0;
    for seed in 0..100 {
        let p = random_params(seed);
        let v = corollary_check(&p, 1e-3).unwrap();
        let best = v.grid.iter().map(|&(_, u)| u).fold(f64::INFINITY, f64::min);
        assert_eq!(v.grid.iter().find(|(l, _)| *l == v.argmin_l).unwrap().1, best);
        if v.holds_some_l {
            held += 1;
            assert!(best < u_dir(&p).min(u_iter(&p)), "seed {seed}: {p:?}");
        }
    }
    assert!(held >= 10, "only {held} draws exercised the corollary");
}

#[test]
fn above_threshold_can_lose_everywhere() {
    // a sampled case where no L beats both anchors
    let p = TheoryParams {
        l1: 0.5,
        l2: 0.1,
        sigma_i_sq: 0.1,
        sigma_d_sq: 0.1,
        beta0: 50.0,
        beta1: 1.0,
        beta2: 2.0,
        alpha: 1.0,
        n: 5,
        l: 1,
    };
    let v = corollary_check(&p, 1e-3).unwrap();
    assert!(!v.holds_some_l);
    let anchor = v.u_dir.min(v.u_iter);
    assert!(v.grid.iter().all(|&(_, u)| u >= anchor));
    assert!((b_alpha(2, &p).unwrap() - 0.151).abs() <= 1e-12);
}

#[test]
fn bias_variance_identity_on_ar1() {
    let bench = Ar1Benchmark {
        phi: 0.8,
        sigma: 0.5,
        train_units: 4,
        train_len: 30,
        window: 5,
        test_windows: 4000,
    };
    for horizon in [1, 3] {
        let est = empirical_bv(&bench, ar1_forecaster, horizon, 20, 17).unwrap();
        let sum = est.bias_sq + est.variance + est.noise;
        assert!((est.mse - sum).abs() / est.mse <= 0.10, "h={horizon}: {est:?}");
        assert!(est.variance > 0.0 && est.bias_sq >= 0.0);
    }
}

#[test]
fn metric_examples() {
    assert_eq!(mse(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 1.0);
    assert_eq!(mae(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 1.0);
    assert_eq!(mse(&[2.0], &[5.0]).unwrap(), 9.0);
    assert_eq!(mae(&[2.0], &[5.0]).unwrap(), 3.0);
    assert_eq!(smape(&[0.0], &[0.0]).unwrap(), 0.0);
    assert!((smape(&[100.0], &[50.0]).unwrap() - 200.0 / 3.0).abs() < 1e-12);
    assert!(mse(&[], &[]).is_err());
    assert!(MetricSet::compute(&[1.0], &[1.0, 2.0]).is_err());
}

proptest! {
    #[test]
    fn smape_symmetric_and_scale_free(
        pairs in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 1..50),
        c in prop::sample::select(vec![0.5, 2.0, 4.0, 0.125, 1024.0]),
    ) {
        let (y, p): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        prop_assert_eq!(smape(&y, &p).unwrap(), smape(&p, &y).unwrap());
        let cy: Vec<f64> = y.iter().map(|v| v * c).collect();
        let cp: Vec<f64> = p.iter().map(|v| v * c).collect();
        prop_assert_eq!(smape(&cy, &cp).unwrap(), smape(&y, &p).unwrap());
        let m = MetricSet::compute(&y, &p).unwrap();
        prop_assert!(m.mae <= m.mse.sqrt() * (1.0 + 1e-12));
        prop_assert!((0.0..=200.0).contains(&m.smape));
    }
}
