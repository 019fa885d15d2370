use aging_core::lpp::{self, burke_increments, random_diagonals, BOUNDARY_MEAN};
use aging_core::stats::{self, MomentAccumulator};
use aging_core::{Ensemble, StreamKey};

#[test]
fn burke_rows_are_exponential() {
    for n1 in [5, 20, 50] {
        let inc = burke_increments(n1, 10_000, &mut StreamKey::new(8, "burke").replica(n1 as u64).rng()).unwrap();
        let ks = stats::ks_statistic(&inc, |x| 1.0 - (-x / BOUNDARY_MEAN).exp());
        assert!(ks <= 0.02, "n1={n1}: {ks}");
        assert!((1.94..=2.06).contains(&inc.mean()), "n1={n1}: {}", inc.mean());
    }
}

#[test]
fn growth_rate_settles() {
    let key = StreamKey::new(9, "rate");
    let rows = lpp::diagonal_ensemble(&[1000, 2000], 20, key, Ensemble::default());
    let mean = |c: usize, n: f64| MomentAccumulator::from_slice(&rows.iter().map(|r| r[c] / n).collect::<Vec<_>>()).unwrap().mean();
    let (r1, r2) = (mean(0, 1000.0), mean(1, 2000.0));
    assert!((r2 / r1 - 1.0).abs() < 0.02, "{r1} {r2}");
}

#[test]
fn nested_grids_are_superadditive() {
    for r in 0..50 {
        let v = random_diagonals(&[60, 120], &mut StreamKey::new(10, "nested").replica(r).rng());
        assert!(v[1] >= v[0]);
    }
}

#[test]
fn aging_correlation_is_deterministic() {
    let cfg = lpp::LppConfig { n: 40, a: 2.0, replicas: 200 };
    let key = StreamKey::new(12, "det");
    let a = lpp::lpp_aging_corr(&cfg, key, Ensemble::new(1)).unwrap();
    let b = lpp::lpp_aging_corr(&cfg, key, Ensemble::default()).unwrap();
    assert_eq!(a, b);
    assert!(a.value > 0.0 && a.value < 1.0);
}
