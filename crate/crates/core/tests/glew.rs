use aging_core::closedform::{rho_ew, rw_abs_expectation};
use aging_core::glew::{gl_two_time_corr, gl_variance_profile, gradient_ks, profile_from_moments, GlQuery, GlRun, GlState, GradientLaw, Potential};
use aging_core::stats::{corr_cvtv, variance_with_stderr};
use aging_core::{rng, Ensemble, StreamKey};

fn run(potential: Potential, ring_size: usize, dt: f64) -> GlRun {
    GlRun { potential, ring_size, dt }
}

#[test]
fn profile_is_symmetric() {
    let r = run(Potential::quadratic(), 256, 2e-3);
    let rows = gl_variance_profile(&r, 4.0, &[-5, 5], 1000, StreamKey::new(41, "sym"), Ensemble::default()).unwrap();
    let (left, right) = (rows[0].variance, rows[1].variance);
    assert!((left.value - right.value).abs() <= left.stderr.max(right.stderr), "{rows:?}");
}

#[test]
fn total_height_gains_only_noise() {
    let p = Potential::quadratic();
    let (l, t, dt) = (256usize, 1.0, 1e-2);
    let key = StreamKey::new(42, "momentum");
    let gains: Vec<f64> = Ensemble::default().map(10_000, |r| {
        let mut st = GlState::stationary(&p, l, key.replica(r as u64)).unwrap();
        let before: f64 = st.heights().iter().sum();
        st.advance_steps(&p, dt, (t / dt).round() as u64).unwrap();
        st.heights().iter().sum::<f64>() - before
    });
    let (var, _) = variance_with_stderr(&gains).unwrap();
    assert!((var / (l as f64 * t) - 1.0).abs() < 0.05, "{var}");
}

#[test]
fn halving_the_step_moves_the_profile_less_than_its_error() {
    let p = Potential::quadratic();
    let (l, t, dt) = (256usize, 4.0f64, 2e-3f64);
    let sites = [0i64, 3];
    let key = StreamKey::new(43, "refine");
    let both: Vec<(Vec<(f64, f64)>, Vec<(f64, f64)>)> = Ensemble::default().map(300, |r| {
        let start = GlState::stationary(&p, l, key.replica(r as u64)).unwrap();
        let (mut coarse, mut fine) = (start.clone(), start.clone());
        let mut noise = key.replica(r as u64).lane(1).rng();
        let h = (0.5 * dt).sqrt();
        for _ in 0..(t / dt).round() as u64 {
            let a: Vec<f64> = (0..l).map(|_| h * rng::normal(&mut noise)).collect();
            let b: Vec<f64> = (0..l).map(|_| h * rng::normal(&mut noise)).collect();
            fine.step_with_increments(&p, 0.5 * dt, &a).unwrap();
            fine.step_with_increments(&p, 0.5 * dt, &b).unwrap();
            let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
            coarse.step_with_increments(&p, dt, &sum).unwrap();
        }
        let m = |s: &GlState| sites.iter().map(|&k| s.translated_moments(&start, k)).collect();
        (m(&coarse), m(&fine))
    });
    let coarse = profile_from_moments(&both.iter().map(|b| b.0.clone()).collect::<Vec<_>>(), &sites).unwrap();
    let fine = profile_from_moments(&both.iter().map(|b| b.1.clone()).collect::<Vec<_>>(), &sites).unwrap();
    for (c, f) in coarse.iter().zip(&fine) {
        assert!((c.variance.value - f.variance.value).abs() < f.variance.stderr, "{c:?} {f:?}");
    }
}

#[test]
fn gradients_stay_in_the_invariant_law() {
    for p in [Potential::quadratic(), Potential::log_cosh(0.5).unwrap()] {
        let law = GradientLaw::new(&p);
        let mut st = GlState::stationary(&p, 10_000, StreamKey::new(44, "gradients")).unwrap();
        assert!(gradient_ks(&st, &law).unwrap() <= 0.02);
        for steps in [1000, 3000] {
            st.advance_steps(&p, 1e-3, steps).unwrap();
            let ks = gradient_ks(&st, &law).unwrap();
            assert!(ks <= 0.02, "{p:?} t={}: {ks}", st.time());
        }
    }
}

#[test]
fn quadratic_correlation_matches_the_walk_oracle() {
    let r = run(Potential::quadratic(), 256, 1e-2);
    for (s, a, x, y) in [(1.0, 2.0, 0.0, 0.0), (2.0, 3.0, 0.0, 1.5)] {
        let q = GlQuery { s, a, x, y };
        let (j, k) = q.sites();
        let exact = corr_cvtv(rw_abs_expectation(s, j), rw_abs_expectation(a * s, k), rw_abs_expectation((a - 1.0) * s, k - j)).unwrap();
        let mc = gl_two_time_corr(&r, q, 4000, StreamKey::new(45, "oracle"), Ensemble::default()).unwrap();
        assert!((mc.direct.value - exact).abs() < 3.0 * mc.direct.stderr, "{q:?}: {exact} {mc:?}");
    }
}

#[test]
fn anharmonic_correlation_is_universal() {
    let r = run(Potential::log_cosh(0.5).unwrap(), 256, 5e-3);
    let q = GlQuery { s: 4.0, a: 2.0, x: 0.0, y: 0.0 };
    let mc = gl_two_time_corr(&r, q, 4000, StreamKey::new(46, "anharmonic"), Ensemble::default()).unwrap();
    assert!((mc.direct.value - rho_ew(2.0).unwrap()).abs() < 0.07, "{mc:?}");
}
