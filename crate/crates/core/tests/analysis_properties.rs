use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Uniform};
use torqobs_core::analysis::{
    loop_tf_dob, loop_tf_dob_composed, margin_sweep, min_phase_condition, rms_error, table_cells,
    MinPhase, ObserverKind, SweepDesign, ZERO_RE_TOL,
};
use torqobs_core::plant::{PlantParams, UncertaintyBox};

fn random_cell(rng: &mut ChaCha8Rng, p: &PlantParams) -> UncertaintyBox {
    let frac = Uniform::new(-0.95, 0.95).unwrap();
    UncertaintyBox::relative(p, frac.sample(rng), frac.sample(rng), frac.sample(rng))
}

#[test]
fn closed_form_equals_composition() {
    let p = PlantParams::reference();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let grid: Vec<f64> = (0..200)
        .map(|i| 10f64.powf(-2.0 + 8.0 * i as f64 / 199.0))
        .collect();
    for _ in 0..20 {
        let d = random_cell(&mut rng, &p);
        let a = loop_tf_dob(&p, &d, 500.0).unwrap();
        let b = loop_tf_dob_composed(&p, &d, 500.0).unwrap();
        for &w in &grid {
            let (x, y) = (a.freq_response(w).unwrap(), b.freq_response(w).unwrap());
            assert!(
                (x - y).norm() <= 1e-8 * (1.0 + x.norm()),
                "w = {w}: {x} vs {y}"
            );
        }
    }
}

#[test]
fn sign_test_agrees_with_zero_locations() {
    let p = PlantParams::reference();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut checked = 0;
    for _ in 0..1000 {
        let d = random_cell(&mut rng, &p);
        let zeros = loop_tf_dob(&p, &d, 500.0).unwrap().zeros().unwrap();
        let direct = zeros.iter().all(|z| z.re < -ZERO_RE_TOL * z.norm());
        match min_phase_condition(&p, &d) {
            MinPhase::Degenerate => continue,
            MinPhase::MinimumPhase => assert!(direct, "{d:?}: {zeros:?}"),
            MinPhase::NonMinimumPhase => assert!(!direct, "{d:?}: {zeros:?}"),
        }
        checked += 1;
    }
    assert_eq!(checked, 1000);
}

#[test]
fn dob_loop_gain_below_one_on_table_cells() {
    let p = PlantParams::reference();
    // 2000 log-spaced points over [1e-2, 1e6] rad/s
    let grid: Vec<f64> = (0..2000)
        .map(|i| 10f64.powf(-2.0 + 8.0 * i as f64 / 1999.0))
        .collect();
    for frac in [0.01, 0.1] {
        for d in table_cells(&p, frac) {
            let l = loop_tf_dob(&p, &d, 500.0).unwrap();
            let peak = grid
                .iter()
                .map(|&w| l.freq_response(w).unwrap().norm())
                .fold(0.0, f64::max);
            assert!(peak < 1.0, "{d:?}: peak {peak}");
        }
    }
}

#[test]
fn luenberger_loop_has_origin_pole_in_every_cell() {
    let design = SweepDesign::reference();
    for frac in [0.01, 0.1] {
        for d in table_cells(&design.nominal, frac) {
            let l = design.loop_tf(ObserverKind::Luenberger, &d).unwrap();
            let mut mags: Vec<f64> = l.poles().unwrap().iter().map(|z| z.norm()).collect();
            mags.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let others = mags[1..].iter().copied().fold(0.0, f64::max);
            assert!(mags[0] <= 1e-6 * others, "{mags:?}");
        }
    }
}

#[test]
fn sweep_is_deterministic_and_order_independent() {
    let design = SweepDesign::reference();
    let cells = table_cells(&design.nominal, 0.1);
    for which in [ObserverKind::Dob, ObserverKind::Luenberger] {
        let a = margin_sweep(&cells, which, &design).unwrap();
        let b = margin_sweep(&cells, which, &design).unwrap();
        assert_eq!(a, b);
        let reversed: Vec<_> = cells.iter().rev().copied().collect();
        let mut c = margin_sweep(&reversed, which, &design).unwrap();
        c.reverse();
        assert_eq!(a, c);
    }
}

#[test]
fn rms_of_uniform_noise_matches_its_std() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let half_width = 0.2;
    let noise = Uniform::new(-half_width, half_width).unwrap();
    let tau: Vec<f64> = (0..10_000).map(|k| (k as f64 * 1e-3).sin()).collect();
    let est: Vec<f64> = tau.iter().map(|t| t + noise.sample(&mut rng)).collect();
    let sigma = half_width / 3f64.sqrt();
    let rms = rms_error(&tau, &est, 1e-4).unwrap();
    assert!((rms - sigma).abs() <= 0.05 * sigma, "{rms} vs {sigma}");
}
