use nalgebra::DMatrix;
use proptest::prelude::*;
use torqobs_core::lti::{
    closed_loop_poles, critical_gain, gain_phase_margins, ss_to_tf, Complex64, Polynomial,
    RationalTF, StateSpaceSISO,
};

/// Greedy nearest matching of two root multisets; returns the worst
/// distance relative to `max(|expected|, 1)`.
fn multiset_rel_error(got: &[Complex64], expected: &[Complex64]) -> f64 {
    assert_eq!(got.len(), expected.len());
    let mut used = vec![false; got.len()];
    let mut worst = 0.0f64;
    for e in expected {
        let (i, d) = got
            .iter()
            .enumerate()
            .filter(|(i, _)| !used[*i])
            .map(|(i, g)| (i, (g - e).norm()))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        used[i] = true;
        worst = worst.max(d / e.norm().max(1.0));
    }
    worst
}

/// Up to six roots at least 0.5 apart, complex ones in conjugate pairs.
fn separated_roots() -> impl Strategy<Value = Vec<Complex64>> {
    (1usize..=3, 0usize..=3)
        .prop_flat_map(|(n_real, n_pairs)| {
            (
                proptest::collection::vec(-20.0f64..20.0, n_real),
                proptest::collection::vec((-20.0f64..20.0, 0.5f64..20.0), n_pairs),
            )
        })
        .prop_map(|(reals, pairs)| {
            let mut roots: Vec<Complex64> = reals.iter().map(|&r| Complex64::new(r, 0.0)).collect();
            for (re, im) in pairs {
                if roots.len() + 2 > 6 {
                    break;
                }
                roots.push(Complex64::new(re, im));
                roots.push(Complex64::new(re, -im));
            }
            roots
        })
        .prop_filter("well separated", |roots| {
            roots
                .iter()
                .enumerate()
                .all(|(i, a)| roots[i + 1..].iter().all(|b| (a - b).norm() > 0.5))
                && roots.iter().all(|r| r.im == 0.0 || r.im.abs() > 0.25)
        })
}

fn hurwitz_tf() -> impl Strategy<Value = RationalTF> {
    (
        proptest::collection::vec(0.2f64..50.0, 2..=4),
        proptest::collection::vec(-30.0f64..30.0, 0..=2),
        0.1f64..100.0,
    )
        .prop_map(|(poles, zeros, k)| {
            let p: Vec<Complex64> = poles.iter().map(|&a| Complex64::new(-a, 0.0)).collect();
            let z: Vec<Complex64> = zeros.iter().map(|&a| Complex64::new(a, 0.0)).collect();
            let num = Polynomial::from_roots(&z).scale(k);
            RationalTF::new(num, Polynomial::from_roots(&p)).unwrap()
        })
}

fn roots_stable(r: &[Complex64]) -> bool {
    r.iter().all(|z| z.re < 0.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn roots_round_trip(roots in separated_roots()) {
        prop_assume!(!roots.is_empty());
        let p = Polynomial::from_roots(&roots);
        let got = p.roots().unwrap();
        prop_assert!(multiset_rel_error(&got, &roots) <= 1e-8, "{:?} vs {:?}", got, roots);
    }

    #[test]
    fn series_eval_is_product(
        g1 in hurwitz_tf(),
        g2 in hurwitz_tf(),
        ws in proptest::collection::vec(-3.0f64..4.0, 100),
    ) {
        let g = g1.series(&g2);
        for lw in ws {
            let s = Complex64::new(0.0, 10f64.powf(lw));
            let expect = g1.eval(s).unwrap() * g2.eval(s).unwrap();
            let got = g.eval(s).unwrap();
            prop_assert!((got - expect).norm() <= 1e-10 * expect.norm().max(f64::MIN_POSITIVE));
        }
    }

    #[test]
    fn ss_to_tf_poles_match_eigenvalues(
        n in 1usize..=5,
        entries in proptest::collection::vec(-5.0f64..5.0, 25),
        b in proptest::collection::vec(-2.0f64..2.0, 5),
        c in proptest::collection::vec(-2.0f64..2.0, 5),
    ) {
        let a = DMatrix::from_fn(n, n, |i, j| entries[i * 5 + j]);
        let m = StateSpaceSISO::new(
            a,
            nalgebra::DVector::from_column_slice(&b[..n]),
            nalgebra::RowDVector::from_row_slice(&c[..n]),
            0.3,
        ).unwrap();
        let eig = m.eigenvalues();
        // skip near-defective matrices where eigenvalues are ill-conditioned
        let sep = eig.iter().enumerate().flat_map(|(i, a)| eig[i + 1..].iter().map(move |b| (a - b).norm()))
            .fold(f64::INFINITY, f64::min);
        prop_assume!(sep > 1e-2);
        let poles = ss_to_tf(&m).den().roots().unwrap();
        prop_assert!(multiset_rel_error(&poles, &eig) <= 1e-8, "{:?} vs {:?}", poles, eig);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn critical_gain_brackets_instability(l in hurwitz_tf()) {
        let kc = critical_gain(&l).unwrap();
        if let Some(k) = kc.finite() {
            prop_assume!(k > 1e-6);
            prop_assert!(roots_stable(&closed_loop_poles(&l, 0.99 * k).unwrap()));
            prop_assert!(closed_loop_poles(&l, 1.01 * k).unwrap().iter().any(|z| z.re > 0.0));
        } else {
            for k in [1.0, 1e3, 1e6] {
                prop_assert!(roots_stable(&closed_loop_poles(&l, k).unwrap()));
            }
        }
    }

    #[test]
    fn gain_margin_matches_critical_gain(l in hurwitz_tf()) {
        let m = gain_phase_margins(&l).unwrap();
        let kc = critical_gain(&l).unwrap();
        if m.phase_crossings == 1 {
            if let (Some(gm), Some(k)) = (m.gain_margin.finite(), kc.finite()) {
                prop_assert!((gm - k).abs() <= 0.01 * k, "gm {} kc {}", gm, k);
            }
        }
    }
}

#[test]
fn critical_gain_of_reference_examples() {
    let l = RationalTF::from_coeffs(&[1.0], &[1.0, 3.0, 3.0, 1.0]).unwrap();
    assert!((critical_gain(&l).unwrap().value() - 8.0).abs() < 1e-8);
    let neg = RationalTF::from_coeffs(&[-0.5], &[1.0, 1.0]).unwrap();
    assert!((critical_gain(&neg).unwrap().value() - 2.0).abs() < 1e-10);
    let first = RationalTF::from_coeffs(&[1.0], &[1.0, 1.0]).unwrap();
    assert!(critical_gain(&first).unwrap().is_infinite());
}
