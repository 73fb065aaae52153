use cfdim_core::dimension::{d_vector, g_b1b2, s_b, SolveOptions};
use cfdim_core::formulas::*;
use num_rational::Ratio;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn equalized_profiles_have_flat_d_vectors() {
    let opts = SolveOptions::default();
    for m in [1usize, 2, 3] {
        for b in [2.0, 4.0, 16.0] {
            let eq = equalize(b, m, &opts).unwrap();
            let dv = d_vector(&eq.profile, &opts).unwrap();
            let values: Vec<f64> = dv.d.iter().map(|r| r.value).collect();
            let spread = values.iter().copied().fold(f64::NEG_INFINITY, f64::max) - dv.min;
            assert!(spread <= 1e-4, "m={m} B={b}: {values:?}");
            assert!((dv.min - eq.t.value).abs() <= 1e-4, "m={m} B={b}");
        }
    }
}

#[test]
fn product_family_reductions() {
    let opts = SolveOptions::default();
    for b in [2.0, 4.0] {
        assert_eq!(t_bm(b, 1, &opts).unwrap().value.to_bits(), s_b(b, &opts).unwrap().value.to_bits());
    }
    // t_B^(m) increases with m towards 1
    let t: Vec<f64> = (1..=5).map(|m| t_bm(16.0, m, &opts).unwrap().value).collect();
    assert!(t.windows(2).all(|w| w[1] > w[0]), "{t:?}");
}

#[test]
fn classifier_cases() {
    let opts = ClassifyOptions::default();
    assert_eq!(classify_fm(4.0, 2.0, 2, &opts).unwrap().case, FmCase::Empty);
    assert_eq!(classify_fm(4.0, 1.9, 3, &opts).unwrap().case, FmCase::Empty);
    let r = classify_fm(4.0, 3.99, 2, &opts).unwrap();
    assert_eq!(r.case, FmCase::TRegime);
    assert!((r.dimension.unwrap() - t_bm(4.0, 2, &opts.solve).unwrap().value).abs() <= 1e-4);
    assert!(r.subset_check.unwrap().holds());
    let g = classify_fm(16.0, 4.5, 2, &opts).unwrap();
    assert_eq!(g.case, FmCase::GRegime);
    assert!(g.subset_check.unwrap().holds());
}

#[test]
fn regimes_meet_at_the_threshold() {
    let opts = ClassifyOptions::default();
    for m in [2usize, 3] {
        for b1 in [4.0f64, 16.0] {
            let t = t_bm(b1, m, &opts.solve).unwrap().value;
            let b2 = b1.powf(theta_m(t, m).unwrap());
            let r = classify_fm(b1, b2, m, &opts).unwrap();
            let (_, other) = r.boundary_alternate.expect("on the boundary");
            assert!((r.dimension.unwrap() - other).abs() <= 2e-4, "m={m} B1={b1}");
        }
    }
}

#[test]
fn g_regime_dimension_increases_with_b2() {
    let opts = ClassifyOptions::default();
    let t = t_bm(64.0, 3, &opts.solve).unwrap().value;
    let top = 64f64.powf(theta_m(t, 3).unwrap());
    let values: Vec<f64> = (1..=6)
        .map(|k| {
            let b2 = 8.0 + (top - 8.0) * k as f64 / 7.0;
            let r = classify_fm(64.0, b2, 3, &opts).unwrap();
            assert_eq!(r.case, FmCase::GRegime);
            r.dimension.unwrap()
        })
        .collect();
    assert!(values.windows(2).all(|w| w[1] > w[0]), "{values:?}");
}

#[test]
fn emptiness_chain_never_breaks() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut tested = 0;
    for _ in 0..10_000 {
        // B2 = p/q with B2^2 <= B1
        let (b1, b2) = if rng.gen_bool(0.5) {
            (Ratio::from_integer(4u64), Ratio::new(19u64, 10))
        } else {
            let q = rng.gen_range(1u64..=20);
            let p = rng.gen_range(q + 1..=5 * q);
            let b2 = Ratio::new(p, q);
            let b1_min = (b2 * b2).ceil().to_integer();
            (Ratio::from_integer(rng.gen_range(b1_min..=b1_min + 10)), b2)
        };
        let m = rng.gen_range(2usize..=5);
        let n = rng.gen_range(1u32..=12);
        // digits below B2^n, log-uniform, so the upper conditions hold often
        let cap = (*b2.numer() as f64 / *b2.denom() as f64).powi(n as i32);
        let digits: Vec<u64> = (0..m).map(|_| cap.powf(rng.gen::<f64>()).floor().max(1.0) as u64).collect();
        match emptiness_chain_counterexample(&digits, n, b1, b2) {
            Some(true) => panic!("counterexample {digits:?} n={n} B1={b1} B2={b2}"),
            Some(false) => tested += 1,
            None => {}
        }
    }
    assert!(tested > 1000, "only {tested} sequences met the hypotheses");
}

proptest! {
    #[test]
    fn f2_is_the_square(s in 0.5f64..1.0) {
        prop_assert!((f_m_iter(2, s).unwrap() - s * s).abs() < 1e-14);
        prop_assert!((weighted_f(1.0, 1.0, s).unwrap() - f_m_iter(2, s).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn theta_two_is_identity(t in 0.5f64..1.0) {
        prop_assert!((theta_m(t, 2).unwrap() - t).abs() < 1e-12);
    }

    #[test]
    fn theta_is_finite_near_half(eps in 1e-15f64..1e-3, m in 2usize..12) {
        let v = theta_m(0.5 + eps, m).unwrap();
        prop_assert!((v - (m as f64 - 1.0) / m as f64).abs() < 1e-2);
    }

    #[test]
    fn equalizing_profile_multiplies_to_b(b in 1.1f64..1e4, m in 1usize..6, t in 0.51f64..1.0) {
        let p = equalizing_profile(b, m, t).unwrap();
        prop_assert!((p.beta(m as isize - 1) / b - 1.0).abs() < 1e-10);
        prop_assert!(p.a.iter().all(|&a| a > 1.0));
        for i in 1..m {
            prop_assert!(p.beta(i as isize) > p.beta(i as isize - 1));
        }
    }

    #[test]
    fn f_m_stays_in_unit_interval(m in 1usize..10, s in 0.5f64..1.0) {
        let f = f_m_iter(m, s).unwrap();
        prop_assert!(f > 0.0 && f <= s);
    }

    #[test]
    fn empty_iff_b2_at_most_root_b1(b1 in 2.0f64..100.0, r in 0.1f64..0.99) {
        let b2 = b1.powf(r);
        let opts = ClassifyOptions { solve: SolveOptions::finite(10), ..ClassifyOptions::default() };
        let case = classify_fm(b1, b2, 2, &opts).unwrap().case;
        prop_assert_eq!(case == FmCase::Empty, b2 * b2 <= b1);
    }
}

#[test]
fn two_parameter_identity_at_b2_one() {
    let opts = SolveOptions::default();
    let g = g_b1b2(4.0, 1.0, &opts).unwrap().value;
    assert!((g - s_b(4.0, &opts).unwrap().value).abs() <= 1e-6);
}
