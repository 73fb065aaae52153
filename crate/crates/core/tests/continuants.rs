use cfdim_core::continuants::*;
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use proptest::prelude::*;

fn word(d: &[u64]) -> DigitWord {
    DigitWord::new(d.to_vec()).unwrap()
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn gcd(a: &BigUint, b: &BigUint) -> BigUint {
    let (mut a, mut b) = (a.clone(), b.clone());
    while !b.is_zero() {
        let r = &a % &b;
        a = b;
        b = r;
    }
    a
}

fn digits() -> impl Strategy<Value = Vec<u64>> {
    prop::collection::vec(1u64..=1000, 0..40)
}

#[test]
fn first_level_partition_telescopes() {
    let mut total = BigRational::zero();
    enumerate_cylinders(1000, 1, Budget::unlimited(), |w, _| {
        total += cylinder_interval(&word(w)).length();
    })
    .unwrap();
    assert_eq!(total, BigRational::one() - rat(1, 1001));
}

#[test]
fn truncated_levels_lose_mass() {
    // Σ over {1..20}^n of |I_n| is strictly decreasing in n and below 1
    let mut totals = Vec::new();
    for n in 1..=3 {
        let mut total = BigRational::zero();
        enumerate_cylinders(20, n, Budget::unlimited(), |w, _| {
            total += cylinder_interval(&word(w)).length();
        })
        .unwrap();
        totals.push(total);
    }
    assert_eq!(totals[0], rat(20, 21));
    assert!(totals.windows(2).all(|w| w[1] < w[0]));
    assert!(totals[2] > rat(82, 100) && totals[2] < rat(83, 100));
}

#[test]
fn lexicographic_enumeration() {
    let mut seen = Vec::new();
    enumerate_cylinders(2, 2, Budget::unlimited(), |w, c| seen.push((w.to_vec(), c.q.to_u64().unwrap()))).unwrap();
    assert_eq!(
        seen,
        vec![(vec![1, 1], 2), (vec![1, 2], 3), (vec![2, 1], 3), (vec![2, 2], 5)]
    );
    let mut words = Vec::new();
    enumerate_cylinders(3, 3, Budget::unlimited(), |w, _| words.push(w.to_vec())).unwrap();
    assert_eq!(words.len(), 27);
    assert_eq!(words[0], vec![1, 1, 1]);
    assert_eq!(words[26], vec![3, 3, 3]);
}

#[test]
fn leading_digit_partition_covers_the_tree() {
    let mut all = Vec::new();
    enumerate_cylinders(4, 3, Budget::unlimited(), |w, _| all.push(w.to_vec())).unwrap();
    let mut parts = Vec::new();
    for range in [1..=1, 2..=3, 4..=4] {
        enumerate_cylinders_leading(4, 3, range, Budget::unlimited(), |w, _| parts.push(w.to_vec())).unwrap();
    }
    assert_eq!(all, parts);
}

#[test]
fn budget_refuses_large_trees() {
    let err = enumerate_cylinders(10, 12, Budget::nodes(1000), |_, _| {}).unwrap_err();
    assert!(matches!(err, cfdim_core::Error::BudgetExceeded { .. }));
}

#[test]
fn log_fold_matches_exact_continuants() {
    let mut exact = Vec::new();
    enumerate_cylinders(5, 4, Budget::unlimited(), |_, c| exact.push(c.q.to_f64().unwrap().ln())).unwrap();
    let folded = fold_log_cylinders(5, 4, 1..=5, Budget::unlimited(), Vec::new(), |mut acc, st| {
        acc.push(st.log_q);
        acc
    })
    .unwrap();
    assert_eq!(exact.len(), folded.len());
    for (a, b) in exact.iter().zip(&folded) {
        assert!((a - b).abs() < 1e-13);
    }
}

proptest! {
    #[test]
    fn convergents_are_reduced(d in digits()) {
        let c = continuants(&word(&d));
        prop_assert!(gcd(&c.p, &c.q).is_one());
        prop_assert!(gcd(&c.q, &c.q_prev).is_one());
    }

    #[test]
    fn q_grows_at_least_like_root_two(d in digits()) {
        // q_n >= 2^{(n-1)/2}
        let c = continuants(&word(&d));
        let n = d.len() as u64;
        if n >= 1 {
            let lower = BigUint::from(2u32).pow(((n - 1) / 2) as u32);
            prop_assert!(c.q >= lower);
            if (n - 1) % 2 == 1 {
                // odd exponent: q^2 >= 2^{n-1}
                prop_assert!(&c.q * &c.q >= BigUint::from(2u32).pow((n - 1) as u32));
            }
        }
    }

    #[test]
    fn q_is_bracketed_by_digit_product(d in digits()) {
        let c = continuants(&word(&d));
        let prod = d.iter().fold(BigUint::one(), |acc, &a| acc * a);
        prop_assert!(prod <= c.q);
        prop_assert!(c.q <= prod << d.len());
    }

    #[test]
    fn q_is_quasi_multiplicative(u in digits(), v in digits()) {
        // q(u) q(v) <= q(uv) <= 2 q(u) q(v)
        let (cu, cv) = (continuants(&word(&u)), continuants(&word(&v)));
        let cuv = continuants(&word(&u).concat(&word(&v)));
        let prod = &cu.q * &cv.q;
        prop_assert!(prod <= cuv.q);
        prop_assert!(cuv.q <= prod * 2u32);
    }

    #[test]
    fn cylinder_length_identity(d in prop::collection::vec(1u64..=50, 1..20)) {
        let c = continuants(&word(&d));
        let i = cylinder_interval(&word(&d));
        let q = BigInt::from(c.q.clone());
        let qq = BigInt::from(&c.q + &c.q_prev);
        prop_assert_eq!(i.length(), BigRational::new(BigInt::one(), &q * &qq));
        // 1/(2q^2) <= |I| <= 1/q^2
        let q2 = BigRational::from_integer(&q * &q);
        prop_assert!(i.length() * &q2 <= BigRational::one());
        prop_assert!(i.length() * &q2 * BigRational::from_integer(2.into()) >= BigRational::one());
    }

    #[test]
    fn children_partition_their_parent(d in prop::collection::vec(1u64..=9, 0..8)) {
        let parent = cylinder_interval(&word(&d));
        let mut total = BigRational::zero();
        for a in 1..=200u64 {
            let mut w = d.clone();
            w.push(a);
            let child = cylinder_interval(&word(&w));
            prop_assert!(child.left >= parent.left && child.right <= parent.right);
            total += child.length();
        }
        prop_assert!(total < parent.length());
        // digits above 200 cover less than 1/100 of the parent
        prop_assert!(total * rat(100, 99) >= parent.length());
    }

    #[test]
    fn incremental_log_tracks_exact_value(d in prop::collection::vec(1u64..=u32::MAX as u64, 1..60)) {
        let c = continuants(&word(&d));
        let exact = cfdim_core::numeric::ln_biguint(&c.q);
        prop_assert!((c.log_q - exact).abs() <= 1e-12 * exact.max(1.0));
    }

    #[test]
    fn digit_word_rejects_non_positive(d in prop::collection::vec(-5i64..=5, 1..10)) {
        let result = DigitWord::from_signed(&d);
        prop_assert_eq!(result.is_ok(), d.iter().all(|&x| x >= 1));
    }
}
