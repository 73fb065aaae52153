use cfdim_core::cantor::*;
use cfdim_core::formulas::GrowthProfile;
use proptest::prelude::*;

fn unit(a: &[f64]) -> GrowthProfile {
    GrowthProfile::with_unit_constants(a.to_vec()).unwrap()
}

fn acceptance_config() -> CantorConfig {
    build_schedule(CantorParams::new(3, 2, unit(&[3.0, 2.0]), 1.0), 2).unwrap()
}

#[test]
fn acceptance_configuration_passes_at_depth_ten() {
    let config = acceptance_config();
    assert_eq!(config.n_k(), vec![3, 101]);
    let report = verify(&config, &VerifyOptions::new(10)).unwrap();
    assert!(report.passed(), "{:?}", report.failing_lemma());
    let consistency = report.consistency.as_ref().unwrap();
    assert!(consistency.max_violation.iter().flatten().all(|&v| v <= 1e-10));
    assert!(consistency.level_log_mass.iter().flatten().all(|&v| v.abs() <= 1e-10));
    for h in &report.holder {
        assert!(h.median >= report.tau - 0.05);
    }
    // larger 𝐝_j, larger typical exponent
    let (h0, h1) = (&report.holder[0], &report.holder[1]);
    assert_eq!(h0.bold_d < h1.bold_d, h0.median < h1.median);
}

#[test]
fn levels_before_the_first_growth_block_are_full() {
    let config = build_schedule(CantorParams::new(3, 4, unit(&[2.0]), 1.0), 1).unwrap();
    for n in 0..config.n_k()[0] as usize {
        assert_eq!(config.level_size(n).unwrap(), 3f64.powi(n as i32));
    }
    // each word of D_{n_1 - 1} has ⌈2 A^{n_1}⌉ - ⌈A^{n_1}⌉ = 64 - 32 children
    let n1 = config.n_k()[0] as usize;
    assert_eq!(n1, 5);
    assert_eq!(config.level_size(n1).unwrap(), 3f64.powi(4) * 32.0);
}

#[test]
fn padding_keeps_measure_and_has_one_child() {
    let config = build_padded(CantorParams::new(2, 2, unit(&[3.0]), 1.0), &[5, 11]).unwrap();
    assert_eq!(config.digit_range(3).unwrap(), (2, 2));
    let parent = config.log_measure(&[1, 2]).unwrap();
    let child = config.log_measure(&[1, 2, 2]).unwrap();
    assert_eq!(parent, child);
    assert_eq!(config.level_size(3).unwrap(), config.level_size(2).unwrap());
    let report = verify(&config, &VerifyOptions::new(7)).unwrap();
    assert!(report.passed(), "{:?}", report.failing_lemma());
    let gap = report.gap.unwrap();
    // positions 3 and 4 are padding: words of D_3 and D_4 have no siblings
    assert!(gap.levels.iter().filter(|l| l.skipped).map(|l| l.depth).eq([3, 4]));
}

#[test]
fn growth_siblings_share_the_mass_evenly() {
    let config = acceptance_config();
    let (lo, hi) = config.digit_range(3).unwrap();
    assert_eq!((lo, hi), (27, 53));
    let parent = config.log_measure(&[2, 1]).unwrap();
    for a in lo..=hi {
        let child = config.log_measure(&[2, 1, a]).unwrap();
        for j in 0..2 {
            assert!((child[j] - parent[j] + 27f64.ln()).abs() < 1e-14);
        }
    }
}

#[test]
fn single_growth_gap_example() {
    // M = 3, one block of length 1, growth digit at n_1 = 2 with A_0 = 3
    let config = build_with_ells(CantorParams::new(3, 1, unit(&[3.0]), 1.0), &[1]).unwrap();
    assert_eq!(config.n_k(), vec![2]);
    let gap = verify_gap(&config, 4).unwrap();
    assert!(gap.passed);
    assert!(gap.levels.iter().all(|l| l.pairs > 0));
}

#[test]
fn two_letter_literal_gap_counterexample() {
    let config = build_with_ells(CantorParams::new(2, 2, unit(&[3.0]), 1.0), &[3]).unwrap();
    let gap = verify_gap(&config, 1).unwrap();
    assert_eq!(gap.literal_counterexample, Some((vec![2], vec![1])));
    assert!(gap.passed);
}

#[test]
fn one_digit_toy_holder_exponent() {
    // M = 2, N = 1, m = 1, A_0 = 4: 𝐝_0 solves 4^{-s} + 16^{-s} = 1 (q_1 ∈ {1, 2})
    let config = build_schedule(CantorParams::new(2, 1, unit(&[4.0]), 1.0), 1).unwrap();
    let x = (5f64.sqrt() - 1.0) / 2.0; // x + x^2 = 1 with x = 4^{-s}
    let oracle = -x.ln() / 4f64.ln();
    assert!((config.bold_d[0] - oracle).abs() < 1e-12);
    assert!((config.tau() - oracle / 2.0).abs() < 1e-12);
    let medians: Vec<f64> = [8, 12, 16]
        .iter()
        .map(|&depth| holder_report(&config, 0, 2, depth).unwrap().median)
        .collect();
    assert!(medians.iter().all(|&m| m >= config.tau() - 0.05), "{medians:?}");
    // block digits shrink μ by an extra 4^{-𝐝_0}, so the typical exponent sits
    // above 𝐝_0 and settles as the horizon deepens
    assert!(medians.iter().all(|&m| m > oracle));
    let steps: Vec<f64> = medians.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    assert!(steps[1] < steps[0], "{medians:?}");
}

#[test]
fn constants_move_geometry_not_exponents() {
    let plain = build_schedule(CantorParams::new(3, 2, unit(&[3.0, 2.0]), 1.0), 2).unwrap();
    let scaled = GrowthProfile::new(vec![3.0, 2.0], vec![2.0, 3.0]).unwrap();
    let scaled = build_schedule(CantorParams::new(3, 2, scaled, 1.0), 2).unwrap();
    assert_eq!(plain.bold_d, scaled.bold_d);
    assert_ne!(plain.digit_range(3).unwrap(), scaled.digit_range(3).unwrap());
    assert!(verify(&scaled, &VerifyOptions::new(6)).unwrap().passed());
}

#[test]
fn refuses_oversized_trees() {
    let config = acceptance_config();
    let opts = VerifyOptions { budget: cfdim_core::continuants::Budget::nodes(1000), ..VerifyOptions::new(10) };
    assert!(matches!(verify(&config, &opts), Err(cfdim_core::Error::BudgetExceeded { .. })));
}

#[test]
fn dump_lists_every_node_once() {
    let config = acceptance_config();
    let mut out = Vec::new();
    let lines = write_dump(&config, 3, &mut out).unwrap();
    assert_eq!(lines as f64, (0..=3).map(|n| config.level_size(n).unwrap()).sum::<f64>());
    let text = String::from_utf8(out).unwrap();
    assert!(text.lines().all(|l| l.split('\t').count() == 5));
    let mut again = Vec::new();
    write_dump(&config, 3, &mut again).unwrap();
    assert_eq!(text.as_bytes(), again.as_slice());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn small_trees_are_consistent_and_separated(
        m_alpha in 2u64..4,
        n_block in 1usize..3,
        a in prop::collection::vec(1.5f64..3.0, 1..3),
        ells in prop::collection::vec(0u64..3, 1..3),
    ) {
        let config = build_with_ells(CantorParams::new(m_alpha, n_block, unit(&a), 1.0), &ells);
        // tiny bases can leave an empty growth range
        let Ok(config) = config else { return Ok(()) };
        let depth = 6;
        let report = match verify(&config, &VerifyOptions::new(depth)) {
            Ok(r) => r,
            Err(cfdim_core::Error::DegenerateRange { .. }) => return Ok(()),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        prop_assert!(report.passed(), "{:?}", report.failing_lemma());
    }

    #[test]
    fn measure_of_a_word_is_the_sum_over_its_children(w in prop::collection::vec(1u64..=3, 0..6)) {
        let config = acceptance_config();
        // only words of D_n
        let Ok(parent) = config.log_measure(&w) else { return Ok(()) };
        let (lo, hi) = config.digit_range(w.len() as u64 + 1).unwrap();
        for j in 0..2 {
            let sum: f64 = (lo..=hi)
                .map(|a| {
                    let mut child = w.clone();
                    child.push(a);
                    config.log_measure(&child).unwrap()[j].exp()
                })
                .sum();
            prop_assert!((sum.ln() - parent[j]).abs() < 1e-12);
        }
    }
}
