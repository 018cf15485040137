use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use relind_core::combinatorics::{
    balanced_patterns, extract_base_independence, ind_extract, ind_oracle, is_valid_extraction, sauer_shelah_bound, shatter_extract, IndExtractConfig,
    MeasureIndependenceData, PatternFamily, ShatterMode,
};
use relind_core::group::FiniteSubset;
use relind_core::instances::random_ind_instance;
use relind_core::rational::q;
use relind_core::symbolic::{CylinderSet, PeriodicPoint, SlidingBlockCode};

#[test]
fn extraction_against_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let cfg = IndExtractConfig::default();
    let mut at_least_two = 0;
    for _ in 0..100 {
        let (family, subsets) = random_ind_instance(&mut rng);
        let oracle = ind_oracle(&family, &subsets).unwrap();
        let cert = ind_extract(&family, &subsets, &cfg).unwrap();
        cert.validate(&family, &subsets).unwrap();
        assert!(is_valid_extraction(&family, &subsets, &cert.i).unwrap());
        assert!(is_valid_extraction(&family, &subsets, &oracle.witness).unwrap());
        assert!(cert.i.len() <= oracle.max_size);
        if cert.i.len() >= 2 {
            at_least_two += 1;
        }
    }
    assert!(at_least_two > 0);
}

/// Measure-level data on the product projection with `E = [0, 6)`, `L = 2`,
/// `a1 = 3/5`, `a2 = 9/20`. The atom over `y_1 = 0` realizes `sigma`
/// exactly; the atom over `y_2 = 1` has its fiber bit cleared at the
/// `noise[sigma]`-th position where `sigma = 2`, if any.
fn noisy_data(noise: &BTreeMap<u64, Option<usize>>) -> MeasureIndependenceData {
    let n = 6;
    let e = FiniteSubset::interval(0, n);
    let atom = |sigma: u64, base: u8| PeriodicPoint::new((0..n).map(|k| 2 * base + (sigma >> k & 1) as u8).collect()).unwrap();
    let atoms = balanced_patterns(&e)
        .unwrap()
        .patterns()
        .iter()
        .map(|&s| {
            let twos: Vec<usize> = (0..n).filter(|k| s >> k & 1 == 1).collect();
            let noisy = match noise.get(&s).copied().flatten() {
                Some(j) => s & !(1 << twos[j % twos.len()]),
                None => s,
            };
            (relind_core::combinatorics::pattern_string(s, n), vec![atom(s, 0), atom(noisy, 1)])
        })
        .collect();
    MeasureIndependenceData {
        e,
        a1: CylinderSet::at(0, &[0, 2]),
        a2: CylinderSet::at(0, &[1, 3]),
        mass1: q(3, 5),
        mass2: q(9, 20),
        base_points: vec![PeriodicPoint::constant(0), PeriodicPoint::constant(1)],
        atoms,
    }
}

#[test]
fn pipeline_end_to_end() {
    let code = SlidingBlockCode::product_projection().unwrap();
    let patterns = balanced_patterns(&FiniteSubset::interval(0, 6)).unwrap();
    let noise = patterns.patterns().iter().enumerate().map(|(k, &s)| (s, (k % 2 == 0).then_some(k))).collect();
    let out = extract_base_independence(&noisy_data(&noise), &code).unwrap();
    assert_eq!(out.b, q(41, 40));
    assert_eq!(out.d, q(1, 39));
    assert_eq!(out.tau, q(41, 80));
    assert!(out.rows.iter().all(|r| r.mass_h > out.d));
    assert!(!out.certificate.j.is_empty());
    out.certificate.validate(&code).unwrap();
    assert_eq!(out.cross_checked, Some(true));
}

fn family_on(n: usize, patterns: &[u64]) -> PatternFamily {
    PatternFamily::new(FiniteSubset::interval(0, n), patterns.iter().map(|p| p & ((1 << n) - 1))).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn greedy_never_beats_exact(n in 1usize..=10, patterns in prop::collection::vec(any::<u64>(), 1..80)) {
        let family = family_on(n, &patterns);
        let exact = shatter_extract(&family, ShatterMode::Exact).unwrap();
        let greedy = shatter_extract(&family, ShatterMode::Greedy).unwrap();
        exact.validate(&family).unwrap();
        greedy.validate(&family).unwrap();
        prop_assert!(greedy.size() <= exact.size());
        prop_assert!(family.len() as u128 <= sauer_shelah_bound(n, exact.size()));
    }

    #[test]
    fn pipeline_certifies_under_noise(choices in prop::collection::vec(prop::option::of(0usize..3), 20)) {
        let code = SlidingBlockCode::product_projection().unwrap();
        let patterns = balanced_patterns(&FiniteSubset::interval(0, 6)).unwrap();
        let noise = patterns.patterns().iter().copied().zip(choices).collect();
        let out = extract_base_independence(&noisy_data(&noise), &code).unwrap();
        prop_assert!(!out.certificate.j.is_empty());
        prop_assert!(out.certificate.validate(&code).is_ok());
    }

    #[test]
    fn extraction_always_passes_oracle_predicate(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (family, subsets) = random_ind_instance(&mut rng);
        let cert = ind_extract(&family, &subsets, &IndExtractConfig::default()).unwrap();
        prop_assert!(is_valid_extraction(&family, &subsets, &cert.i).unwrap());
    }
}
