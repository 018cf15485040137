use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use relind_core::group::{FiniteSubset, FolnerWindow};
use relind_core::instances::{random_face, random_product_point, random_psi_structure};
use relind_core::meandim::{
    bound_value, build_psi, claim1_decompose, claim2_bounds, lebesgue_ord_oracle, mdim_lower_certificate, widim_upper,
    SimplexPoint,
};
use relind_core::rational::{q, Q};
use relind_core::symbolic::{fiber_points, CylinderSet, PeriodicPoint, SlidingBlockCode, SymbolicSystem};
use relind_core::transport::EmpiricalMeasure;

fn config() -> ProptestConfig {
    ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn psi_is_affine_in_each_block(seed in any::<u64>(), h in 1usize..=2, m in 1usize..=2, num in 0i64..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_psi_structure(&mut rng, h, m);
        let psi = build_psi(&s);
        let base = random_product_point(&mut rng, 1 << h, m);
        let i = rng.gen_range(0..m);
        let u = random_product_point(&mut rng, 1 << h, 1).component(0).clone();
        let v = random_product_point(&mut rng, 1 << h, 1).component(0).clone();
        let t = q(num, 6);
        let mixed = base.with_component(i, u.mix(&t, &v).unwrap()).unwrap();
        let left = psi.eval(&mixed).unwrap();
        let pu = psi.eval(&base.with_component(i, u).unwrap()).unwrap();
        let pv = psi.eval(&base.with_component(i, v).unwrap()).unwrap();
        prop_assert_eq!(left, EmpiricalMeasure::mixture(&t, &pu, &pv).unwrap());
    }

    #[test]
    fn psi_is_injective_on_vertices(seed in any::<u64>(), h in 1usize..=2, m in 1usize..=2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_psi_structure(&mut rng, h, m);
        let psi = build_psi(&s);
        let n = 1 << h;
        let mut images = std::collections::BTreeSet::new();
        for e in 0..1usize << (h * m) {
            let comps = (0..m).map(|i| SimplexPoint::vertex(n, s.pattern(e, i)).unwrap()).collect();
            let mu = psi.eval(&relind_core::meandim::ProductPoint::new(comps).unwrap()).unwrap();
            prop_assert_eq!(&mu, &EmpiricalMeasure::dirac(s.witnesses[e].clone()));
            images.insert(mu.atoms()[0].0.clone());
        }
        prop_assert_eq!(images.len(), 1 << (h * m));
    }

    #[test]
    fn claims_hold_on_random_structures(seed in any::<u64>(), h in 1usize..=2, m in 1usize..=2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_psi_structure(&mut rng, h, m);
        let t = random_product_point(&mut rng, 1 << h, m);
        let face = random_face(&mut rng, 1 << h);
        let i = rng.gen_range(0..m);
        let c1 = claim1_decompose(&s, &t, &face, i).unwrap();
        prop_assert_eq!(&c1.b1 + &c1.b2, q(1, 1));
        if let (Some(a), Some(b)) = (&c1.mu_prime, &c1.mu_double_prime) {
            prop_assert_eq!(EmpiricalMeasure::mixture(&c1.b1, a, b).unwrap(), c1.mu.clone());
        }
        let c2 = claim2_bounds(&s, &t, &face, i).unwrap();
        prop_assert!(c2.lower <= c2.upper);
        prop_assert!(c2.samples.iter().all(|x| x.distance >= c2.lower));
        prop_assert_eq!(c2.upper, c1.b2);
    }
}

#[test]
fn certificate_bound_recomputes() {
    let code = SlidingBlockCode::to_point(SymbolicSystem::full_shift(2).unwrap()).unwrap();
    let (v1, v2) = (CylinderSet::at(0, &[0]), CylinderSet::at(0, &[1]));
    for (h, n) in [(1, 48), (2, 80)] {
        let w = FolnerWindow::new(0, n).unwrap();
        let c = mdim_lower_certificate(&code, &v1, &v2, &q(1, 1), h, &w, n, 1 << 20).unwrap();
        assert_eq!(c.bound, bound_value(&c.params.r, c.params.h, c.params.window.len()));
        assert!(Q::from_integer((2 * c.m_n).into()) >= Q::from_integer(c.params.t_n.into()));
        c.verify(&code).unwrap();
    }
    assert_eq!(bound_value(&q(1, 1), 4, 256), q(1, 1));
    assert!(bound_value(&q(1, 1), 4, 256) < bound_value(&q(1, 1), 6, 256));
    assert!(bound_value(&q(1, 1), 6, 256) < bound_value(&q(1, 1), 8, 512));
}

/// Finite relative entropy forces zero relative mean dimension; on finite
/// windows this shows up as width dimension of fibers growing at most
/// linearly in the window size.
#[test]
fn fiber_width_grows_linearly() {
    let code = SlidingBlockCode::product_projection().unwrap();
    let y = PeriodicPoint::constant(0);
    for n in 1..=6 {
        let fiber = fiber_points(&code, &y, n).unwrap();
        let w = widim_upper(&fiber, &q(1, 2), &FiniteSubset::interval(0, n)).unwrap();
        assert!(w.dimension <= n, "n = {n}: widim {}", w.dimension);
    }
    let id = SlidingBlockCode::identity(SymbolicSystem::full_shift(2).unwrap()).unwrap();
    let w = FolnerWindow::new(0, 48).unwrap();
    let err = mdim_lower_certificate(&id, &CylinderSet::at(0, &[0]), &CylinderSet::at(0, &[1]), &q(1, 1), 1, &w, 48, 1 << 20)
        .unwrap_err();
    assert_eq!(err.kind(), "independence-shortfall");
}

#[test]
fn lebesgue_oracle_on_the_triangle() {
    let r = lebesgue_ord_oracle(3, 1, 4, 2000, 7).unwrap();
    assert!(!r.budget_exhausted || r.min_ord_found.is_some());
    if let Some(o) = r.min_ord_found {
        assert!(o >= 1);
    }
    let again = lebesgue_ord_oracle(3, 1, 4, 2000, 7).unwrap();
    assert_eq!(r, again);
}
