//! Seeded instance generators shared by the test batteries and the CLI.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::combinatorics::{balanced_patterns, PatternFamily};
use crate::group::FiniteSubset;
use crate::meandim::{delta_for, Face, ProductPoint, PsiStructure, SimplexPoint};
use crate::rational::Q;
use crate::symbolic::{CylinderSet, PeriodicPoint, SlidingBlockCode, SymbolicSystem};
use crate::transport::EmpiricalMeasure;

/// A random point of the full shift on `alphabet` symbols with period in `1..=max_period`.
pub fn random_point<R: Rng>(rng: &mut R, alphabet: usize, max_period: usize) -> PeriodicPoint {
    let period = rng.gen_range(1..=max_period);
    let word = (0..period).map(|_| rng.gen_range(0..alphabet) as u8).collect();
    PeriodicPoint::new(word).expect("nonempty word")
}

/// A random measure with at most `max_atoms` atoms and small integer weight ratios.
pub fn random_measure<R: Rng>(rng: &mut R, alphabet: usize, max_period: usize, max_atoms: usize) -> EmpiricalMeasure {
    let count = rng.gen_range(1..=max_atoms);
    let raw: Vec<(PeriodicPoint, u32)> =
        (0..count).map(|_| (random_point(rng, alphabet, max_period), rng.gen_range(1..=6))).collect();
    let total: u32 = raw.iter().map(|(_, w)| w).sum();
    EmpiricalMeasure::new(raw.into_iter().map(|(x, w)| (x, Q::new(w.into(), total.into()))))
        .expect("normalized weights")
}

/// A random point of `Delta_n^k`. Each factor keeps a random nonempty
/// support, so faces and vertices come up regularly.
pub fn random_product_point<R: Rng>(rng: &mut R, n: usize, k: usize) -> ProductPoint {
    let comps = (0..k)
        .map(|_| {
            let mut raw: Vec<u32> = (0..n).map(|_| if rng.gen_bool(0.7) { rng.gen_range(1..=5) } else { 0 }).collect();
            if raw.iter().all(|&w| w == 0) {
                raw[rng.gen_range(0..n)] = 1;
            }
            let total: u32 = raw.iter().sum();
            SimplexPoint::new(raw.into_iter().map(|w| Q::new(w.into(), total.into())).collect()).expect("normalized")
        })
        .collect();
    ProductPoint::new(comps).expect("equal factors")
}

/// A random nonempty face of `Delta_n`, each vertex kept with probability 1/2.
pub fn random_face<R: Rng>(rng: &mut R, n: usize) -> Face {
    loop {
        let support: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.5)).collect();
        if let Ok(f) = Face::new(n, support) {
            return f;
        }
    }
}

/// A random embedding structure over the full 2-shift mapped to a point,
/// with `V_i = [i at 0]`, `m` blocks of `h` random positions inside
/// `[0, L)` for `L = 4hm + 4`, and witnesses of period `L` with random
/// background symbols.
pub fn random_psi_structure<R: Rng>(rng: &mut R, h: usize, m: usize) -> PsiStructure {
    let code = SlidingBlockCode::to_point(SymbolicSystem::full_shift(2).expect("alphabet")).expect("code");
    let len = 4 * h * m + 4;
    let mut positions: Vec<i64> = (0..len as i64).collect();
    positions.shuffle(rng);
    let translates: Vec<i64> = (0..m).map(|_| rng.gen_range(0..len as i64)).collect();
    let offsets: Vec<Vec<i64>> =
        (0..m).map(|i| positions[i * h..(i + 1) * h].iter().map(|p| p - translates[i]).collect()).collect();
    let (v1, v2) = (CylinderSet::at(0, &[0]), CylinderSet::at(0, &[1]));
    let all: Vec<i64> = offsets.iter().flatten().copied().collect();
    let delta = delta_for(&code, &v1, &v2, &all).expect("disjoint targets").delta;
    let witnesses = (0..1usize << (h * m))
        .map(|e| {
            let mut word: Vec<u8> = (0..len).map(|_| rng.gen_range(0..2)).collect();
            for (j, &p) in positions[..h * m].iter().enumerate() {
                word[p as usize] = (e >> j & 1) as u8;
            }
            PeriodicPoint::new(word).expect("nonempty word")
        })
        .collect();
    PsiStructure::new(
        &code,
        h,
        translates,
        offsets,
        witnesses,
        v1,
        v2,
        PeriodicPoint::constant(0),
        delta,
        FiniteSubset::interval(0, len),
    )
    .expect("consistent structure")
}

/// An instance meeting the extraction hypotheses at `d = 1/2`, `tau = 3/5`
/// on `E = [0, 6)`: at least 11 of the 20 balanced patterns, each with at
/// most 2 elements removed from its subset.
pub fn random_ind_instance<R: Rng>(rng: &mut R) -> (PatternFamily, BTreeMap<u64, FiniteSubset>) {
    let e = FiniteSubset::interval(0, 6);
    let mut all: Vec<u64> = balanced_patterns(&e).expect("small domain").patterns().iter().copied().collect();
    all.shuffle(rng);
    let size = rng.gen_range(11..=20);
    let family = PatternFamily::new(e.clone(), all[..size].iter().copied()).expect("patterns on E");
    let subsets = family
        .patterns()
        .iter()
        .map(|&s| {
            let drop = rng.gen_range(0..=2);
            let mut elems: Vec<i64> = e.iter().collect();
            elems.shuffle(rng);
            (s, elems[drop..].iter().copied().collect())
        })
        .collect();
    (family, subsets)
}

/// A family of between 1 and `max_patterns` uniformly random patterns on `[0, n)`.
pub fn random_family<R: Rng>(rng: &mut R, n: usize, max_patterns: usize) -> PatternFamily {
    let count = rng.gen_range(1..=max_patterns);
    let mask = (1u64 << n) - 1;
    PatternFamily::new(FiniteSubset::interval(0, n), (0..count).map(|_| rng.gen::<u64>() & mask)).expect("patterns on [0, n)")
}
