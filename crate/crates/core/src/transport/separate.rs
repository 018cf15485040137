//! Separating two distinct measures by open sets with disjoint closures.

use std::collections::BTreeMap;

use num::{One, Zero};
use serde::{Deserialize, Serialize};

use super::{measure_of_cylinder, EmpiricalMeasure};
use crate::error::{Error, Result};
use crate::rational::{q, Q};
use crate::symbolic::{CylinderSet, Symbol};

/// Open sets `A`, `B` with disjoint closures and `mu(A) + nu(B) > 1`.
///
/// `A = {f > r + delta}` and `B = {f < r - delta}` for the indicator `f` of
/// a union of cylinders on the window `[-radius, radius]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Separation {
    pub radius: u32,
    pub a: CylinderSet,
    pub b: CylinderSet,
    #[serde(with = "crate::rational::serde_q")]
    pub r: Q,
    #[serde(with = "crate::rational::serde_q")]
    pub delta: Q,
    #[serde(with = "crate::rational::serde_q")]
    pub mu_a: Q,
    #[serde(with = "crate::rational::serde_q")]
    pub nu_b: Q,
}

const MAX_RADIUS: u32 = 1 << 12;

/// Finds the least radius at which some central word has different mass
/// under `mu` and `nu`, and takes `A` to be the words heavier under `mu`.
pub fn separate_measures(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure) -> Result<Separation> {
    if mu == nu {
        return Err(Error::NoSeparation);
    }
    let longest = mu.support().chain(nu.support()).map(|x| x.period()).max().unwrap_or(1) as u32;
    for radius in 0..=longest.min(MAX_RADIUS) {
        let len = 2 * radius as usize + 1;
        let mut diff: BTreeMap<Vec<Symbol>, Q> = BTreeMap::new();
        for (x, w) in mu.atoms() {
            *diff.entry(x.window(-(radius as i64), len)).or_insert_with(Q::zero) += w;
        }
        for (x, w) in nu.atoms() {
            *diff.entry(x.window(-(radius as i64), len)).or_insert_with(Q::zero) -= w;
        }
        let heavier: Vec<Vec<Symbol>> = diff.into_iter().filter(|(_, d)| *d > Q::zero()).map(|(w, _)| w).collect();
        if heavier.is_empty() {
            continue;
        }
        let a = CylinderSet::new(-(radius as i64), len, heavier, false)?;
        let b = a.complemented();
        let mu_a = measure_of_cylinder(mu, |x| a.contains(x));
        let nu_b = measure_of_cylinder(nu, |x| b.contains(x));
        debug_assert!(&mu_a + &nu_b > Q::one());
        return Ok(Separation { radius, a, b, r: q(1, 2), delta: q(1, 4), mu_a, nu_b });
    }
    Err(Error::NoSeparation)
}
