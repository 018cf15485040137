//! Covers and their order, width-dimension bounds on fibers, simplex
//! geometry, the face-avoidance condition on grid covers of `Delta_n^k`,
//! and lower-bound certificates for the mean dimension of the induced
//! factor map on measures.
//!
//! Covers live on finite grounds. `ord` is exact there; `D` is replaced by
//! the least order over a declared pool of refinements, which is an upper
//! bound for the true value.

mod certificate;
mod lebesgue;
mod psi;
mod simplex;

use std::collections::BTreeSet;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::entropy::separation_exponent;
use crate::error::{Error, Result};
use crate::group::{FiniteSubset, GroupElement};
use crate::rational::{dyadic, Q};
use crate::symbolic::{dh_exponent, fiber_points, CylinderSet, PeriodicPoint, SlidingBlockCode};

pub use certificate::{
    bound_value, choose_m, claim0_select_translates, delta_for, mdim_lower_certificate, ChainLink, DeltaChoice, MdimLowerCertificate,
    MdimParams, SpotCheck,
    BASE_PERIOD_LIMIT, ETA_DENOMINATOR,
};
pub use lebesgue::{
    lebesgue_condition_check, lebesgue_ord_oracle, LebesgueReport, LebesgueViolation, OracleSearch, EXHAUSTIVE_CELL_LIMIT,
};
pub use psi::{build_psi, claim1_decompose, claim2_bounds, Claim1Result, Claim2Result, Claim2Sample, PsiMap, PsiStructure, MAX_PSI_WITNESSES};
pub use simplex::{opposite_face, Face, ProductPoint, SimplexGrid, SimplexPoint};

/// A finite family of nonempty subsets of `0..ground` whose union is everything.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cover {
    ground: usize,
    elements: Vec<FixedBitSet>,
}

impl Cover {
    pub fn new(ground: usize, elements: Vec<Vec<usize>>) -> Result<Self> {
        let sets = elements
            .into_iter()
            .map(|e| {
                let mut s = FixedBitSet::with_capacity(ground);
                for i in e {
                    if i >= ground {
                        return Err(Error::invalid(format!("cover element mentions {i} outside a ground of {ground}")));
                    }
                    s.insert(i);
                }
                Ok(s)
            })
            .collect::<Result<_>>()?;
        Cover::from_bitsets(ground, sets)
    }

    pub fn from_bitsets(ground: usize, elements: Vec<FixedBitSet>) -> Result<Self> {
        let mut union = FixedBitSet::with_capacity(ground);
        for e in &elements {
            if e.len() != ground {
                return Err(Error::invalid("cover element built over a different ground"));
            }
            if e.is_clear() {
                return Err(Error::invalid("cover elements must be nonempty"));
            }
            union.union_with(e);
        }
        if union.count_ones(..) != ground {
            return Err(Error::invalid("cover elements do not cover the ground"));
        }
        Ok(Cover { ground, elements })
    }

    /// `{ground}`.
    pub fn trivial(ground: usize) -> Result<Self> {
        Cover::new(ground, vec![(0..ground).collect()])
    }

    /// Every point on its own.
    pub fn singletons(ground: usize) -> Result<Self> {
        Cover::new(ground, (0..ground).map(|i| vec![i]).collect())
    }

    pub fn ground(&self) -> usize {
        self.ground
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[FixedBitSet] {
        &self.elements
    }

    pub fn element(&self, i: usize) -> Vec<usize> {
        self.elements[i].ones().collect()
    }

    pub fn multiplicity(&self, x: usize) -> usize {
        self.elements.iter().filter(|e| e.contains(x)).count()
    }

    /// Whether every element of `self` lies in some element of `coarser`.
    pub fn refines(&self, coarser: &Cover) -> bool {
        self.ground == coarser.ground && self.elements.iter().all(|e| coarser.elements.iter().any(|c| e.is_subset(c)))
    }

    /// `alpha v beta`: the nonempty pairwise intersections.
    pub fn join(&self, other: &Cover) -> Result<Cover> {
        if self.ground != other.ground {
            return Err(Error::invalid("joining covers of different grounds"));
        }
        let mut out: Vec<FixedBitSet> = Vec::new();
        for a in &self.elements {
            for b in &other.elements {
                let mut c = a.clone();
                c.intersect_with(b);
                if !c.is_clear() && !out.contains(&c) {
                    out.push(c);
                }
            }
        }
        Cover::from_bitsets(self.ground, out)
    }
}

#[derive(Serialize, Deserialize)]
struct CoverWire {
    ground: usize,
    elements: Vec<Vec<usize>>,
}

impl Serialize for Cover {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        CoverWire { ground: self.ground, elements: (0..self.len()).map(|i| self.element(i)).collect() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Cover {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let w = CoverWire::deserialize(d)?;
        Cover::new(w.ground, w.elements).map_err(D::Error::custom)
    }
}

/// `max_x sum_U 1_U(x) - 1`.
pub fn ord(cover: &Cover) -> usize {
    (0..cover.ground).map(|x| cover.multiplicity(x)).max().unwrap_or(1).saturating_sub(1)
}

/// The least order over pool members refining `cover`.
pub fn min_ord_refinement(cover: &Cover, pool: &[Cover]) -> Result<usize> {
    if pool.is_empty() {
        return Err(Error::invalid("empty refinement pool"));
    }
    pool.iter()
        .filter(|b| b.refines(cover))
        .map(ord)
        .min()
        .ok_or_else(|| Error::invalid("no pool member refines the cover"))
}

/// On the vertex ground `0..=q` of the segment `[0, 1]` cut into `q`
/// cells: every cover by runs of consecutive cells, each run inside some
/// element of `cover` as a closed set. Adjacent runs share a vertex.
pub fn interval_chain_pool(cover: &Cover, q: usize) -> Result<Vec<Cover>> {
    if cover.ground != q + 1 || q == 0 || q > 20 {
        return Err(Error::invalid(format!("interval pool needs a ground of q + 1 vertices with 1 <= q <= 20, got {}", cover.ground)));
    }
    let mut pool = Vec::new();
    // Bit i of `cuts` places a run boundary at vertex i + 1.
    for cuts in 0u32..1 << (q - 1) {
        let mut runs = Vec::new();
        let mut start = 0;
        for v in 1..q {
            if cuts >> (v - 1) & 1 == 1 {
                runs.push((start..=v).collect::<Vec<_>>());
                start = v;
            }
        }
        runs.push((start..=q).collect());
        let candidate = Cover::new(q + 1, runs)?;
        if candidate.refines(cover) {
            pool.push(candidate);
        }
    }
    Ok(pool)
}

/// A coordinate map certifying an upper bound for `Widim_eps`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WidimBound {
    pub dimension: usize,
    pub coordinates: FiniteSubset,
}

/// Greedily picks coordinates until `x -> (x_s)_{s in C}` merges only
/// pairs with `d_H < eps`; each step takes the coordinate splitting the
/// most offending pairs, ties to the smallest.
///
/// Coordinates come from `H` thickened by the least `k` with `2^{-k} <= eps`,
/// which always suffices.
pub fn widim_upper(fiber: &[PeriodicPoint], eps: &Q, window: &FiniteSubset) -> Result<WidimBound> {
    if window.is_empty() {
        return Err(Error::invalid("widim needs a nonempty window"));
    }
    if *eps <= Q::from_integer(0.into()) {
        return Err(Error::invalid("widim needs eps > 0"));
    }
    let pts: Vec<&PeriodicPoint> = fiber.iter().collect::<BTreeSet<_>>().into_iter().collect();
    let k = separation_exponent(eps) as u32;
    // d_H(x, y) >= eps iff the first disagreement is within distance k of H.
    let mut bad: Vec<(usize, usize)> = Vec::new();
    for a in 0..pts.len() {
        for b in a + 1..pts.len() {
            if dh_exponent(window, pts[a], pts[b]).is_some_and(|e| (e as u32) < k || (e as u32 == k && *eps == dyadic(k))) {
                bad.push((a, b));
            }
        }
    }
    let candidates: Vec<i64> = window.thicken(k).iter().collect();
    let mut chosen = FiniteSubset::new();
    while !bad.is_empty() {
        let (best, split) = candidates
            .iter()
            .filter(|s| !chosen.contains(**s))
            .map(|&s| (s, bad.iter().filter(|&&(a, b)| pts[a].at(s) != pts[b].at(s)).count()))
            .max_by(|x, y| x.1.cmp(&y.1).then(y.0.cmp(&x.0)))
            .ok_or_else(|| Error::invalid("coordinates exhausted before separating"))?;
        if split == 0 {
            return Err(Error::invalid("no coordinate separates the remaining pairs"));
        }
        chosen.insert(best);
        bad.retain(|&(a, b)| pts[a].at(best) == pts[b].at(best));
    }
    Ok(WidimBound { dimension: chosen.len(), coordinates: chosen })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prop23Report {
    pub fiber_size: usize,
    /// Least order of a pool refinement of `alpha_H` on the fiber.
    pub left: usize,
    /// `widim_upper` of the fiber at the Lebesgue number.
    pub right: usize,
    pub holds: bool,
}

/// Compares `D(alpha_H | fiber)` with the width dimension of the fiber at
/// `lambda`, where `alpha` is a cover of `X` by cylinder sets and
/// `alpha_H = v_{s in H} s^{-1} alpha`. The refinement pool is `alpha_H`
/// itself and the partition into points.
pub fn prop23_inequality_check(
    code: &SlidingBlockCode,
    alpha: &[CylinderSet],
    lambda: &Q,
    window: &FiniteSubset,
    y: &PeriodicPoint,
    period: usize,
) -> Result<Prop23Report> {
    let fiber = fiber_points(code, y, period)?;
    if fiber.is_empty() {
        return Err(Error::EmptyFiber { period });
    }
    let n = fiber.len();
    let mut joined = Cover::trivial(n)?;
    for s in window.iter() {
        let shifted = Cover::new(
            n,
            alpha
                .iter()
                .map(|u| (0..n).filter(|&i| u.contains_shifted(GroupElement(s), &fiber[i])).collect::<Vec<_>>())
                .filter(|e| !e.is_empty())
                .collect(),
        )
        .map_err(|_| Error::invalid("alpha does not cover the fiber"))?;
        joined = joined.join(&shifted)?;
    }
    let left = min_ord_refinement(&joined, &[joined.clone(), Cover::singletons(n)?])?;
    let right = widim_upper(&fiber, lambda, window)?.dimension;
    Ok(Prop23Report { fiber_size: n, left, right, holds: left <= right })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;
    use crate::symbolic::SymbolicSystem;

    #[test]
    fn ord_examples() {
        let partition = Cover::new(4, vec![vec![0, 1], vec![2, 3]]).unwrap();
        assert_eq!(ord(&partition), 0);
        let doubled = Cover::new(3, vec![vec![0, 1, 2], vec![0, 1, 2]]).unwrap();
        assert_eq!(ord(&doubled), 1);
        // [0, 0.4), (0.3, 0.7), (0.6, 1] on the grid of step 1/20.
        let grid = |lo: f64, hi: f64, lo_open: bool, hi_open: bool| -> Vec<usize> {
            (0..=20)
                .filter(|&i| {
                    let x = i as f64 / 20.0;
                    (if lo_open { x > lo } else { x >= lo }) && (if hi_open { x < hi } else { x <= hi })
                })
                .collect()
        };
        let three = Cover::new(21, vec![grid(0.0, 0.4, false, true), grid(0.3, 0.7, true, true), grid(0.6, 1.0, true, false)]).unwrap();
        assert_eq!(ord(&three), 1);
        assert!(Cover::new(3, vec![vec![0, 1]]).is_err());
        assert!(Cover::new(3, vec![vec![0, 1, 2], vec![]]).is_err());
    }

    #[test]
    fn refinement_minimum() {
        let partition = Cover::new(4, vec![vec![0, 1], vec![2, 3]]).unwrap();
        assert_eq!(min_ord_refinement(&partition, &[partition.clone()]).unwrap(), 0);
        let doubled = Cover::new(5, vec![(0..5).collect(), (0..5).collect()]).unwrap();
        assert_eq!(min_ord_refinement(&doubled, &[Cover::singletons(5).unwrap(), doubled.clone()]).unwrap(), 0);
        assert!(min_ord_refinement(&doubled, &[]).is_err());
        // Three overlapping intervals on the segment cut into 10 cells.
        let alpha = Cover::new(11, vec![(0..=4).collect(), (3..=7).collect(), (6..=10).collect()]).unwrap();
        let pool = interval_chain_pool(&alpha, 10).unwrap();
        assert!(!pool.is_empty());
        assert_eq!(min_ord_refinement(&alpha, &pool).unwrap(), 1);
        assert!(min_ord_refinement(&alpha, &pool).unwrap() <= ord(&alpha));
    }

    #[test]
    fn widim_examples() {
        let single = [PeriodicPoint::parse("0").unwrap()];
        assert_eq!(widim_upper(&single, &q(3, 5), &FiniteSubset::interval(0, 4)).unwrap().dimension, 0);
        let full = SymbolicSystem::full_shift(2).unwrap();
        for n in 1..=5 {
            let pts = full.points_of_period(n).unwrap();
            let w = widim_upper(&pts, &q(3, 5), &FiniteSubset::interval(0, n)).unwrap();
            assert!(w.dimension <= n);
            assert_eq!(widim_upper(&pts, &q(3, 2), &FiniteSubset::interval(0, n)).unwrap().dimension, 0);
        }
        // At eps = 1/4 pairs differing next to the window must also be split.
        let pts = full.points_of_period(6).unwrap();
        let w = widim_upper(&pts, &q(1, 4), &FiniteSubset::interval(0, 2)).unwrap();
        assert!(w.coordinates.iter().all(|s| (-2..4).contains(&s)));
        for a in &pts {
            for b in &pts {
                if w.coordinates.iter().all(|s| a.at(s) == b.at(s)) {
                    assert!(crate::symbolic::metric_dh(&FiniteSubset::interval(0, 2), a, b).unwrap() < q(1, 4));
                }
            }
        }
    }

    #[test]
    fn prop23_examples() {
        let code = SlidingBlockCode::product_projection().unwrap();
        let alpha = vec![CylinderSet::at(0, &[0, 2]), CylinderSet::at(0, &[1, 3])];
        let y = PeriodicPoint::constant(0);
        let r = prop23_inequality_check(&code, &alpha, &q(1, 2), &FiniteSubset::interval(0, 3), &y, 3).unwrap();
        assert_eq!(r.fiber_size, 8);
        assert!(r.holds);
        let trivial = vec![CylinderSet::everything()];
        let r = prop23_inequality_check(&code, &trivial, &q(1, 2), &FiniteSubset::interval(0, 3), &y, 3).unwrap();
        assert_eq!(r.left, 0);
        let id = SlidingBlockCode::identity(SymbolicSystem::full_shift(2).unwrap()).unwrap();
        let r = prop23_inequality_check(&id, &[CylinderSet::at(0, &[1])], &q(1, 2), &FiniteSubset::interval(0, 3), &y, 3);
        assert!(r.is_err());
        let r = prop23_inequality_check(&id, &trivial, &q(1, 2), &FiniteSubset::interval(0, 3), &y, 3).unwrap();
        assert_eq!((r.fiber_size, r.left, r.right), (1, 0, 0));
    }
}
