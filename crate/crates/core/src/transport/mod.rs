//! Finite-support probability measures on periodic points, push-forwards,
//! and exact Wasserstein-1 geometry.
//!
//! Two independent solvers compute the Wasserstein distance: a min-cost flow
//! on the transportation network ([`wasserstein1`]) and a simplex solve of
//! the Kantorovich–Rubinstein dual ([`kantorovich_dual`]). They share no code
//! beyond the distance matrix.

mod dual;
mod flow;
mod separate;

use std::collections::BTreeMap;

use num::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{FiniteSubset, GroupElement};
use crate::rational::{format_q, lcm_of_denominators, parse_q, Q};
use crate::symbolic::{format_word, parse_word, PeriodicPoint, SlidingBlockCode, SystemMetric};

pub use dual::{kantorovich_dual, lipschitz_dual, DualSolution};
pub use flow::{min_cost_transport, wasserstein1, TransportPlan};
pub use separate::{separate_measures, Separation};

/// A probability measure with finitely many atoms and rational weights.
///
/// Atoms are kept sorted by point and merged, so structural equality is
/// equality of measures.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EmpiricalMeasure {
    atoms: Vec<(PeriodicPoint, Q)>,
}

impl EmpiricalMeasure {
    /// Merges repeated points; weights must be positive and sum to 1.
    pub fn new(atoms: impl IntoIterator<Item = (PeriodicPoint, Q)>) -> Result<Self> {
        let mut merged: BTreeMap<PeriodicPoint, Q> = BTreeMap::new();
        for (x, w) in atoms {
            if !w.is_positive() {
                return Err(Error::invalid(format!("atom {x} has non-positive weight {}", format_q(&w))));
            }
            *merged.entry(x).or_insert_with(Q::zero) += w;
        }
        let total: Q = merged.values().sum();
        if !total.is_one() {
            return Err(Error::invalid(format!("weights sum to {} instead of 1", format_q(&total))));
        }
        Ok(EmpiricalMeasure { atoms: merged.into_iter().collect() })
    }

    pub fn dirac(x: PeriodicPoint) -> Self {
        EmpiricalMeasure { atoms: vec![(x, Q::one())] }
    }

    /// `(1/n) sum delta_{x_i}`, with repeated points counted with multiplicity.
    pub fn uniform(points: &[PeriodicPoint]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("uniform measure over no points"));
        }
        let w = Q::new(1.into(), points.len().into());
        Self::new(points.iter().map(|x| (x.clone(), w.clone())))
    }

    /// `t mu + (1 - t) nu` for `t` in `[0, 1]`.
    pub fn mixture(t: &Q, mu: &EmpiricalMeasure, nu: &EmpiricalMeasure) -> Result<Self> {
        if t.is_negative() || *t > Q::one() {
            return Err(Error::invalid(format!("mixture weight {} outside [0,1]", format_q(t))));
        }
        let s = Q::one() - t;
        let atoms = mu
            .atoms
            .iter()
            .map(|(x, w)| (x.clone(), w * t))
            .chain(nu.atoms.iter().map(|(x, w)| (x.clone(), w * &s)))
            .filter(|(_, w)| w.is_positive());
        Self::new(atoms)
    }

    pub fn atoms(&self) -> &[(PeriodicPoint, Q)] {
        &self.atoms
    }

    pub fn support(&self) -> impl Iterator<Item = &PeriodicPoint> {
        self.atoms.iter().map(|(x, _)| x)
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn weight_of(&self, x: &PeriodicPoint) -> Q {
        match self.atoms.binary_search_by(|(y, _)| y.cmp(x)) {
            Ok(i) => self.atoms[i].1.clone(),
            Err(_) => Q::zero(),
        }
    }
}

/// A map on points that can be pushed forward to measures.
pub trait PointMap {
    fn map_point(&self, x: &PeriodicPoint) -> Result<PeriodicPoint>;
}

impl PointMap for GroupElement {
    fn map_point(&self, x: &PeriodicPoint) -> Result<PeriodicPoint> {
        Ok(x.shift(*self))
    }
}

/// The induced factor map `mu -> mu o pi^{-1}` on measures.
#[derive(Debug, Clone, Copy)]
pub struct InducedMap<'a> {
    code: &'a SlidingBlockCode,
}

impl<'a> InducedMap<'a> {
    pub fn new(code: &'a SlidingBlockCode) -> Self {
        InducedMap { code }
    }

    pub fn code(&self) -> &SlidingBlockCode {
        self.code
    }

    pub fn apply(&self, mu: &EmpiricalMeasure) -> Result<EmpiricalMeasure> {
        pushforward(self, mu)
    }
}

impl PointMap for InducedMap<'_> {
    fn map_point(&self, x: &PeriodicPoint) -> Result<PeriodicPoint> {
        self.code.apply(x)
    }
}

pub fn pushforward(map: &impl PointMap, mu: &EmpiricalMeasure) -> Result<EmpiricalMeasure> {
    let mut atoms = Vec::with_capacity(mu.len());
    for (x, w) in &mu.atoms {
        atoms.push((map.map_point(x)?, w.clone()));
    }
    EmpiricalMeasure::new(atoms)
}

/// `mu(S)` for a decidable point predicate `S`.
pub fn measure_of_cylinder(mu: &EmpiricalMeasure, predicate: impl Fn(&PeriodicPoint) -> bool) -> Q {
    mu.atoms.iter().filter(|(x, _)| predicate(x)).map(|(_, w)| w).sum()
}

/// `W_{window}(mu, nu) = max_{s in window} W(s mu, s nu)`.
pub fn wasserstein_window(
    metric: &SystemMetric,
    window: &FiniteSubset,
    mu: &EmpiricalMeasure,
    nu: &EmpiricalMeasure,
) -> Result<Q> {
    if window.is_empty() {
        return Err(Error::invalid("window metric over an empty window"));
    }
    let mut best = Q::zero();
    for s in window.iter() {
        let g = GroupElement(s);
        let (value, _) = wasserstein1(metric, &pushforward(&g, mu)?, &pushforward(&g, nu)?)?;
        if value > best {
            best = value;
        }
    }
    Ok(best)
}

/// A pair of measures, a candidate member of the relation `R_pi~`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasurePair {
    pub first: EmpiricalMeasure,
    pub second: EmpiricalMeasure,
}

impl MeasurePair {
    /// Whether both measures have the same push-forward under `code`.
    pub fn in_relation(&self, code: &SlidingBlockCode) -> Result<bool> {
        let map = InducedMap::new(code);
        Ok(map.apply(&self.first)? == map.apply(&self.second)?)
    }
}

/// A pair in `R_pi~_n`: both measures written as `(1/n) sum delta_{x_i}`.
///
/// The lists are sorted by `(pi(x), x)`, so `pi(first[i]) = pi(second[i])`
/// for every `i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UniformRepresentation {
    pub n: usize,
    pub first: Vec<PeriodicPoint>,
    pub second: Vec<PeriodicPoint>,
    #[serde(with = "crate::rational::serde_q")]
    pub distance: Q,
}

/// Rewrites a rational pair in `R_pi~` as a pair of uniform measures on `n`
/// atoms (with multiplicity), `n` the lcm of all weight denominators. The
/// representation is exact, so the reported distance is 0.
pub fn approximate_in_rn(pair: &MeasurePair, code: &SlidingBlockCode, eps: &Q) -> Result<UniformRepresentation> {
    if !eps.is_positive() {
        return Err(Error::invalid("approximation tolerance must be positive"));
    }
    if !pair.in_relation(code)? {
        return Err(Error::invalid("pair is not in the relation: push-forwards differ"));
    }
    let lcm = lcm_of_denominators(pair.first.atoms.iter().chain(&pair.second.atoms).map(|(_, w)| w));
    let n: usize = lcm
        .try_into()
        .map_err(|_| Error::ResourceLimit("weight denominators are too large to expand".into()))?;
    let expand = |mu: &EmpiricalMeasure| -> Result<Vec<PeriodicPoint>> {
        let mut out = Vec::with_capacity(n);
        for (x, w) in &mu.atoms {
            let count = w * Q::from_integer(n.into());
            let count: usize = count.to_integer().try_into().expect("multiplicity fits");
            let image = code.apply(x)?;
            out.extend(std::iter::repeat((image, x.clone())).take(count));
        }
        out.sort();
        Ok(out.into_iter().map(|(_, x)| x).collect())
    };
    Ok(UniformRepresentation { n, first: expand(&pair.first)?, second: expand(&pair.second)?, distance: Q::zero() })
}

#[derive(Serialize, Deserialize)]
struct AtomWire {
    word: String,
    /// Length of `word`; optional on input.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    period: Option<usize>,
    weight: String,
}

#[derive(Serialize, Deserialize)]
struct MeasureWire {
    atoms: Vec<AtomWire>,
}

impl Serialize for EmpiricalMeasure {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MeasureWire {
            atoms: self
                .atoms
                .iter()
                .map(|(x, w)| AtomWire { word: format_word(x.word()), period: Some(x.period()), weight: format_q(w) })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for EmpiricalMeasure {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let wire = MeasureWire::deserialize(d)?;
        let mut atoms = Vec::with_capacity(wire.atoms.len());
        for a in wire.atoms {
            let word = parse_word(&a.word).map_err(D::Error::custom)?;
            if let Some(p) = a.period.filter(|&p| p != word.len()) {
                return Err(D::Error::custom(format!("word {:?} does not have period {p}", a.word)));
            }
            let x = PeriodicPoint::new(word).map_err(D::Error::custom)?;
            atoms.push((x, parse_q(&a.weight).map_err(D::Error::custom)?));
        }
        EmpiricalMeasure::new(atoms).map_err(D::Error::custom)
    }
}
