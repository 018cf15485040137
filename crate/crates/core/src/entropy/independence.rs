//! Independence sets: every `{1,2}`-pattern on `J` is realized inside a
//! single fiber.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{FiniteSubset, GroupElement};
use crate::rational::Q;
use crate::symbolic::{CylinderSet, LiftProblem, PeriodicPoint, SlidingBlockCode};

/// Largest `|J|` for which all `2^|J|` patterns are enumerated.
pub const MAX_INDEPENDENCE_WINDOW: usize = 16;

/// The point realizing one pattern. `pattern[i]` is `'1'` or `'2'` for the
/// `i`-th element of `J` in increasing order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternWitness {
    pub pattern: String,
    pub point: PeriodicPoint,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndependenceCertificate {
    pub u1: CylinderSet,
    pub u2: CylinderSet,
    pub j: FiniteSubset,
    pub base_point: PeriodicPoint,
    pub witnesses: Vec<PatternWitness>,
}

pub(crate) fn pattern_string(bits: u64, len: usize) -> String {
    (0..len).map(|i| if bits >> i & 1 == 1 { '2' } else { '1' }).collect()
}

impl IndependenceCertificate {
    /// Re-checks every witness by direct membership, independently of the search.
    pub fn validate(&self, code: &SlidingBlockCode) -> Result<()> {
        let js = self.j.elements();
        if js.len() >= 64 {
            return Err(Error::InvalidCertificate("pattern window too large".into()));
        }
        let expected: BTreeSet<String> = (0..1u64 << js.len()).map(|b| pattern_string(b, js.len())).collect();
        let seen: BTreeSet<String> = self.witnesses.iter().map(|w| w.pattern.clone()).collect();
        if seen != expected || self.witnesses.len() != expected.len() {
            return Err(Error::InvalidCertificate("witness patterns do not cover [2]^J exactly once".into()));
        }
        for w in &self.witnesses {
            if !code.source().contains(&w.point) {
                return Err(Error::InvalidCertificate(format!("witness {} is outside the source", w.point)));
            }
            if code.apply(&w.point)? != self.base_point {
                return Err(Error::InvalidCertificate(format!("witness {} is outside the fiber", w.point)));
            }
            for (h, c) in js.iter().zip(w.pattern.chars()) {
                let u = if c == '1' { &self.u1 } else { &self.u2 };
                if !u.contains_shifted(GroupElement(*h), &w.point) {
                    return Err(Error::InvalidCertificate(format!(
                        "witness {} for pattern {} misses U_{c} at {h}",
                        w.point, w.pattern
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Tries to realize every pattern on `j` inside the fiber over `y` with
/// lifts of the given period. At most `budget` lift problems are solved.
pub fn certify_over_base(
    j: &FiniteSubset,
    u1: &CylinderSet,
    u2: &CylinderSet,
    code: &SlidingBlockCode,
    period: usize,
    y: &PeriodicPoint,
    budget: u64,
) -> Result<Option<IndependenceCertificate>> {
    let js = j.elements();
    if js.len() >= 64 || (1u64 << js.len()) > budget {
        return Err(Error::ResourceLimit(format!("2^{} pattern lifts exceed the budget of {budget}", js.len())));
    }
    let base = LiftProblem::new(code.source(), period)?.with_image(code, y)?;
    let mut witnesses = Vec::with_capacity(1 << js.len());
    for bits in 0..1u64 << js.len() {
        let mut problem = base.clone();
        for (i, &h) in js.iter().enumerate() {
            let u = if bits >> i & 1 == 1 { u2 } else { u1 };
            problem = problem.require(GroupElement(h), u);
        }
        match problem.solve() {
            Some(point) => witnesses.push(PatternWitness { pattern: pattern_string(bits, js.len()), point }),
            None => return Ok(None),
        }
    }
    Ok(Some(IndependenceCertificate {
        u1: u1.clone(),
        u2: u2.clone(),
        j: j.clone(),
        base_point: y.clone(),
        witnesses,
    }))
}

/// Searches the base points of the given period for one whose fiber
/// realizes every pattern on `j`.
pub fn is_independence_set(
    j: &FiniteSubset,
    u1: &CylinderSet,
    u2: &CylinderSet,
    code: &SlidingBlockCode,
    period: usize,
) -> Result<Option<IndependenceCertificate>> {
    if j.len() > MAX_INDEPENDENCE_WINDOW {
        return Err(Error::ResourceLimit(format!(
            "|J| = {} exceeds the pattern enumeration limit {MAX_INDEPENDENCE_WINDOW}",
            j.len()
        )));
    }
    for y in code.target().points_of_period(period)? {
        if let Some(cert) = certify_over_base(j, u1, u2, code, period, &y, u64::MAX)? {
            return Ok(Some(cert));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DensityResult {
    pub window: FiniteSubset,
    pub best: FiniteSubset,
    #[serde(with = "crate::rational::serde_q")]
    pub ratio: Q,
    pub certificate: Option<IndependenceCertificate>,
}

/// Largest `I` inside `window` that is an independence set.
///
/// The whole window is tried first; otherwise candidates are grown level by
/// level, keeping only sets all of whose one-smaller subsets passed (subsets
/// of independence sets are independence sets).
pub fn independence_density(
    u1: &CylinderSet,
    u2: &CylinderSet,
    code: &SlidingBlockCode,
    window: &FiniteSubset,
    period: usize,
) -> Result<DensityResult> {
    if window.is_empty() {
        return Err(Error::invalid("density window is empty"));
    }
    if window.len() > MAX_INDEPENDENCE_WINDOW {
        return Err(Error::ResourceLimit(format!(
            "|H| = {} exceeds the exact search limit {MAX_INDEPENDENCE_WINDOW}",
            window.len()
        )));
    }
    let ratio = |k: usize| Q::new(k.into(), window.len().into());
    if let Some(cert) = is_independence_set(window, u1, u2, code, period)? {
        return Ok(DensityResult { window: window.clone(), best: window.clone(), ratio: ratio(window.len()), certificate: Some(cert) });
    }
    let elems = window.elements();
    let mut best: (FiniteSubset, Option<IndependenceCertificate>) = (FiniteSubset::new(), None);
    let mut level: Vec<Vec<usize>> = (0..elems.len()).map(|i| vec![i]).collect();
    while !level.is_empty() {
        let mut passed: Vec<Vec<usize>> = Vec::new();
        for cand in &level {
            let set: FiniteSubset = cand.iter().map(|&i| elems[i]).collect();
            if let Some(cert) = is_independence_set(&set, u1, u2, code, period)? {
                if best.1.is_none() || set.len() > best.0.len() {
                    best = (set, Some(cert));
                }
                passed.push(cand.clone());
            }
        }
        let passed_set: BTreeSet<Vec<usize>> = passed.iter().cloned().collect();
        let mut next = Vec::new();
        for cand in &passed {
            let last = *cand.last().expect("nonempty candidate");
            for extra in last + 1..elems.len() {
                let mut grown = cand.clone();
                grown.push(extra);
                let all_subsets_passed = (0..grown.len() - 1).all(|drop| {
                    let mut sub = grown.clone();
                    sub.remove(drop);
                    passed_set.contains(&sub)
                });
                if all_subsets_passed {
                    next.push(grown);
                }
            }
        }
        level = next;
    }
    Ok(DensityResult { window: window.clone(), ratio: ratio(best.0.len()), best: best.0, certificate: best.1 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;
    use crate::symbolic::{Alphabet, SymbolicSystem};

    fn two_fixed_points() -> SymbolicSystem {
        SymbolicSystem::new(Alphabet::new(2).unwrap(), vec![vec![0, 1], vec![1, 0]]).unwrap()
    }

    #[test]
    fn product_projection_is_fully_independent() {
        let code = SlidingBlockCode::product_projection().unwrap();
        // Second coordinate 0 is symbols {0, 2}, second coordinate 1 is {1, 3}.
        let u1 = CylinderSet::at(0, &[0, 2]);
        let u2 = CylinderSet::at(0, &[1, 3]);
        let j: FiniteSubset = [0, 2, 3].into_iter().collect();
        let cert = is_independence_set(&j, &u1, &u2, &code, 4).unwrap().unwrap();
        assert_eq!(cert.witnesses.len(), 8);
        cert.validate(&code).unwrap();
        let d = independence_density(&u1, &u2, &code, &FiniteSubset::interval(0, 8), 8).unwrap();
        assert_eq!(d.ratio, q(1, 1));
        d.certificate.unwrap().validate(&code).unwrap();
    }

    #[test]
    fn two_fixed_points_only_singletons() {
        let sys = two_fixed_points();
        let code = SlidingBlockCode::to_point(sys.clone()).unwrap();
        let u1 = CylinderSet::ball(&PeriodicPoint::constant(0), 0);
        let u2 = CylinderSet::ball(&PeriodicPoint::constant(1), 0);
        assert!(is_independence_set(&[0].into_iter().collect(), &u1, &u2, &code, 1).unwrap().is_some());
        for a in 0..4 {
            for b in a + 1..5 {
                let j: FiniteSubset = [a, b].into_iter().collect();
                assert!(is_independence_set(&j, &u1, &u2, &code, 1).unwrap().is_none());
            }
        }
        let d = independence_density(&u1, &u2, &code, &FiniteSubset::interval(0, 8), 1).unwrap();
        assert_eq!(d.ratio, q(1, 8));
        let everything = CylinderSet::everything();
        let d = independence_density(&everything, &everything, &code, &FiniteSubset::interval(0, 8), 1).unwrap();
        assert_eq!(d.ratio, q(1, 1));
    }

    #[test]
    fn tampered_certificates_fail() {
        let code = SlidingBlockCode::product_projection().unwrap();
        let u1 = CylinderSet::at(0, &[0, 2]);
        let u2 = CylinderSet::at(0, &[1, 3]);
        let j: FiniteSubset = [0, 1].into_iter().collect();
        let cert = is_independence_set(&j, &u1, &u2, &code, 2).unwrap().unwrap();
        let mut bad = cert.clone();
        bad.witnesses.pop();
        assert!(bad.validate(&code).is_err());
        let mut bad = cert.clone();
        bad.witnesses.swap(0, 1);
        let (a, b) = (bad.witnesses[0].pattern.clone(), bad.witnesses[1].pattern.clone());
        bad.witnesses[0].pattern = b;
        bad.witnesses[1].pattern = a;
        assert!(bad.validate(&code).is_err());
        let mut bad = cert;
        bad.base_point = PeriodicPoint::parse("01").unwrap();
        assert!(bad.validate(&code).is_err());
    }

    #[test]
    fn oversize_windows_are_resource_errors() {
        let code = SlidingBlockCode::product_projection().unwrap();
        let e = CylinderSet::everything();
        let err = is_independence_set(&FiniteSubset::interval(0, 17), &e, &e, &code, 1).unwrap_err();
        assert!(err.is_resource());
    }
}
