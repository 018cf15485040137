//! Extraction of a large set `I` on which a balanced family with large
//! per-pattern subsets realizes every pattern.

use std::collections::{BTreeMap, BTreeSet};

use num::ToPrimitive;
use serde::{Deserialize, Serialize};

use super::shatter::{combinations, shatter_witnesses, subset_mask};
use super::{full_mask, parse_pattern, pattern_string, restrict, IndExtractConfig, PatternFamily, MAX_EXACT_SHATTER};
use crate::error::{Error, Result};
use crate::group::FiniteSubset;
use crate::rational::Q;

/// Largest `|E|` for the exhaustive oracle.
pub const MAX_ORACLE_DOMAIN: usize = 8;

/// The pattern `sigma` (on `E`) realizing `omega` (on `I`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OmegaWitness {
    pub omega: String,
    pub sigma: String,
}

/// The counting choices made at one window size `w`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionStage {
    pub window_size: usize,
    /// The window `W_0` with the most patterns `sigma` having `W_0 in E_sigma`.
    pub w0: FiniteSubset,
    pub a_w0: usize,
    /// The restriction `sigma_0` to `E \ W_0` shared by the most of those patterns.
    pub sigma0: String,
    pub class_size: usize,
    /// `|S_0|`, the number of distinct restrictions to `W_0` in that class.
    pub s0_size: usize,
    /// `2^{theta2 |W_0|}`; a convenience float.
    pub sauer_threshold: f64,
    pub sauer_condition_met: bool,
    pub shattered_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionCertificate {
    pub e: FiniteSubset,
    pub i: FiniteSubset,
    pub witnesses: Vec<OmegaWitness>,
    #[serde(with = "crate::rational::serde_q")]
    pub ratio: Q,
    /// `floor(delta |E|)`.
    pub literal_window_size: usize,
    pub chosen_window_size: usize,
    pub stages: Vec<ExtractionStage>,
}

impl ExtractionCertificate {
    /// Table lookup: every `omega` on `I` appears once, with a `sigma` from the
    /// family that restricts to it and whose subset contains `I`.
    pub fn validate(&self, family: &PatternFamily, subsets: &BTreeMap<u64, FiniteSubset>) -> Result<()> {
        if family.domain() != &self.e {
            return Err(Error::InvalidCertificate("certificate domain differs from the family".into()));
        }
        let imask = subset_mask(&self.e, &self.i)?;
        let k = self.i.len();
        let omegas: BTreeSet<&str> = self.witnesses.iter().map(|w| w.omega.as_str()).collect();
        if self.witnesses.len() != 1usize << k || omegas.len() != self.witnesses.len() {
            return Err(Error::InvalidCertificate("witness table does not list [2]^I exactly once".into()));
        }
        for w in &self.witnesses {
            let omega = parse_pattern(&w.omega)?;
            let sigma = parse_pattern(&w.sigma)?;
            if w.omega.len() != k || w.sigma.len() != self.e.len() {
                return Err(Error::InvalidCertificate(format!("malformed witness {} / {}", w.omega, w.sigma)));
            }
            if !family.contains(sigma) {
                return Err(Error::InvalidCertificate(format!("{} is not in the family", w.sigma)));
            }
            if restrict(sigma, imask) != omega {
                return Err(Error::InvalidCertificate(format!("{} does not restrict to {}", w.sigma, w.omega)));
            }
            let sub = subsets.get(&sigma).ok_or_else(|| Error::InvalidCertificate(format!("no subset for {}", w.sigma)))?;
            if !self.i.is_subset(sub) {
                return Err(Error::InvalidCertificate(format!("I is not inside E_sigma for {}", w.sigma)));
            }
        }
        Ok(())
    }
}

fn subset_masks(family: &PatternFamily, subsets: &BTreeMap<u64, FiniteSubset>) -> Result<BTreeMap<u64, u64>> {
    let mut out = BTreeMap::new();
    for &sigma in family.patterns() {
        let sub = subsets
            .get(&sigma)
            .ok_or_else(|| Error::invalid(format!("no subset given for {}", pattern_string(sigma, family.domain().len()))))?;
        out.insert(sigma, subset_mask(family.domain(), sub)?);
    }
    Ok(out)
}

/// Whether every `omega` on `imask` is realized by some `sigma` with `I in E_sigma`.
fn realizes_all(masks: &BTreeMap<u64, u64>, imask: u64) -> bool {
    shatter_witnesses(masks.iter().filter(|(_, &e)| e & imask == imask).map(|(&s, _)| s), imask).is_some()
}

/// The oracle's validity predicate for a candidate `I`.
pub fn is_valid_extraction(family: &PatternFamily, subsets: &BTreeMap<u64, FiniteSubset>, i: &FiniteSubset) -> Result<bool> {
    Ok(realizes_all(&subset_masks(family, subsets)?, subset_mask(family.domain(), i)?))
}

fn check_hypotheses(family: &PatternFamily, subsets: &BTreeMap<u64, FiniteSubset>, cfg: &IndExtractConfig) -> Result<BTreeMap<u64, u64>> {
    cfg.validate()?;
    let n = family.domain().len();
    if n == 0 || n % 2 == 1 {
        return Err(Error::invalid(format!("|E| must be even and positive, got {n}")));
    }
    if family.is_empty() {
        return Err(Error::invalid("the pattern family is empty"));
    }
    if family.patterns().iter().any(|p| p.count_ones() as usize != n / 2) {
        return Err(Error::invalid("the family contains an unbalanced pattern"));
    }
    let balanced = super::binomial(n, n / 2);
    let size = Q::from_integer(family.len().into());
    if size <= &cfg.d * Q::from_integer(balanced.to_i64().expect("small binomial").into()) {
        return Err(Error::invalid(format!("|S'| = {} does not exceed d |S_E|", family.len())));
    }
    let masks = subset_masks(family, subsets)?;
    let bound = &cfg.tau * Q::from_integer(n.into());
    for (&sigma, &e) in &masks {
        if Q::from_integer(e.count_ones().into()) <= bound {
            return Err(Error::invalid(format!("|E_sigma| is not above tau |E| for {}", pattern_string(sigma, n))));
        }
    }
    Ok(masks)
}

/// Runs the counting argument at every window size from `floor(delta |E|)`
/// up to `|E|` and keeps the largest shattered set found.
///
/// At each size the window `W_0` maximizing `|A_W|` and the outer pattern
/// `sigma_0` maximizing its class are chosen with lexicographic tie-breaks;
/// the class restricted to `W_0` is then shattered exactly.
pub fn ind_extract(
    family: &PatternFamily,
    subsets: &BTreeMap<u64, FiniteSubset>,
    cfg: &IndExtractConfig,
) -> Result<ExtractionCertificate> {
    let masks = check_hypotheses(family, subsets, cfg)?;
    let n = family.domain().len();
    let elems = family.domain().elements();
    let literal = (&cfg.delta * Q::from_integer(n.into())).floor().to_integer().to_usize().expect("small window");
    let theta2 = cfg.theta2.to_f64().expect("finite");
    let mut stages = Vec::new();
    let mut best: Option<(usize, u64, BTreeMap<u64, u64>)> = None;
    for w in literal.max(1)..=n {
        let mut w0 = 0u64;
        let mut a_w0 = 0usize;
        for cand in combinations(n, w) {
            let a = masks.values().filter(|&&e| e & cand == cand).count();
            if a > a_w0 {
                a_w0 = a;
                w0 = cand;
            }
        }
        if a_w0 == 0 {
            continue;
        }
        let outside = full_mask(n) & !w0;
        let mut classes: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
        for (&sigma, &e) in &masks {
            if e & w0 == w0 {
                classes.entry(restrict(sigma, outside)).or_default().push(sigma);
            }
        }
        let (&sigma0, class) = classes.iter().max_by(|a, b| a.1.len().cmp(&b.1.len()).then(b.0.cmp(a.0))).expect("nonempty");
        let s0: BTreeSet<u64> = class.iter().map(|&s| restrict(s, w0)).collect();
        // Shatter S_0 on W_0, then lift the coordinates back to E.
        let positions: Vec<usize> = (0..n).filter(|&i| w0 >> i & 1 == 1).collect();
        let local = if w <= MAX_EXACT_SHATTER {
            (0..=w.min(63 - s0.len().leading_zeros() as usize))
                .rev()
                .find_map(|k| combinations(w, k).into_iter().find(|&m| shatter_witnesses(s0.iter().copied(), m).is_some()))
                .unwrap_or(0)
        } else {
            (0..w).fold(0u64, |m, c| {
                let g = m | 1 << c;
                if shatter_witnesses(s0.iter().copied(), g).is_some() {
                    g
                } else {
                    m
                }
            })
        };
        let imask = positions.iter().enumerate().filter(|(k, _)| local >> k & 1 == 1).fold(0u64, |m, (_, &i)| m | 1 << i);
        let threshold = 2f64.powf(theta2 * w as f64);
        stages.push(ExtractionStage {
            window_size: w,
            w0: positions.iter().map(|&i| elems[i]).collect(),
            a_w0,
            sigma0: pattern_string(sigma0, n - w),
            class_size: class.len(),
            s0_size: s0.len(),
            sauer_threshold: threshold,
            sauer_condition_met: s0.len() as f64 >= threshold,
            shattered_size: imask.count_ones() as usize,
        });
        if best.as_ref().map_or(true, |(_, m, _)| imask.count_ones() > m.count_ones()) {
            let witnesses = shatter_witnesses(class.iter().copied(), imask).expect("class realizes every omega");
            best = Some((w, imask, witnesses));
        }
    }
    let Some((chosen, imask, witnesses)) = best.filter(|(_, m, _)| *m != 0) else {
        return Err(Error::ExtractionFailed(format!("no nonempty I found for |E| = {n}")));
    };
    let k = imask.count_ones() as usize;
    let cert = ExtractionCertificate {
        e: family.domain().clone(),
        i: (0..n).filter(|&i| imask >> i & 1 == 1).map(|i| elems[i]).collect(),
        witnesses: witnesses
            .into_iter()
            .map(|(omega, sigma)| OmegaWitness { omega: pattern_string(omega, k), sigma: pattern_string(sigma, n) })
            .collect(),
        ratio: Q::new(k.into(), n.into()),
        literal_window_size: literal,
        chosen_window_size: chosen,
        stages,
    };
    cert.validate(family, subsets)?;
    Ok(cert)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleResult {
    pub max_size: usize,
    pub witness: FiniteSubset,
}

/// Exhaustive search over every `I` in `E` for the largest valid one.
pub fn ind_oracle(family: &PatternFamily, subsets: &BTreeMap<u64, FiniteSubset>) -> Result<OracleResult> {
    let n = family.domain().len();
    if n > MAX_ORACLE_DOMAIN {
        return Err(Error::ResourceLimit(format!("oracle domain {n} exceeds {MAX_ORACLE_DOMAIN}")));
    }
    if family.is_empty() {
        return Err(Error::invalid("the pattern family is empty"));
    }
    let masks = subset_masks(family, subsets)?;
    let elems = family.domain().elements();
    for k in (0..=n).rev() {
        if let Some(m) = combinations(n, k).into_iter().find(|&m| realizes_all(&masks, m)) {
            return Ok(OracleResult { max_size: k, witness: (0..n).filter(|&i| m >> i & 1 == 1).map(|i| elems[i]).collect() });
        }
    }
    unreachable!("the empty set is always valid for a nonempty family")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinatorics::balanced_patterns;
    use crate::rational::q;

    fn full_subsets(family: &PatternFamily) -> BTreeMap<u64, FiniteSubset> {
        family.patterns().iter().map(|&s| (s, family.domain().clone())).collect()
    }

    #[test]
    fn maximal_hypotheses() {
        for n in [4, 6, 8] {
            let fam = balanced_patterns(&FiniteSubset::interval(0, n)).unwrap();
            let subs = full_subsets(&fam);
            let cert = ind_extract(&fam, &subs, &IndExtractConfig::default()).unwrap();
            cert.validate(&fam, &subs).unwrap();
            // Every pattern on I extends to a balanced pattern exactly when |I| <= n/2.
            assert_eq!(cert.i.len(), n / 2);
            assert_eq!(ind_oracle(&fam, &subs).unwrap().max_size, n / 2);
        }
    }

    #[test]
    fn rejects_violated_hypotheses() {
        let fam = balanced_patterns(&FiniteSubset::interval(0, 4)).unwrap();
        let subs = full_subsets(&fam);
        let mut cfg = IndExtractConfig::default();
        cfg.tau = q(1, 2);
        assert!(ind_extract(&fam, &subs, &cfg).is_err());
        let small = PatternFamily::new(fam.domain().clone(), fam.patterns().iter().copied().take(3)).unwrap();
        assert!(ind_extract(&small, &subs, &IndExtractConfig::default()).is_err());
        let mut thin = subs.clone();
        thin.insert(0b0011, [0, 1].into_iter().collect());
        assert!(ind_extract(&fam, &thin, &IndExtractConfig::default()).is_err());
        assert!(ind_oracle(&PatternFamily::new(fam.domain().clone(), []).unwrap(), &subs).is_err());
    }

    #[test]
    fn tampering_is_detected() {
        let fam = balanced_patterns(&FiniteSubset::interval(0, 6)).unwrap();
        let subs = full_subsets(&fam);
        let cert = ind_extract(&fam, &subs, &IndExtractConfig::default()).unwrap();
        let mut bad = cert.clone();
        bad.witnesses[0].sigma = bad.witnesses[1].sigma.clone();
        assert!(bad.validate(&fam, &subs).is_err());
        let mut shrunk = subs.clone();
        let sigma = parse_pattern(&cert.witnesses[0].sigma).unwrap();
        shrunk.insert(sigma, FiniteSubset::new());
        assert!(cert.validate(&fam, &shrunk).is_err());
    }
}
