//! Shattered coordinate sets of a pattern family.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{binomial, pattern_string, restrict, PatternFamily};
use crate::error::{Error, Result};
use crate::group::FiniteSubset;

/// Largest domain for the exhaustive search.
pub const MAX_EXACT_SHATTER: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShatterMode {
    Exact,
    Greedy,
}

/// A set `I` with `S|_I = [2]^I`, with one pattern of `S` per trace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShatterResult {
    pub mode: ShatterMode,
    pub i: FiniteSubset,
    /// `(trace on I, a pattern of S with that trace)`.
    pub traces: Vec<(String, String)>,
}

impl ShatterResult {
    pub fn size(&self) -> usize {
        self.i.len()
    }

    /// Re-checks that every trace is present and realized by a member of `family`.
    pub fn validate(&self, family: &PatternFamily) -> Result<()> {
        let mask = subset_mask(family.domain(), &self.i)?;
        let k = self.i.len();
        if self.traces.len() != 1usize << k {
            return Err(Error::InvalidCertificate("wrong number of traces".into()));
        }
        for (t, (trace, pattern)) in self.traces.iter().enumerate() {
            let bits = super::parse_pattern(pattern)?;
            if *trace != pattern_string(t as u64, k) || !family.contains(bits) || restrict(bits, mask) != t as u64 {
                return Err(Error::InvalidCertificate(format!("trace {trace} is not realized by {pattern}")));
            }
        }
        Ok(())
    }
}

pub(crate) fn subset_mask(domain: &FiniteSubset, sub: &FiniteSubset) -> Result<u64> {
    sub.iter().try_fold(0u64, |m, e| match domain.index_of(e) {
        Some(i) => Ok(m | 1 << i),
        None => Err(Error::invalid(format!("{e} is outside the pattern domain"))),
    })
}

/// For each trace on `mask`, the least pattern with that trace, if `S` shatters `mask`.
pub(crate) fn shatter_witnesses(patterns: impl IntoIterator<Item = u64>, mask: u64) -> Option<BTreeMap<u64, u64>> {
    let mut seen = BTreeMap::new();
    for p in patterns {
        seen.entry(restrict(p, mask)).or_insert(p);
    }
    (seen.len() as u64 == 1u64 << mask.count_ones()).then_some(seen)
}

/// All `k`-subsets of `0..n` as masks, in lexicographic order of their index lists.
pub(crate) fn combinations(n: usize, k: usize) -> Vec<u64> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    if k > n {
        return out;
    }
    loop {
        out.push(idx.iter().fold(0u64, |m, &i| m | 1 << i));
        let Some(pos) = (0..k).rev().find(|&p| idx[p] < n - k + p) else { return out };
        idx[pos] += 1;
        for p in pos + 1..k {
            idx[p] = idx[p - 1] + 1;
        }
    }
}

/// `sum_{i <= k} C(n, i)`.
pub fn sauer_shelah_bound(n: usize, k: usize) -> u128 {
    (0..=k.min(n)).map(|i| binomial(n, i)).sum()
}

/// Exact mode returns a largest shattered set (the lexicographically first
/// among those of maximum size); greedy mode adds coordinates in order while
/// the family still shatters.
pub fn shatter_extract(family: &PatternFamily, mode: ShatterMode) -> Result<ShatterResult> {
    if family.is_empty() {
        return Err(Error::invalid("cannot shatter with an empty family"));
    }
    let n = family.domain().len();
    let pats = || family.patterns().iter().copied();
    let mask = match mode {
        ShatterMode::Exact => {
            if n > MAX_EXACT_SHATTER {
                return Err(Error::ResourceLimit(format!(
                    "exact shattering over {n} coordinates exceeds the limit {MAX_EXACT_SHATTER}"
                )));
            }
            let top = (usize::BITS - 1 - family.len().leading_zeros()) as usize;
            (0..=top.min(n))
                .rev()
                .find_map(|k| combinations(n, k).into_iter().find(|&m| shatter_witnesses(pats(), m).is_some()))
                .unwrap_or(0)
        }
        ShatterMode::Greedy => (0..n).fold(0u64, |m, c| {
            let grown = m | 1 << c;
            if shatter_witnesses(pats(), grown).is_some() {
                grown
            } else {
                m
            }
        }),
    };
    let witnesses = shatter_witnesses(pats(), mask).expect("mask shatters");
    let k = mask.count_ones() as usize;
    let elems = family.domain().elements();
    Ok(ShatterResult {
        mode,
        i: (0..n).filter(|&i| mask >> i & 1 == 1).map(|i| elems[i]).collect(),
        traces: witnesses.into_iter().map(|(t, p)| (pattern_string(t, k), pattern_string(p, n))).collect(),
    })
}
