use std::collections::BTreeSet;

use num::Zero;
use serde::{Deserialize, Serialize};

use super::{format_word, parse_word, Alphabet, PeriodicPoint, Symbol, SymbolMask};
use crate::error::{Error, Result};
use crate::group::GroupElement;
use crate::rational::{dyadic, Q};

const WINDOW_ENUMERATION_LIMIT: usize = 1 << 20;

/// A finite union of cylinders over one common window:
/// `{x : x_{offset..offset+len} in words}`, or its complement.
///
/// Cylinder sets are clopen, so closure-disjointness is plain disjointness.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CylinderSet {
    offset: i64,
    len: usize,
    words: BTreeSet<Vec<Symbol>>,
    complement: bool,
}

impl CylinderSet {
    pub fn new(offset: i64, len: usize, words: impl IntoIterator<Item = Vec<Symbol>>, complement: bool) -> Result<Self> {
        if len == 0 {
            return Err(Error::invalid("cylinder window must have positive length"));
        }
        let words: BTreeSet<_> = words.into_iter().collect();
        if let Some(w) = words.iter().find(|w| w.len() != len) {
            return Err(Error::invalid(format!(
                "cylinder word {} does not have window length {len}",
                format_word(w)
            )));
        }
        Ok(CylinderSet { offset, len, words, complement })
    }

    /// The whole space.
    pub fn everything() -> Self {
        CylinderSet { offset: 0, len: 1, words: BTreeSet::new(), complement: true }
    }

    /// `{x : x_position in symbols}`.
    pub fn at(position: i64, symbols: &[Symbol]) -> Self {
        CylinderSet {
            offset: position,
            len: 1,
            words: symbols.iter().map(|&s| vec![s]).collect(),
            complement: false,
        }
    }

    /// The open ball `{y : d(center, y) < 2^{-radius}}`, i.e. agreement on `[-radius, radius]`.
    pub fn ball(center: &PeriodicPoint, radius: u32) -> Self {
        let r = radius as i64;
        CylinderSet {
            offset: -r,
            len: 2 * radius as usize + 1,
            words: std::iter::once(center.window(-r, 2 * radius as usize + 1)).collect(),
            complement: false,
        }
    }

    pub fn complemented(&self) -> Self {
        CylinderSet { complement: !self.complement, ..self.clone() }
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty_window(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &BTreeSet<Vec<Symbol>> {
        &self.words
    }

    pub fn is_complement(&self) -> bool {
        self.complement
    }

    pub fn matches_window(&self, window: &[Symbol]) -> bool {
        self.words.contains(window) != self.complement
    }

    pub fn contains(&self, x: &PeriodicPoint) -> bool {
        self.matches_window(&x.window(self.offset, self.len))
    }

    /// `hx in U`, i.e. `x in h^{-1}U`.
    pub fn contains_shifted(&self, h: GroupElement, x: &PeriodicPoint) -> bool {
        self.matches_window(&x.window(h.0 + self.offset, self.len))
    }

    /// For single-position sets, the allowed symbols as a mask.
    pub fn position_mask(&self, alphabet: Alphabet) -> Option<SymbolMask> {
        if self.len != 1 {
            return None;
        }
        let mut mask = 0u64;
        for s in alphabet.symbols() {
            if self.matches_window(&[s]) {
                mask |= 1 << s;
            }
        }
        Some(mask)
    }

    fn span_with(&self, other: &CylinderSet) -> (i64, usize) {
        let lo = self.offset.min(other.offset);
        let hi = (self.offset + self.len as i64).max(other.offset + other.len as i64);
        (lo, (hi - lo) as usize)
    }

    fn words_on(&self, lo: i64, len: usize, alphabet: Alphabet) -> Result<Vec<Vec<Symbol>>> {
        let k = alphabet.size();
        let total = (k as f64).powi(len as i32);
        if total > WINDOW_ENUMERATION_LIMIT as f64 {
            return Err(Error::ResourceLimit(format!("window of length {len} over {k} symbols is too large")));
        }
        let mut out = Vec::new();
        let mut word = vec![0 as Symbol; len];
        let start = (self.offset - lo) as usize;
        loop {
            if self.matches_window(&word[start..start + self.len]) {
                out.push(word.clone());
            }
            let mut i = len;
            loop {
                if i == 0 {
                    return Ok(out);
                }
                i -= 1;
                word[i] += 1;
                if (word[i] as usize) < k {
                    break;
                }
                word[i] = 0;
            }
        }
    }

    pub fn is_disjoint(&self, other: &CylinderSet, alphabet: Alphabet) -> Result<bool> {
        let (lo, len) = self.span_with(other);
        let mine = self.words_on(lo, len, alphabet)?;
        let start = (other.offset - lo) as usize;
        Ok(mine.iter().all(|w| !other.matches_window(&w[start..start + other.len])))
    }

    pub fn is_nonempty(&self, alphabet: Alphabet) -> Result<bool> {
        Ok(!self.words_on(self.offset, self.len, alphabet)?.is_empty())
    }

    /// `inf {d(x, x') : x in self, x' in other}` over the full shift on `alphabet`.
    /// Points of a subshift can only be farther apart, so this is a lower bound there.
    pub fn distance_to(&self, other: &CylinderSet, alphabet: Alphabet) -> Result<Q> {
        let (lo, len) = self.span_with(other);
        let a = self.words_on(lo, len, alphabet)?;
        let b = other.words_on(lo, len, alphabet)?;
        if a.is_empty() || b.is_empty() {
            return Err(Error::invalid("distance to an empty cylinder set"));
        }
        let mut best: u64 = 0;
        for u in &a {
            for v in &b {
                let k = (0..len)
                    .filter(|&i| u[i] != v[i])
                    .map(|i| (lo + i as i64).unsigned_abs())
                    .min();
                match k {
                    None => return Ok(Q::zero()),
                    Some(k) => best = best.max(k),
                }
            }
        }
        Ok(dyadic(best as u32))
    }
}

#[derive(Serialize, Deserialize)]
struct CylinderWire {
    offset: i64,
    #[serde(default)]
    len: Option<usize>,
    words: Vec<String>,
    #[serde(default)]
    complement: bool,
}

impl Serialize for CylinderSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        CylinderWire {
            offset: self.offset,
            len: Some(self.len),
            words: self.words.iter().map(|w| format_word(w)).collect(),
            complement: self.complement,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for CylinderSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let w = CylinderWire::deserialize(d)?;
        let words: Vec<Vec<Symbol>> = w.words.iter().map(|s| parse_word(s)).collect::<Result<_>>().map_err(D::Error::custom)?;
        let len = match (w.len, words.first()) {
            (Some(l), _) => l,
            (None, Some(first)) => first.len(),
            (None, None) => return Err(D::Error::custom("cylinder with no words needs an explicit len")),
        };
        CylinderSet::new(w.offset, len, words, w.complement).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    fn pt(s: &str) -> PeriodicPoint {
        PeriodicPoint::parse(s).unwrap()
    }

    #[test]
    fn membership() {
        let u = CylinderSet::at(0, &[0, 2]);
        assert!(u.contains(&pt("0")) && u.contains(&pt("2")) && !u.contains(&pt("1")));
        assert!(u.contains_shifted(GroupElement(1), &pt("10")));
        assert!(!u.complemented().contains(&pt("0")));
        assert!(CylinderSet::everything().contains(&pt("3")));
        let b = CylinderSet::ball(&pt("0110"), 1);
        assert!(b.contains(&pt("0110")));
        assert!(!b.contains(&pt("0111")));
        assert_eq!(u.position_mask(Alphabet::new(4).unwrap()), Some(0b0101));
    }

    #[test]
    fn disjointness_and_distance() {
        let a2 = Alphabet::new(2).unwrap();
        let v1 = CylinderSet::at(0, &[0]);
        let v2 = CylinderSet::at(0, &[1]);
        assert!(v1.is_disjoint(&v2, a2).unwrap());
        assert!(!v1.is_disjoint(&CylinderSet::at(1, &[1]), a2).unwrap());
        assert_eq!(v1.distance_to(&v2, a2).unwrap(), q(1, 1));
        let w1 = CylinderSet::at(2, &[0]);
        let w2 = CylinderSet::at(2, &[1]);
        assert_eq!(w1.distance_to(&w2, a2).unwrap(), q(1, 4));
        assert_eq!(v1.distance_to(&CylinderSet::at(1, &[1]), a2).unwrap(), q(0, 1));
    }

    #[test]
    fn serde_roundtrip() {
        let u = CylinderSet::new(-1, 2, vec![vec![0, 1], vec![1, 1]], true).unwrap();
        let s = serde_json::to_string(&u).unwrap();
        let back: CylinderSet = serde_json::from_str(&s).unwrap();
        assert_eq!(back, u);
        let short: CylinderSet = serde_json::from_str(r#"{"offset":0,"words":["0","2"]}"#).unwrap();
        assert_eq!(short, CylinderSet::at(0, &[0, 2]));
        assert!(CylinderSet::new(0, 2, vec![vec![0]], false).is_err());
    }
}
