//! Subshifts over finite alphabets, their periodic points, sliding block
//! codes between them, and the fixed metric `d(x, y) = 2^{-min{|i| : x_i != y_i}}`.

mod code;
mod cylinder;
mod lift;
mod metric;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::GroupElement;

pub use code::SlidingBlockCode;
pub use cylinder::CylinderSet;
pub use lift::{LiftProblem, SymbolMask};
pub use metric::{dh_exponent, first_difference, metric_d, metric_dh, SystemMetric};

pub type Symbol = u8;

/// Largest supported alphabet; symbols print as `0-9a-z`.
pub const MAX_ALPHABET: usize = 36;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Alphabet {
    size: usize,
}

impl Alphabet {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 || size > MAX_ALPHABET {
            return Err(Error::invalid(format!("alphabet size must be in 1..={MAX_ALPHABET}, got {size}")));
        }
        Ok(Alphabet { size })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn symbols(&self) -> impl Iterator<Item = Symbol> {
        0..self.size as Symbol
    }

    pub fn contains(&self, s: Symbol) -> bool {
        (s as usize) < self.size
    }
}

pub fn symbol_char(s: Symbol) -> char {
    std::char::from_digit(s as u32, 36).expect("symbol below 36")
}

pub fn parse_symbol(c: char) -> Result<Symbol> {
    c.to_digit(36)
        .map(|d| d as Symbol)
        .ok_or_else(|| Error::Parse(format!("bad symbol character {c:?}")))
}

pub fn parse_word(s: &str) -> Result<Vec<Symbol>> {
    s.chars().map(parse_symbol).collect()
}

pub fn format_word(w: &[Symbol]) -> String {
    w.iter().map(|&s| symbol_char(s)).collect()
}

/// A bi-infinite periodic sequence `x_i = word[i mod period]`.
///
/// The stored word is always of least period, read from index 0, so two
/// values are equal exactly when they are the same bi-infinite sequence.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PeriodicPoint {
    word: Vec<Symbol>,
}

impl PeriodicPoint {
    pub fn new(word: Vec<Symbol>) -> Result<Self> {
        if word.is_empty() {
            return Err(Error::invalid("a periodic point needs a nonempty word"));
        }
        Ok(Self::from_word_unchecked(word))
    }

    pub(crate) fn from_word_unchecked(mut word: Vec<Symbol>) -> Self {
        let p = least_period(&word);
        word.truncate(p);
        PeriodicPoint { word }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::new(parse_word(s)?)
    }

    pub fn constant(s: Symbol) -> Self {
        PeriodicPoint { word: vec![s] }
    }

    pub fn period(&self) -> usize {
        self.word.len()
    }

    pub fn word(&self) -> &[Symbol] {
        &self.word
    }

    pub fn at(&self, i: i64) -> Symbol {
        self.word[i.rem_euclid(self.word.len() as i64) as usize]
    }

    /// `x_{start}, ..., x_{start+len-1}`.
    pub fn window(&self, start: i64, len: usize) -> Vec<Symbol> {
        (0..len as i64).map(|k| self.at(start + k)).collect()
    }

    /// The word read over `n` consecutive indices from 0; `n` should be a
    /// multiple of the period for this to represent the same point.
    pub fn unrolled(&self, n: usize) -> Vec<Symbol> {
        self.window(0, n)
    }

    /// `(gx)_i = x_{i+g}`.
    pub fn shift(&self, g: GroupElement) -> PeriodicPoint {
        let p = self.word.len() as i64;
        let k = g.0.rem_euclid(p) as usize;
        let mut word = Vec::with_capacity(self.word.len());
        word.extend_from_slice(&self.word[k..]);
        word.extend_from_slice(&self.word[..k]);
        PeriodicPoint { word }
    }

    /// Least rotation of the word: identifies a point's shift orbit.
    pub fn orbit_key(&self) -> Vec<Symbol> {
        (0..self.word.len())
            .map(|k| self.shift(GroupElement(k as i64)).word)
            .min()
            .expect("nonempty")
    }

    pub fn max_symbol(&self) -> Symbol {
        *self.word.iter().max().expect("nonempty")
    }
}

fn least_period(word: &[Symbol]) -> usize {
    let n = word.len();
    (1..=n)
        .find(|&p| n % p == 0 && (p..n).all(|i| word[i] == word[i - p]))
        .unwrap_or(n)
}

impl fmt::Debug for PeriodicPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})^∞", format_word(&self.word))
    }
}

impl fmt::Display for PeriodicPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_word(&self.word))
    }
}

#[derive(Serialize, Deserialize)]
struct PointWire {
    word: String,
    period: usize,
}

impl Serialize for PeriodicPoint {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PointWire { word: format_word(&self.word), period: self.period() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for PeriodicPoint {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let w = PointWire::deserialize(d)?;
        let word = parse_word(&w.word).map_err(D::Error::custom)?;
        if word.len() != w.period {
            return Err(D::Error::custom(format!(
                "word {:?} has length {} but period is {}",
                w.word,
                word.len(),
                w.period
            )));
        }
        PeriodicPoint::new(word).map_err(D::Error::custom)
    }
}

/// A subshift given by an alphabet and a finite list of forbidden words.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SymbolicSystem {
    alphabet: Alphabet,
    forbidden: Vec<Vec<Symbol>>,
}

impl SymbolicSystem {
    pub fn new(alphabet: Alphabet, forbidden: Vec<Vec<Symbol>>) -> Result<Self> {
        for w in &forbidden {
            if w.is_empty() {
                return Err(Error::invalid("forbidden words must be nonempty"));
            }
            if let Some(&s) = w.iter().find(|&&s| !alphabet.contains(s)) {
                return Err(Error::invalid(format!(
                    "forbidden word {} uses symbol {s} outside an alphabet of size {}",
                    format_word(w),
                    alphabet.size()
                )));
            }
        }
        let forbidden: BTreeSet<_> = forbidden.into_iter().collect();
        Ok(SymbolicSystem { alphabet, forbidden: forbidden.into_iter().collect() })
    }

    pub fn full_shift(k: usize) -> Result<Self> {
        Self::new(Alphabet::new(k)?, Vec::new())
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn forbidden(&self) -> &[Vec<Symbol>] {
        &self.forbidden
    }

    pub fn max_forbidden_len(&self) -> usize {
        self.forbidden.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Whether the finite word contains no forbidden word as a factor.
    pub fn admits_word(&self, word: &[Symbol]) -> bool {
        word.iter().all(|&s| self.alphabet.contains(s))
            && self.forbidden.iter().all(|f| f.len() > word.len() || !word.windows(f.len()).any(|v| v == f.as_slice()))
    }

    /// Whether `x` avoids every forbidden word. Words are matched against
    /// the periodic unrolling with modular indexing, so forbidden words
    /// longer than the period are handled exactly.
    pub fn contains(&self, x: &PeriodicPoint) -> bool {
        if x.word().iter().any(|&s| !self.alphabet.contains(s)) {
            return false;
        }
        let p = x.period() as i64;
        self.forbidden
            .iter()
            .all(|w| (0..p).all(|start| (0..w.len()).any(|k| x.at(start + k as i64) != w[k])))
    }

    /// Every point of the system having `period` as a (not necessarily least) period.
    pub fn points_of_period(&self, period: usize) -> Result<Vec<PeriodicPoint>> {
        if period == 0 {
            return Err(Error::invalid("period must be positive"));
        }
        Ok(LiftProblem::new(self, period)?.enumerate())
    }
}

/// `(gx)_i = x_{i+g}`.
pub fn shift_action(g: GroupElement, x: &PeriodicPoint) -> PeriodicPoint {
    x.shift(g)
}

/// `pi(x)` for a sliding block code.
pub fn apply_factor(code: &SlidingBlockCode, x: &PeriodicPoint) -> Result<PeriodicPoint> {
    code.apply(x)
}

/// All period-`period` points `x` of the source with `code(x) = y`, sorted.
pub fn fiber_points(code: &SlidingBlockCode, y: &PeriodicPoint, period: usize) -> Result<Vec<PeriodicPoint>> {
    if period == 0 || period % y.period() != 0 {
        return Err(Error::invalid(format!(
            "fiber period {period} is not a multiple of the base period {}",
            y.period()
        )));
    }
    Ok(LiftProblem::new(code.source(), period)?.with_image(code, y)?.enumerate())
}
