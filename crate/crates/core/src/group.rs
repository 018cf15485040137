//! The acting group, fixed to the integers, and its finite windows.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::{Add, Neg};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{q, Q};

/// An element of the acting group Z. Composition is addition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GroupElement(pub i64);

impl GroupElement {
    pub const IDENTITY: GroupElement = GroupElement(0);

    pub fn inverse(self) -> Self {
        GroupElement(-self.0)
    }
}

impl Add for GroupElement {
    type Output = GroupElement;
    fn add(self, rhs: Self) -> Self {
        GroupElement(self.0 + rhs.0)
    }
}

impl Neg for GroupElement {
    type Output = GroupElement;
    fn neg(self) -> Self {
        self.inverse()
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// The interval `{start, ..., start + length - 1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FolnerWindow {
    start: i64,
    length: usize,
}

impl FolnerWindow {
    pub fn new(start: i64, length: usize) -> Result<Self> {
        if length == 0 {
            return Err(Error::invalid("window length must be at least 1"));
        }
        Ok(FolnerWindow { start, length })
    }

    pub fn start(&self) -> i64 {
        self.start
    }

    pub fn len(&self) -> usize {
        self.length
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, g: GroupElement) -> bool {
        g.0 >= self.start && g.0 < self.start + self.length as i64
    }

    pub fn iter(&self) -> impl Iterator<Item = GroupElement> {
        (self.start..self.start + self.length as i64).map(GroupElement)
    }

    pub fn to_subset(&self) -> FiniteSubset {
        FiniteSubset::from_iter(self.start..self.start + self.length as i64)
    }
}

/// The canonical Følner sequence of Z: `G_n = {0, ..., n-1}`.
pub fn folner_window(n: usize) -> Result<FolnerWindow> {
    if n == 0 {
        return Err(Error::invalid("folner_window needs n >= 1"));
    }
    FolnerWindow::new(0, n)
}

/// A finite subset of Z kept sorted and duplicate-free.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FiniteSubset(BTreeSet<i64>);

impl FiniteSubset {
    pub fn new() -> Self {
        FiniteSubset(BTreeSet::new())
    }

    pub fn interval(start: i64, length: usize) -> Self {
        FiniteSubset::from_iter(start..start + length as i64)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, g: i64) -> bool {
        self.0.contains(&g)
    }

    pub fn insert(&mut self, g: i64) -> bool {
        self.0.insert(g)
    }

    pub fn iter(&self) -> impl DoubleEndedIterator<Item = i64> + ExactSizeIterator + '_ {
        self.0.iter().copied()
    }

    pub fn elements(&self) -> Vec<i64> {
        self.0.iter().copied().collect()
    }

    pub fn min(&self) -> Option<i64> {
        self.0.first().copied()
    }

    pub fn max(&self) -> Option<i64> {
        self.0.last().copied()
    }

    /// `gW = {g + w : w in W}`.
    pub fn translate(&self, g: GroupElement) -> FiniteSubset {
        FiniteSubset(self.0.iter().map(|w| w + g.0).collect())
    }

    pub fn union(&self, other: &FiniteSubset) -> FiniteSubset {
        FiniteSubset(self.0.union(&other.0).copied().collect())
    }

    pub fn intersection(&self, other: &FiniteSubset) -> FiniteSubset {
        FiniteSubset(self.0.intersection(&other.0).copied().collect())
    }

    pub fn difference(&self, other: &FiniteSubset) -> FiniteSubset {
        FiniteSubset(self.0.difference(&other.0).copied().collect())
    }

    pub fn is_subset(&self, other: &FiniteSubset) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn is_disjoint(&self, other: &FiniteSubset) -> bool {
        self.0.is_disjoint(&other.0)
    }

    /// All integers within distance `radius` of the set.
    pub fn thicken(&self, radius: u32) -> FiniteSubset {
        let r = radius as i64;
        FiniteSubset(self.0.iter().flat_map(|&w| (w - r)..=(w + r)).collect())
    }

    /// Position of `g` in sorted order.
    pub fn index_of(&self, g: i64) -> Option<usize> {
        self.0.iter().position(|&w| w == g)
    }
}

impl FromIterator<i64> for FiniteSubset {
    fn from_iter<T: IntoIterator<Item = i64>>(iter: T) -> Self {
        FiniteSubset(iter.into_iter().collect())
    }
}

impl From<FolnerWindow> for FiniteSubset {
    fn from(w: FolnerWindow) -> Self {
        w.to_subset()
    }
}

impl fmt::Display for FiniteSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, g) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{g}")?;
        }
        write!(f, "}}")
    }
}

/// `|(W \ gW) ∪ (gW \ W)| / |W|`, exactly.
pub fn folner_defect(window: &FiniteSubset, g: GroupElement) -> Result<Q> {
    if window.is_empty() {
        return Err(Error::invalid("folner_defect of an empty window"));
    }
    let moved = window.translate(g);
    let sym = window.difference(&moved).len() + moved.difference(window).len();
    Ok(q(sym as i64, window.len() as i64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn windows() {
        assert_eq!(folner_window(1).unwrap().to_subset().elements(), vec![0]);
        assert_eq!(folner_window(8).unwrap().to_subset().elements(), (0..8).collect::<Vec<_>>());
        assert_eq!(folner_window(3).unwrap().len(), 3);
        assert!(folner_window(0).is_err());
        let w = FolnerWindow::new(-2, 3).unwrap();
        assert!(w.contains(GroupElement(-2)) && w.contains(GroupElement(0)));
        assert!(!w.contains(GroupElement(1)) && !w.contains(GroupElement(-3)));
    }

    #[test]
    fn defect_examples() {
        let w = FiniteSubset::interval(0, 8);
        assert_eq!(folner_defect(&w, GroupElement(0)).unwrap(), q(0, 1));
        assert_eq!(folner_defect(&w, GroupElement(1)).unwrap(), q(2, 8));
        for n in [8usize, 16, 32] {
            let w = FiniteSubset::interval(0, n);
            assert_eq!(folner_defect(&w, GroupElement(1)).unwrap(), q(2, n as i64));
        }
        assert!(folner_defect(&FiniteSubset::new(), GroupElement(1)).is_err());
    }

    #[test]
    fn defect_closed_form_and_symmetry() {
        for n in 1..=64usize {
            let w = FiniteSubset::interval(0, n);
            for g in -4i64..=4 {
                let d = folner_defect(&w, GroupElement(g)).unwrap();
                let expect = q(2 * (g.unsigned_abs() as i64).min(n as i64), n as i64);
                assert_eq!(d, expect, "n={n} g={g}");
                // Swapping the roles of W and gW is the same as translating by g^{-1}.
                let moved = w.translate(GroupElement(g));
                let back = folner_defect(&moved, GroupElement(g).inverse()).unwrap();
                assert_eq!(back, d);
            }
        }
    }

    #[test]
    fn thicken_and_set_ops() {
        let h = FiniteSubset::from_iter([0, 5]);
        assert_eq!(h.thicken(1).elements(), vec![-1, 0, 1, 4, 5, 6]);
        assert_eq!(h.union(&FiniteSubset::from_iter([1])).len(), 3);
        assert!(FiniteSubset::from_iter([0]).is_subset(&h));
        assert_eq!(h.index_of(5), Some(1));
    }
}
