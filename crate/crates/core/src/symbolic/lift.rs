//! Constraint search for periodic points: fixed period, forbidden words,
//! an optional prescribed image under a sliding block code, per-position
//! symbol masks and cylinder constraints `hx in U`.

use std::collections::HashSet;

use super::{CylinderSet, PeriodicPoint, SlidingBlockCode, Symbol, SymbolicSystem};
use crate::error::{Error, Result};
use crate::group::GroupElement;

/// Bit `s` set means symbol `s` is allowed.
pub type SymbolMask = u64;

#[derive(Debug, Clone)]
enum Kind {
    Forbidden(usize),
    Image(Symbol),
    Cylinder(usize),
}

#[derive(Debug, Clone)]
struct Check {
    start: usize,
    len: usize,
    kind: Kind,
}

/// A search for period-`p` points of a subshift under extra constraints.
#[derive(Debug, Clone)]
pub struct LiftProblem<'a> {
    system: &'a SymbolicSystem,
    period: usize,
    masks: Vec<SymbolMask>,
    code: Option<&'a SlidingBlockCode>,
    cylinders: Vec<CylinderSet>,
    completes_at: Vec<Vec<Check>>,
    wrapping: Vec<Check>,
    max_len: usize,
}

impl<'a> LiftProblem<'a> {
    pub fn new(system: &'a SymbolicSystem, period: usize) -> Result<Self> {
        if period == 0 {
            return Err(Error::invalid("lift period must be positive"));
        }
        let full: SymbolMask = if system.alphabet().size() == 64 { !0 } else { (1u64 << system.alphabet().size()) - 1 };
        let mut problem = LiftProblem {
            system,
            period,
            masks: vec![full; period],
            code: None,
            cylinders: Vec::new(),
            completes_at: vec![Vec::new(); period],
            wrapping: Vec::new(),
            max_len: 1,
        };
        for (idx, w) in system.forbidden().iter().enumerate() {
            for start in 0..period {
                problem.add_check(Check { start, len: w.len(), kind: Kind::Forbidden(idx) });
            }
        }
        Ok(problem)
    }

    fn add_check(&mut self, check: Check) {
        self.max_len = self.max_len.max(check.len);
        if check.start + check.len <= self.period {
            self.completes_at[check.start + check.len - 1].push(check);
        } else {
            self.wrapping.push(check);
        }
    }

    fn wrap(&self, i: i64) -> usize {
        i.rem_euclid(self.period as i64) as usize
    }

    /// Requires `code(x) = y`.
    pub fn with_image(mut self, code: &'a SlidingBlockCode, y: &PeriodicPoint) -> Result<Self> {
        if code.source() != self.system {
            return Err(Error::invalid("code source differs from the lift system"));
        }
        if self.period % y.period() != 0 {
            return Err(Error::invalid(format!(
                "lift period {} is not a multiple of the base period {}",
                self.period,
                y.period()
            )));
        }
        let w = code.radius() as i64;
        for i in 0..self.period as i64 {
            let start = self.wrap(i - w);
            self.add_check(Check { start, len: 2 * code.radius() + 1, kind: Kind::Image(y.at(i)) });
        }
        self.code = Some(code);
        Ok(self)
    }

    /// Requires `hx in set`.
    pub fn require(mut self, h: GroupElement, set: &CylinderSet) -> Self {
        let start = self.wrap(h.0 + set.offset());
        if let Some(mask) = set.position_mask(self.system.alphabet()) {
            self.masks[start] &= mask;
        } else {
            let idx = self.cylinders.len();
            self.cylinders.push(set.clone());
            self.add_check(Check { start, len: set.len(), kind: Kind::Cylinder(idx) });
        }
        self
    }

    fn passes(&self, check: &Check, x: &[Symbol]) -> bool {
        let sym = |k: usize| x[(check.start + k) % self.period];
        match check.kind {
            Kind::Forbidden(idx) => {
                let w = &self.system.forbidden()[idx];
                (0..w.len()).any(|k| sym(k) != w[k])
            }
            Kind::Image(target) => {
                let window: Vec<Symbol> = (0..check.len).map(sym).collect();
                self.code.expect("image check without code").rule(&window) == target
            }
            Kind::Cylinder(idx) => {
                let window: Vec<Symbol> = (0..check.len).map(sym).collect();
                self.cylinders[idx].matches_window(&window)
            }
        }
    }

    fn candidates(&self, j: usize) -> impl Iterator<Item = Symbol> + '_ {
        let mask = self.masks[j];
        self.system.alphabet().symbols().filter(move |&s| mask >> s & 1 == 1)
    }

    /// The lexicographically least solution, if any.
    pub fn solve(&self) -> Option<PeriodicPoint> {
        if self.masks.iter().any(|&m| m == 0) {
            return None;
        }
        let memo_width = self.max_len - 1;
        let mut search = Search { x: vec![0; self.period], memo: HashSet::new(), memo_width };
        if self.dfs_first(0, &mut search) {
            Some(PeriodicPoint::from_word_unchecked(search.x))
        } else {
            None
        }
    }

    fn dfs_first(&self, j: usize, search: &mut Search) -> bool {
        if j == self.period {
            return self.wrapping.iter().all(|c| self.passes(c, &search.x));
        }
        let k = search.memo_width;
        let use_memo = k < self.period && j >= k;
        if use_memo {
            if j == k {
                search.memo.clear();
            }
            if search.memo.contains(&(j, search.x[j - k..j].to_vec())) {
                return false;
            }
        }
        for s in self.candidates(j) {
            search.x[j] = s;
            if self.completes_at[j].iter().all(|c| self.passes(c, &search.x)) && self.dfs_first(j + 1, search) {
                return true;
            }
        }
        if use_memo {
            let key = (j, search.x[j - k..j].to_vec());
            search.memo.insert(key);
        }
        false
    }

    /// Every solution, sorted and deduplicated.
    pub fn enumerate(&self) -> Vec<PeriodicPoint> {
        let mut out = Vec::new();
        if self.masks.iter().all(|&m| m != 0) {
            let mut x = vec![0; self.period];
            self.dfs_all(0, &mut x, &mut out);
        }
        out.sort();
        out.dedup();
        out
    }

    fn dfs_all(&self, j: usize, x: &mut Vec<Symbol>, out: &mut Vec<PeriodicPoint>) {
        if j == self.period {
            if self.wrapping.iter().all(|c| self.passes(c, x)) {
                out.push(PeriodicPoint::from_word_unchecked(x.clone()));
            }
            return;
        }
        for s in self.candidates(j) {
            x[j] = s;
            if self.completes_at[j].iter().all(|c| self.passes(c, x)) {
                self.dfs_all(j + 1, x, out);
            }
        }
    }
}

struct Search {
    x: Vec<Symbol>,
    memo: HashSet<(usize, Vec<Symbol>)>,
    memo_width: usize,
}
