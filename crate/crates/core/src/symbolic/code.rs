use std::collections::BTreeMap;

use super::{format_word, Alphabet, PeriodicPoint, Symbol, SymbolicSystem};
use crate::error::{Error, Result};

const TABLE_LIMIT: usize = 1 << 20;

/// A factor map `y_i = rule(x_{i-w}, ..., x_{i+w})`. Shift-equivariant by
/// construction.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SlidingBlockCode {
    radius: usize,
    table: Vec<Symbol>,
    source: SymbolicSystem,
    target: SymbolicSystem,
}

fn window_index(window: &[Symbol], k: usize) -> usize {
    window.iter().fold(0, |acc, &s| acc * k + s as usize)
}

fn all_windows(k: usize, len: usize) -> impl Iterator<Item = Vec<Symbol>> {
    let total = k.pow(len as u32);
    (0..total).map(move |mut idx| {
        let mut w = vec![0 as Symbol; len];
        for slot in w.iter_mut().rev() {
            *slot = (idx % k) as Symbol;
            idx /= k;
        }
        w
    })
}

impl SlidingBlockCode {
    pub fn from_fn(
        source: SymbolicSystem,
        target: SymbolicSystem,
        radius: usize,
        rule: impl Fn(&[Symbol]) -> Symbol,
    ) -> Result<Self> {
        let k = source.alphabet().size();
        let len = 2 * radius + 1;
        if (k as f64).powi(len as i32) > TABLE_LIMIT as f64 {
            return Err(Error::ResourceLimit(format!("rule table {k}^{len} is too large")));
        }
        let mut table = Vec::with_capacity(k.pow(len as u32));
        for w in all_windows(k, len) {
            let s = rule(&w);
            if !target.alphabet().contains(s) {
                return Err(Error::invalid(format!(
                    "rule maps {} to {s}, outside the target alphabet",
                    format_word(&w)
                )));
            }
            table.push(s);
        }
        Ok(SlidingBlockCode { radius, table, source, target })
    }

    /// Builds a code from an explicit window table, which must cover every
    /// window admitted by the source. Windows containing a forbidden word
    /// never occur and map to 0 when absent.
    pub fn from_table(
        source: SymbolicSystem,
        target: SymbolicSystem,
        radius: usize,
        rule: &BTreeMap<Vec<Symbol>, Symbol>,
    ) -> Result<Self> {
        let len = 2 * radius + 1;
        if let Some(w) = rule.keys().find(|w| w.len() != len) {
            return Err(Error::invalid(format!("rule window {} is not of length {len}", format_word(w))));
        }
        let k = source.alphabet().size();
        if let Some(w) = all_windows(k, len).find(|w| source.admits_word(w) && !rule.contains_key(w)) {
            return Err(Error::invalid(format!("rule is not total: window {} is missing", format_word(&w))));
        }
        Self::from_fn(source, target, radius, |w| rule.get(w).copied().unwrap_or(0))
    }

    pub fn identity(system: SymbolicSystem) -> Result<Self> {
        Self::from_fn(system.clone(), system, 0, |w| w[0])
    }

    /// `({0,1}^2)^Z -> {0,1}^Z`, keeping the first coordinate. Symbol `s`
    /// of the source encodes the pair `(s / 2, s % 2)`.
    pub fn product_projection() -> Result<Self> {
        Self::from_fn(SymbolicSystem::full_shift(4)?, SymbolicSystem::full_shift(2)?, 0, |w| w[0] / 2)
    }

    /// The factor onto the one-point system.
    pub fn to_point(system: SymbolicSystem) -> Result<Self> {
        Self::from_fn(system, SymbolicSystem::full_shift(1)?, 0, |_| 0)
    }

    /// `y_i = x_i xor x_{i+1}` on the binary full shift.
    pub fn xor_next() -> Result<Self> {
        let full = SymbolicSystem::full_shift(2)?;
        Self::from_fn(full.clone(), full, 1, |w| w[1] ^ w[2])
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn source(&self) -> &SymbolicSystem {
        &self.source
    }

    pub fn target(&self) -> &SymbolicSystem {
        &self.target
    }

    pub fn source_alphabet(&self) -> Alphabet {
        self.source.alphabet()
    }

    pub fn rule(&self, window: &[Symbol]) -> Symbol {
        self.table[window_index(window, self.source.alphabet().size())]
    }

    /// The explicit window table, for serialization.
    pub fn table(&self) -> BTreeMap<Vec<Symbol>, Symbol> {
        all_windows(self.source.alphabet().size(), 2 * self.radius + 1)
            .zip(self.table.iter().copied())
            .collect()
    }

    pub fn apply(&self, x: &PeriodicPoint) -> Result<PeriodicPoint> {
        if !self.source.contains(x) {
            return Err(Error::invalid(format!("point {x} is not in the source system")));
        }
        Ok(self.apply_unchecked(x))
    }

    pub(crate) fn apply_unchecked(&self, x: &PeriodicPoint) -> PeriodicPoint {
        let w = self.radius as i64;
        let len = 2 * self.radius + 1;
        let word = (0..x.period() as i64).map(|i| self.rule(&x.window(i - w, len))).collect();
        PeriodicPoint::from_word_unchecked(word)
    }

    /// Checks that every source point of period up to `max_period` lands in the target.
    pub fn validate(&self, max_period: usize) -> Result<()> {
        for p in 1..=max_period {
            for x in self.source.points_of_period(p)? {
                let y = self.apply_unchecked(&x);
                if !self.target.contains(&y) {
                    return Err(Error::invalid(format!("code maps {x} to {y}, which is not in the target")));
                }
            }
        }
        Ok(())
    }
}
