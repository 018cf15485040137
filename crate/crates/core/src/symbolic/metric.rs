use num::integer::lcm;
use num::Zero;

use super::{Alphabet, PeriodicPoint};
use crate::error::{Error, Result};
use crate::group::FiniteSubset;
use crate::rational::{dyadic, Q};

/// Positions in `0..lcm(p, q)` where the two points disagree, plus that lcm.
fn disagreements(x: &PeriodicPoint, y: &PeriodicPoint) -> (Vec<i64>, i64) {
    let l = lcm(x.period(), y.period()) as i64;
    ((0..l).filter(|&i| x.at(i) != y.at(i)).collect(), l)
}

fn circular(i: i64, l: i64) -> u64 {
    let r = i.rem_euclid(l);
    r.min(l - r) as u64
}

/// `min{|i| : x_i != y_i}`, or `None` when the points coincide.
pub fn first_difference(x: &PeriodicPoint, y: &PeriodicPoint) -> Option<u64> {
    let (diff, l) = disagreements(x, y);
    diff.iter().map(|&i| circular(i, l)).min()
}

/// `min_{s in H} min{|i| : x_{s+i} != y_{s+i}}`: the distance from `H` to
/// the nearest disagreement. `d_H(x, y) = 2^{-dh_exponent}`.
pub fn dh_exponent(window: &FiniteSubset, x: &PeriodicPoint, y: &PeriodicPoint) -> Option<u64> {
    if x == y {
        return None;
    }
    if window.iter().any(|s| x.at(s) != y.at(s)) {
        return Some(0);
    }
    let (diff, l) = disagreements(x, y);
    window
        .iter()
        .flat_map(|s| diff.iter().map(move |&d| circular(d - s, l)))
        .min()
}

pub fn metric_d(x: &PeriodicPoint, y: &PeriodicPoint) -> Q {
    match first_difference(x, y) {
        None => Q::zero(),
        Some(k) => dyadic(k as u32),
    }
}

/// `d_H(x, y) = max_{s in H} d(sx, sy)`.
pub fn metric_dh(window: &FiniteSubset, x: &PeriodicPoint, y: &PeriodicPoint) -> Result<Q> {
    if window.is_empty() {
        return Err(Error::invalid("d_H needs a nonempty window"));
    }
    Ok(match dh_exponent(window, x, y) {
        None => Q::zero(),
        Some(k) => dyadic(k as u32),
    })
}

/// The canonical metric on a system's points; rejects points using
/// symbols outside the alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SystemMetric {
    alphabet: Alphabet,
}

impl SystemMetric {
    pub fn new(alphabet: Alphabet) -> Self {
        SystemMetric { alphabet }
    }

    /// Upper bound on `d`; attained by any two points differing at 0.
    pub fn diameter(&self) -> Q {
        dyadic(0)
    }

    fn check(&self, x: &PeriodicPoint) -> Result<()> {
        if x.word().iter().all(|&s| self.alphabet.contains(s)) {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "point {x} uses symbols outside an alphabet of size {}",
                self.alphabet.size()
            )))
        }
    }

    pub fn d(&self, x: &PeriodicPoint, y: &PeriodicPoint) -> Result<Q> {
        self.check(x)?;
        self.check(y)?;
        Ok(metric_d(x, y))
    }

    pub fn d_h(&self, window: &FiniteSubset, x: &PeriodicPoint, y: &PeriodicPoint) -> Result<Q> {
        self.check(x)?;
        self.check(y)?;
        metric_dh(window, x, y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::GroupElement;
    use crate::rational::q;
    use crate::symbolic::SymbolicSystem;

    fn pt(s: &str) -> PeriodicPoint {
        PeriodicPoint::parse(s).unwrap()
    }

    #[test]
    fn metric_examples() {
        let x = pt("0110");
        assert_eq!(metric_d(&x, &x), q(0, 1));
        assert_eq!(metric_d(&pt("0"), &pt("1")), q(1, 1));
        // 0101... vs 0011...: agree at 0, differ at 1.
        assert_eq!(metric_d(&pt("01"), &pt("0011")), q(1, 2));
        let m = SystemMetric::new(Alphabet::new(2).unwrap());
        assert!(m.d(&pt("2"), &pt("0")).is_err());
    }

    #[test]
    fn dh_examples() {
        let x = pt("00000000");
        let mut w = vec![0u8; 8];
        w[5] = 1;
        let y = PeriodicPoint::new(w).unwrap();
        let h0 = FiniteSubset::from_iter([0]);
        assert_eq!(metric_dh(&h0, &x, &y).unwrap(), metric_d(&x, &y));
        assert_eq!(metric_dh(&FiniteSubset::interval(0, 8), &x, &y).unwrap(), q(1, 1));
        assert_eq!(metric_dh(&FiniteSubset::interval(0, 8), &x, &x).unwrap(), q(0, 1));
        assert!(metric_dh(&FiniteSubset::new(), &x, &y).is_err());
    }

    /// Literal definition: max over s of d(sx, sy).
    fn dh_literal(h: &FiniteSubset, x: &PeriodicPoint, y: &PeriodicPoint) -> Q {
        h.iter()
            .map(|s| metric_d(&x.shift(GroupElement(s)), &y.shift(GroupElement(s))))
            .max()
            .unwrap()
    }

    #[test]
    fn metric_axioms_exhaustive_small() {
        let full = SymbolicSystem::full_shift(2).unwrap();
        let mut pts = Vec::new();
        for p in 1..=3 {
            pts.extend(full.points_of_period(p).unwrap());
        }
        pts.sort();
        pts.dedup();
        for a in &pts {
            for b in &pts {
                let dab = metric_d(a, b);
                assert_eq!(dab, metric_d(b, a));
                assert_eq!(dab == q(0, 1), a == b);
                assert!(dab <= q(1, 1));
                for c in &pts {
                    assert!(dab <= metric_d(a, c) + metric_d(c, b));
                }
            }
        }
    }

    #[test]
    fn dh_matches_literal_definition_and_composes() {
        let full = SymbolicSystem::full_shift(2).unwrap();
        let pts = full.points_of_period(5).unwrap();
        let windows = [
            FiniteSubset::from_iter([0]),
            FiniteSubset::from_iter([0, 2]),
            FiniteSubset::from_iter([-3, 1, 4]),
            FiniteSubset::interval(0, 7),
        ];
        for x in &pts {
            for y in &pts {
                for h in &windows {
                    let dh = metric_dh(h, x, y).unwrap();
                    assert_eq!(dh, dh_literal(h, x, y));
                    if h.contains(0) {
                        assert!(dh >= metric_d(x, y));
                    }
                    for e in &windows {
                        let both = metric_dh(&e.union(h), x, y).unwrap();
                        assert_eq!(both, metric_dh(e, x, y).unwrap().max(dh.clone()));
                    }
                }
            }
        }
    }
}
