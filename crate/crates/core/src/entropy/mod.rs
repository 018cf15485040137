//! Separated sets, relative topological entropy along fibers, and
//! independence sets of a factor map.

mod independence;
mod mis;

use num::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::FiniteSubset;
use crate::rational::{dyadic, format_q, Q};
use crate::symbolic::{dh_exponent, fiber_points, PeriodicPoint, SlidingBlockCode};

pub use independence::{
    certify_over_base, independence_density, is_independence_set, DensityResult, IndependenceCertificate,
    PatternWitness, MAX_INDEPENDENCE_WINDOW,
};
pub use mis::{ConflictGraph, MisResult, EXACT_COMPONENT_LIMIT};

/// A largest `(pool, eps, d_H)`-separated subset found.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeparatedSetResult {
    pub cardinality: usize,
    pub witness: Vec<PeriodicPoint>,
    /// No larger separated subset of the pool exists.
    pub exact: bool,
}

impl SeparatedSetResult {
    /// Checks that the witness points are pairwise more than `eps` apart in `d_H`.
    pub fn validate(&self, eps: &Q, window: &FiniteSubset) -> Result<()> {
        if self.witness.len() != self.cardinality {
            return Err(Error::invalid("witness size differs from the stated cardinality"));
        }
        for (i, x) in self.witness.iter().enumerate() {
            for y in &self.witness[i + 1..] {
                if !separated(window, x, y, eps) {
                    return Err(Error::invalid(format!("{x} and {y} are within {}", format_q(eps))));
                }
            }
        }
        Ok(())
    }
}

/// The least `k` with `2^{-k} <= eps`; `d_H > eps` exactly when the
/// exponent of `d_H` is below it.
pub(crate) fn separation_exponent(eps: &Q) -> u64 {
    let mut k = 0u32;
    while dyadic(k) > *eps {
        k += 1;
    }
    k as u64
}

fn separated(window: &FiniteSubset, x: &PeriodicPoint, y: &PeriodicPoint, eps: &Q) -> bool {
    separated_below(window, x, y, separation_exponent(eps))
}

fn separated_below(window: &FiniteSubset, x: &PeriodicPoint, y: &PeriodicPoint, threshold: u64) -> bool {
    dh_exponent(window, x, y).is_some_and(|k| k < threshold)
}

/// Maximum `(pool, eps, d_H)`-separated set: a maximum independent set of
/// the conflict graph with an edge wherever `d_H <= eps`.
pub fn max_separated(pool: &[PeriodicPoint], eps: &Q, window: &FiniteSubset) -> Result<SeparatedSetResult> {
    if window.is_empty() {
        return Err(Error::invalid("separation window is empty"));
    }
    let mut points = pool.to_vec();
    points.sort();
    points.dedup();
    if !eps.is_positive() {
        return Err(Error::invalid("separation scale must be positive"));
    }
    let threshold = separation_exponent(eps);
    let graph = ConflictGraph::from_fn(points.len(), |a, b| !separated_below(window, &points[a], &points[b], threshold));
    let mis = graph.maximum_independent_set();
    let witness: Vec<PeriodicPoint> = mis.vertices.iter().map(|&i| points[i].clone()).collect();
    Ok(SeparatedSetResult { cardinality: witness.len(), witness, exact: mis.exact })
}

/// One row of an entropy table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyRow {
    pub n: usize,
    #[serde(with = "crate::rational::serde_q")]
    pub eps: Q,
    /// `max_y #(pi^{-1}(y), eps, d_{[0,n)})` over the base points searched.
    pub count: usize,
    /// `ln(count) / n`; a convenience float, the count is authoritative.
    pub approx_value: f64,
    pub base_point: PeriodicPoint,
    pub exact: bool,
}

/// A finite table of fiberwise separated-set growth rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyEstimate {
    pub period: usize,
    pub windows: Vec<usize>,
    #[serde(with = "crate::rational::serde_q_vec")]
    pub eps_schedule: Vec<Q>,
    pub base_points_searched: usize,
    pub rows: Vec<EntropyRow>,
    pub note: String,
}

/// The default scale schedule 3/5, 3/10, 3/20.
pub fn default_eps_schedule() -> Vec<Q> {
    vec![Q::new(3.into(), 5.into()), Q::new(3.into(), 10.into()), Q::new(3.into(), 20.into())]
}

/// For every window `[0, n)` and scale, maximizes the separated-set count
/// over the fibers of all base points of the given period.
pub fn relative_entropy_estimate(
    code: &SlidingBlockCode,
    windows: &[usize],
    eps_schedule: &[Q],
    period: usize,
) -> Result<EntropyEstimate> {
    if windows.iter().any(|&n| n == 0) || windows.is_empty() {
        return Err(Error::invalid("windows must be a nonempty list of positive sizes"));
    }
    if eps_schedule.is_empty() || eps_schedule.iter().any(|e| *e <= Q::zero()) {
        return Err(Error::invalid("scales must be a nonempty list of positive rationals"));
    }
    let bases = code.target().points_of_period(period)?;
    let mut fibers = Vec::new();
    for y in bases.iter() {
        let fiber = fiber_points(code, y, period)?;
        if !fiber.is_empty() {
            fibers.push((y.clone(), fiber));
        }
    }
    if fibers.is_empty() {
        return Err(Error::EmptyFiber { period });
    }
    let mut rows = Vec::new();
    for &n in windows {
        let window = FiniteSubset::interval(0, n);
        for eps in eps_schedule {
            let mut best: Option<(usize, PeriodicPoint, bool)> = None;
            let mut all_exact = true;
            for (y, fiber) in &fibers {
                let r = max_separated(fiber, eps, &window)?;
                all_exact &= r.exact;
                if best.as_ref().map_or(true, |(c, _, _)| r.cardinality > *c) {
                    best = Some((r.cardinality, y.clone(), r.exact));
                }
            }
            let (count, base_point, _) = best.expect("at least one fiber");
            rows.push(EntropyRow {
                n,
                eps: eps.clone(),
                count,
                approx_value: (count as f64).ln() / n as f64,
                base_point,
                exact: all_exact,
            });
        }
    }
    Ok(EntropyEstimate {
        period,
        windows: windows.to_vec(),
        eps_schedule: eps_schedule.to_vec(),
        base_points_searched: bases.len(),
        rows,
        note: format!("supremum over base points taken over the periodic points of period {period} only"),
    })
}
