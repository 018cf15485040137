//! The face-avoidance condition on covers of `Delta_n^k`: whenever
//! `U_1, ..., U_m` meet the coordinate facets `(F^1)_i, ..., (F^m)_i`, the
//! intersection of the `U_j` misses the opposite of `cap F^j` in factor `i`.
//!
//! Covers are closed cell unions on a [`SimplexGrid`]; intersections of
//! subcomplexes are decided on vertices, which is exact.

use fixedbitset::FixedBitSet;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::simplex::SimplexGrid;
use super::{ord, Cover};
use crate::combinatorics::binomial;
use crate::error::{Error, Result};

/// Largest cell count for the exhaustive pass over covers with at most two elements.
pub const EXHAUSTIVE_CELL_LIMIT: usize = 12;

const RANDOM_TRIALS: usize = 400;

/// Factor `i`, the subfamily, the facets it meets (by omitted index) and a
/// common vertex lying in the opposite face.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LebesgueViolation {
    pub factor: usize,
    pub elements: Vec<usize>,
    pub facets: Vec<usize>,
    pub vertex: usize,
}

/// Checks every subfamily of at most `m_max` distinct elements, pairing
/// each element with every facet it meets. `cover` must be a vertex cover
/// of `grid` as produced by [`SimplexGrid::vertex_cover`].
///
/// Returns the first violation, or `None` when the condition holds.
pub fn lebesgue_condition_check(grid: &SimplexGrid, cover: &Cover, m_max: usize, budget: u64) -> Result<Option<LebesgueViolation>> {
    if cover.ground() != grid.vertex_count() {
        return Err(Error::invalid("cover is not over the grid's vertices"));
    }
    let (n, k, len) = (grid.n(), grid.k(), cover.len());
    let m_max = m_max.min(len);
    let work: u128 = (1..=m_max).map(|m| binomial(len, m)).sum::<u128>() * k as u128;
    if work > budget as u128 {
        return Err(Error::ResourceLimit(format!("{work} subfamily checks exceed the budget of {budget}")));
    }
    let elems = cover.elements();
    // met[i][u]: bitmask of facets of factor i met by element u.
    let met: Vec<Vec<u32>> = (0..k)
        .map(|i| {
            let facets: Vec<FixedBitSet> = (0..n).map(|c| grid.facet_vertices(i, c)).collect();
            elems
                .iter()
                .map(|u| (0..n).filter(|&c| !u.is_disjoint(&facets[c])).fold(0u32, |m, c| m | 1 << c))
                .collect()
        })
        .collect();
    let mut opposite: Vec<Vec<Option<FixedBitSet>>> = vec![vec![None; 1 << n]; k];
    for m in 1..=m_max {
        for family in crate::combinatorics::combinations(len, m) {
            let members: Vec<usize> = (0..len).filter(|&u| family >> u & 1 == 1).collect();
            let mut common = elems[members[0]].clone();
            for &u in &members[1..] {
                common.intersect_with(&elems[u]);
            }
            if common.is_clear() {
                continue;
            }
            for i in 0..k {
                if members.iter().any(|&u| met[i][u] == 0) {
                    continue;
                }
                let c_mask = members.iter().fold(0u32, |acc, &u| acc | met[i][u]) as usize;
                let opp = opposite[i][c_mask].get_or_insert_with(|| {
                    let allowed: Vec<bool> = (0..n).map(|c| c_mask >> c & 1 == 1).collect();
                    grid.supported_within(i, &allowed)
                });
                if let Some(v) = common.intersection(opp).next() {
                    return Ok(Some(LebesgueViolation {
                        factor: i,
                        elements: members,
                        facets: (0..n).filter(|&c| c_mask >> c & 1 == 1).collect(),
                        vertex: v,
                    }));
                }
            }
        }
    }
    Ok(None)
}

/// One phase of the oracle search.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleSearch {
    pub method: String,
    pub covers_checked: u64,
    pub satisfying: u64,
    pub min_ord: Option<usize>,
    pub found_ord_zero: bool,
    pub complete: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LebesgueReport {
    pub n: usize,
    pub k: usize,
    pub q: u32,
    pub seed: u64,
    pub cells: usize,
    pub exhaustive: Option<OracleSearch>,
    pub randomized: OracleSearch,
    pub min_ord_found: Option<usize>,
    pub nk: usize,
    pub n_minus_1_k: usize,
    pub undercuts_nk: Option<bool>,
    pub undercuts_n_minus_1_k: Option<bool>,
    pub budget_exhausted: bool,
    /// Vertex cover attaining `min_ord_found`.
    pub best_cover: Option<Cover>,
    pub relation: String,
}

struct Tally {
    search: OracleSearch,
    best: Option<Cover>,
}

impl Tally {
    fn new(method: &str) -> Self {
        Tally {
            search: OracleSearch {
                method: method.into(),
                covers_checked: 0,
                satisfying: 0,
                min_ord: None,
                found_ord_zero: false,
                complete: true,
            },
            best: None,
        }
    }

    fn record(&mut self, grid: &SimplexGrid, cover: Cover, budget: u64) -> Result<()> {
        self.search.covers_checked += 1;
        if lebesgue_condition_check(grid, &cover, cover.len(), budget)?.is_none() {
            self.search.satisfying += 1;
            let o = ord(&cover);
            self.search.found_ord_zero |= o == 0;
            if self.search.min_ord.map_or(true, |m| o < m) {
                self.search.min_ord = Some(o);
                self.best = Some(cover);
            }
        }
        Ok(())
    }
}

/// Searches grid covers of `Delta_n^k` satisfying the face-avoidance
/// condition for the least order.
///
/// When the grid has at most [`EXHAUSTIVE_CELL_LIMIT`] cells, every cover
/// with one or two elements is tried. Then Voronoi covers are tried: the
/// landmark centers (each factor at a simplex vertex or the barycenter)
/// and seeded random center sets. `budget` bounds the number of covers.
pub fn lebesgue_ord_oracle(n: usize, k: usize, q: u32, budget: u64, seed: u64) -> Result<LebesgueReport> {
    if n < 2 || k == 0 || n * k > 4 {
        return Err(Error::invalid(format!("oracle needs n >= 2, k >= 1 and nk <= 4, got n = {n}, k = {k}")));
    }
    if !(1..=12).contains(&q) {
        return Err(Error::invalid(format!("grid resolution must lie in 1..=12, got {q}")));
    }
    let grid = SimplexGrid::new(n, k, q)?;
    let cells = grid.cell_count();
    let mut spent = 0u64;
    let mut exhausted = false;
    let check_budget = u64::MAX;

    let exhaustive = if cells <= EXHAUSTIVE_CELL_LIMIT {
        let mut t = Tally::new("all covers with at most two elements");
        let mut full = FixedBitSet::with_capacity(cells);
        full.insert_range(..);
        t.record(&grid, grid.vertex_cover(&[full])?, check_budget)?;
        spent += 1;
        // Each cell goes to A only, B only, or both; A and B nonempty and unordered.
        let total = 3u64.pow(cells as u32);
        for code in 0..total {
            if spent >= budget {
                exhausted = true;
                t.search.complete = false;
                break;
            }
            let mut a = FixedBitSet::with_capacity(cells);
            let mut b = FixedBitSet::with_capacity(cells);
            let mut c = code;
            for cell in 0..cells {
                match c % 3 {
                    0 => a.insert(cell),
                    1 => b.insert(cell),
                    _ => {
                        a.insert(cell);
                        b.insert(cell);
                    }
                }
                c /= 3;
            }
            if a.is_clear() || b.is_clear() || a.ones().next() > b.ones().next() {
                continue;
            }
            spent += 1;
            t.record(&grid, grid.vertex_cover(&[a, b])?, check_budget)?;
        }
        Some(t)
    } else {
        None
    };

    let mut randomized = Tally::new("Voronoi covers from landmark and seeded random centers");
    let choices: Vec<Option<usize>> = std::iter::once(None).chain((0..n).map(Some)).collect();
    let mut landmark_sets: Vec<Vec<usize>> = Vec::new();
    let mut all = vec![Vec::new()];
    for _ in 0..k {
        all = all.into_iter().flat_map(|p: Vec<Option<usize>>| choices.iter().map(move |c| [p.clone(), vec![*c]].concat())).collect();
    }
    landmark_sets.push(all.iter().map(|c| grid.landmark(c)).collect());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vertices: Vec<usize> = (0..grid.vertex_count()).collect();
    for _ in 0..RANDOM_TRIALS {
        let count = rng.gen_range(2..=(2 * n * k + 2).min(vertices.len()));
        landmark_sets.push(vertices.choose_multiple(&mut rng, count).copied().collect());
    }
    for centers in landmark_sets {
        if spent >= budget {
            exhausted = true;
            randomized.search.complete = false;
            break;
        }
        spent += 1;
        let classes = grid.voronoi(&centers);
        randomized.record(&grid, grid.vertex_cover(&classes)?, check_budget)?;
    }

    let mut best: Option<(usize, Cover)> = None;
    for t in exhaustive.iter().chain(std::iter::once(&randomized)) {
        if let (Some(o), Some(c)) = (t.search.min_ord, &t.best) {
            if best.as_ref().map_or(true, |(b, _)| o < *b) {
                best = Some((o, c.clone()));
            }
        }
    }
    let nk = n * k;
    let lower = (n - 1) * k;
    let min_ord_found = best.as_ref().map(|(o, _)| *o);
    let relation = match min_ord_found {
        Some(o) => format!(
            "least ord over condition-satisfying covers found: {o}. Against the bound ord >= nk = {nk}: {}. \
             Against the bound ord >= (n-1)k = {lower}: {}. dim Delta_n^k = (n-1)k = {lower}.",
            if o < nk { "undercut, so ord >= nk fails on this grid model" } else { "consistent" },
            if o < lower { "undercut" } else if o == lower { "consistent and attained" } else { "consistent" }
        ),
        None => format!(
            "no condition-satisfying cover found; nothing is concluded about ord >= nk = {nk} or ord >= (n-1)k = {lower}"
        ),
    };
    Ok(LebesgueReport {
        n,
        k,
        q,
        seed,
        cells,
        exhaustive: exhaustive.map(|t| t.search),
        randomized: randomized.search,
        min_ord_found,
        nk,
        n_minus_1_k: lower,
        undercuts_nk: min_ord_found.map(|o| o < nk),
        undercuts_n_minus_1_k: min_ord_found.map(|o| o < lower),
        budget_exhausted: exhausted,
        best_cover: best.map(|(_, c)| c),
        relation,
    })
}
