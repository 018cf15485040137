use std::collections::{BTreeSet, HashMap};

use fixedbitset::FixedBitSet;
use itertools::Itertools;
use num::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::Cover;
use crate::error::{Error, Result};
use crate::rational::Q;

/// A point of `Delta_n = {t in [0,1]^n : sum t_i = 1}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimplexPoint {
    #[serde(with = "crate::rational::serde_q_vec")]
    coords: Vec<Q>,
}

impl SimplexPoint {
    pub fn new(coords: Vec<Q>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::invalid("a simplex point needs at least one coordinate"));
        }
        if coords.iter().any(|c| c.is_negative()) {
            return Err(Error::invalid("simplex coordinates must be nonnegative"));
        }
        if coords.iter().sum::<Q>() != Q::one() {
            return Err(Error::invalid("simplex coordinates must sum to 1"));
        }
        Ok(SimplexPoint { coords })
    }

    pub fn vertex(n: usize, i: usize) -> Result<Self> {
        if i >= n {
            return Err(Error::invalid(format!("vertex {i} of a simplex with {n} vertices")));
        }
        let mut coords = vec![Q::zero(); n];
        coords[i] = Q::one();
        Ok(SimplexPoint { coords })
    }

    pub fn barycenter(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("empty simplex"));
        }
        Ok(SimplexPoint { coords: vec![Q::new(1.into(), n.into()); n] })
    }

    pub fn n(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[Q] {
        &self.coords
    }

    pub fn at(&self, i: usize) -> &Q {
        &self.coords[i]
    }

    pub fn support(&self) -> BTreeSet<usize> {
        (0..self.coords.len()).filter(|&i| !self.coords[i].is_zero()).collect()
    }

    /// `t * self + (1 - t) * other`.
    pub fn mix(&self, t: &Q, other: &SimplexPoint) -> Result<Self> {
        if self.n() != other.n() {
            return Err(Error::invalid("mixing points of different simplices"));
        }
        let s = Q::one() - t;
        SimplexPoint::new(self.coords.iter().zip(&other.coords).map(|(a, b)| t * a + &s * b).collect())
    }
}

/// The face `{t in Delta_n : sum_{i in I} t_i = 1}`; an `l`-face has `|I| = l`.
/// Indices are zero-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Face {
    n: usize,
    support: BTreeSet<usize>,
}

impl Face {
    pub fn new(n: usize, support: impl IntoIterator<Item = usize>) -> Result<Self> {
        let support: BTreeSet<usize> = support.into_iter().collect();
        if support.is_empty() {
            return Err(Error::invalid("a face needs a nonempty support"));
        }
        if let Some(&i) = support.iter().find(|&&i| i >= n) {
            return Err(Error::invalid(format!("face index {i} outside [0, {n})")));
        }
        Ok(Face { n, support })
    }

    /// The `(n-1)`-face omitting index `c`.
    pub fn facet(n: usize, c: usize) -> Result<Self> {
        Face::new(n, (0..n).filter(|&i| i != c))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn support(&self) -> &BTreeSet<usize> {
        &self.support
    }

    pub fn size(&self) -> usize {
        self.support.len()
    }

    pub fn contains(&self, t: &SimplexPoint) -> bool {
        t.n() == self.n && (0..self.n).all(|i| self.support.contains(&i) || t.at(i).is_zero())
    }

    /// `sum_{i in I} t_i`.
    pub fn mass(&self, t: &SimplexPoint) -> Q {
        self.support.iter().map(|&i| t.at(i)).sum()
    }
}

/// The face supported on the complement of `I`.
pub fn opposite_face(face: &Face) -> Result<Face> {
    if face.support.len() == face.n {
        return Err(Error::invalid("the full simplex has no opposite face"));
    }
    Face::new(face.n, (0..face.n).filter(|i| !face.support.contains(i)))
}

/// A point of `Delta_n^k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProductPoint {
    components: Vec<SimplexPoint>,
}

impl ProductPoint {
    pub fn new(components: Vec<SimplexPoint>) -> Result<Self> {
        let Some(first) = components.first() else {
            return Err(Error::invalid("a product point needs at least one component"));
        };
        if components.iter().any(|c| c.n() != first.n()) {
            return Err(Error::invalid("product components must lie in the same simplex"));
        }
        Ok(ProductPoint { components })
    }

    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn n(&self) -> usize {
        self.components[0].n()
    }

    pub fn components(&self) -> &[SimplexPoint] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &SimplexPoint {
        &self.components[i]
    }

    pub fn with_component(&self, i: usize, t: SimplexPoint) -> Result<Self> {
        let mut components = self.components.clone();
        components[i] = t;
        ProductPoint::new(components)
    }

    /// Membership in the coordinate face `F_i`.
    pub fn in_coordinate_face(&self, face: &Face, i: usize) -> bool {
        i < self.k() && face.contains(&self.components[i])
    }
}

/// The barycentric grid of resolution `q` on `Delta_n^k`, triangulated by
/// Kuhn simplices in partial-sum coordinates.
///
/// A vertex is `k` compositions of `q` into `n` parts. Cells are the
/// maximal simplices; a cover of the grid is a list of cell sets, read as
/// the closed unions of those cells.
#[derive(Debug, Clone)]
pub struct SimplexGrid {
    n: usize,
    k: usize,
    q: u32,
    vertices: Vec<Vec<u32>>,
    cells: Vec<Vec<usize>>,
}

impl SimplexGrid {
    pub fn new(n: usize, k: usize, q: u32) -> Result<Self> {
        if n == 0 || k == 0 || q == 0 {
            return Err(Error::invalid("grid needs n, k, q >= 1"));
        }
        let dim = (n - 1) * k;
        if dim > 6 || (q as f64).powi(dim as i32) > 1e6 {
            return Err(Error::ResourceLimit(format!("grid of dimension {dim} at resolution {q} is too large")));
        }
        // Partial sums y_{f,1} <= ... <= y_{f,n-1} <= q per factor.
        let monotone = |y: &[u32]| y.chunks((n - 1).max(1)).all(|c| c.windows(2).all(|w| w[0] <= w[1]) && c.iter().all(|&v| v <= q));
        let to_bary = |y: &[u32]| -> Vec<u32> {
            let mut out = Vec::with_capacity(n * k);
            for f in 0..k {
                let c = &y[f * (n - 1)..(f + 1) * (n - 1)];
                let mut prev = 0;
                for &v in c {
                    out.push(v - prev);
                    prev = v;
                }
                out.push(q - prev);
            }
            out
        };
        let mut index: HashMap<Vec<u32>, usize> = HashMap::new();
        let mut vertices = Vec::new();
        for y in (0..dim).map(|_| 0..=q).multi_cartesian_product().chain((dim == 0).then(Vec::new)) {
            if monotone(&y) {
                index.insert(y.clone(), vertices.len());
                vertices.push(to_bary(&y));
            }
        }
        let mut cells = Vec::new();
        if dim == 0 {
            cells.push(vec![0]);
        } else {
            for base in (0..dim).map(|_| 0..q).multi_cartesian_product() {
                for perm in (0..dim).permutations(dim) {
                    let mut y = base.clone();
                    let mut cell = Vec::with_capacity(dim + 1);
                    let mut inside = true;
                    for step in std::iter::once(None).chain(perm.iter().map(Some)) {
                        if let Some(&p) = step {
                            y[p] += 1;
                        }
                        match index.get(&y) {
                            Some(&v) => cell.push(v),
                            None => {
                                inside = false;
                                break;
                            }
                        }
                    }
                    if inside {
                        cells.push(cell);
                    }
                }
            }
        }
        Ok(SimplexGrid { n, k, q, vertices, cells })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }

    /// Integer barycentric coordinates of a vertex, factor by factor.
    pub fn vertex(&self, v: usize) -> &[u32] {
        &self.vertices[v]
    }

    pub fn vertex_point(&self, v: usize) -> Result<ProductPoint> {
        let q = Q::from_integer(self.q.into());
        ProductPoint::new(
            self.vertices[v]
                .chunks(self.n)
                .map(|c| SimplexPoint::new(c.iter().map(|&a| Q::from_integer(a.into()) / &q).collect()))
                .collect::<Result<_>>()?,
        )
    }

    /// Barycentric coordinate `c` of factor `i` at vertex `v`, times `q`.
    pub fn coord(&self, v: usize, i: usize, c: usize) -> u32 {
        self.vertices[v][i * self.n + c]
    }

    /// Vertices with `x^i_c = 0`, the facet omitting `c` in factor `i`.
    pub fn facet_vertices(&self, i: usize, c: usize) -> FixedBitSet {
        self.vertex_set(|v| self.coord(v, i, c) == 0)
    }

    /// Vertices whose factor-`i` support lies inside `allowed`.
    pub fn supported_within(&self, i: usize, allowed: &[bool]) -> FixedBitSet {
        self.vertex_set(|v| (0..self.n).all(|c| allowed[c] || self.coord(v, i, c) == 0))
    }

    fn vertex_set(&self, pred: impl Fn(usize) -> bool) -> FixedBitSet {
        let mut s = FixedBitSet::with_capacity(self.vertices.len());
        for v in 0..self.vertices.len() {
            if pred(v) {
                s.insert(v);
            }
        }
        s
    }

    /// The vertex sets of closed cell unions; rejects empty elements and
    /// families missing a cell.
    pub fn vertex_cover(&self, elements: &[FixedBitSet]) -> Result<Cover> {
        let mut covered = FixedBitSet::with_capacity(self.cells.len());
        let mut out = Vec::with_capacity(elements.len());
        for e in elements {
            if e.len() != self.cells.len() || e.is_clear() {
                return Err(Error::invalid("grid cover elements must be nonempty cell sets of the grid"));
            }
            covered.union_with(e);
            let mut vs = FixedBitSet::with_capacity(self.vertices.len());
            for c in e.ones() {
                for &v in &self.cells[c] {
                    vs.insert(v);
                }
            }
            out.push(vs);
        }
        if covered.count_ones(..) != self.cells.len() {
            return Err(Error::invalid("grid cover misses a cell"));
        }
        Cover::from_bitsets(self.vertices.len(), out)
    }

    /// Assigns every cell to the nearest center (L1 distance of barycenters
    /// times `(dim + 1) q`, ties to the lower center); empty classes are dropped.
    pub fn voronoi(&self, centers: &[usize]) -> Vec<FixedBitSet> {
        let mut classes = vec![FixedBitSet::with_capacity(self.cells.len()); centers.len()];
        let width = self.vertices[0].len();
        for (ci, cell) in self.cells.iter().enumerate() {
            let mut mid = vec![0i64; width];
            for &v in cell {
                for (m, &a) in mid.iter_mut().zip(&self.vertices[v]) {
                    *m += a as i64;
                }
            }
            let scale = cell.len() as i64;
            let best = centers
                .iter()
                .enumerate()
                .min_by_key(|(_, &c)| {
                    let d: i64 = mid.iter().zip(&self.vertices[c]).map(|(&m, &a)| (m - scale * a as i64).abs()).sum();
                    d
                })
                .map(|(i, _)| i)
                .expect("at least one center");
            classes[best].insert(ci);
        }
        classes.into_iter().filter(|c| !c.is_clear()).collect()
    }

    /// The vertex whose factors are each a simplex vertex (`Some(c)`) or the
    /// rounded barycenter (`None`).
    pub fn landmark(&self, choice: &[Option<usize>]) -> usize {
        let mut target = Vec::with_capacity(self.n * self.k);
        for ch in choice {
            match ch {
                Some(c) => target.extend((0..self.n).map(|i| if i == *c { self.q } else { 0 })),
                None => {
                    let base = self.q / self.n as u32;
                    let extra = self.q as usize % self.n;
                    target.extend((0..self.n).map(|i| base + u32::from(i < extra)));
                }
            }
        }
        self.vertices.iter().position(|v| *v == target).expect("landmarks are grid vertices")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    #[test]
    fn faces_and_opposites() {
        let f = Face::new(4, [0, 1]).unwrap();
        assert_eq!(opposite_face(&f).unwrap(), Face::new(4, [2, 3]).unwrap());
        assert_eq!(opposite_face(&Face::new(2, [0]).unwrap()).unwrap(), Face::new(2, [1]).unwrap());
        assert!(opposite_face(&Face::new(3, [0, 1, 2]).unwrap()).is_err());
        assert!(Face::new(3, []).is_err());
        let t = SimplexPoint::new(vec![q(1, 2), q(1, 2), q(0, 1), q(0, 1)]).unwrap();
        assert!(f.contains(&t));
        assert!(!opposite_face(&f).unwrap().contains(&t));
        assert_eq!(f.mass(&t), q(1, 1));
        assert!(SimplexPoint::new(vec![q(1, 2), q(1, 3)]).is_err());
    }

    #[test]
    fn grid_counts() {
        // Delta_2 is a segment: q cells.
        let g = SimplexGrid::new(2, 1, 10).unwrap();
        assert_eq!((g.vertex_count(), g.cell_count()), (11, 10));
        // Delta_3 is a triangle: q^2 small triangles.
        let g = SimplexGrid::new(3, 1, 10).unwrap();
        assert_eq!((g.vertex_count(), g.cell_count()), (66, 100));
        // Delta_2^2 is a square: 2 q^2 triangles.
        let g = SimplexGrid::new(2, 2, 10).unwrap();
        assert_eq!((g.vertex_count(), g.cell_count()), (121, 200));
        // Delta_4 is a tetrahedron: q^3 Kuhn simplices.
        let g = SimplexGrid::new(4, 1, 4).unwrap();
        assert_eq!((g.vertex_count(), g.cell_count()), (35, 64));
        let p = g.vertex_point(0).unwrap();
        assert_eq!(p.k(), 1);
        assert_eq!(SimplexGrid::new(1, 3, 5).unwrap().cell_count(), 1);
    }

    #[test]
    fn landmarks_and_voronoi() {
        let g = SimplexGrid::new(2, 1, 10).unwrap();
        let centers = [g.landmark(&[Some(0)]), g.landmark(&[None]), g.landmark(&[Some(1)])];
        let classes = g.voronoi(&centers);
        let sizes: Vec<usize> = classes.iter().map(|c| c.count_ones(..)).collect();
        assert_eq!(sizes.iter().sum::<usize>(), 10);
        assert_eq!(sizes.len(), 3);
    }
}
