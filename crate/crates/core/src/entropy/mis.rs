//! Maximum independent sets in small conflict graphs.
//!
//! Simplicial vertices are taken first (always safe), then every remaining
//! component of at most 64 vertices is solved by bitset branch and bound
//! with a clique-cover bound. Larger components fall back to greedy.

/// An undirected graph on `0..n` given by an adjacency matrix.
#[derive(Debug, Clone)]
pub struct ConflictGraph {
    adj: Vec<Vec<bool>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MisResult {
    /// Sorted vertex indices.
    pub vertices: Vec<usize>,
    pub exact: bool,
}

pub const EXACT_COMPONENT_LIMIT: usize = 64;

impl ConflictGraph {
    pub fn new(n: usize) -> Self {
        ConflictGraph { adj: vec![vec![false; n]; n] }
    }

    pub fn from_fn(n: usize, mut edge: impl FnMut(usize, usize) -> bool) -> Self {
        let mut g = Self::new(n);
        for a in 0..n {
            for b in a + 1..n {
                if edge(a, b) {
                    g.add_edge(a, b);
                }
            }
        }
        g
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    pub fn add_edge(&mut self, a: usize, b: usize) {
        if a != b {
            self.adj[a][b] = true;
            self.adj[b][a] = true;
        }
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.adj[a][b]
    }

    pub fn is_independent(&self, set: &[usize]) -> bool {
        set.iter().enumerate().all(|(i, &a)| set[i + 1..].iter().all(|&b| !self.adj[a][b]))
    }

    pub fn maximum_independent_set(&self) -> MisResult {
        let n = self.len();
        let mut alive = vec![true; n];
        let mut chosen = Vec::new();
        self.take_simplicial(&mut alive, &mut chosen);
        let mut exact = true;
        for comp in self.components(&alive) {
            if comp.len() <= EXACT_COMPONENT_LIMIT {
                chosen.extend(self.branch_and_bound(&comp));
            } else {
                exact = false;
                chosen.extend(self.greedy(&comp));
            }
        }
        chosen.sort_unstable();
        MisResult { vertices: chosen, exact }
    }

    fn alive_neighbors(&self, v: usize, alive: &[bool]) -> Vec<usize> {
        (0..self.len()).filter(|&u| alive[u] && self.adj[v][u]).collect()
    }

    fn take_simplicial(&self, alive: &mut [bool], chosen: &mut Vec<usize>) {
        loop {
            let found = (0..self.len()).find(|&v| {
                alive[v] && {
                    let nb = self.alive_neighbors(v, alive);
                    nb.iter().enumerate().all(|(i, &a)| nb[i + 1..].iter().all(|&b| self.adj[a][b]))
                }
            });
            let Some(v) = found else { return };
            for u in self.alive_neighbors(v, alive) {
                alive[u] = false;
            }
            alive[v] = false;
            chosen.push(v);
        }
    }

    fn components(&self, alive: &[bool]) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.len()];
        let mut out = Vec::new();
        for s in 0..self.len() {
            if !alive[s] || seen[s] {
                continue;
            }
            let mut comp = vec![s];
            seen[s] = true;
            let mut k = 0;
            while k < comp.len() {
                let v = comp[k];
                for u in 0..self.len() {
                    if alive[u] && !seen[u] && self.adj[v][u] {
                        seen[u] = true;
                        comp.push(u);
                    }
                }
                k += 1;
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// Minimum-degree greedy; ties go to the lower index.
    fn greedy(&self, comp: &[usize]) -> Vec<usize> {
        let mut alive: Vec<bool> = vec![false; self.len()];
        for &v in comp {
            alive[v] = true;
        }
        let mut out = Vec::new();
        loop {
            let pick = comp
                .iter()
                .copied()
                .filter(|&v| alive[v])
                .min_by_key(|&v| (self.alive_neighbors(v, &alive).len(), v));
            let Some(v) = pick else { return out };
            for u in self.alive_neighbors(v, &alive) {
                alive[u] = false;
            }
            alive[v] = false;
            out.push(v);
        }
    }

    fn branch_and_bound(&self, comp: &[usize]) -> Vec<usize> {
        let k = comp.len();
        let nbr: Vec<u64> = (0..k)
            .map(|i| (0..k).filter(|&j| self.adj[comp[i]][comp[j]]).fold(0u64, |m, j| m | 1 << j))
            .collect();
        let all = if k == 64 { !0 } else { (1u64 << k) - 1 };
        let mut search = Bnb { nbr, best: 0, best_size: 0 };
        search.best = self.greedy(comp).iter().map(|v| comp.iter().position(|c| c == v).unwrap()).fold(0, |m, i| m | 1 << i);
        search.best_size = search.best.count_ones();
        search.run(all, 0);
        (0..k).filter(|&i| search.best >> i & 1 == 1).map(|i| comp[i]).collect()
    }
}

struct Bnb {
    nbr: Vec<u64>,
    best: u64,
    best_size: u32,
}

impl Bnb {
    /// Number of cliques in a greedy clique cover of `p`; bounds the MIS of `p`.
    fn clique_cover_bound(&self, mut p: u64) -> u32 {
        let mut count = 0;
        while p != 0 {
            let v = p.trailing_zeros() as usize;
            let mut clique_candidates = p & self.nbr[v];
            p &= !(1u64 << v);
            while clique_candidates != 0 {
                let u = clique_candidates.trailing_zeros() as usize;
                p &= !(1u64 << u);
                clique_candidates &= self.nbr[u];
            }
            count += 1;
        }
        count
    }

    fn run(&mut self, p: u64, current: u64) {
        if p == 0 {
            if current.count_ones() > self.best_size {
                self.best = current;
                self.best_size = current.count_ones();
            }
            return;
        }
        if current.count_ones() + self.clique_cover_bound(p) <= self.best_size {
            return;
        }
        // Highest degree inside p first; ties go to the lower index.
        let mut v = p.trailing_zeros() as usize;
        let mut best_deg = 0;
        let mut rest = p;
        while rest != 0 {
            let u = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            let deg = (self.nbr[u] & p).count_ones();
            if deg > best_deg {
                best_deg = deg;
                v = u;
            }
        }
        if best_deg == 0 {
            self.run(0, current | p);
            return;
        }
        self.run(p & !self.nbr[v] & !(1u64 << v), current | 1 << v);
        self.run(p & !(1u64 << v), current);
    }
}
