//! Primal transport: successive shortest paths on the transportation network.

use num::{Signed, Zero};
use serde::{Deserialize, Serialize};

use super::EmpiricalMeasure;
use crate::error::{Error, Result};
use crate::rational::{format_q, Q};
use crate::symbolic::{PeriodicPoint, SystemMetric};

/// A coupling of two measures: `matrix[i][j]` is the mass sent from
/// `source[i]` to `target[j]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransportPlan {
    pub source: Vec<PeriodicPoint>,
    pub target: Vec<PeriodicPoint>,
    #[serde(with = "crate::rational::serde_q_matrix")]
    pub matrix: Vec<Vec<Q>>,
}

impl TransportPlan {
    /// Checks nonnegativity and both marginals exactly.
    pub fn validate(&self, mu: &EmpiricalMeasure, nu: &EmpiricalMeasure) -> Result<()> {
        let src: Vec<_> = mu.support().cloned().collect();
        let dst: Vec<_> = nu.support().cloned().collect();
        if src != self.source || dst != self.target {
            return Err(Error::invalid("plan supports differ from the measures"));
        }
        if self.matrix.len() != src.len() || self.matrix.iter().any(|row| row.len() != dst.len()) {
            return Err(Error::invalid("plan matrix has the wrong shape"));
        }
        if self.matrix.iter().flatten().any(|v| v.is_negative()) {
            return Err(Error::invalid("plan has a negative entry"));
        }
        for (i, (_, w)) in mu.atoms().iter().enumerate() {
            let row: Q = self.matrix[i].iter().sum();
            if &row != w {
                return Err(Error::invalid(format!("row {i} sums to {} not {}", format_q(&row), format_q(w))));
            }
        }
        for (j, (_, w)) in nu.atoms().iter().enumerate() {
            let col: Q = self.matrix.iter().map(|row| &row[j]).sum();
            if &col != w {
                return Err(Error::invalid(format!("column {j} sums to {} not {}", format_q(&col), format_q(w))));
            }
        }
        Ok(())
    }

    pub fn cost(&self, metric: &SystemMetric) -> Result<Q> {
        let mut total = Q::zero();
        for (i, x) in self.source.iter().enumerate() {
            for (j, y) in self.target.iter().enumerate() {
                if !self.matrix[i][j].is_zero() {
                    total += &self.matrix[i][j] * metric.d(x, y)?;
                }
            }
        }
        Ok(total)
    }
}

/// `W(mu, nu)` with an optimal plan.
pub fn wasserstein1(metric: &SystemMetric, mu: &EmpiricalMeasure, nu: &EmpiricalMeasure) -> Result<(Q, TransportPlan)> {
    let source: Vec<_> = mu.support().cloned().collect();
    let target: Vec<_> = nu.support().cloned().collect();
    let mut cost = Vec::with_capacity(source.len());
    for x in &source {
        let mut row = Vec::with_capacity(target.len());
        for y in &target {
            row.push(metric.d(x, y)?);
        }
        cost.push(row);
    }
    let supply: Vec<Q> = mu.atoms().iter().map(|(_, w)| w.clone()).collect();
    let demand: Vec<Q> = nu.atoms().iter().map(|(_, w)| w.clone()).collect();
    let (value, matrix) = min_cost_transport(&cost, &supply, &demand)?;
    Ok((value, TransportPlan { source, target, matrix }))
}

struct Edge {
    to: usize,
    cap: Option<Q>,
    cost: Q,
    rev: usize,
}

impl Edge {
    fn open(&self) -> bool {
        self.cap.as_ref().map_or(true, |c| c.is_positive())
    }
}

struct Network {
    adj: Vec<Vec<Edge>>,
}

impl Network {
    fn add(&mut self, from: usize, to: usize, cap: Option<Q>, cost: Q) {
        let rev_from = self.adj[to].len();
        let rev_to = self.adj[from].len();
        self.adj[from].push(Edge { to, cap, cost: cost.clone(), rev: rev_from });
        self.adj[to].push(Edge { to: from, cap: Some(Q::zero()), cost: -cost, rev: rev_to });
    }

    /// Bellman-Ford from `s`; returns the predecessor edge of every reached node.
    fn shortest_paths(&self, s: usize) -> Vec<Option<(usize, usize)>> {
        let n = self.adj.len();
        let mut dist: Vec<Option<Q>> = vec![None; n];
        let mut pred = vec![None; n];
        dist[s] = Some(Q::zero());
        for _ in 0..n {
            let mut changed = false;
            for u in 0..n {
                let Some(du) = dist[u].clone() else { continue };
                for (k, e) in self.adj[u].iter().enumerate() {
                    if !e.open() {
                        continue;
                    }
                    let cand = &du + &e.cost;
                    if dist[e.to].as_ref().map_or(true, |dv| cand < *dv) {
                        dist[e.to] = Some(cand);
                        pred[e.to] = Some((u, k));
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        pred
    }
}

/// Exact min-cost transportation: minimizes `sum cost[i][j] * plan[i][j]`
/// subject to row sums `supply` and column sums `demand`.
pub fn min_cost_transport(cost: &[Vec<Q>], supply: &[Q], demand: &[Q]) -> Result<(Q, Vec<Vec<Q>>)> {
    let (m, n) = (supply.len(), demand.len());
    if cost.len() != m || cost.iter().any(|row| row.len() != n) {
        return Err(Error::invalid("cost matrix shape does not match the marginals"));
    }
    if supply.iter().chain(demand).any(|w| w.is_negative()) {
        return Err(Error::invalid("marginals must be nonnegative"));
    }
    let total: Q = supply.iter().sum();
    if total != demand.iter().sum::<Q>() {
        return Err(Error::invalid("marginals have different total mass"));
    }
    let (s, t) = (0, m + n + 1);
    let mut net = Network { adj: (0..m + n + 2).map(|_| Vec::new()).collect() };
    for (i, w) in supply.iter().enumerate() {
        net.add(s, 1 + i, Some(w.clone()), Q::zero());
    }
    for (j, w) in demand.iter().enumerate() {
        net.add(1 + m + j, t, Some(w.clone()), Q::zero());
    }
    for i in 0..m {
        for j in 0..n {
            net.add(1 + i, 1 + m + j, None, cost[i][j].clone());
        }
    }
    let mut sent = Q::zero();
    while sent < total {
        let pred = net.shortest_paths(s);
        if pred[t].is_none() {
            return Err(Error::invalid("transport network is disconnected"));
        }
        let mut path = Vec::new();
        let mut v = t;
        while v != s {
            let (u, k) = pred[v].expect("path back to source");
            path.push((u, k));
            v = u;
        }
        let bottleneck = path
            .iter()
            .filter_map(|&(u, k)| net.adj[u][k].cap.clone())
            .min()
            .expect("source edges are finite");
        for &(u, k) in &path {
            let rev = net.adj[u][k].rev;
            let to = net.adj[u][k].to;
            if let Some(c) = net.adj[u][k].cap.as_mut() {
                *c -= &bottleneck;
            }
            if let Some(c) = net.adj[to][rev].cap.as_mut() {
                *c += &bottleneck;
            }
        }
        sent += bottleneck;
    }
    let mut plan = vec![vec![Q::zero(); n]; m];
    let mut value = Q::zero();
    for i in 0..m {
        for e in &net.adj[1 + i] {
            if e.to > m && e.to <= m + n {
                let j = e.to - 1 - m;
                // Flow on a forward edge equals the residual capacity of its reverse.
                let flow = net.adj[e.to][e.rev].cap.clone().expect("reverse edges are finite");
                value += &flow * &cost[i][j];
                plan[i][j] = flow;
            }
        }
    }
    Ok((value, plan))
}
