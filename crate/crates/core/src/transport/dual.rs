//! Dual transport: the Kantorovich–Rubinstein linear program over
//! 1-Lipschitz potentials on the joint support, solved by a dense rational
//! simplex method with Bland's rule.

use num::{Signed, Zero};
use serde::{Deserialize, Serialize};

use super::EmpiricalMeasure;
use crate::error::{Error, Result};
use crate::rational::Q;
use crate::symbolic::{PeriodicPoint, SystemMetric};

/// An optimal potential `f` on the joint support, normalized so that
/// `f(support[0]) = 0`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DualSolution {
    pub support: Vec<PeriodicPoint>,
    #[serde(with = "crate::rational::serde_q_vec")]
    pub potential: Vec<Q>,
    #[serde(with = "crate::rational::serde_q")]
    pub value: Q,
}

impl DualSolution {
    /// Checks the Lipschitz constraints and that `value = int f dmu - int f dnu`.
    pub fn validate(&self, metric: &SystemMetric, mu: &EmpiricalMeasure, nu: &EmpiricalMeasure) -> Result<()> {
        for (a, x) in self.support.iter().enumerate() {
            for (b, y) in self.support.iter().enumerate() {
                if &self.potential[a] - &self.potential[b] > metric.d(x, y)? {
                    return Err(Error::invalid(format!("potential is not 1-Lipschitz on ({x}, {y})")));
                }
            }
        }
        let integral = |m: &EmpiricalMeasure| -> Result<Q> {
            let mut total = Q::zero();
            for (x, w) in m.atoms() {
                let k = self
                    .support
                    .binary_search(x)
                    .map_err(|_| Error::invalid(format!("atom {x} is outside the potential's support")))?;
                total += w * &self.potential[k];
            }
            Ok(total)
        };
        if integral(mu)? - integral(nu)? != self.value {
            return Err(Error::invalid("potential does not attain the stated value"));
        }
        Ok(())
    }
}

/// `sup_f int f d(mu - nu)` over 1-Lipschitz `f`, with an optimal `f`.
pub fn kantorovich_dual(metric: &SystemMetric, mu: &EmpiricalMeasure, nu: &EmpiricalMeasure) -> Result<DualSolution> {
    let mut support: Vec<PeriodicPoint> = mu.support().chain(nu.support()).cloned().collect();
    support.sort();
    support.dedup();
    let mut dist = vec![vec![Q::zero(); support.len()]; support.len()];
    for (a, x) in support.iter().enumerate() {
        for (b, y) in support.iter().enumerate() {
            dist[a][b] = metric.d(x, y)?;
        }
    }
    let mass: Vec<Q> = support.iter().map(|x| mu.weight_of(x) - nu.weight_of(x)).collect();
    let (value, potential) = lipschitz_dual(&dist, &mass)?;
    Ok(DualSolution { support, potential, value })
}

/// Maximizes `sum_k f_k mass_k` subject to `f_a - f_b <= dist[a][b]` with
/// `f_0 = 0`. `mass` must sum to zero.
pub fn lipschitz_dual(dist: &[Vec<Q>], mass: &[Q]) -> Result<(Q, Vec<Q>)> {
    let k = mass.len();
    if dist.len() != k || dist.iter().any(|row| row.len() != k) {
        return Err(Error::invalid("distance matrix shape does not match the masses"));
    }
    if !mass.iter().sum::<Q>().is_zero() {
        return Err(Error::invalid("signed masses must sum to zero"));
    }
    if k <= 1 {
        return Ok((Q::zero(), vec![Q::zero(); k]));
    }
    // f_a = u_a - w_a for a >= 1, with u at column 2(a-1) and w at 2(a-1)+1.
    let nvars = 2 * (k - 1);
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for a in 0..k {
        for b in 0..k {
            if a == b {
                continue;
            }
            if dist[a][b].is_negative() {
                return Err(Error::invalid("distances must be nonnegative"));
            }
            let mut row = vec![Q::zero(); nvars];
            if a > 0 {
                row[2 * (a - 1)] += Q::from_integer(1.into());
                row[2 * (a - 1) + 1] -= Q::from_integer(1.into());
            }
            if b > 0 {
                row[2 * (b - 1)] -= Q::from_integer(1.into());
                row[2 * (b - 1) + 1] += Q::from_integer(1.into());
            }
            rows.push(row);
            rhs.push(dist[a][b].clone());
        }
    }
    let mut objective = vec![Q::zero(); nvars];
    for a in 1..k {
        objective[2 * (a - 1)] = mass[a].clone();
        objective[2 * (a - 1) + 1] = -mass[a].clone();
    }
    let (value, x) = simplex_max(&rows, &rhs, &objective)?;
    let mut f = vec![Q::zero(); k];
    for a in 1..k {
        f[a] = &x[2 * (a - 1)] - &x[2 * (a - 1) + 1];
    }
    Ok((value, f))
}

/// Maximizes `c x` subject to `A x <= b`, `x >= 0`, for `b >= 0`.
fn simplex_max(a: &[Vec<Q>], b: &[Q], c: &[Q]) -> Result<(Q, Vec<Q>)> {
    let m = a.len();
    let n = c.len();
    let width = n + m + 1;
    let mut t: Vec<Vec<Q>> = Vec::with_capacity(m);
    for (i, row) in a.iter().enumerate() {
        let mut r = vec![Q::zero(); width];
        r[..n].clone_from_slice(row);
        r[n + i] = Q::from_integer(1.into());
        r[width - 1] = b[i].clone();
        t.push(r);
    }
    let mut obj = vec![Q::zero(); width];
    obj[..n].clone_from_slice(c);
    let mut basis: Vec<usize> = (n..n + m).collect();
    loop {
        let Some(enter) = (0..width - 1).find(|&j| obj[j].is_positive()) else { break };
        let mut leave: Option<(usize, Q)> = None;
        for i in 0..m {
            if !t[i][enter].is_positive() {
                continue;
            }
            let ratio = &t[i][width - 1] / &t[i][enter];
            let better = match &leave {
                None => true,
                Some((li, lr)) => ratio < *lr || (ratio == *lr && basis[i] < basis[*li]),
            };
            if better {
                leave = Some((i, ratio));
            }
        }
        let Some((r, _)) = leave else {
            return Err(Error::invalid("dual program is unbounded"));
        };
        let pivot = t[r][enter].clone();
        let nonzero: Vec<usize> = (0..width).filter(|&j| !t[r][j].is_zero()).collect();
        for &j in &nonzero {
            t[r][j] /= &pivot;
        }
        let pivot_row = t[r].clone();
        for (i, row) in t.iter_mut().enumerate() {
            if i == r || row[enter].is_zero() {
                continue;
            }
            let factor = row[enter].clone();
            for &j in &nonzero {
                row[j] -= &factor * &pivot_row[j];
            }
        }
        if !obj[enter].is_zero() {
            let factor = obj[enter].clone();
            for &j in &nonzero {
                obj[j] -= &factor * &pivot_row[j];
            }
        }
        basis[r] = enter;
    }
    let mut x = vec![Q::zero(); n];
    for (i, &v) in basis.iter().enumerate() {
        if v < n {
            x[v] = t[i][width - 1].clone();
        }
    }
    Ok((-obj[width - 1].clone(), x))
}
