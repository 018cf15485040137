//! End-to-end lower-bound certificates for the mean dimension of the
//! induced map on measures: parameter schedule, translate selection, an
//! independence set over the blocks, the embedding `Psi`, spot checks of
//! its face estimates and the exact inequality chain ending in
//! `(r^3 / 4^4 H^2) 2^H |G_n|`.

use std::collections::BTreeSet;

use num::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::psi::{claim1_decompose, claim2_bounds, Claim1Result, Claim2Result, PsiStructure};
use super::simplex::{Face, ProductPoint, SimplexPoint};
use crate::entropy::certify_over_base;
use crate::error::{Error, Result};
use crate::group::{FiniteSubset, FolnerWindow, GroupElement};
use crate::rational::{dyadic, format_q, Q};
use crate::symbolic::{metric_d, CylinderSet, PeriodicPoint, SlidingBlockCode, SystemMetric};

/// `eta = 1 / ETA_DENOMINATOR`.
pub const ETA_DENOMINATOR: u64 = 16;

/// Base points for the independence search have least period at most this.
pub const BASE_PERIOD_LIMIT: usize = 4;

const DELTA_POOL_PERIOD: usize = 6;

fn qu(n: u64) -> Q {
    Q::from_integer(n.into())
}

/// The least integer `M` with `r/4 < H/M < r/2`.
pub fn choose_m(r: &Q, h: usize) -> Result<usize> {
    if !r.is_positive() || *r > Q::one() || h == 0 {
        return Err(Error::invalid(format!("need 0 < r <= 1 and H >= 1, got r = {}, H = {h}", format_q(r))));
    }
    let hq = qu(h as u64);
    let m = (qu(2) * &hq / r).floor() + Q::one();
    if m >= qu(4) * &hq / r {
        return Err(Error::NoMInRange { r: format_q(r), h });
    }
    usize::try_from(m.to_integer()).map_err(|_| Error::invalid("M does not fit in usize"))
}

/// `delta = 2^{-exponent}` with `d(z, z') <= delta => d(h z, h z') < d(V1, V2)/2`
/// for every offset `h`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeltaChoice {
    pub exponent: u32,
    #[serde(with = "crate::rational::serde_q")]
    pub delta: Q,
    /// `d(V1, V2) = 2^{-target_exponent}` on the full shift.
    pub target_exponent: u32,
    /// Pairs of pool points within `delta` on which the implication was replayed.
    pub pool_pairs: u64,
}

/// Points within `2^{-k}` agree on `|i| < k`, so their `h`-translates agree
/// on `|i| < k - |h|`. The largest dyadic `delta` is therefore at
/// `k = max|h| + s + 2` where `d(V1, V2) = 2^{-s}`. The implication is then
/// replayed on all source points of period at most 6.
pub fn delta_for(code: &SlidingBlockCode, v1: &CylinderSet, v2: &CylinderSet, offsets: &[i64]) -> Result<DeltaChoice> {
    let alphabet = code.source_alphabet();
    let target = v1.distance_to(v2, alphabet)?;
    if target.is_zero() {
        return Err(Error::DeltaNotFound("V1 and V2 are at distance 0".into()));
    }
    let mut s = 0u32;
    while dyadic(s) > target {
        s += 1;
    }
    let reach = offsets.iter().map(|h| h.unsigned_abs()).max().unwrap_or(0);
    let exponent = u32::try_from(reach + s as u64 + 2).map_err(|_| Error::DeltaNotFound("offsets too large".into()))?;
    let delta = dyadic(exponent);
    let half = &target / qu(2);
    let mut pool = Vec::new();
    for p in 1..=DELTA_POOL_PERIOD {
        pool.extend(code.source().points_of_period(p)?);
    }
    pool.sort();
    pool.dedup();
    let mut pool_pairs = 0u64;
    for (a, z) in pool.iter().enumerate() {
        for w in &pool[a + 1..] {
            if metric_d(z, w) > delta {
                continue;
            }
            pool_pairs += 1;
            for &h in offsets {
                let g = GroupElement(h);
                if metric_d(&z.shift(g), &w.shift(g)) >= half {
                    return Err(Error::DeltaNotFound(format!("pool pair ({z}, {w}) breaks the implication at offset {h}")));
                }
            }
        }
    }
    Ok(DeltaChoice { exponent, delta, target_exponent: s, pool_pairs })
}

/// `G^0 = {g in W : h_j + g in W for all j}`.
fn interior(window: &FiniteSubset, offsets: &[i64]) -> Vec<i64> {
    window.iter().filter(|g| offsets.iter().all(|h| window.contains(h + g))).collect()
}

/// Greedy translates: `g_1 = min G^0`, then each `g_l` is the least element
/// of `G^0` outside `{-h_j + h_j' + g_p : p < l}`, which keeps the blocks
/// `{h_j + g_l}` pairwise disjoint.
pub fn claim0_select_translates(window: &FiniteSubset, offsets: &[i64], target: usize) -> Result<Vec<i64>> {
    if offsets.is_empty() || offsets.iter().collect::<BTreeSet<_>>().len() != offsets.len() {
        return Err(Error::invalid("offsets must be nonempty and pairwise distinct"));
    }
    let g0 = interior(window, offsets);
    let mut excluded: BTreeSet<i64> = BTreeSet::new();
    let mut chosen = Vec::with_capacity(target);
    for _ in 0..target {
        let Some(&g) = g0.iter().find(|g| !excluded.contains(g)) else {
            return Err(Error::Shortfall { achieved: chosen.len(), target });
        };
        for a in offsets {
            for b in offsets {
                excluded.insert(-a + b + g);
            }
        }
        chosen.push(g);
    }
    Ok(chosen)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MdimParams {
    #[serde(with = "crate::rational::serde_q")]
    pub r: Q,
    pub h: usize,
    pub m: usize,
    /// `h_1, ..., h_M`.
    pub offsets: Vec<i64>,
    #[serde(with = "crate::rational::serde_q")]
    pub eta: Q,
    pub window: FolnerWindow,
    pub period: usize,
    /// `|G_n^0|`.
    pub interior_size: usize,
    pub t_n: usize,
    pub delta: DeltaChoice,
    #[serde(with = "crate::rational::serde_q")]
    pub epsilon: Q,
}

/// One step `left >= right` (or `>`) of the inequality chain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainLink {
    pub label: String,
    #[serde(with = "crate::rational::serde_q")]
    pub left: Q,
    #[serde(with = "crate::rational::serde_q")]
    pub right: Q,
    pub strict: bool,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpotCheck {
    pub label: String,
    pub block: usize,
    pub point: ProductPoint,
    pub claim1: Claim1Result,
    pub claim2: Claim2Result,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MdimLowerCertificate {
    pub params: MdimParams,
    pub translates: Vec<i64>,
    /// `E'_l = {h_j + g_l}`.
    pub blocks: Vec<Vec<i64>>,
    pub e_n: FiniteSubset,
    pub independence_base: PeriodicPoint,
    pub independence_lifts: u64,
    /// Blocks meeting `E_n` in at least `H` elements.
    pub q_n: Vec<usize>,
    pub m_n: usize,
    pub structure: PsiStructure,
    /// `(2^H - 1) m_n`.
    #[serde(with = "crate::rational::serde_q")]
    pub lebesgue_form: Q,
    #[serde(with = "crate::rational::serde_q")]
    pub bound: Q,
    pub chain: Vec<ChainLink>,
    pub spot_checks: Vec<SpotCheck>,
}

/// `(r^3 / 4^4 H^2) 2^H N`.
pub fn bound_value(r: &Q, h: usize, n: usize) -> Q {
    r * r * r / (qu(256) * qu(h as u64 * h as u64)) * qu(1 << h) * qu(n as u64)
}

fn chain_links(r: &Q, h: usize, m: usize, eta: &Q, n: usize, t_n: usize, m_n: usize) -> Vec<ChainLink> {
    let two_h = qu(1 << h);
    let lower_dim = &two_h - Q::one();
    let (mq, nq, tq) = (qu(m as u64), qu(n as u64), qu(t_n as u64));
    let m2 = &mq * &mq;
    let a = &lower_dim * qu(m_n as u64);
    let b = &lower_dim * r * &tq / qu(2);
    let c = &lower_dim * r / qu(2) * ((Q::one() - eta) * &nq / &m2 - Q::one());
    let d = &two_h * r / qu(4) * (&nq / (qu(4) * &m2));
    let e = bound_value(r, h, n);
    let link = |label: &str, left: &Q, right: &Q, strict: bool| ChainLink {
        label: label.into(),
        left: left.clone(),
        right: right.clone(),
        strict,
        holds: if strict { left > right } else { left >= right },
    };
    vec![
        link("(2^H-1) m_n >= (2^H-1) r T_n / 2", &a, &b, false),
        link("(2^H-1) r T_n / 2 >= (2^H-1) (r/2) ((1-eta) N / M^2 - 1)", &b, &c, false),
        link("(2^H-1) (r/2) ((1-eta) N / M^2 - 1) > 2^H (r/4) N / (4 M^2)", &c, &d, true),
        link("2^H (r/4) N / (4 M^2) >= (r^3 / 4^4 H^2) 2^H N", &d, &e, false),
    ]
}

fn vertex_point(n: usize, k: usize, block: usize, split: Option<(usize, usize)>) -> Result<ProductPoint> {
    let mut comps = Vec::with_capacity(k);
    for i in 0..k {
        comps.push(match split {
            Some((a, b)) if i == block => {
                let mut c = vec![Q::zero(); n];
                c[a] = Q::new(1.into(), 2.into());
                c[b] = Q::new(1.into(), 2.into());
                SimplexPoint::new(c)?
            }
            _ => SimplexPoint::vertex(n, 0)?,
        });
    }
    ProductPoint::new(comps)
}

fn spot_checks(structure: &PsiStructure) -> Result<Vec<SpotCheck>> {
    let n = structure.simplex_size();
    let face = Face::facet(n, n - 1)?;
    let mut out = Vec::new();
    for i in 0..structure.m {
        for (label, split) in [("split across the facet", Some((0, n - 1))), ("vertex inside the facet", None)] {
            let point = vertex_point(n, structure.m, i, split)?;
            let claim1 = claim1_decompose(structure, &point, &face, i)?;
            let claim2 = claim2_bounds(structure, &point, &face, i)?;
            out.push(SpotCheck { label: label.into(), block: i, point, claim1, claim2 });
        }
    }
    Ok(out)
}

/// Builds the full certificate for the factor map `code`, target sets
/// `V1`, `V2`, density `r` and pattern length `H` over the window `G_n`.
/// Lifts are periodic with the given period; `budget` bounds the number
/// of lift problems solved.
#[allow(clippy::too_many_arguments)]
pub fn mdim_lower_certificate(
    code: &SlidingBlockCode,
    v1: &CylinderSet,
    v2: &CylinderSet,
    r: &Q,
    h: usize,
    window: &FolnerWindow,
    period: usize,
    budget: u64,
) -> Result<MdimLowerCertificate> {
    let m = choose_m(r, h)?;
    let eta = Q::new(1.into(), ETA_DENOMINATOR.into());
    let n = window.len();
    let w = window.to_subset();
    let offsets: Vec<i64> = (0..m as i64).collect();
    let interior_size = interior(&w, &offsets).len();
    if qu(interior_size as u64) <= (Q::one() - &eta) * qu(n as u64) {
        return Err(Error::invalid(format!(
            "|G_n^0| = {interior_size} is not above (1 - eta)|G_n| for |G_n| = {n}, M = {m}"
        )));
    }
    let t_n = ((Q::one() - &eta) * qu(n as u64) / qu((m * m) as u64)).floor().to_integer();
    let t_n = usize::try_from(t_n).map_err(|_| Error::invalid("T_n out of range"))?;
    if t_n == 0 {
        return Err(Error::invalid(format!("T_n = 0 for |G_n| = {n}, M = {m}")));
    }
    let delta = delta_for(code, v1, v2, &offsets)?;
    let epsilon = &delta.delta * &delta.delta / (qu(4) * SystemMetric::new(code.source_alphabet()).diameter() * qu(1 << h));
    let translates = claim0_select_translates(&w, &offsets, t_n)?;
    let blocks: Vec<Vec<i64>> = translates.iter().map(|g| offsets.iter().map(|o| o + g).collect()).collect();
    let residues: BTreeSet<i64> = blocks.iter().flatten().map(|p| p.rem_euclid(period as i64)).collect();
    if residues.len() != t_n * m {
        return Err(Error::invalid(format!("period {period} folds distinct block positions together")));
    }

    // Each block keeps its first ceil(r M) positions, so |E_n| >= r |union|.
    let keep = usize::try_from((r * qu(m as u64)).ceil().to_integer()).map_err(|_| Error::invalid("r M out of range"))?;
    let e_n: FiniteSubset = blocks.iter().flat_map(|b| b[..keep].iter().copied()).collect();
    let lifts = 1u64.checked_shl(e_n.len() as u32).filter(|&x| x <= budget);
    if lifts.is_none() {
        return Err(Error::ResourceLimit(format!("2^{} lifts for E_n exceed the budget of {budget}", e_n.len())));
    }
    let mut bases: Vec<PeriodicPoint> = Vec::new();
    for p in (1..=BASE_PERIOD_LIMIT).filter(|p| period % p == 0) {
        bases.extend(code.target().points_of_period(p)?);
    }
    bases.sort();
    bases.dedup();
    let mut found = None;
    for y in &bases {
        if certify_over_base(&e_n, v1, v2, code, period, y, budget)?.is_some() {
            found = Some(y.clone());
            break;
        }
    }
    let Some(base) = found else {
        return Err(Error::IndependenceShortfall(format!(
            "E_n of size {} is not an independence set over any base point of period <= {BASE_PERIOD_LIMIT}",
            e_n.len()
        )));
    };

    let q_n: Vec<usize> = (0..t_n).filter(|&l| blocks[l].iter().filter(|p| e_n.contains(**p)).count() >= h).collect();
    let m_n = q_n.len();
    if qu(2 * m_n as u64) < r * qu(t_n as u64) {
        return Err(Error::IndependenceShortfall(format!("m_n = {m_n} is below r T_n / 2")));
    }
    let psi_translates: Vec<i64> = q_n.iter().map(|&l| translates[l]).collect();
    let psi_offsets: Vec<Vec<i64>> = q_n
        .iter()
        .map(|&l| offsets.iter().filter(|o| e_n.contains(*o + translates[l])).take(h).copied().collect())
        .collect();
    let structure = PsiStructure::lift(
        code,
        h,
        psi_translates,
        psi_offsets,
        v1.clone(),
        v2.clone(),
        base.clone(),
        delta.delta.clone(),
        w.clone(),
        period,
    )?;
    let spot = spot_checks(&structure)?;
    let chain = chain_links(r, h, m, &eta, n, t_n, m_n);
    if let Some(bad) = chain.iter().find(|l| !l.holds) {
        return Err(Error::Claim3Chain(format!("{}: {} vs {}", bad.label, format_q(&bad.left), format_q(&bad.right))));
    }
    Ok(MdimLowerCertificate {
        params: MdimParams {
            r: r.clone(),
            h,
            m,
            offsets,
            eta,
            window: *window,
            period,
            interior_size,
            t_n,
            delta,
            epsilon,
        },
        translates,
        blocks,
        e_n,
        independence_base: base,
        independence_lifts: lifts.unwrap_or(0),
        q_n,
        m_n,
        lebesgue_form: qu(((1u64 << h) - 1) * m_n as u64),
        bound: bound_value(r, h, n),
        structure,
        chain,
        spot_checks: spot,
    })
}

impl MdimLowerCertificate {
    /// Recomputes every derived quantity from the stored parameters and
    /// re-checks the embedding's witnesses against `code`. Independence of
    /// `E_n` itself is not replayed.
    pub fn validate(&self, code: &SlidingBlockCode) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidCertificate(msg.into()));
        let p = &self.params;
        let n = p.window.len();
        if choose_m(&p.r, p.h)? != p.m || p.offsets != (0..p.m as i64).collect::<Vec<_>>() {
            return bad("M or the offsets do not match r and H");
        }
        if p.eta != Q::new(1.into(), ETA_DENOMINATOR.into()) {
            return bad("eta differs from 1/16");
        }
        let t = ((Q::one() - &p.eta) * qu(n as u64) / qu((p.m * p.m) as u64)).floor().to_integer();
        if t != p.t_n.into() {
            return bad("T_n does not match the window and M");
        }
        if p.delta.delta != dyadic(p.delta.exponent) || p.delta.exponent as u64 != (p.m as u64 - 1) + p.delta.target_exponent as u64 + 2 {
            return bad("delta does not match its exponent");
        }
        if p.epsilon != &p.delta.delta * &p.delta.delta / qu(4 << p.h) {
            return bad("epsilon does not match delta");
        }
        if self.bound != bound_value(&p.r, p.h, n) {
            return bad("stored bound differs from the formula");
        }
        if self.lebesgue_form != qu(((1u64 << p.h) - 1) * self.m_n as u64) {
            return bad("stored (2^H - 1) m_n is wrong");
        }
        let w = p.window.to_subset();
        if claim0_select_translates(&w, &p.offsets, p.t_n)? != self.translates {
            return bad("translates differ from the greedy selection");
        }
        let mut seen = BTreeSet::new();
        for (b, g) in self.blocks.iter().zip(&self.translates) {
            if *b != p.offsets.iter().map(|o| o + g).collect::<Vec<_>>() {
                return bad("a block is not h + g_l");
            }
            for x in b {
                if !w.contains(*x) || !seen.insert(*x) {
                    return bad("blocks overlap or leave the window");
                }
            }
        }
        if self.blocks.len() != p.t_n {
            return bad("block count differs from T_n");
        }
        if !self.e_n.iter().all(|x| seen.contains(&x)) || qu(self.e_n.len() as u64) < &p.r * qu(seen.len() as u64) {
            return bad("E_n is not a dense subset of the blocks");
        }
        let q_n: Vec<usize> =
            (0..p.t_n).filter(|&l| self.blocks[l].iter().filter(|x| self.e_n.contains(**x)).count() >= p.h).collect();
        if q_n != self.q_n || self.m_n != q_n.len() || qu(2 * self.m_n as u64) < &p.r * qu(p.t_n as u64) {
            return bad("Q_n or m_n is wrong");
        }
        if chain_links(&p.r, p.h, p.m, &p.eta, n, p.t_n, self.m_n) != self.chain || self.chain.iter().any(|l| !l.holds) {
            return bad("inequality chain does not recompute");
        }
        let s = &self.structure;
        s.validate(code)?;
        if s.m != self.m_n || s.h != p.h || s.delta != p.delta.delta || s.base_point != self.independence_base {
            return bad("embedding parameters disagree with the certificate");
        }
        for (block, &l) in s.blocks().iter().zip(&self.q_n) {
            if block.iter().any(|x| !self.e_n.contains(*x) || !self.blocks[l].contains(x)) {
                return bad("an embedding block leaves E_n or its E'_l");
            }
        }
        Ok(())
    }

    /// `validate` plus a fresh run of the spot checks.
    pub fn verify(&self, code: &SlidingBlockCode) -> Result<()> {
        self.validate(code)?;
        if spot_checks(&self.structure)? != self.spot_checks {
            return Err(Error::InvalidCertificate("spot checks do not replay".into()));
        }
        Ok(())
    }
}
