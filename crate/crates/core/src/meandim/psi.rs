//! The affine embedding `Psi : Delta_{[2]^H}^m -> M(X)`,
//! `t -> sum_E (prod_i t_i(E_i)) delta_{x_E}`, and exact checks of the
//! decomposition and distance sandwich it satisfies on coordinate faces.
//!
//! A pattern `E_i in [2]^H` is an `H`-bit mask (bit `j` set means `V_2` at
//! the `j`-th element of block `i`) and doubles as the vertex index of
//! `Delta_{2^H}`. Witness `x_E` sits at index `sum_i E_i << (H * i)`.

use std::collections::BTreeSet;

use itertools::Itertools;
use num::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::simplex::{Face, ProductPoint, SimplexPoint};
use crate::error::{Error, Result};
use crate::group::{FiniteSubset, GroupElement};
use crate::rational::{format_q, Q};
use crate::symbolic::{metric_d, Alphabet, CylinderSet, LiftProblem, PeriodicPoint, SlidingBlockCode, SystemMetric};
use crate::transport::{kantorovich_dual, measure_of_cylinder, pushforward, wasserstein_window, EmpiricalMeasure};

/// Largest number of witness points, `2^{H m}`.
pub const MAX_PSI_WITNESSES: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PsiStructure {
    pub h: usize,
    pub m: usize,
    /// `g_i`.
    pub translates: Vec<i64>,
    /// `h_{i,1}, ..., h_{i,H}` for each block.
    pub offsets: Vec<Vec<i64>>,
    pub witnesses: Vec<PeriodicPoint>,
    pub v1: CylinderSet,
    pub v2: CylinderSet,
    pub base_point: PeriodicPoint,
    #[serde(with = "crate::rational::serde_q")]
    pub delta: Q,
    pub window: FiniteSubset,
    pub alphabet: Alphabet,
}

fn check_shape(h: usize, m: usize, translates: &[i64], offsets: &[Vec<i64>]) -> Result<()> {
    if h == 0 || m == 0 {
        return Err(Error::invalid("H and m must be positive"));
    }
    if h * m > 16 {
        return Err(Error::ResourceLimit(format!("2^(H m) = 2^{} witnesses exceed {MAX_PSI_WITNESSES}", h * m)));
    }
    if translates.len() != m || offsets.len() != m || offsets.iter().any(|o| o.len() != h) {
        return Err(Error::invalid(format!("expected {m} translates and {m} offset lists of length {h}")));
    }
    Ok(())
}

/// Positions `h_{i,j} + g_i` of every block; fails on overlaps.
fn block_positions(translates: &[i64], offsets: &[Vec<i64>]) -> Result<Vec<Vec<i64>>> {
    let blocks: Vec<Vec<i64>> = translates.iter().zip(offsets).map(|(g, hs)| hs.iter().map(|h| h + g).collect()).collect();
    let mut seen = BTreeSet::new();
    for (i, b) in blocks.iter().enumerate() {
        for &p in b {
            if !seen.insert(p) {
                return Err(Error::BlockCollision(format!("position {p} repeats (block {i})")));
            }
        }
    }
    Ok(blocks)
}

impl PsiStructure {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        code: &SlidingBlockCode,
        h: usize,
        translates: Vec<i64>,
        offsets: Vec<Vec<i64>>,
        witnesses: Vec<PeriodicPoint>,
        v1: CylinderSet,
        v2: CylinderSet,
        base_point: PeriodicPoint,
        delta: Q,
        window: FiniteSubset,
    ) -> Result<Self> {
        let s = PsiStructure {
            h,
            m: translates.len(),
            translates,
            offsets,
            witnesses,
            v1,
            v2,
            base_point,
            delta,
            window,
            alphabet: code.source_alphabet(),
        };
        s.validate(code)?;
        Ok(s)
    }

    /// Lifts one witness per pattern into the fiber over `y` at the given
    /// period. A missing lift is an independence shortfall.
    #[allow(clippy::too_many_arguments)]
    pub fn lift(
        code: &SlidingBlockCode,
        h: usize,
        translates: Vec<i64>,
        offsets: Vec<Vec<i64>>,
        v1: CylinderSet,
        v2: CylinderSet,
        y: PeriodicPoint,
        delta: Q,
        window: FiniteSubset,
        period: usize,
    ) -> Result<Self> {
        let m = translates.len();
        check_shape(h, m, &translates, &offsets)?;
        let blocks = block_positions(&translates, &offsets)?;
        let base = LiftProblem::new(code.source(), period)?.with_image(code, &y)?;
        let mut witnesses = Vec::with_capacity(1 << (h * m));
        for e in 0..1usize << (h * m) {
            let mut problem = base.clone();
            for (i, b) in blocks.iter().enumerate() {
                for (j, &p) in b.iter().enumerate() {
                    let set = if e >> (h * i + j) & 1 == 1 { &v2 } else { &v1 };
                    problem = problem.require(GroupElement(p), set);
                }
            }
            let x = problem
                .solve()
                .ok_or_else(|| Error::IndependenceShortfall(format!("pattern {e} has no period-{period} lift over {y}")))?;
            witnesses.push(x);
        }
        PsiStructure::new(code, h, translates, offsets, witnesses, v1, v2, y, delta, window)
    }

    pub fn validate(&self, code: &SlidingBlockCode) -> Result<()> {
        check_shape(self.h, self.m, &self.translates, &self.offsets)?;
        if self.alphabet != code.source_alphabet() {
            return Err(Error::invalid("structure alphabet differs from the code's source"));
        }
        if !self.delta.is_positive() {
            return Err(Error::invalid("delta must be positive"));
        }
        if !self.v1.is_disjoint(&self.v2, self.alphabet)? {
            return Err(Error::invalid("V1 and V2 must be disjoint"));
        }
        for (o, g) in self.offsets.iter().zip(&self.translates) {
            if o.iter().collect::<BTreeSet<_>>().len() != o.len() {
                return Err(Error::BlockCollision(format!("offsets {o:?} of the block at {g} repeat")));
            }
            if !self.window.contains(*g) {
                return Err(Error::invalid(format!("translate {g} lies outside the window")));
            }
        }
        let blocks = block_positions(&self.translates, &self.offsets)?;
        if let Some(p) = blocks.iter().flatten().find(|p| !self.window.contains(**p)) {
            return Err(Error::invalid(format!("block position {p} lies outside the window")));
        }
        if self.witnesses.len() != 1 << (self.h * self.m) {
            return Err(Error::invalid(format!("expected 2^{} witnesses, got {}", self.h * self.m, self.witnesses.len())));
        }
        for (e, x) in self.witnesses.iter().enumerate() {
            if !code.source().contains(x) {
                return Err(Error::FiberMismatch(format!("witness {x} is outside the source")));
            }
            if code.apply(x)? != self.base_point {
                return Err(Error::FiberMismatch(format!("witness {x} does not map to {}", self.base_point)));
            }
            for (i, b) in blocks.iter().enumerate() {
                for (j, &p) in b.iter().enumerate() {
                    let (set, label) = if e >> (self.h * i + j) & 1 == 1 { (&self.v2, 2) } else { (&self.v1, 1) };
                    if !set.contains_shifted(GroupElement(p), x) {
                        return Err(Error::TargetMembership(format!("witness {e} is not in V_{label} at {p}")));
                    }
                }
            }
        }
        if self.witnesses.iter().collect::<BTreeSet<_>>().len() != self.witnesses.len() {
            return Err(Error::invalid("witness points are not distinct"));
        }
        Ok(())
    }

    /// `2^H`, the vertex count of each simplex factor.
    pub fn simplex_size(&self) -> usize {
        1 << self.h
    }

    pub fn blocks(&self) -> Vec<Vec<i64>> {
        self.translates.iter().zip(&self.offsets).map(|(g, hs)| hs.iter().map(|h| h + g).collect()).collect()
    }

    /// `E_i` of witness index `e`.
    pub fn pattern(&self, e: usize, i: usize) -> usize {
        e >> (self.h * i) & ((1 << self.h) - 1)
    }

    pub fn witness(&self, patterns: &[usize]) -> &PeriodicPoint {
        let e = patterns.iter().enumerate().fold(0, |acc, (i, &p)| acc | p << (self.h * i));
        &self.witnesses[e]
    }

    /// `S_{F_i}`: the witnesses whose `i`-th pattern lies in the support of `F`.
    pub fn face_support(&self, face: &Face, i: usize) -> BTreeSet<PeriodicPoint> {
        (0..self.witnesses.len())
            .filter(|&e| face.support().contains(&self.pattern(e, i)))
            .map(|e| self.witnesses[e].clone())
            .collect()
    }

    fn check_point(&self, t: &ProductPoint) -> Result<()> {
        if t.k() != self.m || t.n() != self.simplex_size() {
            return Err(Error::invalid(format!(
                "point of Delta_{}^{} given to a map on Delta_{}^{}",
                t.n(),
                t.k(),
                self.simplex_size(),
                self.m
            )));
        }
        Ok(())
    }

    fn check_face(&self, face: &Face, i: usize) -> Result<()> {
        if face.n() != self.simplex_size() {
            return Err(Error::invalid(format!("face of Delta_{} on a structure with 2^H = {}", face.n(), self.simplex_size())));
        }
        if i >= self.m {
            return Err(Error::invalid(format!("block {i} out of range for m = {}", self.m)));
        }
        Ok(())
    }
}

/// The evaluator for `Psi`.
#[derive(Debug, Clone)]
pub struct PsiMap {
    structure: PsiStructure,
}

pub fn build_psi(structure: &PsiStructure) -> PsiMap {
    PsiMap { structure: structure.clone() }
}

impl PsiMap {
    pub fn structure(&self) -> &PsiStructure {
        &self.structure
    }

    pub fn eval(&self, t: &ProductPoint) -> Result<EmpiricalMeasure> {
        let s = &self.structure;
        s.check_point(t)?;
        let supports: Vec<Vec<usize>> = t.components().iter().map(|c| c.support().into_iter().collect()).collect();
        let atoms = supports.into_iter().multi_cartesian_product().map(|patterns| {
            let w: Q = patterns.iter().enumerate().map(|(i, &p)| t.component(i).at(p)).product();
            (s.witness(&patterns).clone(), w)
        });
        EmpiricalMeasure::new(atoms)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Claim1Result {
    pub block: usize,
    pub face: Vec<usize>,
    /// `mu(S_{F_i})`.
    #[serde(with = "crate::rational::serde_q")]
    pub b1: Q,
    /// `mu(S_{F-bar_i})`.
    #[serde(with = "crate::rational::serde_q")]
    pub b2: Q,
    /// `t_i` already lies in `F` or its opposite.
    pub degenerate: bool,
    pub t_prime: Option<ProductPoint>,
    pub t_double_prime: Option<ProductPoint>,
    pub mu: EmpiricalMeasure,
    /// In `Psi(F_i)`.
    pub mu_prime: Option<EmpiricalMeasure>,
    /// In `Psi(F-bar_i)`.
    pub mu_double_prime: Option<EmpiricalMeasure>,
}

fn renormalized(t: &SimplexPoint, keep: impl Fn(usize) -> bool, mass: &Q) -> Result<SimplexPoint> {
    SimplexPoint::new((0..t.n()).map(|w| if keep(w) { t.at(w) / mass } else { Q::zero() }).collect())
}

/// Splits `mu = Psi(t)` as `b1 mu' + b2 mu''` with `mu' in Psi(F_i)` and
/// `mu'' in Psi(F-bar_i)`, and replays the identity atom by atom.
pub fn claim1_decompose(structure: &PsiStructure, t: &ProductPoint, face: &Face, i: usize) -> Result<Claim1Result> {
    structure.check_face(face, i)?;
    let psi = build_psi(structure);
    let mu = psi.eval(t)?;
    let ti = t.component(i);
    let b1 = face.mass(ti);
    let b2 = Q::one() - &b1;
    let in_face = |w: usize| face.support().contains(&w);
    let s_f = structure.face_support(face, i);
    let measured = measure_of_cylinder(&mu, |x| s_f.contains(x));
    if measured != b1 {
        return Err(Error::InvalidCertificate(format!(
            "mu(S_F) = {} but t_i(F) = {}",
            format_q(&measured),
            format_q(&b1)
        )));
    }
    let face_vec: Vec<usize> = face.support().iter().copied().collect();
    if b2.is_zero() || b1.is_zero() {
        let (mu_prime, mu_double_prime) = if b2.is_zero() { (Some(mu.clone()), None) } else { (None, Some(mu.clone())) };
        return Ok(Claim1Result {
            block: i,
            face: face_vec,
            b1,
            b2,
            degenerate: true,
            t_prime: None,
            t_double_prime: None,
            mu,
            mu_prime,
            mu_double_prime,
        });
    }
    let t1 = t.with_component(i, renormalized(ti, in_face, &b1)?)?;
    let t2 = t.with_component(i, renormalized(ti, |w| !in_face(w), &b2)?)?;
    let mu1 = psi.eval(&t1)?;
    let mu2 = psi.eval(&t2)?;
    if EmpiricalMeasure::mixture(&b1, &mu1, &mu2)? != mu {
        return Err(Error::InvalidCertificate("b1 mu' + b2 mu'' differs from mu".into()));
    }
    if mu1.support().any(|x| !s_f.contains(x)) || mu2.support().any(|x| s_f.contains(x)) {
        return Err(Error::InvalidCertificate("decomposition leaves its face".into()));
    }
    Ok(Claim1Result {
        block: i,
        face: face_vec,
        b1,
        b2,
        degenerate: false,
        t_prime: Some(t1),
        t_double_prime: Some(t2),
        mu,
        mu_prime: Some(mu1),
        mu_double_prime: Some(mu2),
    })
}

/// One directly computed distance from `mu` to a member of `Psi(F_i)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Claim2Sample {
    pub label: String,
    /// `W_W(mu, nu)`.
    #[serde(with = "crate::rational::serde_q")]
    pub distance: Q,
    /// `W(g_i mu, g_i nu)` from the dual program.
    #[serde(with = "crate::rational::serde_q")]
    pub dual_at_translate: Q,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Claim2Result {
    pub block: usize,
    pub face: Vec<usize>,
    /// `min d(g_i x, g_i x')` over `x in S_{F_i}`, `x' in S_{F-bar_i}`.
    #[serde(with = "crate::rational::serde_q_opt")]
    pub separation: Option<Q>,
    #[serde(with = "crate::rational::serde_q")]
    pub mass_opposite: Q,
    /// `int d(g_i x, g_i S_{F_i}) dmu(x)`.
    #[serde(with = "crate::rational::serde_q")]
    pub witness_value: Q,
    #[serde(with = "crate::rational::serde_q")]
    pub lower: Q,
    #[serde(with = "crate::rational::serde_q")]
    pub upper: Q,
    pub samples: Vec<Claim2Sample>,
}

const VERTEX_SAMPLES: usize = 4;

/// Brackets `W_W(mu, Psi(F_i))` between `delta mu(S_{F-bar_i})` and
/// `diam(X) mu(S_{F-bar_i})`. The lower bound is witnessed by the potential
/// `d(g_i ., g_i S_{F_i})`; both bounds are compared with exact distances
/// to vertex measures of `Psi(F_i)` and to the `mu'` of the decomposition.
pub fn claim2_bounds(structure: &PsiStructure, t: &ProductPoint, face: &Face, i: usize) -> Result<Claim2Result> {
    let c1 = claim1_decompose(structure, t, face, i)?;
    let metric = SystemMetric::new(structure.alphabet);
    let g = GroupElement(structure.translates[i]);
    let s_f: Vec<PeriodicPoint> = structure.face_support(face, i).into_iter().map(|x| x.shift(g)).collect();
    let s_fbar: Vec<PeriodicPoint> = structure
        .witnesses
        .iter()
        .enumerate()
        .filter(|(e, _)| !face.support().contains(&structure.pattern(*e, i)))
        .map(|(_, x)| x.shift(g))
        .collect();
    let separation = s_f.iter().cartesian_product(&s_fbar).map(|(a, b)| metric_d(a, b)).min();
    if let Some(sep) = &separation {
        if *sep <= structure.delta {
            return Err(Error::DeltaViolation(format!(
                "d(g_i S_F, g_i S_F-bar) = {} does not exceed delta = {}",
                format_q(sep),
                format_q(&structure.delta)
            )));
        }
    }
    let violation = |msg: String| Error::Claim2Violation(msg);
    let mut witness_value = Q::zero();
    for (x, w) in c1.mu.atoms() {
        let gx = x.shift(g);
        let f = s_f.iter().map(|s| metric_d(&gx, s)).min().unwrap_or_else(Q::zero);
        witness_value += w * f;
    }
    let b2 = c1.b2.clone();
    let lower = &structure.delta * &b2;
    let upper = metric.diameter() * &b2;
    if let Some(sep) = &separation {
        if witness_value < sep * &b2 {
            return Err(violation(format!("potential integral {} is below separation times mass", format_q(&witness_value))));
        }
    }
    if b2.is_positive() && witness_value <= lower {
        return Err(violation("potential integral does not exceed delta times mass".into()));
    }
    if lower > upper {
        return Err(violation("lower bound exceeds upper bound".into()));
    }

    let mut targets: Vec<(String, EmpiricalMeasure)> = (0..structure.witnesses.len())
        .filter(|&e| face.support().contains(&structure.pattern(e, i)))
        .take(VERTEX_SAMPLES)
        .map(|e| (format!("vertex {e}"), EmpiricalMeasure::dirac(structure.witnesses[e].clone())))
        .collect();
    if let Some(mu1) = &c1.mu_prime {
        targets.push(("mu'".into(), mu1.clone()));
    }
    let shifted_mu = pushforward(&g, &c1.mu)?;
    let mut samples = Vec::with_capacity(targets.len());
    for (label, nu) in targets {
        let distance = wasserstein_window(&metric, &structure.window, &c1.mu, &nu)?;
        let dual = kantorovich_dual(&metric, &shifted_mu, &pushforward(&g, &nu)?)?.value;
        if dual < witness_value {
            return Err(violation(format!("{label}: dual value {} below the potential integral", format_q(&dual))));
        }
        if distance < dual {
            return Err(violation(format!("{label}: window distance {} below the translate distance", format_q(&distance))));
        }
        if distance < lower {
            return Err(violation(format!("{label}: distance {} below the lower bound", format_q(&distance))));
        }
        if label == "mu'" && distance > upper {
            return Err(violation(format!("distance to mu' is {} above the upper bound", format_q(&distance))));
        }
        samples.push(Claim2Sample { label, distance, dual_at_translate: dual });
    }
    if let Some(best) = samples.iter().map(|s| &s.distance).min() {
        if *best > upper && c1.mu_prime.is_some() {
            return Err(violation("every sampled distance exceeds the upper bound".into()));
        }
    }
    Ok(Claim2Result {
        block: i,
        face: c1.face,
        separation,
        mass_opposite: b2,
        witness_value,
        lower,
        upper,
        samples,
    })
}
