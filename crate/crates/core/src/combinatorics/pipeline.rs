//! From measure-level independence data to a base-level independence set.
//!
//! Each `lambda_sigma` is uniform over `L` atoms `x_i^sigma` with
//! `pi(x_i^sigma) = y_i`. The pipeline scores every atom with `Psi_sigma`,
//! keeps the atoms above `b`, picks the most popular row `i_E`, builds the
//! sets `E_sigma` from the row's atoms and hands the family to [`ind_extract`].

use std::collections::BTreeMap;

use num::integer::lcm;
use num::{One, Zero};
use serde::{Deserialize, Serialize};

use super::{balanced_patterns, binomial, parse_pattern, pattern_string, ExtractionCertificate, IndExtractConfig, PatternFamily};
use super::ind::ind_extract;
use crate::entropy::{is_independence_set, IndependenceCertificate, PatternWitness};
use crate::error::{Error, Result};
use crate::group::{FiniteSubset, GroupElement};
use crate::rational::{format_q, Q};
use crate::symbolic::{CylinderSet, PeriodicPoint, SlidingBlockCode};

/// Largest witness period at which the result is re-derived by a fresh
/// independence search.
pub const CROSS_CHECK_PERIOD: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureIndependenceData {
    pub e: FiniteSubset,
    pub a1: CylinderSet,
    pub a2: CylinderSet,
    #[serde(with = "crate::rational::serde_q")]
    pub mass1: Q,
    #[serde(with = "crate::rational::serde_q")]
    pub mass2: Q,
    /// `y_1, ..., y_L`.
    pub base_points: Vec<PeriodicPoint>,
    /// `x_1^sigma, ..., x_L^sigma` keyed by the pattern string of `sigma`.
    /// Every balanced pattern must be present; others are ignored.
    pub atoms: BTreeMap<String, Vec<PeriodicPoint>>,
}

/// The scores of one balanced pattern.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternRow {
    pub sigma: String,
    /// `Psi_sigma(x_i^sigma)` for each `i`.
    #[serde(with = "crate::rational::serde_q_vec")]
    pub psi: Vec<Q>,
    /// `W_sigma`, zero-based.
    pub w_sigma: Vec<usize>,
    /// `lambda_sigma(H_sigma) = |W_sigma| / L`.
    #[serde(with = "crate::rational::serde_q")]
    pub mass_h: Q,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseExtraction {
    #[serde(with = "crate::rational::serde_q")]
    pub b: Q,
    #[serde(with = "crate::rational::serde_q")]
    pub d: Q,
    #[serde(with = "crate::rational::serde_q")]
    pub tau: Q,
    pub rows: Vec<PatternRow>,
    /// Zero-based `i_E`.
    pub i_e: usize,
    pub row_size: usize,
    pub subsets: BTreeMap<String, FiniteSubset>,
    pub extraction: ExtractionCertificate,
    pub certificate: IndependenceCertificate,
    /// Whether a fresh search also found `I` to be an independence set;
    /// `None` when the witness period exceeds [`CROSS_CHECK_PERIOD`].
    pub cross_checked: Option<bool>,
}

fn hits(u: &CylinderSet, h: i64, x: &PeriodicPoint) -> bool {
    u.contains_shifted(GroupElement(h), x)
}

/// `Psi_sigma(x)`: the hit frequency of `A_1` over `E_1^sigma` plus that of `A_2` over `E_2^sigma`.
fn psi(data: &MeasureIndependenceData, sigma: u64, x: &PeriodicPoint) -> Q {
    let elems = data.e.elements();
    let half = Q::from_integer((elems.len() / 2).into());
    let count = |level: u64, u: &CylinderSet| {
        elems.iter().enumerate().filter(|&(k, &h)| (sigma >> k & 1) == level && hits(u, h, x)).count()
    };
    Q::from_integer((count(0, &data.a1) + count(1, &data.a2)).into()) / half
}

fn check_structure(data: &MeasureIndependenceData, code: &SlidingBlockCode) -> Result<BTreeMap<u64, Vec<PeriodicPoint>>> {
    let n = data.e.len();
    if n == 0 || n % 2 == 1 || n > super::MAX_PATTERN_DOMAIN {
        return Err(Error::invalid(format!("|E| must be even and in 2..={}, got {n}", super::MAX_PATTERN_DOMAIN)));
    }
    if &data.mass1 + &data.mass2 <= Q::one() || data.mass1 <= Q::zero() || data.mass2 <= Q::zero() {
        return Err(Error::invalid(format!(
            "need a1, a2 > 0 with a1 + a2 > 1, got {} and {}",
            format_q(&data.mass1),
            format_q(&data.mass2)
        )));
    }
    if !data.a1.is_disjoint(&data.a2, code.source_alphabet())? {
        return Err(Error::invalid("A_1 and A_2 must be disjoint"));
    }
    let l = data.base_points.len();
    if l == 0 {
        return Err(Error::invalid("no base points"));
    }
    let mut atoms = BTreeMap::new();
    for (key, xs) in &data.atoms {
        if key.len() != n {
            return Err(Error::BalanceViolation(format!("pattern {key} does not have length {n}")));
        }
        let sigma = parse_pattern(key)?;
        if sigma.count_ones() as usize * 2 == n {
            atoms.insert(sigma, xs.clone());
        }
    }
    for &sigma in balanced_patterns(&data.e)?.patterns() {
        let key = pattern_string(sigma, n);
        let Some(xs) = atoms.get(&sigma) else {
            return Err(Error::BalanceViolation(format!("no atoms for balanced pattern {key}")));
        };
        if xs.len() != l {
            return Err(Error::BalanceViolation(format!("pattern {key} has {} atoms, expected L = {l}", xs.len())));
        }
        for (i, (x, y)) in xs.iter().zip(&data.base_points).enumerate() {
            if !code.source().contains(x) {
                return Err(Error::FiberMismatch(format!("atom {x} of {key} is outside the source")));
            }
            if &code.apply(x)? != y {
                return Err(Error::FiberMismatch(format!("atom {i} of {key} maps to {}, not {y}", code.apply(x)?)));
            }
        }
        // lambda_sigma(h^{-1} A_{sigma(h)}) > a_{sigma(h)} for every h in E.
        for (k, h) in data.e.iter().enumerate() {
            let (u, a) = if sigma >> k & 1 == 1 { (&data.a2, &data.mass2) } else { (&data.a1, &data.mass1) };
            let mass = Q::new(xs.iter().filter(|x| hits(u, h, x)).count().into(), l.into());
            if &mass <= a {
                return Err(Error::MassDeficit(format!(
                    "lambda_{key} gives mass {} <= {} at h = {h}",
                    format_q(&mass),
                    format_q(a)
                )));
            }
        }
    }
    Ok(atoms)
}

/// Runs the whole extraction and returns `I` with an independence
/// certificate for `(A_1, A_2)` over the base point `y_{i_E}`.
pub fn extract_base_independence(data: &MeasureIndependenceData, code: &SlidingBlockCode) -> Result<BaseExtraction> {
    let atoms = check_structure(data, code)?;
    let n = data.e.len();
    let l = data.base_points.len();
    let sum = &data.mass1 + &data.mass2;
    let b = (&sum + Q::one()) / Q::from_integer(2.into());
    let d = (&sum - Q::one()) / (Q::from_integer(3.into()) - &sum);
    let tau = &b / Q::from_integer(2.into());

    let mut rows = Vec::new();
    let mut popularity = vec![0usize; l];
    for (&sigma, xs) in &atoms {
        let scores: Vec<Q> = xs.iter().map(|x| psi(data, sigma, x)).collect();
        let w_sigma: Vec<usize> = (0..l).filter(|&i| scores[i] > b).collect();
        let mass_h = Q::new(w_sigma.len().into(), l.into());
        if mass_h <= d {
            return Err(Error::MassDeficit(format!(
                "lambda(H_sigma) = {} <= d = {} for {}",
                format_q(&mass_h),
                format_q(&d),
                pattern_string(sigma, n)
            )));
        }
        for &i in &w_sigma {
            popularity[i] += 1;
        }
        rows.push(PatternRow { sigma: pattern_string(sigma, n), psi: scores, w_sigma, mass_h });
    }
    let row_size = *popularity.iter().max().expect("L > 0");
    let i_e = popularity.iter().position(|&c| c == row_size).expect("max exists");
    let balanced = Q::from_integer((binomial(n, n / 2) as u64).into());
    if Q::from_integer(row_size.into()) <= &d * balanced {
        return Err(Error::MassDeficit(format!("row {i_e} holds only {row_size} patterns")));
    }

    let elems = data.e.elements();
    let mut family = Vec::new();
    let mut subsets = BTreeMap::new();
    for (&sigma, xs) in &atoms {
        let x = &xs[i_e];
        if psi(data, sigma, x) <= b {
            continue;
        }
        let e_sigma: FiniteSubset = elems
            .iter()
            .enumerate()
            .filter(|&(k, &h)| if sigma >> k & 1 == 1 { hits(&data.a2, h, x) } else { hits(&data.a1, h, x) })
            .map(|(_, &h)| h)
            .collect();
        family.push(sigma);
        subsets.insert(sigma, e_sigma);
    }
    let family = PatternFamily::new(data.e.clone(), family)?;
    let cfg = IndExtractConfig::for_hypotheses(d.clone(), tau.clone())?;
    let extraction = ind_extract(&family, &subsets, &cfg)?;

    let y = data.base_points[i_e].clone();
    let mut witnesses = Vec::new();
    let mut period = y.period();
    for w in &extraction.witnesses {
        let x = atoms[&parse_pattern(&w.sigma)?][i_e].clone();
        period = lcm(period, x.period());
        witnesses.push(PatternWitness { pattern: w.omega.clone(), point: x });
    }
    let certificate = IndependenceCertificate {
        u1: data.a1.clone(),
        u2: data.a2.clone(),
        j: extraction.i.clone(),
        base_point: y,
        witnesses,
    };
    certificate.validate(code)?;
    let cross_checked = if period <= CROSS_CHECK_PERIOD {
        let found = is_independence_set(&certificate.j, &data.a1, &data.a2, code, period)?.is_some();
        if !found {
            return Err(Error::InvalidCertificate("a fresh search does not confirm the independence set".into()));
        }
        Some(true)
    } else {
        None
    };
    Ok(BaseExtraction {
        b,
        d,
        tau,
        rows,
        i_e,
        row_size,
        subsets: subsets.into_iter().map(|(s, e)| (pattern_string(s, n), e)).collect(),
        extraction,
        certificate,
        cross_checked,
    })
}
