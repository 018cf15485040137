//! Balanced pattern families, shattering extraction, and the extraction of
//! base-level independence sets from measure-level independence data.

mod ind;
mod pipeline;
mod shatter;

use std::collections::BTreeSet;

use num::{One, Signed, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::FiniteSubset;
use crate::rational::{format_q, Q};

pub use ind::{ind_extract, ind_oracle, is_valid_extraction, ExtractionCertificate, ExtractionStage, OracleResult, OmegaWitness};
pub use pipeline::{extract_base_independence, BaseExtraction, MeasureIndependenceData, PatternRow, CROSS_CHECK_PERIOD};
pub(crate) use shatter::combinations;
pub use shatter::{sauer_shelah_bound, shatter_extract, ShatterMode, ShatterResult, MAX_EXACT_SHATTER};

/// Largest pattern domain handled with bitmask patterns.
pub const MAX_PATTERN_DOMAIN: usize = 24;

/// `f(x) = -x ln x` on `(0, 1)`.
pub fn entropy_function(x: &Q) -> Result<f64> {
    if !x.is_positive() || *x >= Q::one() {
        return Err(Error::invalid(format!("entropy function needs 0 < x < 1, got {}", format_q(x))));
    }
    let v = x.to_f64().expect("finite rational");
    Ok(-v * v.ln())
}

fn f(x: f64) -> f64 {
    -x * x.ln()
}

/// A pattern `sigma` on `E`, stored as a bitmask over the elements of `E`
/// in increasing order: bit `i` set means `sigma(e_i) = 2`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BinaryPattern {
    pub domain: FiniteSubset,
    pub bits: u64,
}

impl BinaryPattern {
    pub fn value_at(&self, e: i64) -> Option<u8> {
        self.domain.index_of(e).map(|i| if self.bits >> i & 1 == 1 { 2 } else { 1 })
    }

    /// `E_i^sigma`.
    pub fn level_set(&self, i: u8) -> FiniteSubset {
        self.domain.iter().filter(|&e| self.value_at(e) == Some(i)).collect()
    }

    pub fn to_pattern_string(&self) -> String {
        pattern_string(self.bits, self.domain.len())
    }
}

pub fn pattern_string(bits: u64, len: usize) -> String {
    (0..len).map(|i| if bits >> i & 1 == 1 { '2' } else { '1' }).collect()
}

pub fn parse_pattern(s: &str) -> Result<u64> {
    if s.len() > 63 {
        return Err(Error::Parse(format!("pattern {s:?} is too long")));
    }
    s.chars().enumerate().try_fold(0u64, |acc, (i, c)| match c {
        '1' => Ok(acc),
        '2' => Ok(acc | 1 << i),
        _ => Err(Error::Parse(format!("pattern {s:?} must use the symbols 1 and 2"))),
    })
}

/// Restriction of a bitmask pattern to the positions in `mask`, compacted.
pub fn restrict(bits: u64, mask: u64) -> u64 {
    let mut out = 0;
    let mut k = 0;
    let mut m = mask;
    while m != 0 {
        let i = m.trailing_zeros();
        out |= (bits >> i & 1) << k;
        k += 1;
        m &= m - 1;
    }
    out
}

pub(crate) fn full_mask(n: usize) -> u64 {
    if n == 64 {
        !0
    } else {
        (1u64 << n) - 1
    }
}

/// A set of patterns on one common domain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternFamily {
    domain: FiniteSubset,
    patterns: BTreeSet<u64>,
}

impl PatternFamily {
    pub fn new(domain: FiniteSubset, patterns: impl IntoIterator<Item = u64>) -> Result<Self> {
        if domain.len() > MAX_PATTERN_DOMAIN {
            return Err(Error::ResourceLimit(format!("pattern domain of size {} is too large", domain.len())));
        }
        let full = full_mask(domain.len());
        let patterns: BTreeSet<u64> = patterns.into_iter().collect();
        if patterns.iter().any(|&p| p & !full != 0) {
            return Err(Error::invalid("pattern has bits outside its domain"));
        }
        Ok(PatternFamily { domain, patterns })
    }

    pub fn domain(&self) -> &FiniteSubset {
        &self.domain
    }

    pub fn patterns(&self) -> &BTreeSet<u64> {
        &self.patterns
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn contains(&self, bits: u64) -> bool {
        self.patterns.contains(&bits)
    }

    pub fn iter(&self) -> impl Iterator<Item = BinaryPattern> + '_ {
        self.patterns.iter().map(|&bits| BinaryPattern { domain: self.domain.clone(), bits })
    }
}

#[derive(Serialize, Deserialize)]
struct FamilyWire {
    domain: FiniteSubset,
    patterns: Vec<String>,
}

impl Serialize for PatternFamily {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        FamilyWire {
            domain: self.domain.clone(),
            patterns: self.patterns.iter().map(|&b| pattern_string(b, self.domain.len())).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for PatternFamily {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let wire = FamilyWire::deserialize(d)?;
        let n = wire.domain.len();
        let mut patterns = Vec::new();
        for p in &wire.patterns {
            if p.len() != n {
                return Err(D::Error::custom(format!("pattern {p:?} does not have length {n}")));
            }
            patterns.push(parse_pattern(p).map_err(D::Error::custom)?);
        }
        PatternFamily::new(wire.domain, patterns).map_err(D::Error::custom)
    }
}

/// `S_E`: the patterns taking each value on exactly half of `E`.
pub fn balanced_patterns(domain: &FiniteSubset) -> Result<PatternFamily> {
    let n = domain.len();
    if n == 0 || n % 2 == 1 {
        return Err(Error::invalid(format!("balanced patterns need a nonempty even domain, got size {n}")));
    }
    if n > MAX_PATTERN_DOMAIN {
        return Err(Error::ResourceLimit(format!("2^{n} patterns exceed the enumeration limit")));
    }
    PatternFamily::new(domain.clone(), (0..1u64 << n).filter(|b| b.count_ones() as usize == n / 2))
}

/// Parameters of the extraction: density `d`, subset fraction `tau`, window
/// fraction `delta`, and the exponents `theta1 > theta2`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndExtractConfig {
    #[serde(with = "crate::rational::serde_q")]
    pub d: Q,
    #[serde(with = "crate::rational::serde_q")]
    pub tau: Q,
    #[serde(with = "crate::rational::serde_q")]
    pub delta: Q,
    #[serde(with = "crate::rational::serde_q")]
    pub theta1: Q,
    #[serde(with = "crate::rational::serde_q")]
    pub theta2: Q,
}

/// `(-f(tau) - f(1 - delta) + f(tau - delta) + delta ln 2) / delta`.
pub fn window_exponent(tau: f64, delta: f64) -> f64 {
    (-f(tau) - f(1.0 - delta) + f(tau - delta) + delta * 2f64.ln()) / delta
}

/// Rounds down to a multiple of `10^-6`.
fn rational_below(x: f64) -> Q {
    Q::new(((x * 1e6).floor() as i64).into(), 1_000_000.into())
}

impl Default for IndExtractConfig {
    /// `d = 1/2`, `tau = 3/5`, `delta = 1/20`, `theta1 = 0.9 ln(2 tau)`, `theta2 = theta1 / 2`.
    fn default() -> Self {
        Self::for_hypotheses(Q::new(1.into(), 2.into()), Q::new(3.into(), 5.into()))
            .expect("default parameters are admissible")
    }
}

impl IndExtractConfig {
    /// Picks `delta = 1/20` (halved until the window exponent is positive) and
    /// `theta1 = 0.9 min(ln(2 tau), exponent)`, `theta2 = theta1 / 2`.
    pub fn for_hypotheses(d: Q, tau: Q) -> Result<Self> {
        let t = tau.to_f64().unwrap_or(f64::NAN);
        if !(t > 0.5 && t < 1.0) {
            return Err(Error::invalid(format!("tau must lie in (1/2, 1), got {}", format_q(&tau))));
        }
        let mut delta = Q::new(1.into(), 20.into());
        for _ in 0..40 {
            let dl = delta.to_f64().expect("finite");
            if dl < t && window_exponent(t, dl) > 0.0 {
                let theta1 = rational_below(0.9 * (2.0 * t).ln().min(window_exponent(t, dl)));
                let theta2 = &theta1 / Q::from_integer(2.into());
                let cfg = IndExtractConfig { d, tau, delta, theta1, theta2 };
                cfg.validate()?;
                return Ok(cfg);
            }
            delta /= Q::from_integer(2.into());
        }
        Err(Error::invalid("no admissible window fraction for this tau"))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::invalid(m));
        if !self.d.is_positive() || self.d > Q::one() {
            return bad(format!("d must lie in (0, 1], got {}", format_q(&self.d)));
        }
        if self.tau <= Q::new(1.into(), 2.into()) || self.tau >= Q::one() {
            return bad(format!("tau must lie in (1/2, 1), got {}", format_q(&self.tau)));
        }
        if !self.delta.is_positive() || self.delta >= Q::new(1.into(), 4.into()) || self.delta >= self.tau {
            return bad(format!("delta must lie in (0, min(1/4, tau)), got {}", format_q(&self.delta)));
        }
        let (t, dl) = (self.tau.to_f64().unwrap(), self.delta.to_f64().unwrap());
        let (th1, th2) = (self.theta1.to_f64().unwrap(), self.theta2.to_f64().unwrap());
        if !(0.0 < th2 && th2 < th1 && th1 < (2.0 * t).ln()) {
            return bad("need 0 < theta2 < theta1 < ln(2 tau)".into());
        }
        let exponent = window_exponent(t, dl);
        if exponent <= th1 {
            return bad(format!("window exponent {exponent:.6} does not exceed theta1 {th1:.6}"));
        }
        Ok(())
    }
}

pub(crate) fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    #[test]
    fn entropy_function_values() {
        assert!((entropy_function(&q(1, 2)).unwrap() - 0.5 * 2f64.ln()).abs() < 1e-15);
        assert!(entropy_function(&q(999_999, 1_000_000)).unwrap() < 1e-5);
        assert!(entropy_function(&q(0, 1)).is_err());
        assert!(entropy_function(&q(1, 1)).is_err());
        // At tau = 3/5, delta = 1/20 the window exponent sits just above 0.9 ln(6/5).
        let e = window_exponent(0.6, 0.05);
        assert!(e > 0.9 * 1.2f64.ln() && e < 1.2f64.ln());
        assert!(entropy_function(&q(11, 20)).unwrap() + entropy_function(&q(19, 20)).unwrap() > entropy_function(&q(3, 5)).unwrap());
    }

    #[test]
    fn balanced_counts() {
        assert!(balanced_patterns(&FiniteSubset::new()).is_err());
        assert!(balanced_patterns(&FiniteSubset::interval(0, 3)).is_err());
        for n in (2..=12).step_by(2) {
            assert_eq!(balanced_patterns(&FiniteSubset::interval(0, n)).unwrap().len() as u128, binomial(n, n / 2));
        }
        assert_eq!(balanced_patterns(&FiniteSubset::interval(0, 2)).unwrap().len(), 2);
        assert_eq!(balanced_patterns(&FiniteSubset::interval(0, 4)).unwrap().len(), 6);
    }

    #[test]
    fn default_config_is_admissible() {
        let cfg = IndExtractConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.tau, q(3, 5));
        assert_eq!(cfg.delta, q(1, 20));
        assert!(IndExtractConfig::for_hypotheses(q(1, 2), q(1, 2)).is_err());
        let mut bad = cfg.clone();
        bad.delta = q(1, 4);
        assert!(bad.validate().is_err());
    }

    #[test]
    fn patterns_and_restriction() {
        let e: FiniteSubset = [3, 5, 9].into_iter().collect();
        let p = BinaryPattern { domain: e.clone(), bits: 0b101 };
        assert_eq!(p.to_pattern_string(), "212");
        assert_eq!(p.value_at(5), Some(1));
        assert_eq!(p.level_set(2).elements(), vec![3, 9]);
        assert_eq!(parse_pattern("212").unwrap(), 0b101);
        assert_eq!(restrict(0b1011, 0b1010), 0b11);
        let fam = PatternFamily::new(e, [0b101, 0b010]).unwrap();
        let json = serde_json::to_string(&fam).unwrap();
        assert_eq!(serde_json::from_str::<PatternFamily>(&json).unwrap(), fam);
    }
}
