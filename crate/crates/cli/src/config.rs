//! Experiment configuration. See `CONFIG.md` for the schema.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use relind_core::entropy::default_eps_schedule;
use relind_core::rational::{format_q, parse_q, Q};
use relind_core::symbolic::{parse_word, Alphabet, CylinderSet, SlidingBlockCode, SymbolicSystem};
use relind_core::transport::EmpiricalMeasure;

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub schema: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<u64>,
    /// Inline system; alternatively `system_file`, relative to the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system_file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entropy: Option<EntropyConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mdim_lower: Option<MdimConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify_lemmas: Option<VerifyConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transport: Option<TransportConfig>,
}

/// A sliding block code, either a named preset or an explicit rule table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alphabet: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub forbidden: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub code: Option<CodeSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodeSpec {
    pub radius: usize,
    /// Window word to image symbol, e.g. `{"01": "1"}`.
    pub rule: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<TargetSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    pub alphabet: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub forbidden: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntropyConfig {
    pub windows: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<Vec<String>>,
    pub period: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<DensityConfig>,
}

/// Largest independence set for `(V1, V2)` inside `[0, window)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityConfig {
    pub v1: CylinderSet,
    pub v2: CylinderSet,
    pub window: usize,
    pub period: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MdimConfig {
    pub v1: CylinderSet,
    pub v2: CylinderSet,
    pub r: String,
    pub runs: Vec<MdimRun>,
    /// Embed the full certificate, witnesses included.
    #[serde(default = "yes")]
    pub embed_certificate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MdimRun {
    pub h: usize,
    pub window: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<usize>,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LebesgueCase {
    pub n: usize,
    pub k: usize,
    pub q: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    #[serde(default = "all_items")]
    pub items: Vec<String>,
    #[serde(default = "n200")]
    pub transport_instances: u64,
    #[serde(default = "n100")]
    pub ind_instances: u64,
    #[serde(default = "n50")]
    pub shatter_families: u64,
    #[serde(default = "n100")]
    pub claims_instances: u64,
    #[serde(default = "n6")]
    pub symbolic_max_period: usize,
    #[serde(default = "default_lebesgue")]
    pub lebesgue: Vec<LebesgueCase>,
}

pub const ITEMS: [&str; 6] =
    ["transport-duality", "ind-extraction", "shatter-oracle", "claims-1-2", "lebesgue-oracle", "symbolic-invariants"];

fn all_items() -> Vec<String> {
    ITEMS.iter().map(|s| s.to_string()).collect()
}

fn n200() -> u64 {
    200
}

fn n100() -> u64 {
    100
}

fn n50() -> u64 {
    50
}

fn n6() -> usize {
    6
}

fn default_lebesgue() -> Vec<LebesgueCase> {
    vec![LebesgueCase { n: 2, k: 1, q: 10 }, LebesgueCase { n: 3, k: 1, q: 6 }]
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            items: all_items(),
            transport_instances: 200,
            ind_instances: 100,
            shatter_families: 50,
            claims_instances: 100,
            symbolic_max_period: 6,
            lebesgue: default_lebesgue(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransportConfig {
    pub mu: EmpiricalMeasure,
    pub nu: EmpiricalMeasure,
    /// Also report `W_{[0, window)}`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<usize>,
    /// Also rewrite the pair as uniform measures when it lies in the relation.
    #[serde(default)]
    pub relation: bool,
    /// Tolerance passed to the uniform rewriting, default `1/1000`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let config: Config = serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))?;
        if config.schema != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "config: schema {} is not supported (expected {SCHEMA_VERSION})",
                config.schema
            )));
        }
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Config::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }
}

fn field_error(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{field}: {msg}"))
}

pub fn parse_rational(field: &str, s: &str) -> Result<Q, CliError> {
    parse_q(s).map_err(|e| field_error(field, e))
}

fn words(field: &str, list: &[String]) -> Result<Vec<Vec<u8>>, CliError> {
    list.iter().map(|w| parse_word(w).map_err(|e| field_error(field, e))).collect()
}

impl SystemSpec {
    pub fn build(&self) -> Result<SlidingBlockCode, CliError> {
        let alphabet = |k: usize, field: &str| Alphabet::new(k).map_err(|e| field_error(field, e));
        let core = |field: &'static str| move |e: relind_core::Error| field_error(field, e);
        if let Some(preset) = &self.preset {
            if self.code.is_some() || !self.forbidden.is_empty() {
                return Err(field_error("system", "a preset takes no code or forbidden words"));
            }
            let k = self.alphabet.unwrap_or(2);
            let full = SymbolicSystem::full_shift(k).map_err(core("system.alphabet"))?;
            return match preset.as_str() {
                "identity" => SlidingBlockCode::identity(full),
                "full-shift-to-point" => SlidingBlockCode::to_point(full),
                "product-projection" => SlidingBlockCode::product_projection(),
                "xor-next" => SlidingBlockCode::xor_next(),
                other => {
                    return Err(field_error(
                        "system.preset",
                        format!("unknown preset {other:?}; expected identity, full-shift-to-point, product-projection or xor-next"),
                    ))
                }
            }
            .map_err(core("system.preset"));
        }
        let k = self.alphabet.ok_or_else(|| field_error("system.alphabet", "required without a preset"))?;
        let source = SymbolicSystem::new(alphabet(k, "system.alphabet")?, words("system.forbidden", &self.forbidden)?)
            .map_err(core("system.forbidden"))?;
        let code = self.code.as_ref().ok_or_else(|| field_error("system.code", "required without a preset"))?;
        let target = match &code.target {
            Some(t) => SymbolicSystem::new(alphabet(t.alphabet, "system.code.target.alphabet")?, words("system.code.target.forbidden", &t.forbidden)?)
                .map_err(core("system.code.target"))?,
            None => SymbolicSystem::full_shift(k).map_err(core("system.alphabet"))?,
        };
        let mut table = BTreeMap::new();
        for (window, image) in &code.rule {
            let w = parse_word(window).map_err(|e| field_error(&format!("system.code.rule[{window:?}]"), e))?;
            let img = parse_word(image).map_err(|e| field_error(&format!("system.code.rule[{window:?}]"), e))?;
            if img.len() != 1 {
                return Err(field_error(&format!("system.code.rule[{window:?}]"), "image must be a single symbol"));
            }
            table.insert(w, img[0]);
        }
        SlidingBlockCode::from_table(source, target, code.radius, &table).map_err(core("system.code"))
    }
}

impl Config {
    /// The system, inline or loaded from `system_file` relative to `base`.
    pub fn system_spec(&self, base: Option<&Path>) -> Result<SystemSpec, CliError> {
        match (&self.system, &self.system_file) {
            (Some(_), Some(_)) => Err(field_error("system", "give either system or system_file, not both")),
            (Some(s), None) => Ok(s.clone()),
            (None, Some(p)) => {
                let path = match base {
                    Some(b) if p.is_relative() => b.join(p),
                    _ => p.clone(),
                };
                let text = std::fs::read_to_string(&path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
                serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
            }
            (None, None) => Err(field_error("system", "this command needs a system or system_file")),
        }
    }
}

impl EntropyConfig {
    pub fn eps_schedule(&self) -> Result<Vec<Q>, CliError> {
        match &self.eps {
            None => Ok(default_eps_schedule()),
            Some(list) => list.iter().map(|s| parse_rational("entropy.eps", s)).collect(),
        }
    }
}

/// Canonical echo of a rational.
pub fn echo_q(x: &Q) -> String {
    format_q(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_and_tables() {
        let spec: SystemSpec = serde_json::from_str(r#"{"preset": "product-projection"}"#).unwrap();
        assert_eq!(spec.build().unwrap(), SlidingBlockCode::product_projection().unwrap());
        let spec: SystemSpec = serde_json::from_str(
            r#"{"alphabet": 4, "code": {"radius": 0, "rule": {"0": "0", "1": "0", "2": "1", "3": "1"}, "target": {"alphabet": 2}}}"#,
        )
        .unwrap();
        let code = spec.build().unwrap();
        assert_eq!(code.target().alphabet().size(), 2);
        let missing: SystemSpec = serde_json::from_str(r#"{"alphabet": 2, "code": {"radius": 0, "rule": {"0": "0"}}}"#).unwrap();
        assert!(matches!(missing.build(), Err(CliError::Config(_))));
        let documented: SystemSpec = serde_json::from_str(
            r#"{"alphabet": 2, "forbidden": ["11"], "code": {"radius": 1,
                "rule": {"000": "0", "001": "1", "010": "1", "100": "0", "101": "1"}, "target": {"alphabet": 2, "forbidden": []}}}"#,
        )
        .unwrap();
        assert_eq!(documented.build().unwrap().radius(), 1);
        let unknown: SystemSpec = serde_json::from_str(r#"{"preset": "baker"}"#).unwrap();
        assert!(matches!(unknown.build(), Err(CliError::Config(_))));
    }

    #[test]
    fn schema_is_checked() {
        assert!(Config::parse(r#"{"schema": 1}"#).is_ok());
        let e = Config::parse(r#"{"schema": 2}"#).unwrap_err();
        assert!(matches!(e, CliError::Config(m) if m.contains("schema 2")));
        let e = Config::parse("{\"schema\": 1,\n \"sytem\": {}}").unwrap_err();
        assert!(matches!(e, CliError::Config(m) if m.contains("line 2")));
    }
}
