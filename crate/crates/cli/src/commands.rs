//! Subcommand drivers. Each turns a config into result blocks and CSV tables.

use std::path::{Path, PathBuf};
use std::time::Instant;

use num::Zero;
use serde_json::{json, Value};

use relind_core::entropy::{independence_density, relative_entropy_estimate};
use relind_core::group::{FiniteSubset, FolnerWindow};
use relind_core::meandim::mdim_lower_certificate;
use relind_core::rational::{format_q, q, to_f64};
use relind_core::symbolic::{Alphabet, SlidingBlockCode, SystemMetric};
use relind_core::transport::{approximate_in_rn, kantorovich_dual, wasserstein1, wasserstein_window, MeasurePair};

use crate::battery::{run_battery, Budget};
use crate::config::{parse_rational, Config};
use crate::report::{Report, ResultBlock, Status, Stopwatch, Table};
use crate::{CliError, TOOL, VERSION};

pub const DEFAULT_ENTROPY_BUDGET: u64 = 1 << 22;
pub const DEFAULT_LIFT_BUDGET: u64 = 1 << 20;
pub const DEFAULT_BATTERY_BUDGET: u64 = 10_000_000;
pub const DEFAULT_TRANSPORT_BUDGET: u64 = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Entropy,
    MdimLower,
    VerifyLemmas,
    Transport,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Entropy => "entropy",
            Command::MdimLower => "mdim-lower",
            Command::VerifyLemmas => "verify-lemmas",
            Command::Transport => "transport",
        }
    }

    fn default_budget(self) -> u64 {
        match self {
            Command::Entropy => DEFAULT_ENTROPY_BUDGET,
            Command::MdimLower => DEFAULT_LIFT_BUDGET,
            Command::VerifyLemmas => DEFAULT_BATTERY_BUDGET,
            Command::Transport => DEFAULT_TRANSPORT_BUDGET,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Invocation {
    pub command: Command,
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub budget: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Format,
}

pub struct Outcome {
    pub report: Report,
    pub tables: Vec<Table>,
}

/// Loads the config, applies flag overrides and runs the command.
pub fn run(inv: &Invocation) -> Result<Outcome, CliError> {
    let mut config = match &inv.config {
        Some(path) => Config::load(path)?,
        None => Config::parse(r#"{"schema": 1}"#)?,
    };
    if inv.seed.is_some() {
        config.seed = inv.seed;
    }
    if inv.budget.is_some() {
        config.budget = inv.budget;
    }
    let base = inv.config.as_deref().and_then(Path::parent);
    run_config(inv.command, &config, base)
}

pub fn run_config(command: Command, config: &Config, base: Option<&Path>) -> Result<Outcome, CliError> {
    let budget = config.budget.unwrap_or(command.default_budget());
    if budget == 0 && command != Command::VerifyLemmas {
        return Err(CliError::Config("budget must be positive".into()));
    }
    let mut watch = Stopwatch::new();
    let mut warnings = Vec::new();
    let (results, tables) = match command {
        Command::Entropy => entropy(config, base, budget, &mut watch)?,
        Command::MdimLower => mdim_lower(config, base, budget, &mut watch)?,
        Command::VerifyLemmas => {
            let seed = config.seed.ok_or_else(|| CliError::Config("verify-lemmas needs a seed (--seed or \"seed\")".into()))?;
            if budget == 0 {
                warnings.push("budget 0: every item skipped".to_string());
            }
            let cfg = config.verify_lemmas.clone().unwrap_or_default();
            let start = Instant::now();
            let out = run_battery(&cfg, seed, &mut Budget::new(budget))?;
            watch.record("battery", start);
            let mut summary = Table::new("", &["item", "status", "instances", "checked"]);
            for b in &out.blocks {
                summary.push(vec![
                    b.name.clone(),
                    status_name(b.status).into(),
                    b.data.get("instances").map_or(String::new(), Value::to_string),
                    b.data.get("checked").map_or(String::new(), Value::to_string),
                ]);
            }
            let mut tables = vec![summary];
            tables.extend(out.tables);
            (out.blocks, tables)
        }
        Command::Transport => transport(config, base, budget, &mut watch)?,
    };
    let report = Report {
        tool: TOOL.into(),
        version: VERSION.into(),
        command: command.name().into(),
        seed: config.seed,
        budget,
        config: serde_json::to_value(config).expect("config serializes"),
        results,
        warnings,
        timings: watch.finish(),
    };
    Ok(Outcome { report, tables })
}

fn status_name(s: Status) -> &'static str {
    match s {
        Status::Ok => "ok",
        Status::Failed => "failed",
        Status::Skipped => "skipped",
        Status::BudgetExceeded => "budget-exceeded",
    }
}

fn section<'a, T>(x: &'a Option<T>, name: &str) -> Result<&'a T, CliError> {
    x.as_ref().ok_or_else(|| CliError::Config(format!("{name}: section required for this command")))
}

type Produced = (Vec<ResultBlock>, Vec<Table>);

fn entropy(config: &Config, base: Option<&Path>, budget: u64, watch: &mut Stopwatch) -> Result<Produced, CliError> {
    let cfg = section(&config.entropy, "entropy")?;
    let code = config.system_spec(base)?.build()?;
    let eps = cfg.eps_schedule()?;
    let k = code.source_alphabet().size() as u64;
    let words = |p: usize| k.checked_pow(p as u32).filter(|&w| w <= budget);
    let mut blocks = Vec::new();
    let mut table = Table::new("", &["n", "eps", "count", "base_point", "exact", "approx_value_float"]);
    let start = Instant::now();
    if words(cfg.period).is_none() {
        let e = CliError::Core(relind_core::Error::ResourceLimit(format!("{k}^{} source words exceed the budget of {budget}", cfg.period)));
        blocks.push(ResultBlock::from_error("entropy", Value::Null, &e));
    } else {
        match relative_entropy_estimate(&code, &cfg.windows, &eps, cfg.period) {
            Ok(est) => {
                for r in &est.rows {
                    table.push(vec![
                        r.n.to_string(),
                        format_q(&r.eps),
                        r.count.to_string(),
                        r.base_point.to_string(),
                        r.exact.to_string(),
                        format!("{:.12}", r.approx_value),
                    ]);
                }
                blocks.push(ResultBlock::ok("entropy", json!(est)));
            }
            Err(e) if e.is_configuration() => return Err(CliError::Config(format!("entropy: {e}"))),
            Err(e) => blocks.push(ResultBlock::from_error("entropy", Value::Null, &e.into())),
        }
    }
    watch.record("entropy", start);
    if let Some(d) = &cfg.density {
        let start = Instant::now();
        let window = FiniteSubset::interval(0, d.window);
        let block = if words(d.period).is_none() {
            let e = CliError::Core(relind_core::Error::ResourceLimit(format!("{k}^{} source words exceed the budget of {budget}", d.period)));
            ResultBlock::from_error("independence-density", Value::Null, &e)
        } else {
            match independence_density(&d.v1, &d.v2, &code, &window, d.period) {
                Ok(r) => ResultBlock::ok(
                    "independence-density",
                    json!({
                        "window": r.window,
                        "best": r.best,
                        "ratio": format_q(&r.ratio),
                        "ratio_float": to_f64(&r.ratio),
                        "certificate": r.certificate,
                    }),
                ),
                Err(e) if e.is_configuration() => return Err(CliError::Config(format!("entropy.density: {e}"))),
                Err(e) => ResultBlock::from_error("independence-density", Value::Null, &e.into()),
            }
        };
        blocks.push(block);
        watch.record("independence-density", start);
    }
    Ok((blocks, vec![table]))
}

fn mdim_lower(config: &Config, base: Option<&Path>, budget: u64, watch: &mut Stopwatch) -> Result<Produced, CliError> {
    let cfg = section(&config.mdim_lower, "mdim_lower")?;
    let code = config.system_spec(base)?.build()?;
    let r = parse_rational("mdim_lower.r", &cfg.r)?;
    if cfg.runs.is_empty() {
        return Err(CliError::Config("mdim_lower.runs: at least one run required".into()));
    }
    let windows = cfg
        .runs
        .iter()
        .map(|run| FolnerWindow::new(0, run.window).map_err(|e| CliError::Config(format!("mdim_lower.runs: {e}"))))
        .collect::<Result<Vec<_>, _>>()?;
    // Runs are independent; blocks keep config order.
    let start = Instant::now();
    let outcomes: Vec<(Result<Value, CliError>, f64)> = std::thread::scope(|s| {
        let handles: Vec<_> = cfg
            .runs
            .iter()
            .zip(&windows)
            .map(|(run, window)| {
                let (code, r) = (&code, &r);
                s.spawn(move || {
                    let t = Instant::now();
                    let period = run.period.unwrap_or(run.window);
                    let out = mdim_lower_certificate(code, &cfg.v1, &cfg.v2, r, run.h, window, period, budget)
                        .and_then(|c| c.verify(code).map(|()| c))
                        .map(|c| {
                            let flat: Vec<i64> = c.blocks.iter().flatten().copied().collect();
                            let distinct: std::collections::BTreeSet<i64> = flat.iter().copied().collect();
                            let mut v = json!({
                                "h": run.h,
                                "window": run.window,
                                "period": period,
                                "m": c.params.m,
                                "t_n": c.params.t_n,
                                "e_n_size": c.e_n.len(),
                                "m_n": c.m_n,
                                "half_r_t_n": format_q(&(r * q(c.params.t_n as i64, 2))),
                                "lebesgue_form": format_q(&c.lebesgue_form),
                                "bound": format_q(&c.bound),
                                "bound_float": to_f64(&c.bound),
                                "claim0_disjoint": distinct.len() == flat.len(),
                                "verified": true,
                            });
                            if cfg.embed_certificate {
                                v["certificate"] = json!(c);
                            }
                            v
                        })
                        .map_err(CliError::from);
                    (out, t.elapsed().as_secs_f64())
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("run thread")).collect()
    });
    watch.record("mdim-lower", start);
    let mut blocks = Vec::new();
    let mut table = Table::new("", &["h", "window", "period", "m", "t_n", "m_n", "lebesgue_form", "bound", "status"]);
    let mut bounds = Vec::new();
    for (run, (out, secs)) in cfg.runs.iter().zip(outcomes) {
        let name = format!("mdim-lower h={} n={}", run.h, run.window);
        watch.add(&name, secs);
        match out {
            Ok(v) => {
                table.push(
                    ["h", "window", "period", "m", "t_n", "m_n", "lebesgue_form", "bound"]
                        .iter()
                        .map(|k| v[*k].as_str().map_or_else(|| v[*k].to_string(), str::to_string))
                        .chain(["ok".to_string()])
                        .collect(),
                );
                bounds.push(json!({"h": run.h, "window": run.window, "bound": v["bound"].clone()}));
                blocks.push(ResultBlock::ok(name, v));
            }
            Err(CliError::Core(e)) if e.is_configuration() => return Err(CliError::Config(format!("{name}: {e}"))),
            Err(e) => {
                let mut row = vec![run.h.to_string(), run.window.to_string()];
                row.extend(std::iter::repeat(String::new()).take(6));
                row.push(e.exit_code().to_string());
                table.push(row);
                blocks.push(ResultBlock::from_error(name, Value::Null, &e));
            }
        }
    }
    if cfg.runs.len() > 1 {
        let values: Vec<_> = bounds.iter().map(|b| parse_rational("bound", b["bound"].as_str().expect("rational")).expect("own output")).collect();
        let increasing = bounds.len() == cfg.runs.len() && values.windows(2).all(|w| w[0] < w[1]);
        blocks.push(ResultBlock::ok("sweep", json!({"bounds": bounds, "strictly_increasing": increasing})));
    }
    Ok((blocks, vec![table]))
}

fn transport(config: &Config, base: Option<&Path>, budget: u64, watch: &mut Stopwatch) -> Result<Produced, CliError> {
    let cfg = section(&config.transport, "transport")?;
    let code: Option<SlidingBlockCode> = if config.system.is_some() || config.system_file.is_some() {
        Some(config.system_spec(base)?.build()?)
    } else {
        None
    };
    let symbols = cfg.mu.support().chain(cfg.nu.support()).map(|x| x.max_symbol() as usize + 1).max().unwrap_or(1);
    let k = code.as_ref().map_or(symbols.max(2), |c| c.source_alphabet().size());
    let metric = SystemMetric::new(Alphabet::new(k).map_err(|e| CliError::Config(format!("transport: {e}")))?);
    let cfg_err = |e: relind_core::Error| if e.is_configuration() { CliError::Config(format!("transport: {e}")) } else { e.into() };
    let start = Instant::now();
    let (primal, plan) = wasserstein1(&metric, &cfg.mu, &cfg.nu).map_err(cfg_err)?;
    plan.validate(&cfg.mu, &cfg.nu)?;
    let dual = kantorovich_dual(&metric, &cfg.mu, &cfg.nu).map_err(cfg_err)?;
    dual.validate(&metric, &cfg.mu, &cfg.nu)?;
    watch.record("transport", start);
    let mut blocks = vec![ResultBlock::ok(
        "wasserstein",
        json!({"distance": format_q(&primal), "distance_float": to_f64(&primal), "plan": plan}),
    )];
    let dual_block = json!({"value": format_q(&dual.value), "support": dual.support, "potential": dual.potential.iter().map(format_q).collect::<Vec<_>>(), "equals_primal": dual.value == primal});
    blocks.push(if dual.value == primal {
        ResultBlock::ok("kantorovich-dual", dual_block)
    } else {
        ResultBlock::failed("kantorovich-dual", dual_block, "duality-gap", "dual value differs from the primal distance")
    });
    let mut table = Table::new("", &["source", "target", "mass"]);
    for (i, row) in plan.matrix.iter().enumerate() {
        for (j, m) in row.iter().enumerate() {
            if !m.is_zero() {
                table.push(vec![plan.source[i].to_string(), plan.target[j].to_string(), format_q(m)]);
            }
        }
    }
    if let Some(n) = cfg.window {
        let window = FiniteSubset::interval(0, n);
        let w = wasserstein_window(&metric, &window, &cfg.mu, &cfg.nu).map_err(cfg_err)?;
        blocks.push(ResultBlock::ok("window-distance", json!({"window": window, "distance": format_q(&w)})));
    }
    if cfg.relation {
        let code = code.as_ref().ok_or_else(|| CliError::Config("transport.relation: needs a system".into()))?;
        let eps = parse_rational("transport.eps", cfg.eps.as_deref().unwrap_or("1/1000"))?;
        let pair = MeasurePair { first: cfg.mu.clone(), second: cfg.nu.clone() };
        let start = Instant::now();
        let block = match pair.in_relation(code) {
            Err(e) => ResultBlock::from_error("relation", Value::Null, &cfg_err(e)),
            Ok(false) => ResultBlock::ok("relation", json!({"in_relation": false})),
            Ok(true) => {
                let lcm = relind_core::rational::lcm_of_denominators(pair.first.atoms().iter().chain(pair.second.atoms()).map(|(_, w)| w));
                if lcm > budget.into() {
                    let e = relind_core::Error::ResourceLimit(format!("n = {lcm} atoms exceed the budget of {budget}"));
                    ResultBlock::from_error("relation", Value::Null, &e.into())
                } else {
                    match approximate_in_rn(&pair, code, &eps) {
                        Ok(rep) => ResultBlock::ok("relation", json!({"in_relation": true, "representation": rep})),
                        Err(e) => ResultBlock::from_error("relation", Value::Null, &cfg_err(e)),
                    }
                }
            }
        };
        blocks.push(block);
        watch.record("relation", start);
    }
    Ok((blocks, vec![table]))
}

/// Writes the report (or its primary table) to `out` or stdout, and every
/// side-table next to `out`.
pub fn write_outputs(outcome: &Outcome, out: Option<&Path>, format: Format) -> Result<(), CliError> {
    let io = |p: &Path, e: std::io::Error| CliError::Io(format!("{}: {e}", p.display()));
    let primary = match format {
        Format::Json => outcome.report.to_json(),
        Format::Csv => outcome.tables.iter().find(|t| t.suffix.is_empty()).map(Table::to_csv).transpose()?.unwrap_or_default(),
    };
    match out {
        Some(p) => {
            std::fs::write(p, primary).map_err(|e| io(p, e))?;
            for t in outcome.tables.iter().filter(|t| !t.suffix.is_empty()) {
                let side = t.side_path(p);
                std::fs::write(&side, t.to_csv()?).map_err(|e| io(&side, e))?;
            }
        }
        None => print!("{primary}"),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_text(command: Command, text: &str) -> Result<Outcome, CliError> {
        run_config(command, &Config::parse(text)?, None)
    }

    #[test]
    fn entropy_tables() {
        let out = run_text(
            Command::Entropy,
            r#"{"schema": 1, "system": {"preset": "identity"}, "entropy": {"windows": [2, 3], "eps": ["3/5"], "period": 4}}"#,
        )
        .unwrap();
        assert_eq!(out.report.exit_code(), 0);
        let rows = out.report.results[0].data["rows"].as_array().unwrap();
        assert!(rows.iter().all(|r| r["count"] == 1));
        assert_eq!(out.tables[0].rows.len(), 2);
        let out = run_text(
            Command::Entropy,
            r#"{"schema": 1, "system": {"preset": "product-projection"}, "entropy": {"windows": [3], "eps": ["0.6"], "period": 3}}"#,
        )
        .unwrap();
        assert_eq!(out.report.results[0].data["rows"][0]["count"], 8);
    }

    #[test]
    fn missing_sections_are_configuration_errors() {
        let e = run_text(Command::Entropy, r#"{"schema": 1, "system": {"preset": "identity"}}"#).err().unwrap();
        assert_eq!(e.exit_code(), 2);
        let e = run_text(Command::VerifyLemmas, r#"{"schema": 1}"#).err().unwrap();
        assert!(e.to_string().contains("seed"));
        let e = run_text(Command::Transport, r#"{"schema": 1, "budget": 0}"#).err().unwrap();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn entropy_budget_is_a_resource_failure() {
        let out = run_text(
            Command::Entropy,
            r#"{"schema": 1, "budget": 10, "system": {"preset": "identity"}, "entropy": {"windows": [2], "period": 4}}"#,
        )
        .unwrap();
        assert_eq!(out.report.results[0].status, Status::BudgetExceeded);
        assert_eq!(out.report.exit_code(), 3);
    }

    #[test]
    fn transport_blocks() {
        let out = run_text(
            Command::Transport,
            r#"{"schema": 1, "system": {"preset": "product-projection"},
                "transport": {"mu": {"atoms": [{"word": "0", "weight": "1/2"}, {"word": "1", "weight": "1/2"}]},
                              "nu": {"atoms": [{"word": "1", "weight": "1/3"}, {"word": "0", "weight": "2/3"}]},
                              "window": 3, "relation": true}}"#,
        )
        .unwrap();
        let r = &out.report.results;
        assert_eq!(r[0].data["distance"], "1/6");
        assert_eq!(r[1].data["value"], "1/6");
        assert_eq!(r[3].data["representation"]["n"], 6);
        assert_eq!(out.report.exit_code(), 0);
    }

    #[test]
    fn identity_code_is_a_named_failure() {
        let out = run_text(
            Command::MdimLower,
            r#"{"schema": 1, "system": {"preset": "identity"},
                "mdim_lower": {"v1": {"offset": 0, "words": ["0"]}, "v2": {"offset": 0, "words": ["1"]}, "r": "1", "runs": [{"h": 1, "window": 48}]}}"#,
        )
        .unwrap();
        let e = out.report.results[0].error.as_ref().unwrap();
        assert_eq!(e.kind, "independence-shortfall");
        assert_eq!(out.report.exit_code(), 1);
    }

    #[test]
    fn mdim_sweep_keeps_config_order() {
        let out = run_text(
            Command::MdimLower,
            r#"{"schema": 1, "system": {"preset": "full-shift-to-point"},
                "mdim_lower": {"v1": {"offset": 0, "words": ["0"]}, "v2": {"offset": 0, "words": ["1"]}, "r": "1",
                               "runs": [{"h": 2, "window": 80}, {"h": 1, "window": 48}], "embed_certificate": false}}"#,
        )
        .unwrap();
        let r = &out.report.results;
        assert_eq!(r[0].name, "mdim-lower h=2 n=80");
        assert_eq!(r[1].data["bound"], "3/8");
        assert!(r[1].data.get("certificate").is_none());
        assert_eq!(r[0].data["bound"], "5/16");
        assert_eq!(r[2].data["strictly_increasing"], true);
    }
}
