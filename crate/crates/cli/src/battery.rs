//! The lemma battery behind `verify-lemmas`.
//!
//! Every item draws its instances from its own ChaCha stream of the run
//! seed, so selecting a subset of items does not change their instances.
//! One operation of budget is one instance, one family, one exhaustive
//! invariant sweep or one cover tried by the Lebesgue oracle.

use std::collections::BTreeMap;

use num::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use relind_core::combinatorics::{ind_extract, ind_oracle, is_valid_extraction, sauer_shelah_bound, shatter_extract, IndExtractConfig, ShatterMode};
use relind_core::group::{folner_defect, FiniteSubset, GroupElement};
use relind_core::instances::{random_face, random_family, random_ind_instance, random_measure, random_product_point, random_psi_structure};
use relind_core::meandim::{claim1_decompose, claim2_bounds, lebesgue_ord_oracle};
use relind_core::rational::{format_q, q, Q};
use relind_core::symbolic::{fiber_points, metric_d, metric_dh, Alphabet, PeriodicPoint, SlidingBlockCode, SymbolicSystem, SystemMetric};
use relind_core::transport::{kantorovich_dual, wasserstein1, EmpiricalMeasure};

use crate::config::{LebesgueCase, VerifyConfig, ITEMS};
use crate::report::{ResultBlock, Status, Table};
use crate::CliError;

pub const SHATTER_DOMAIN: usize = 10;
pub const SHATTER_MAX_PATTERNS: usize = 200;

/// Remaining operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    remaining: u64,
}

impl Budget {
    pub fn new(ops: u64) -> Self {
        Budget { remaining: ops }
    }

    pub fn remaining(&self) -> u64 {
        self.remaining
    }

    pub fn take(&mut self, ops: u64) -> bool {
        if self.remaining < ops {
            self.remaining = 0;
            return false;
        }
        self.remaining -= ops;
        true
    }
}

/// Outcome of one item before it becomes a result block.
struct Item {
    data: Value,
    failure: Option<(String, String)>,
    exhausted: bool,
}

impl Item {
    fn into_block(self, name: &str) -> ResultBlock {
        if let Some((kind, message)) = self.failure {
            return ResultBlock::failed(name, self.data, &kind, message);
        }
        if self.exhausted {
            let mut b = ResultBlock::ok(name, self.data);
            b.status = Status::BudgetExceeded;
            b.error = Some(crate::report::ErrorInfo {
                kind: "resource-limit".into(),
                message: "operation budget exhausted before the item finished".into(),
                exit_code: 3,
            });
            return b;
        }
        ResultBlock::ok(name, self.data)
    }
}

fn stream(seed: u64, item: &str) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(ITEMS.iter().position(|i| *i == item).expect("known item") as u64);
    rng
}

pub struct BatteryOutput {
    pub blocks: Vec<ResultBlock>,
    pub tables: Vec<Table>,
}

pub fn run_battery(cfg: &VerifyConfig, seed: u64, budget: &mut Budget) -> Result<BatteryOutput, CliError> {
    for item in &cfg.items {
        if !ITEMS.contains(&item.as_str()) {
            return Err(CliError::Config(format!("verify_lemmas.items: unknown item {item:?}; expected one of {}", ITEMS.join(", "))));
        }
    }
    let mut blocks = Vec::new();
    let mut tables = Vec::new();
    let zero = budget.remaining() == 0;
    for item in &cfg.items {
        if budget.remaining() == 0 {
            let mut b = ResultBlock::skipped(item.clone());
            if !zero {
                b.status = Status::BudgetExceeded;
                b.data = json!({"completed": 0});
            }
            blocks.push(b);
            continue;
        }
        let mut rng = stream(seed, item);
        let out = match item.as_str() {
            "transport-duality" => transport_duality(cfg.transport_instances, &mut rng, budget),
            "ind-extraction" => ind_extraction(cfg.ind_instances, &mut rng, budget),
            "shatter-oracle" => shatter_oracle(cfg.shatter_families, &mut rng, budget),
            "claims-1-2" => claims(cfg.claims_instances, &mut rng, budget),
            "lebesgue-oracle" => {
                let (item, table) = lebesgue(&cfg.lebesgue, seed, budget)?;
                tables.push(table);
                item
            }
            "symbolic-invariants" => symbolic_invariants(cfg.symbolic_max_period, budget),
            _ => unreachable!("items checked above"),
        };
        blocks.push(out.into_block(item));
    }
    Ok(BatteryOutput { blocks, tables })
}

fn summary(instances: u64, checked: u64, extra: Value, counterexample: Option<Value>) -> Value {
    let mut v = json!({"instances": instances, "checked": checked});
    if let (Value::Object(m), Value::Object(e)) = (&mut v, extra) {
        m.extend(e);
    }
    if let Some(c) = counterexample {
        v["counterexample"] = c;
    }
    v
}

fn transport_duality(n: u64, rng: &mut ChaCha8Rng, budget: &mut Budget) -> Item {
    let metric = SystemMetric::new(Alphabet::new(2).expect("binary alphabet"));
    let mut checked = 0;
    let mut exhausted = false;
    let mut bad = None;
    for index in 0..n {
        if !budget.take(1) {
            exhausted = true;
            break;
        }
        let mu = random_measure(rng, 2, 5, 6);
        let nu = random_measure(rng, 2, 5, 6);
        let check = || -> Result<Option<String>, relind_core::Error> {
            let (primal, plan) = wasserstein1(&metric, &mu, &nu)?;
            plan.validate(&mu, &nu)?;
            if plan.cost(&metric)? != primal {
                return Ok(Some("plan cost differs from the reported distance".into()));
            }
            let dual = kantorovich_dual(&metric, &mu, &nu)?;
            dual.validate(&metric, &mu, &nu)?;
            Ok((dual.value != primal)
                .then(|| format!("primal {} differs from dual {}", format_q(&primal), format_q(&dual.value))))
        };
        let reason = match check() {
            Ok(r) => r,
            Err(e) => Some(e.to_string()),
        };
        checked += 1;
        if let Some(reason) = reason {
            bad = Some(json!({"index": index, "mu": mu, "nu": nu, "reason": reason}));
            break;
        }
    }
    let failure = bad.as_ref().map(|c| ("duality-gap".to_string(), c["reason"].as_str().unwrap_or("").to_string()));
    Item { data: summary(n, checked, json!({"max_atoms": 6, "max_period": 5}), bad), failure, exhausted }
}

fn ind_extraction(n: u64, rng: &mut ChaCha8Rng, budget: &mut Budget) -> Item {
    let cfg = IndExtractConfig::default();
    let mut checked = 0;
    let mut exhausted = false;
    let mut bad = None;
    let mut sizes: BTreeMap<usize, u64> = BTreeMap::new();
    let mut oracle_sizes: BTreeMap<usize, u64> = BTreeMap::new();
    for index in 0..n {
        if !budget.take(1) {
            exhausted = true;
            break;
        }
        let (family, subsets) = random_ind_instance(rng);
        let check = || -> Result<(usize, usize, Option<String>), relind_core::Error> {
            let cert = ind_extract(&family, &subsets, &cfg)?;
            cert.validate(&family, &subsets)?;
            if !is_valid_extraction(&family, &subsets, &cert.i)? {
                return Ok((cert.i.len(), 0, Some("extracted set fails the direct check".into())));
            }
            let oracle = ind_oracle(&family, &subsets)?;
            let reason = (cert.i.len() > oracle.max_size)
                .then(|| format!("extracted |I| = {} exceeds the oracle maximum {}", cert.i.len(), oracle.max_size));
            Ok((cert.i.len(), oracle.max_size, reason))
        };
        checked += 1;
        match check() {
            Ok((size, best, reason)) => {
                *sizes.entry(size).or_default() += 1;
                *oracle_sizes.entry(best).or_default() += 1;
                if let Some(reason) = reason {
                    bad = Some(json!({"index": index, "patterns": family, "subsets": subsets, "reason": reason}));
                    break;
                }
            }
            Err(e) => {
                bad = Some(json!({"index": index, "patterns": family, "subsets": subsets, "reason": e.to_string()}));
                break;
            }
        }
    }
    let at_least_two: u64 = sizes.range(2..).map(|(_, c)| c).sum();
    let mut failure = bad.as_ref().map(|c| ("extraction-failed".to_string(), c["reason"].as_str().unwrap_or("").to_string()));
    if failure.is_none() && !exhausted && n > 0 && at_least_two == 0 {
        failure = Some(("extraction-failed".into(), "no instance yielded |I| >= 2".into()));
    }
    let extra = json!({
        "parameters": cfg,
        "extracted_size_histogram": sizes,
        "oracle_size_histogram": oracle_sizes,
        "instances_with_size_at_least_2": at_least_two,
    });
    Item { data: summary(n, checked, extra, bad), failure, exhausted }
}

fn shatter_oracle(n: u64, rng: &mut ChaCha8Rng, budget: &mut Budget) -> Item {
    let mut checked = 0;
    let mut exhausted = false;
    let mut bad = None;
    let mut rows = Vec::new();
    for index in 0..n {
        if !budget.take(1) {
            exhausted = true;
            break;
        }
        let family = random_family(rng, SHATTER_DOMAIN, SHATTER_MAX_PATTERNS);
        let check = || -> Result<(usize, usize, Option<String>), relind_core::Error> {
            let exact = shatter_extract(&family, ShatterMode::Exact)?;
            let greedy = shatter_extract(&family, ShatterMode::Greedy)?;
            exact.validate(&family)?;
            greedy.validate(&family)?;
            let reason = if greedy.size() > exact.size() {
                Some(format!("greedy {} beats exact {}", greedy.size(), exact.size()))
            } else if family.len() as u128 > sauer_shelah_bound(SHATTER_DOMAIN, exact.size()) {
                Some(format!("|S| = {} exceeds the Sauer-Shelah bound for k = {}", family.len(), exact.size()))
            } else {
                None
            };
            Ok((exact.size(), greedy.size(), reason))
        };
        checked += 1;
        match check() {
            Ok((exact, greedy, reason)) => {
                rows.push(json!([family.len(), exact, greedy, sauer_shelah_bound(SHATTER_DOMAIN, exact).to_string()]));
                if let Some(reason) = reason {
                    bad = Some(json!({"index": index, "patterns": family, "reason": reason}));
                    break;
                }
            }
            Err(e) => {
                bad = Some(json!({"index": index, "patterns": family, "reason": e.to_string()}));
                break;
            }
        }
    }
    let failure = bad.as_ref().map(|c| ("oracle-disagreement".to_string(), c["reason"].as_str().unwrap_or("").to_string()));
    let extra = json!({"domain": SHATTER_DOMAIN, "columns": ["patterns", "exact", "greedy", "sauer_shelah_bound"], "rows": rows});
    Item { data: summary(n, checked, extra, bad), failure, exhausted }
}

fn claims(n: u64, rng: &mut ChaCha8Rng, budget: &mut Budget) -> Item {
    let mut checked = 0;
    let mut exhausted = false;
    let mut bad = None;
    let mut degenerate = 0u64;
    let mut samples = 0u64;
    for index in 0..n {
        if !budget.take(1) {
            exhausted = true;
            break;
        }
        let h = rng.gen_range(1..=2);
        let m = rng.gen_range(1..=2);
        let s = random_psi_structure(rng, h, m);
        let t = random_product_point(rng, 1 << h, m);
        let face = random_face(rng, 1 << h);
        let i = rng.gen_range(0..m);
        let check = || -> Result<(Option<String>, bool, usize), relind_core::Error> {
            let c1 = claim1_decompose(&s, &t, &face, i)?;
            let fail = |msg: String| Ok((Some(msg), c1.degenerate, 0));
            if &c1.b1 + &c1.b2 != Q::one() {
                return fail("b1 + b2 differs from 1".into());
            }
            match (&c1.mu_prime, &c1.mu_double_prime) {
                (Some(a), Some(b)) if EmpiricalMeasure::mixture(&c1.b1, a, b)? != c1.mu => {
                    return fail("b1 mu' + b2 mu'' differs from mu".into())
                }
                (Some(a), None) | (None, Some(a)) if *a != c1.mu => return fail("degenerate split differs from mu".into()),
                _ => {}
            }
            let c2 = claim2_bounds(&s, &t, &face, i)?;
            if c2.lower > c2.upper || c2.upper != c1.b2 || c2.lower != &s.delta * &c1.b2 {
                return fail("claim 2 bounds do not match delta b2 and diam b2".into());
            }
            if let Some(x) = c2.samples.iter().find(|x| x.distance < c2.lower) {
                return fail(format!("{} at distance {} below the lower bound", x.label, format_q(&x.distance)));
            }
            Ok((None, c1.degenerate, c2.samples.len()))
        };
        checked += 1;
        let reason = match check() {
            Ok((r, d, n)) => {
                degenerate += d as u64;
                samples += n as u64;
                r
            }
            Err(e) => Some(e.to_string()),
        };
        if let Some(reason) = reason {
            bad = Some(json!({"index": index, "structure": s, "point": t, "face": face, "block": i, "reason": reason}));
            break;
        }
    }
    let failure = bad.as_ref().map(|c| ("claim-violation".to_string(), c["reason"].as_str().unwrap_or("").to_string()));
    let extra = json!({"h": [1, 2], "m": [1, 2], "degenerate_splits": degenerate, "distance_samples": samples});
    Item { data: summary(n, checked, extra, bad), failure, exhausted }
}

fn lebesgue(cases: &[LebesgueCase], seed: u64, budget: &mut Budget) -> Result<(Item, Table), CliError> {
    let mut table = Table::new("lebesgue", &["n", "k", "q", "seed", "cells", "covers_checked", "min_ord_found", "nk", "n_minus_1_k", "undercuts_nk", "undercuts_n_minus_1_k", "complete"]);
    let mut reports = Vec::new();
    let mut exhausted = false;
    let mut failure = None;
    for case in cases {
        if budget.remaining() == 0 {
            exhausted = true;
            break;
        }
        let report = match lebesgue_ord_oracle(case.n, case.k, case.q, budget.remaining(), seed) {
            Ok(r) => r,
            Err(e) if e.is_configuration() => return Err(CliError::Config(format!("verify_lemmas.lebesgue: {e}"))),
            Err(e) => {
                failure = Some((e.kind().to_string(), e.to_string()));
                break;
            }
        };
        let spent = report.randomized.covers_checked + report.exhaustive.as_ref().map_or(0, |s| s.covers_checked);
        budget.take(spent.min(budget.remaining()));
        exhausted |= report.budget_exhausted;
        let opt = |x: Option<bool>| x.map_or(String::new(), |b| b.to_string());
        table.push(vec![
            case.n.to_string(),
            case.k.to_string(),
            case.q.to_string(),
            seed.to_string(),
            report.cells.to_string(),
            spent.to_string(),
            report.min_ord_found.map_or(String::new(), |o| o.to_string()),
            report.nk.to_string(),
            ((case.n - 1) * case.k).to_string(),
            opt(report.undercuts_nk),
            opt(report.undercuts_n_minus_1_k),
            (!report.budget_exhausted).to_string(),
        ]);
        reports.push(report);
        if exhausted {
            break;
        }
    }
    Ok((Item { data: json!({"cases": reports}), failure, exhausted }, table))
}

/// Exhaustive symbolic-dynamics checks: metric axioms, window metric
/// identities, equivariance of sliding block codes, fiber enumeration
/// against brute force and the Følner defect of intervals.
fn symbolic_invariants(max_period: usize, budget: &mut Budget) -> Item {
    let mut checks: Vec<Value> = Vec::new();
    let mut failure = None;
    let mut exhausted = false;
    let sweeps: [(&str, fn(usize) -> Result<(u64, Option<String>), relind_core::Error>); 5] = [
        ("metric-axioms", metric_axioms),
        ("window-metric", window_metric),
        ("equivariance", equivariance),
        ("fiber-enumeration", fiber_enumeration),
        ("folner-defect", folner_formula),
    ];
    for (name, sweep) in sweeps {
        if !budget.take(1) {
            exhausted = true;
            break;
        }
        let (count, reason) = match sweep(max_period) {
            Ok(r) => r,
            Err(e) => (0, Some(e.to_string())),
        };
        checks.push(json!({"name": name, "cases": count, "holds": reason.is_none()}));
        if let Some(reason) = reason {
            failure = Some(("invariant-violation".to_string(), format!("{name}: {reason}")));
            break;
        }
    }
    Item { data: json!({"max_period": max_period, "checks": checks}), failure, exhausted }
}

fn binary_points(max_period: usize) -> Result<Vec<PeriodicPoint>, relind_core::Error> {
    let full = SymbolicSystem::full_shift(2)?;
    let mut pts = Vec::new();
    for p in 1..=max_period {
        pts.extend(full.points_of_period(p)?);
    }
    pts.sort();
    pts.dedup();
    Ok(pts)
}

fn metric_axioms(_: usize) -> Result<(u64, Option<String>), relind_core::Error> {
    let pts = binary_points(3)?;
    let mut n = 0;
    for a in &pts {
        for b in &pts {
            let ab = metric_d(a, b);
            if ab != metric_d(b, a) || (ab == Q::from_integer(0.into())) != (a == b) {
                return Ok((n, Some(format!("symmetry or identity fails at {a}, {b}"))));
            }
            for c in &pts {
                n += 1;
                if ab > metric_d(a, c) + metric_d(c, b) {
                    return Ok((n, Some(format!("triangle inequality fails at {a}, {b}, {c}"))));
                }
            }
        }
    }
    Ok((n, None))
}

fn window_metric(_: usize) -> Result<(u64, Option<String>), relind_core::Error> {
    let pts = binary_points(5)?;
    let windows = [
        FiniteSubset::from_iter([0]),
        FiniteSubset::from_iter([0, 2]),
        FiniteSubset::from_iter([-3, 1, 4]),
        FiniteSubset::interval(0, 7),
        FiniteSubset::interval(-2, 3),
    ];
    let mut n = 0;
    for x in &pts {
        for y in &pts {
            for h in &windows {
                let dh = metric_dh(h, x, y)?;
                let literal = h.iter().map(|g| metric_d(&x.shift(GroupElement(g)), &y.shift(GroupElement(g)))).max().expect("nonempty");
                if dh != literal {
                    return Ok((n, Some(format!("d_H differs from max over H at {x}, {y}"))));
                }
                if h.contains(0) && dh < metric_d(x, y) {
                    return Ok((n, Some(format!("d_H < d with 0 in H at {x}, {y}"))));
                }
                for e in &windows {
                    n += 1;
                    if metric_dh(&e.union(h), x, y)? != metric_dh(e, x, y)?.max(dh.clone()) {
                        return Ok((n, Some(format!("d_(E u H) differs from max(d_E, d_H) at {x}, {y}"))));
                    }
                }
            }
        }
    }
    Ok((n, None))
}

fn codes() -> Result<Vec<(&'static str, SlidingBlockCode)>, relind_core::Error> {
    Ok(vec![
        ("identity", SlidingBlockCode::identity(SymbolicSystem::full_shift(2)?)?),
        ("xor-next", SlidingBlockCode::xor_next()?),
        ("product-projection", SlidingBlockCode::product_projection()?),
        (
            "radius-2 ternary",
            SlidingBlockCode::from_fn(SymbolicSystem::full_shift(2)?, SymbolicSystem::full_shift(3)?, 2, |w| (w[0] + w[2] * w[4] + w[3]) % 3)?,
        ),
    ])
}

fn equivariance(max_period: usize) -> Result<(u64, Option<String>), relind_core::Error> {
    let mut n = 0;
    for (name, code) in codes()? {
        for p in 1..=max_period {
            for x in code.source().points_of_period(p)? {
                let y = code.apply(&x)?;
                for g in -8..=8 {
                    let g = GroupElement(g);
                    n += 1;
                    if code.apply(&x.shift(g))? != y.shift(g) {
                        return Ok((n, Some(format!("{name}: pi(g x) differs from g pi(x) at x = {x}, g = {}", g.0))));
                    }
                }
            }
        }
    }
    Ok((n, None))
}

/// Every word of length `p`, as a point (possibly of smaller least period).
fn all_words(k: usize, p: usize) -> Vec<PeriodicPoint> {
    (0..k.pow(p as u32))
        .map(|mut c| {
            let word = (0..p)
                .map(|_| {
                    let s = (c % k) as u8;
                    c /= k;
                    s
                })
                .collect();
            PeriodicPoint::new(word).expect("nonempty word")
        })
        .collect()
}

fn fiber_enumeration(_: usize) -> Result<(u64, Option<String>), relind_core::Error> {
    let mut n = 0;
    for (name, code) in codes()? {
        let k = code.source_alphabet().size();
        for p in 1..=8 {
            let mut naive: BTreeMap<PeriodicPoint, std::collections::BTreeSet<PeriodicPoint>> = BTreeMap::new();
            for x in all_words(k, p) {
                naive.entry(code.apply(&x)?).or_default().insert(x);
            }
            for y in all_words(code.target().alphabet().size(), p) {
                n += 1;
                let got: std::collections::BTreeSet<PeriodicPoint> = fiber_points(&code, &y, p)?.into_iter().collect();
                if got != naive.get(&y).cloned().unwrap_or_default() {
                    return Ok((n, Some(format!("{name}: fiber of {y} at period {p} differs from brute force"))));
                }
            }
        }
    }
    Ok((n, None))
}

fn folner_formula(_: usize) -> Result<(u64, Option<String>), relind_core::Error> {
    let mut n = 0;
    for len in 1..=16usize {
        let w = FiniteSubset::interval(0, len);
        for g in -20i64..=20 {
            n += 1;
            let expected = q(2 * (g.unsigned_abs() as i64).min(len as i64), len as i64);
            if folner_defect(&w, GroupElement(g))? != expected {
                return Ok((n, Some(format!("|W delta gW| / |W| is not 2 min(|g|, n) / n for n = {len}, g = {g}"))));
            }
        }
    }
    Ok((n, None))
}
