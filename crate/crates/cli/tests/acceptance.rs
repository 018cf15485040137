//! Acceptance suite: one test per criterion, each printing a single
//! PASS/FAIL line with its tolerance and runtime limit.
//!
//! Every numeric comparison is exact (rational equality or integer counts);
//! the tolerance column is therefore always 0.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use num::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use relind_core::combinatorics::{ind_extract, ind_oracle, is_valid_extraction, shatter_extract, IndExtractConfig, PatternFamily, ShatterMode};
use relind_core::entropy::independence_density;
use relind_core::group::FiniteSubset;
use relind_core::instances::{random_face, random_family, random_ind_instance, random_measure, random_product_point, random_psi_structure};
use relind_core::meandim::{build_psi, claim1_decompose, claim2_bounds, lebesgue_ord_oracle, MdimLowerCertificate};
use relind_core::rational::{parse_q, q, Q};
use relind_core::symbolic::{Alphabet, CylinderSet, PeriodicPoint, SlidingBlockCode, SymbolicSystem, SystemMetric};
use relind_core::transport::{kantorovich_dual, measure_of_cylinder, wasserstein1, wasserstein_window, EmpiricalMeasure};

const SEED: u64 = 2024;

/// Writes past the test harness's output capture so the line shows up in
/// `cargo test` output.
fn verdict(criterion: u32, title: &str, pass: bool, elapsed: Duration, limit: Duration, detail: &str) {
    let line = format!(
        "acceptance {criterion:>2} {}: {title} | tolerance 0 (exact) | {:.2}s of {}s | {detail}\n",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        limit.as_secs()
    );
    let _ = std::io::stdout().lock().write_all(line.as_bytes());
    assert!(pass, "criterion {criterion} failed: {detail}");
    assert!(elapsed < limit, "criterion {criterion} exceeded {}s", limit.as_secs());
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("relind-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

struct Run {
    code: i32,
    text: String,
    stderr: String,
}

fn relind(args: &[&str], config: Option<&Path>, out: &Path) -> Run {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_relind"));
    cmd.args(args).arg("--out").arg(out);
    if let Some(c) = config {
        cmd.arg("--config").arg(c);
    }
    let o = cmd.output().expect("binary runs");
    Run {
        code: o.status.code().unwrap_or(-1),
        text: std::fs::read_to_string(out).unwrap_or_default(),
        stderr: String::from_utf8_lossy(&o.stderr).into_owned(),
    }
}

fn results(run: &Run) -> Vec<Value> {
    let v: Value = serde_json::from_str(&run.text).expect("json report");
    v["results"].as_array().expect("results").clone()
}

fn rational(v: &Value) -> Q {
    parse_q(v.as_str().expect("rational string")).expect("rational")
}

/// The report text before the wall-clock timings.
fn reproducible_part(text: &str) -> &str {
    &text[..text.find("\"timings\"").expect("timings field")]
}

#[test]
fn criterion_01_transport_duality() {
    let limit = Duration::from_secs(10);
    let start = Instant::now();
    let metric = SystemMetric::new(Alphabet::new(2).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut agree = 0;
    let mut max_atoms = 0;
    for _ in 0..200 {
        let mu = random_measure(&mut rng, 2, 5, 6);
        let nu = random_measure(&mut rng, 2, 5, 6);
        max_atoms = max_atoms.max(mu.len()).max(nu.len());
        let (primal, plan) = wasserstein1(&metric, &mu, &nu).unwrap();
        plan.validate(&mu, &nu).unwrap();
        let dual = kantorovich_dual(&metric, &mu, &nu).unwrap();
        dual.validate(&metric, &mu, &nu).unwrap();
        // Distances between points are dyadic; the plan's cost recomputes.
        let dyadic = plan.source.iter().all(|x| {
            plan.target.iter().all(|y| {
                let d = metric.d(x, y).unwrap();
                d.is_zero() || (d.numer().is_one() && d.denom().bits() == d.denom().trailing_zeros().unwrap_or(0) + 1)
            })
        });
        if primal == dual.value && plan.cost(&metric).unwrap() == primal && dyadic {
            agree += 1;
        }
    }
    verdict(
        1,
        "W1 = Kantorovich dual on 200 seeded instances",
        agree == 200 && max_atoms <= 6,
        start.elapsed(),
        limit,
        &format!("{agree}/200 exact agreements, at most {max_atoms} atoms per side"),
    );
}

/// Independent count: distinct `[0, n)` windows among all period-`p`
/// lifts of the base point `y = 0^Z`, found by brute force over words.
fn distinct_windows_in_fiber(n: usize, period: usize) -> usize {
    let code = SlidingBlockCode::product_projection().unwrap();
    let zero = PeriodicPoint::constant(0);
    let mut windows = BTreeSet::new();
    for c in 0..4usize.pow(period as u32) {
        let word: Vec<u8> = (0..period).map(|i| (c >> (2 * i) & 3) as u8).collect();
        let x = PeriodicPoint::new(word).unwrap();
        if code.apply(&x).unwrap() == zero {
            windows.insert(x.window(0, n));
        }
    }
    windows.len()
}

#[test]
fn criterion_02_product_projection_entropy() {
    let limit = Duration::from_secs(60);
    let start = Instant::now();
    let out = scratch("entropy-product.json");
    let run = relind(&["entropy"], Some(&configs().join("entropy-product.json")), &out);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let rows = results(&run)[0]["data"]["rows"].as_array().unwrap().clone();
    let mut ok = rows.len() == 4;
    let mut detail = Vec::new();
    for (row, n) in rows.iter().zip([2usize, 4, 6, 8]) {
        let count = row["count"].as_u64().unwrap() as usize;
        let oracle = distinct_windows_in_fiber(n, 8);
        // ln(count) / n = ln 2 exactly when count = 2^n.
        ok &= row["n"] == n && rational(&row["eps"]) == q(3, 5) && count == 1 << n && oracle == count && row["exact"] == true;
        detail.push(format!("n={n}: {count}"));
    }
    verdict(2, "product projection: #(fiber, 3/5, d_[0,n)) = 2^n", ok, start.elapsed(), limit, &detail.join(", "));
}

#[test]
fn criterion_03_identity_factor() {
    let limit = Duration::from_secs(10);
    let start = Instant::now();
    let out = scratch("entropy-identity.json");
    let run = relind(&["entropy"], Some(&configs().join("entropy-identity.json")), &out);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let blocks = results(&run);
    let rows = blocks[0]["data"]["rows"].as_array().unwrap();
    let zeros = rows.iter().all(|r| r["count"] == 1 && r["approx_value"].as_f64() == Some(0.0));
    let ratio = rational(&blocks[1]["data"]["ratio"]);
    // Direct check: the two-fixed-point system, V1 = [0], V2 = [1], H = [0, 8).
    let two = SymbolicSystem::new(Alphabet::new(2).unwrap(), vec![vec![0, 1], vec![1, 0]]).unwrap();
    assert_eq!(two.points_of_period(8).unwrap().len(), 2);
    let id = SlidingBlockCode::identity(two).unwrap();
    let direct = independence_density(&CylinderSet::at(0, &[0]), &CylinderSet::at(0, &[1]), &id, &FiniteSubset::interval(0, 8), 8)
        .unwrap()
        .ratio;
    let pass = zeros && rows.len() == 12 && ratio <= q(1, 8) && direct == ratio;
    verdict(
        3,
        "identity factor: zero entropy table, density <= 1/|H| on two fixed points",
        pass,
        start.elapsed(),
        limit,
        &format!("{} rows all count 1, density ratio {ratio}", rows.len()),
    );
}

#[test]
fn criterion_04_ind_extraction() {
    let limit = Duration::from_secs(300);
    let start = Instant::now();
    let cfg = IndExtractConfig::default();
    assert_eq!((cfg.d.clone(), cfg.tau.clone()), (q(1, 2), q(3, 5)));
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut valid, mut at_least_two) = (0, 0);
    for _ in 0..100 {
        let (family, subsets) = random_ind_instance(&mut rng);
        assert_eq!(family.domain().len(), 6);
        let cert = ind_extract(&family, &subsets, &cfg).unwrap();
        let oracle = ind_oracle(&family, &subsets).unwrap();
        if cert.validate(&family, &subsets).is_ok()
            && is_valid_extraction(&family, &subsets, &cert.i).unwrap()
            && cert.i.len() <= oracle.max_size
        {
            valid += 1;
        }
        at_least_two += (cert.i.len() >= 2) as usize;
    }
    verdict(
        4,
        "ind extraction re-validates and never beats the oracle",
        valid == 100 && at_least_two >= 1,
        start.elapsed(),
        limit,
        &format!("{valid}/100 valid, {at_least_two} with |I| >= 2"),
    );
}

/// Largest shattered subset by brute force over all `2^n` candidates.
fn brute_force_shatter(family: &PatternFamily, n: usize) -> usize {
    let mut best = 0;
    for mask in 0u64..1 << n {
        let k = mask.count_ones() as usize;
        if k > best {
            let traces: BTreeSet<u64> = family.patterns().iter().map(|p| p & mask).collect();
            if traces.len() == 1 << k {
                best = k;
            }
        }
    }
    best
}

fn binomial_prefix(n: u64, k: u64) -> u64 {
    let mut total = 0;
    let mut c = 1u64;
    for i in 0..=k.min(n) {
        total += c;
        c = c * (n - i) / (i + 1);
    }
    total
}

#[test]
fn criterion_05_shatter_oracle() {
    let limit = Duration::from_secs(300);
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut ok = 0;
    for _ in 0..50 {
        let family = random_family(&mut rng, 10, 200);
        let exact = shatter_extract(&family, ShatterMode::Exact).unwrap();
        let greedy = shatter_extract(&family, ShatterMode::Greedy).unwrap();
        exact.validate(&family).unwrap();
        greedy.validate(&family).unwrap();
        let k = exact.size();
        if greedy.size() <= k && k == brute_force_shatter(&family, 10) && family.len() as u64 <= binomial_prefix(10, k as u64) {
            ok += 1;
        }
    }
    verdict(5, "greedy <= exact shattering, Sauer-Shelah on |W| = 10", ok == 50, start.elapsed(), limit, &format!("{ok}/50 families"));
}

#[test]
fn criterion_06_claims_exactness() {
    let limit = Duration::from_secs(120);
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut ok = 0;
    let mut shapes = BTreeMap::new();
    for _ in 0..100 {
        let h = rng.gen_range(1..=2);
        let m = rng.gen_range(1..=2);
        *shapes.entry((h, m)).or_insert(0) += 1;
        let s = random_psi_structure(&mut rng, h, m);
        let t = random_product_point(&mut rng, 1 << h, m);
        let face = random_face(&mut rng, 1 << h);
        let i = rng.gen_range(0..m);
        let c1 = claim1_decompose(&s, &t, &face, i).unwrap();
        let c2 = claim2_bounds(&s, &t, &face, i).unwrap();
        // Claim 1 replayed atom by atom from Psi directly.
        let psi = build_psi(&s);
        let mu = psi.eval(&t).unwrap();
        let s_f = s.face_support(&face, i);
        let b1 = measure_of_cylinder(&mu, |x| s_f.contains(x));
        let identity = match (&c1.t_prime, &c1.t_double_prime) {
            (Some(t1), Some(t2)) => {
                let (m1, m2) = (psi.eval(t1).unwrap(), psi.eval(t2).unwrap());
                mu.atoms().iter().all(|(x, w)| *w == &b1 * m1.weight_of(x) + (Q::one() - &b1) * m2.weight_of(x))
                    && m1.support().chain(m2.support()).all(|x| mu.weight_of(x) > Q::zero())
            }
            _ => b1.is_zero() || b1.is_one(),
        };
        // Claim 2: delta b2 <= W_W(mu, nu) for sampled nu in Psi(F_i), and W_W(mu, mu') <= diam b2.
        let metric = SystemMetric::new(Alphabet::new(2).unwrap());
        let b2 = Q::one() - &b1;
        let lower = &s.delta * &b2;
        let upper = metric.diameter() * &b2;
        let mut sandwich = c2.lower == lower && c2.upper == upper;
        for e in (0..s.witnesses.len()).filter(|&e| face.support().contains(&s.pattern(e, i))).take(2) {
            let nu = EmpiricalMeasure::dirac(s.witnesses[e].clone());
            sandwich &= wasserstein_window(&metric, &s.window, &mu, &nu).unwrap() >= lower;
        }
        if let Some(t1) = &c1.t_prime {
            let d = wasserstein_window(&metric, &s.window, &mu, &psi.eval(t1).unwrap()).unwrap();
            sandwich &= lower <= d && d <= upper;
        }
        if c1.b1 == b1 && identity && sandwich {
            ok += 1;
        }
    }
    let shapes: Vec<String> = shapes.iter().map(|((h, m), c)| format!("H={h},m={m}:{c}")).collect();
    verdict(6, "claims 1-2 exact on 100 seeded embeddings", ok == 100, start.elapsed(), limit, &format!("{ok}/100 ({})", shapes.join(" ")));
}

/// `r^3 / (4^4 H^2) 2^H |G_n|`, evaluated independently of the library.
fn formula(r: &Q, h: u32, n: i64) -> Q {
    r * r * r / Q::from_integer((256 * h * h).into()) * Q::from_integer((1i64 << h).into()) * Q::from_integer(n.into())
}

#[test]
fn criterion_07_mdim_formula() {
    let limit = Duration::from_secs(300);
    let start = Instant::now();
    let out = scratch("mdim-sweep.json");
    let run = relind(&["mdim-lower"], Some(&configs().join("mdim-sweep.json")), &out);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let blocks = results(&run);
    let code = SlidingBlockCode::to_point(SymbolicSystem::full_shift(2).unwrap()).unwrap();
    let r = q(1, 1);
    let mut ok = true;
    let mut bounds = Vec::new();
    for (b, (h, n)) in blocks.iter().zip([(4u32, 256i64), (6, 256), (8, 512)]) {
        let d = &b["data"];
        let bound = rational(&d["bound"]);
        ok &= b["status"] == "ok" && bound == formula(&r, h, n);
        // Re-validate the embedded certificate from the report alone.
        let cert: MdimLowerCertificate = serde_json::from_value(d["certificate"].clone()).unwrap();
        ok &= cert.verify(&code).is_ok();
        ok &= Q::from_integer((2 * cert.m_n).into()) >= &r * Q::from_integer(cert.params.t_n.into());
        let flat: Vec<i64> = cert.blocks.iter().flatten().copied().collect();
        let disjoint = flat.iter().collect::<BTreeSet<_>>().len() == flat.len();
        ok &= disjoint && d["claim0_disjoint"] == true;
        ok &= cert.blocks.iter().flatten().all(|&x| (0..n).contains(&x));
        bounds.push(bound);
    }
    let first_is_one = bounds.first() == Some(&q(1, 1)) && q(1, 256 * 16) * q(16, 1) * q(256, 1) == q(1, 1);
    let increasing = bounds.windows(2).all(|w| w[0] < w[1]);
    ok &= first_is_one && increasing && blocks[3]["data"]["strictly_increasing"] == true;
    let shown: Vec<String> = bounds.iter().map(|b| b.to_string()).collect();
    verdict(
        7,
        "mdim bound 1 at H=4, |G_n|=256; H-sweep strictly increasing",
        ok,
        start.elapsed(),
        limit,
        &format!("bounds {} for (H, |G_n|) = (4, 256), (6, 256), (8, 512)", shown.join(" < ")),
    );
}

#[test]
fn criterion_08_lebesgue_oracle() {
    let limit = Duration::from_secs(300);
    let start = Instant::now();
    let r = lebesgue_ord_oracle(2, 1, 10, 1 << 20, SEED).unwrap();
    let ex = r.exhaustive.as_ref().expect("exhaustive search on q = 10");
    let states_both = r.relation.contains("nk = 2") && r.relation.contains("(n-1)k = 1");
    let pass = r.min_ord_found == Some(1)
        && ex.complete
        && !ex.found_ord_zero
        && !r.randomized.found_ord_zero
        && !r.budget_exhausted
        && states_both;
    verdict(
        8,
        "Lebesgue oracle (n,k)=(2,1), q=10: ord 1 found, ord 0 never",
        pass,
        start.elapsed(),
        limit,
        &format!("{} covers exhaustive; {}", ex.covers_checked, r.relation),
    );
}

#[test]
fn criterion_09_symbolic_invariants() {
    let limit = Duration::from_secs(30);
    let start = Instant::now();
    let config = scratch("symbolic.config.json");
    std::fs::write(&config, r#"{"schema": 1, "verify_lemmas": {"items": ["symbolic-invariants"]}}"#).unwrap();
    let out = scratch("symbolic.json");
    let run = relind(&["verify-lemmas", "--seed", "1"], Some(&config), &out);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let block = &results(&run)[0];
    let checks = block["data"]["checks"].as_array().unwrap();
    let names: Vec<&str> = checks.iter().map(|c| c["name"].as_str().unwrap()).collect();
    let pass = block["status"] == "ok"
        && block["data"]["max_period"] == 6
        && names == ["metric-axioms", "window-metric", "equivariance", "fiber-enumeration", "folner-defect"]
        && checks.iter().all(|c| c["holds"] == true && c["cases"].as_u64().unwrap() > 0);
    let counts: Vec<String> = checks.iter().map(|c| format!("{} {}", c["name"].as_str().unwrap(), c["cases"])).collect();
    verdict(9, "symbolic invariants, exhaustive", pass, start.elapsed(), limit, &counts.join(", "));
}

#[test]
fn criterion_10_determinism() {
    let limit = Duration::from_secs(300);
    let start = Instant::now();
    let small_sweep = scratch("small-sweep.config.json");
    std::fs::write(
        &small_sweep,
        r#"{"schema": 1, "system": {"preset": "full-shift-to-point"},
            "mdim_lower": {"v1": {"offset": 0, "words": ["0"]}, "v2": {"offset": 0, "words": ["1"]}, "r": "1",
                           "runs": [{"h": 1, "window": 48}, {"h": 2, "window": 80}]}}"#,
    )
    .unwrap();
    let cases: Vec<(&str, Vec<&str>, PathBuf)> = vec![
        ("entropy", vec!["entropy"], configs().join("entropy-product.json")),
        ("entropy-identity", vec!["entropy"], configs().join("entropy-identity.json")),
        ("mdim-lower", vec!["mdim-lower"], small_sweep),
        ("mdim-identity", vec!["mdim-lower"], configs().join("mdim-identity.json")),
        ("verify-lemmas", vec!["verify-lemmas", "--seed", "77"], configs().join("verify.json")),
        ("transport", vec!["transport"], configs().join("transport.json")),
    ];
    let mut identical = 0;
    for (name, args, config) in &cases {
        let runs: Vec<Run> = (0..2).map(|k| relind(args, Some(config), &scratch(&format!("det-{name}-{k}.json")))).collect();
        let same_json = runs[0].code == runs[1].code && reproducible_part(&runs[0].text) == reproducible_part(&runs[1].text);
        let mut csv_args = args.clone();
        csv_args.extend(["--format", "csv"]);
        let csvs: Vec<Run> = (0..2).map(|k| relind(&csv_args, Some(config), &scratch(&format!("det-{name}-{k}.csv")))).collect();
        let same_csv = !csvs[0].text.is_empty() && csvs[0].text == csvs[1].text;
        if same_json && same_csv {
            identical += 1;
        }
    }
    let side: Vec<String> = (0..2)
        .map(|k| std::fs::read_to_string(scratch(&format!("det-verify-lemmas-{k}.json")).with_extension("json.lebesgue.csv")).unwrap())
        .collect();
    let pass = identical == cases.len() && side[0] == side[1];
    verdict(
        10,
        "every command reproduces its result blocks byte for byte",
        pass,
        start.elapsed(),
        limit,
        &format!("{identical}/{} commands identical in JSON and CSV, lebesgue side-table identical", cases.len()),
    );
}
