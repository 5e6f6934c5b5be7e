//! Acceptance suite: criteria 1–9, one line per criterion.
//!
//! Runs without the libtest harness so the summary lines are always shown.
//! A criterion is `PASS`, `FAIL (known)` when it fails in exactly the
//! documented way (the witness is asserted), or `FAIL`. The process exits
//! non-zero iff some criterion is an unexpected `FAIL`.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use rayon::prelude::*;
use serde_json::{json, Value};

use dlstrata::charts::{self, DEFAULT_CHART_BUDGET};
use dlstrata::latcalc::{self, InclusionConfig, RandomInstanceConfig, DEFAULT_HALF_WINDOW};
use dlstrata::report::{Check, Report, Status};
use dlstrata::strata::{self, Kind, Sign, StrataConfig, StrataCtx, StrataError, StratumLabel};
use dlstrata::weyl;

/// Enumeration budget for the decomposition criteria.
const BUDGET: u64 = 1_000_000_000;

enum Verdict {
    Pass(String),
    KnownFail(String),
    Fail(String),
}

/// Every report produced along the way, kept for the determinism criterion.
#[derive(Default)]
struct Ledger {
    stable: Vec<(String, String)>,
}

impl Ledger {
    fn keep(&mut self, key: impl Into<String>, r: &Report) {
        self.stable.push((key.into(), r.stable_json()));
    }
}

fn check<'a>(r: &'a Report, name: &str) -> Option<&'a Check> {
    r.stable.checks.iter().find(|c| c.name == name)
}

fn labels(r: &Report) -> BTreeSet<StratumLabel> {
    r.stable.counts.iter().map(|c| c.label.parse().expect("count rows are labels")).collect()
}

/// Outcome of one strata configuration.
enum StrataRun {
    Done(Report),
    OverBudget(u128),
}

fn run_strata(cfg: StrataConfig) -> StrataRun {
    let ctx = StrataCtx::new(cfg).expect("acceptance configurations are valid");
    match ctx.verify_decomposition(BUDGET) {
        Ok(r) => StrataRun::Done(r),
        Err(StrataError::Budget { needed, .. }) => StrataRun::OverBudget(needed),
        Err(e) => panic!("{cfg}: {e}"),
    }
}

/// Runs configurations, checks that `required` checks (those present) pass,
/// and returns the reports together with a failure list.
fn strata_sweep(
    ledger: &mut Ledger,
    cfgs: &[StrataConfig],
    required: &[&str],
) -> (Vec<(StrataConfig, Report)>, Vec<Value>, Vec<String>) {
    let runs: Vec<(StrataConfig, StrataRun)> = cfgs.par_iter().map(|&c| (c, run_strata(c))).collect();
    let mut done = Vec::new();
    let mut failures = Vec::new();
    let mut skipped = Vec::new();
    for (cfg, run) in runs {
        match run {
            StrataRun::OverBudget(needed) => skipped.push(format!("{cfg} (needs ~{needed:.1e})", needed = needed as f64)),
            StrataRun::Done(r) => {
                for name in required {
                    if let Some(c) = check(&r, name) {
                        if c.status != Status::Pass {
                            failures.push(json!({"config": cfg.to_string(), "check": name, "witness": c.witness}));
                        }
                    }
                }
                ledger.keep(format!("strata {cfg}"), &r);
                done.push((cfg, r));
            }
        }
    }
    (done, failures, skipped)
}

fn informational(done: &[(StrataConfig, Report)], name: &str) -> BTreeMap<&'static str, usize> {
    let mut m = BTreeMap::new();
    for (_, r) in done {
        if let Some(c) = check(r, name) {
            *m.entry(c.status.as_str()).or_insert(0) += 1;
        }
    }
    m
}

// ---------------------------------------------------------------------------
// Criteria
// ---------------------------------------------------------------------------

fn criterion_1(ledger: &mut Ledger) -> Verdict {
    let mut cfgs = Vec::new();
    for q in [3, 5] {
        for t in (2..=6).step_by(2) {
            for h in (0..t).step_by(2) {
                for k in [1, 2] {
                    cfgs.push(StrataConfig::z(t, h, q, k));
                }
            }
        }
    }
    let (done, failures, skipped) =
        strata_sweep(ledger, &cfgs, &["partition", "index-set", "top-closure", "kr-refinement"]);
    let info = informational(&done, "dimension-monotonicity");
    let detail = format!("{} configs verified, skipped over budget: {skipped:?}; dimension-monotonicity {info:?}", done.len());
    if failures.is_empty() && !done.is_empty() {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(format!("{detail}; failures: {}", json!(failures)))
    }
}

fn criterion_2(ledger: &mut Ledger) -> Verdict {
    let mut cfgs = Vec::new();
    for n in 1..=8usize {
        for h in (0..=n).step_by(2) {
            for t in (0..=h).step_by(2).filter(|&t| t < n) {
                // With h = n the relation M ⊂¹ M + τM is strict, which only
                // the non-split residue form realizes (see the probe below).
                let splits: &[bool] = if n % 2 == 1 || h == n { &[false] } else { &[true, false] };
                for &split in splits {
                    for k in [1, 2] {
                        cfgs.push(StrataConfig::y(n, h, t, split, 3, k));
                    }
                }
            }
        }
    }
    let required = ["partition", "index-set", "top-closure", "kr-refinement", "sign-classes"];
    let (done, mut failures, skipped) = strata_sweep(ledger, &cfgs, &required);

    // h = n: two sign classes, no id / w' labels.
    let mut signs_h_n: BTreeMap<(usize, usize), BTreeSet<Sign>> = BTreeMap::new();
    // h = n − 2 (split): signed w' strata present.
    let mut wprime_signed: BTreeMap<(usize, usize), bool> = BTreeMap::new();
    for (cfg, r) in &done {
        let strata::Case::Y { n, h, t, split } = cfg.case else { unreachable!() };
        let ls = labels(r);
        if n % 2 == 0 && h == n {
            if ls.iter().any(|l| l.kind != Kind::W) {
                failures.push(json!({"config": cfg.to_string(), "check": "h=n labels are w only", "labels": r.stable.counts}));
            }
            signs_h_n.entry((n, t)).or_default().extend(ls.iter().map(|l| l.sign));
        }
        if n % 2 == 0 && n >= 2 && h == n - 2 && split && t < h {
            *wprime_signed.entry((n, t)).or_default() |= ls.iter().any(|l| l.kind == Kind::Wprime && l.sign != Sign::Na);
        }
    }
    for ((n, t), signs) in &signs_h_n {
        if signs != &[Sign::Plus, Sign::Minus].into_iter().collect() {
            failures.push(json!({"n": n, "t": t, "check": "h=n has exactly two sign classes", "signs": format!("{signs:?}")}));
        }
    }
    for ((n, t), present) in &wprime_signed {
        if !present {
            failures.push(json!({"n": n, "t": t, "check": "h=n-2 signed wprime strata present"}));
        }
    }

    // Probe: split residue form with h = n realizes exactly the rational
    // Lagrangians id(0,0) beyond the index set, which the strict relation
    // excludes.
    let mut probe_ok = true;
    for n in [2usize, 4] {
        let r = match run_strata(StrataConfig::y(n, n, 0, true, 3, 1)) {
            StrataRun::Done(r) => r,
            StrataRun::OverBudget(_) => unreachable!("small probe"),
        };
        let extra = check(&r, "index-set").and_then(|c| c.witness.as_ref()).map(|w| w["extra"].clone());
        probe_ok &= extra == Some(json!(["id(0,0)"]));
    }
    if !probe_ok {
        failures.push(json!({"check": "split h=n probe realizes exactly id(0,0) extra"}));
    }

    let info = informational(&done, "dimension-monotonicity");
    let detail = format!(
        "{} configs verified; h=n sign classes on {} (n,t); signed w' present on {} (n,t); skipped over budget: {skipped:?}; dimension-monotonicity {info:?}",
        done.len(),
        signs_h_n.len(),
        wprime_signed.len()
    );
    if failures.is_empty() && !done.is_empty() {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(format!("{detail}; failures: {}", json!(failures)))
    }
}

fn criterion_3(ledger: &mut Ledger) -> Verdict {
    let mut cfgs = Vec::new();
    for q in [3, 5] {
        for t1 in (2..=8).step_by(2) {
            for t2 in (0..t1).step_by(2) {
                for h in (t2..=t1).step_by(2) {
                    for k in [1, 2] {
                        cfgs.push(StrataConfig::zy(t1, h, t2, q, k));
                    }
                }
            }
        }
    }
    let (done, mut failures, skipped) = strata_sweep(ledger, &cfgs, &["partition", "index-set"]);
    for (cfg, r) in &done {
        if labels(r).iter().any(|l| l.kind != Kind::W) {
            failures.push(json!({"config": cfg.to_string(), "check": "all labels kind w", "labels": r.stable.counts}));
        }
    }
    let info = informational(&done, "dimension-monotonicity");
    let detail = format!("{} configs verified, skipped over budget: {skipped:?}; dimension-monotonicity {info:?}", done.len());
    if failures.is_empty() && !done.is_empty() {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(format!("{detail}; failures: {}", json!(failures)))
    }
}

fn criterion_4(ledger: &mut Ledger) -> Verdict {
    let rows = weyl::audit_rows(6).expect("audit runs");
    let checks = weyl::audit_checks(&rows);
    let audit = Report::new("weyl audit", json!({"max_d": 6}), Vec::new(), checks.clone());
    ledger.keep("weyl audit", &audit);
    let type_c: Vec<&Check> = checks.iter().filter(|c| c.name.starts_with("C: ")).collect();
    let bad: Vec<&str> = type_c.iter().filter(|c| c.status != Status::Pass).map(|c| c.name.as_str()).collect();
    let other: Vec<String> =
        checks.iter().filter(|c| c.status != Status::Pass).map(|c| c.name.clone()).collect();

    let growth = strata::wprime_dimension_check(3, 6, (2, 3), BUDGET).expect("growth check runs");
    ledger.keep("wprime growth", &Report::new("wprime growth", json!({}), Vec::new(), vec![growth.clone()]));
    let compared = growth.data["compared"].as_u64().unwrap_or(0);
    let detail = format!(
        "{} type-C checks over {} rows; w' dimension realized {} ({} labels compared by growth, {} undetermined); orthogonal findings: {other:?}",
        type_c.len(),
        rows.len(),
        growth.data["realized"],
        compared,
        growth.data["undetermined"].as_array().map_or(0, |a| a.len()),
    );
    if bad.is_empty() && type_c.len() == 7 && growth.status == Status::Pass && compared > 0 {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(format!("{detail}; failing: {bad:?}; growth: {}", json!(growth)))
    }
}

fn criterion_5(ledger: &mut Ledger) -> Verdict {
    let r = charts::sweep_report(10, 12, &[3, 5], DEFAULT_CHART_BUDGET).expect("sweep within budget");
    ledger.keep("charts reconcile", &r);
    let must_pass = ["closed-form", "growth-dimension", "smooth-implies-affine-count", "gorenstein"];
    let bad: Vec<&str> = must_pass
        .iter()
        .copied()
        .filter(|n| check(&r, n).map(|c| c.status) != Some(Status::Pass))
        .collect();
    let converse = check(&r, "affine-count-implies-smooth").expect("check present");
    // Known: affine point count without smoothness on the symplectic
    // charts with h = 0 and t₁ ∈ {4, 6} (rank ≤ 1 symmetric matrices).
    let failing: BTreeSet<(String, usize, usize)> = converse
        .witness
        .as_ref()
        .and_then(Value::as_array)
        .map(|ws| {
            ws.iter()
                .map(|w| {
                    let c = &w["chart"];
                    (
                        c["family"].as_str().unwrap_or("?").to_string(),
                        c["h"].as_u64().unwrap_or(99) as usize,
                        c["t1"].as_u64().unwrap_or(99) as usize,
                    )
                })
                .collect()
        })
        .unwrap_or_default();
    let known: BTreeSet<(String, usize, usize)> = [("z".to_string(), 0, 4), ("z".to_string(), 0, 6)].into();
    let charts_n = r.stable.counts[0].count;
    let detail = format!("{charts_n} chart runs (q = 3, 5); affine-count-implies-smooth fails on {failing:?}");
    if !bad.is_empty() {
        Verdict::Fail(format!("{detail}; failing checks: {bad:?}"))
    } else if converse.status == Status::Fail && failing == known {
        Verdict::KnownFail(detail)
    } else if converse.status == Status::Pass {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn criterion_6(ledger: &mut Ledger) -> Verdict {
    let r = charts::rz_reconcile(12).expect("valid range");
    ledger.keep("charts rzdim", &r);
    let detail = format!("{} checks", r.stable.checks.len());
    if r.status() == Status::Pass {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(format!("{detail}: {}", r.stable_json()))
    }
}

fn count(r: &Report, label: &str) -> u64 {
    r.stable.counts.iter().find(|c| c.label == label).map_or(0, |c| c.count)
}

fn criterion_7(ledger: &mut Ledger) -> Verdict {
    let ex = latcalc::exhaustive_rank2(&latcalc::EXHAUSTIVE_FIELDS, DEFAULT_HALF_WINDOW).expect("exhaustive run");
    let cfg = RandomInstanceConfig::default();
    let rnd = latcalc::dichotomy_suite(1000, 0, &cfg, 20_000);
    ledger.keep("latcalc exhaustive", &ex);
    ledger.keep("latcalc dichotomy", &rnd);
    let mut ok = ex.status() == Status::Pass && rnd.status() == Status::Pass;
    let mut parts = Vec::new();
    for (name, r) in [("exhaustive", &ex), ("random", &rnd)] {
        let (v, i, c) = (count(r, "verified"), count(r, "inconclusive"), count(r, "counterexamples"));
        ok &= c == 0 && v > 0 && (i as f64) < 0.05 * (v + i) as f64;
        parts.push(format!("{name}: {v} verified, {i} inconclusive, {c} counterexamples"));
    }
    ok &= count(&rnd, "verified") >= 1000;
    let detail = parts.join("; ");
    if ok {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(format!("{detail}; {}", rnd.stable_json()))
    }
}

fn criterion_8(ledger: &mut Ledger) -> Verdict {
    let corrected = ["z-inclusion", "y-inclusion", "zy-nonempty", "z-in-y", "y-in-z", "worst-point-singleton"];
    let mut bad = Vec::new();
    let mut literal_witnesses = Vec::new();
    let mut literal_ok = true;
    for n in 1..=4 {
        let r = latcalc::inclusion_suite(&InclusionConfig::standard(n, 3, 1)).expect("inclusion suite");
        ledger.keep(format!("latcalc inclusions n={n}"), &r);
        for c in &r.stable.checks {
            let required = corrected.contains(&c.name.as_str()) || c.name.contains("-count ");
            if required && c.status != Status::Pass {
                bad.push(format!("n={n}: {}", c.name));
            }
        }
        for name in ["z-in-y-reversed", "y-in-z-reversed"] {
            let c = check(&r, name).expect("literal variant present");
            if c.data["holds"] == json!(false) {
                literal_ok = false;
                literal_witnesses.extend(c.data["witnesses"].as_array().cloned().unwrap_or_default());
            }
        }
    }
    // The reversed containments fail on Λ₁ of type h strictly inside Λ₂:
    // 𝒵(Λ₁) = {Λ₁} ⊆ 𝒴(Λ₂♯) although Λ₁ ⊉ Λ₂.
    let witness_shape = literal_witnesses.iter().any(|w| {
        let h = w["h"].as_u64();
        h == w["lambda1"]["type"].as_u64() && w["lambda2"]["type"].as_u64() < h
    });
    let detail = format!(
        "corrected inclusions and worst points hold for n ≤ 4; reversed inclusions hold: {literal_ok} ({} witnesses, e.g. {})",
        literal_witnesses.len(),
        literal_witnesses.first().cloned().unwrap_or(Value::Null)
    );
    if !bad.is_empty() {
        Verdict::Fail(format!("{detail}; failing: {bad:?}"))
    } else if literal_ok {
        Verdict::Pass(detail)
    } else if witness_shape {
        Verdict::KnownFail(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn criterion_9(first: &Ledger) -> Verdict {
    let mut second = Ledger::default();
    // Re-run every suite with the same seeds; verdicts are discarded.
    let _ = criterion_1(&mut second);
    let _ = criterion_2(&mut second);
    let _ = criterion_3(&mut second);
    let _ = criterion_4(&mut second);
    let _ = criterion_5(&mut second);
    let _ = criterion_6(&mut second);
    let _ = criterion_7(&mut second);
    let _ = criterion_8(&mut second);
    let a: BTreeMap<_, _> = first.stable.iter().cloned().collect();
    let b: BTreeMap<_, _> = second.stable.iter().cloned().collect();
    let differing: Vec<&String> = a.iter().filter(|(k, v)| b.get(*k) != Some(v)).map(|(k, _)| k).collect();
    let detail = format!("{} stable sections compared", a.len());
    if differing.is_empty() && a.len() == b.len() && a.len() == first.stable.len() {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(format!("{detail}; differing: {differing:?}"))
    }
}

fn main() {
    let mut ledger = Ledger::default();
    type Criterion = fn(&mut Ledger) -> Verdict;
    let criteria: [(&str, Criterion); 8] = [
        ("symplectic decomposition", criterion_1),
        ("orthogonal decomposition", criterion_2),
        ("linear decomposition", criterion_3),
        ("Weyl audit", criterion_4),
        ("charts", criterion_5),
        ("rz_dim", criterion_6),
        ("lattice dichotomy", criterion_7),
        ("lattice inclusions", criterion_8),
    ];
    let mut results = Vec::new();
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = f(&mut ledger);
        results.push((i + 1, *name, v, start.elapsed()));
    }
    let start = Instant::now();
    let v = criterion_9(&ledger);
    results.push((9, "determinism", v, start.elapsed()));

    let mut unexpected = 0;
    for (i, name, v, dt) in &results {
        let (tag, detail) = match v {
            Verdict::Pass(d) => ("PASS", d),
            Verdict::KnownFail(d) => ("FAIL (known)", d),
            Verdict::Fail(d) => {
                unexpected += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {i} ({name}): {tag} [{:.1}s] {detail}", dt.as_secs_f64());
    }
    if unexpected > 0 {
        eprintln!("{unexpected} criteria failed unexpectedly");
        std::process::exit(1);
    }
}
