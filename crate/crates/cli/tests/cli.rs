use std::path::PathBuf;
use std::process::{Command, Output};

use dlstrata::report::{Report, Status};
use dlstrata::space::SubspaceFile;
use dlstrata::strata::{StrataConfig, StrataCtx, DEFAULT_BUDGET};

fn dlstrata(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dlstrata"))
        .args(args)
        .env_remove("DLSTRATA_BUDGET")
        .output()
        .expect("binary runs")
}

fn report(out: &Output) -> Report {
    serde_json::from_slice(&out.stdout).expect("stdout is a JSON report")
}

fn check_names(r: &Report) -> Vec<&str> {
    r.stable.checks.iter().map(|c| c.name.as_str()).collect()
}

fn temp_file(name: &str, contents: &str) -> PathBuf {
    let path = std::env::temp_dir().join(format!("dlstrata-cli-{}-{name}", std::process::id()));
    std::fs::write(&path, contents).expect("temp file writable");
    path
}

#[test]
fn verify_symplectic_level_two_passes() {
    let out = dlstrata(&["strata", "verify", "--case", "z", "--q", "3", "--k", "2", "--t", "4", "--h", "0"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r.status(), Status::Pass);
    for name in ["partition", "index-set", "kr-refinement"] {
        assert!(check_names(&r).contains(&name), "missing check {name}");
    }
}

#[test]
fn odd_type_is_a_usage_error() {
    let out = dlstrata(&["strata", "verify", "--case", "z", "--q", "3", "--t", "3", "--h", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("even"), "message should name the parity condition: {err}");
}

#[test]
fn missing_parameter_is_a_usage_error() {
    let out = dlstrata(&["strata", "count", "--case", "y", "--n", "4", "--h", "2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--t"));
}

#[test]
fn unknown_command_is_a_usage_error() {
    assert_eq!(dlstrata(&["strata", "frobnicate"]).status.code(), Some(2));
    assert_eq!(dlstrata(&["charts", "rzdim", "--n", "5", "--format", "xml"]).status.code(), Some(2));
}

#[test]
fn rzdim_single_value() {
    let out = dlstrata(&["charts", "rzdim", "--n", "5", "--h", "0"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r.stable.counts.len(), 1);
    assert_eq!(r.stable.counts[0].label, "rz_dim");
    assert_eq!(r.stable.counts[0].count, 2);
}

#[test]
fn rzdim_accepts_negative_sign() {
    let out = dlstrata(&["charts", "rzdim", "--n", "4", "--h", "2", "--eps", "-1"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn tiny_budget_is_inconclusive() {
    let out = Command::new(env!("CARGO_BIN_EXE_dlstrata"))
        .args(["strata", "verify", "--case", "z", "--q", "3", "--k", "2", "--t", "4", "--h", "0"])
        .env("DLSTRATA_BUDGET", "10")
        .output()
        .expect("binary runs");
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(report(&out).status(), Status::Inconclusive);

    let flag = dlstrata(&["--budget", "10", "strata", "count", "--case", "z", "--t", "4", "--h", "0", "--k", "2"]);
    assert_eq!(flag.status.code(), Some(3));
}

#[test]
fn json_round_trips() {
    let out = dlstrata(&["latcalc", "inclusions", "--n", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert!(r.wall_time_ms.is_some());
    let again: Report = serde_json::from_str(&r.to_json()).expect("re-parses");
    assert_eq!(again, r);
}

#[test]
fn stable_section_is_deterministic() {
    let args = ["latcalc", "dichotomy", "--trials", "60", "--random-only", "--seed", "7"];
    let a = report(&dlstrata(&args));
    let b = report(&dlstrata(&args));
    assert_eq!(a.stable_json(), b.stable_json());

    let args = ["strata", "count", "--case", "y", "--n", "4", "--h", "2", "--t", "0", "--k", "2"];
    let a = dlstrata(&args);
    let b = dlstrata(&args);
    assert_eq!(report(&a).stable_json(), report(&b).stable_json());
}

#[test]
fn seeds_change_random_suites() {
    let a = report(&dlstrata(&["latcalc", "dichotomy", "--trials", "60", "--random-only", "--seed", "1"]));
    let b = report(&dlstrata(&["latcalc", "dichotomy", "--trials", "60", "--random-only", "--seed", "2"]));
    assert_ne!(a.stable.counts, b.stable.counts);
}

#[test]
fn csv_has_one_row_per_label() {
    let json = report(&dlstrata(&["strata", "count", "--case", "z", "--t", "4", "--h", "2", "--k", "2"]));
    let out = dlstrata(&["strata", "count", "--case", "z", "--t", "4", "--h", "2", "--k", "2", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).expect("utf-8");
    let count_rows = text.lines().filter(|l| l.starts_with("count,")).count();
    assert_eq!(count_rows, json.stable.counts.len());
    assert!(count_rows > 1);
}

#[test]
fn markdown_lists_every_check() {
    let out = dlstrata(&["charts", "rzdim", "--n-max", "6", "--format", "md"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).expect("utf-8");
    assert!(text.starts_with("# charts rzdim"));
    assert!(text.contains("| check | status |"));
}

#[test]
fn classify_member_and_non_member() {
    let cfg = StrataConfig::z(4, 0, 3, 2);
    let ctx = StrataCtx::new(cfg).expect("valid config");
    let members = ctx.members(DEFAULT_BUDGET).expect("within budget");
    let member = members.iter().find(|u| *u != &u.apply_phi()).expect("a non-rational member");
    let expected = ctx.classify(member).expect("classifies").label.to_string();

    let path = temp_file("member.json", &serde_json::to_string(&member.to_file()).expect("serializes"));
    let p = path.to_str().expect("utf-8 path");
    let out = dlstrata(&["strata", "classify", "--case", "z", "--t", "4", "--h", "0", "--k", "2", "--input", p]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r.stable.checks[0].data["label"], expected.as_str());

    // Same space, but a non-isotropic pair of coordinate vectors.
    let mut file: SubspaceFile = member.to_file();
    let space = ctx.space();
    let (dim, degree) = (file.space.dim, file.rows[0][0].len());
    let unit = |i: usize| -> Vec<Vec<u32>> {
        (0..dim)
            .map(|j| {
                let mut c = vec![0; degree];
                c[0] = u32::from(i == j);
                c
            })
            .collect()
    };
    let pair = (0..dim)
        .flat_map(|i| (i + 1..dim).map(move |j| (i, j)))
        .find(|&(i, j)| {
            let mut f = file.clone();
            f.rows = vec![unit(i), unit(j)];
            let u = f.load_into(space).expect("loads");
            !ctx.member(&u).expect("membership decidable")
        })
        .expect("some coordinate plane is not a member");
    file.rows = vec![unit(pair.0), unit(pair.1)];
    let path = temp_file("non-member.json", &serde_json::to_string(&file).expect("serializes"));
    let out = dlstrata(&["strata", "classify", "--case", "z", "--t", "4", "--h", "0", "--k", "2", "--input", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(report(&out).stable.checks[0].witness.is_some());

    // A file for a different space is rejected as a usage error.
    let out = dlstrata(&["strata", "classify", "--case", "z", "--t", "6", "--h", "0", "--k", "2", "--input", p]);
    assert_eq!(out.status.code(), Some(2));
    let out = dlstrata(&["strata", "classify", "--case", "z", "--t", "4", "--h", "0", "--k", "2", "--input", "/nonexistent/file.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn single_chart_reconcile() {
    let out = dlstrata(&["charts", "reconcile", "--family", "zy", "--n", "4", "--h", "2", "--t1", "4", "--t2", "0"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let out = dlstrata(&["charts", "reconcile", "--family", "z", "--h", "0", "--t1", "2"]);
    assert_eq!(out.status.code(), Some(2));
}
