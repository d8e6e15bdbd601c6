use std::path::PathBuf;
use std::process::{Command, Output};

use proptest::prelude::*;

use pkind::expectations::parse_expectation;
use pkind::pgcl::{parse_program, State};
use pkind_cli::{run, JobSpec, Report, VerdictKind};

fn bench_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../benchmarks")
}

fn geo() -> PathBuf {
    bench_dir().join("wp/geo.pgcl")
}

fn pkind(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pkind")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn verify_proves_geo() {
    let o = pkind(&["verify", geo().to_str().unwrap(), "--post", "c", "--pre", "c+1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let out = stdout(&o);
    assert!(out.contains("verdict: ind"), "{out}");
    assert!(out.contains("k: 2"), "{out}");
    assert!(out.contains("#formulae:"), "{out}");
}

#[test]
fn verify_refutes_geo_with_a_valid_witness() {
    let o = pkind(&["verify", geo().to_str().unwrap(), "--post", "c", "--pre", "c+0.99", "--json"]);
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
    let r = Report::from_json(stdout(&o).trim()).unwrap();
    assert_eq!(r.verdict, VerdictKind::Ref);
    assert_eq!(r.k, Some(11));
    let w = r.witness.expect("refutations carry a witness");
    let state = State::from_pairs(w.iter().map(|(v, n)| (v.as_str(), n.parse::<u64>().unwrap())));
    let p = parse_program(&std::fs::read_to_string(geo()).unwrap()).unwrap();
    let post = parse_expectation("c", Some(&p.vars)).unwrap();
    let bound = parse_expectation("c+0.99", Some(&p.vars)).unwrap();
    let value = pkind::tsys::truncated_value_oracle(&p, &post, 12, &state, pkind::expectations::Mode::Wp).unwrap();
    assert!(value > bound.evaluate(&state), "{value} at {state}");
}

#[test]
fn bounded_runs_exhaust() {
    let o = pkind(&["verify", geo().to_str().unwrap(), "--post", "c", "--pre", "2*c+1", "--max-k", "2", "--max-n", "2"]);
    assert_eq!(o.status.code(), Some(2), "{}", stdout(&o));
    assert!(stdout(&o).contains("verdict: exhausted"));
}

#[test]
fn usage_errors_exit_with_three() {
    let ert_with_post = pkind(&["verify", geo().to_str().unwrap(), "--ert", "--post", "c", "--pre", "c"]);
    assert_eq!(ert_with_post.status.code(), Some(3));
    let wp_without_post = pkind(&["verify", geo().to_str().unwrap(), "--pre", "c"]);
    assert_eq!(wp_without_post.status.code(), Some(3));
    let bad_bound = pkind(&["verify", geo().to_str().unwrap(), "--post", "c", "--pre", "c +* 1"]);
    assert_eq!(bad_bound.status.code(), Some(3));
    assert!(stdout(&bad_bound).contains("verdict: error"));
    let unknown_var = pkind(&["verify", geo().to_str().unwrap(), "--post", "c", "--pre", "q+1"]);
    assert_eq!(unknown_var.status.code(), Some(3));
}

#[test]
fn missing_solver_exits_with_three() {
    let o = pkind(&["verify", geo().to_str().unwrap(), "--post", "c", "--pre", "c+1", "--solver", "/nonexistent/z3"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).contains("cannot start solver"), "{}", stdout(&o));
}

#[test]
fn emitted_scripts_replay() {
    let dir = tempfile::tempdir().unwrap();
    let o = pkind(&[
        "verify",
        geo().to_str().unwrap(),
        "--post",
        "c",
        "--pre",
        "c+1",
        "--emit-smt2",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let script = dir.path().join("induction.smt2");
    let text = std::fs::read_to_string(&script).unwrap();
    assert!(text.contains("(check-sat)"));
    assert!(dir.path().join("bmc.smt2").exists());
    let z3 = std::env::var("PKIND_SOLVER").unwrap_or_else(|_| "z3".into());
    let replay = Command::new(z3).arg(&script).output().unwrap();
    let answers = String::from_utf8_lossy(&replay.stdout);
    assert!(!answers.contains("(error"), "{answers}");
    let checks: Vec<&str> = answers.lines().filter(|l| *l == "sat" || *l == "unsat").collect();
    assert_eq!(checks.last(), Some(&"unsat"));
}

#[test]
fn ert_mode_proves_linear_bounds() {
    let o = pkind(&["verify", bench_dir().join("ert/ber.pgcl").to_str().unwrap(), "--ert", "--pre", "2*(n-x)"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("k: 1"));
}

#[test]
fn bench_runs_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("suite.toml");
    let program = geo();
    std::fs::write(
        &manifest,
        format!(
            r#"
[[row]]
name = "geo v1"
program = "{p}"
post = "c"
pre = "c+1"
expect = "ind"
k = 2

[[row]]
name = "geo v2"
program = "{p}"
post = "c"
pre = "c+0.99"
expect = "ref"
k = 11

[[row]]
name = "never"
program = "{p}"
post = "c"
pre = "c"
expect = "timeout"
expected_timeout = true
"#,
            p = program.display()
        ),
    )
    .unwrap();
    let out = dir.path().join("results.json");
    let o = pkind(&["bench", manifest.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let table = stdout(&o);
    assert!(table.contains("geo v1") && table.contains("skipped"), "{table}");
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(json.as_array().unwrap().len(), 3);
}

#[test]
fn bench_rejects_malformed_manifests() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("bad.toml");
    std::fs::write(&manifest, "[[row]]\nname = 3\n").unwrap();
    let o = pkind(&["bench", manifest.to_str().unwrap(), "--out", dir.path().join("r.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn literal_unif_gen_bound_is_refuted_immediately() {
    let guard = "elow+1=ehigh & n=ehigh-elow+1 & v=1 & c=0 & elow<=i & i<=ehigh";
    let mut job = JobSpec::new(bench_dir().join("wp/unif_gen.pgcl"), format!("[{guard}]*1/2 + [not ({guard})]*1"));
    job.post = Some("[c=i]".into());
    job.deadline = std::time::Duration::from_secs(120);
    let r = run(&job);
    assert_eq!(r.verdict, VerdictKind::Ref, "{r}");
    assert_eq!(r.k, Some(0));
    let w = r.witness.unwrap();
    assert!(w.iter().any(|(v, n)| v == "running" && n != "0"), "{w:?}");
}

fn verdict_kind() -> impl Strategy<Value = VerdictKind> {
    prop_oneof![
        Just(VerdictKind::Ind),
        Just(VerdictKind::Ref),
        Just(VerdictKind::Exhausted),
        Just(VerdictKind::Timeout),
        Just(VerdictKind::Error)
    ]
}

proptest! {
    #[test]
    fn reports_round_trip_through_json(
        verdict in verdict_kind(),
        k in proptest::option::of(0u64..100),
        witness in proptest::option::of(prop::collection::vec(("[a-z]{1,5}", 0u64..1000), 0..4)),
        message in proptest::option::of("[ -~]{0,20}"),
        formulae in 0u64..100000,
        times in (0.0f64..1e4, 0.0f64..1e4, 0.0f64..1e4),
    ) {
        let r = Report {
            verdict,
            k,
            witness: witness.map(|w| w.into_iter().map(|(v, n)| (v, n.to_string())).collect()),
            message,
            formulae,
            formulae_t: times.0,
            sat_t: times.1,
            total_t: times.2,
        };
        prop_assert_eq!(Report::from_json(&r.to_json()).unwrap(), r);
    }
}
