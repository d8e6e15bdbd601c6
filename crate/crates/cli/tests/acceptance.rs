//! One line per acceptance criterion. Exits nonzero if any criterion fails.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use pkind::expectations::{characteristic_functional, kind_step, parse_expectation, Mode, Syntactic};
use pkind::lattice::{bmc, Limits, Verdict};
use pkind::pgcl::{parse_program, State};
use pkind::smt::{Encoding, EncodingOptions, FunId, Probe, Problem, SmtDomain};
use pkind::tsys::{classical_kinduction, kind_frame_oracle, kind_iterate_oracle, latticed_kinduction_ts, truncated_value_oracle, TransitionSystem};
use pkind::value::{int, parse_rational, rat, ExtValue, Rational};
use pkind_cli::{run, JobSpec, Manifest, Row, VerdictKind};

type Check = Result<String, String>;
type Criterion = (&'static str, Box<dyn Fn() -> Check>);

const CHAIN: &str = "nat count; nat f; while(count<5 & f=0){ {count:=count+1}[0.8]{f:=1} }";
const CHAIN_BOUND: &str = "[count=0 & f=0]*0.3 + [not (count=0 & f=0)]*inf";

fn bench_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../benchmarks")
}

fn manifest(name: &str) -> Manifest {
    Manifest::load(&bench_dir().join(name)).expect("shipped manifest loads")
}

fn all_rows() -> Vec<Row> {
    let mut rows = manifest("wp.toml").row;
    rows.extend(manifest("ert.toml").row);
    rows
}

fn find(name: &str) -> Row {
    all_rows().into_iter().find(|r| r.name == name).unwrap_or_else(|| panic!("no row {name}"))
}

fn mode_of(row: &Row) -> Mode {
    if row.mode == "ert" {
        Mode::Ert
    } else {
        Mode::Wp
    }
}

fn problem_of(row: &Row) -> Problem {
    let src = std::fs::read_to_string(bench_dir().join(&row.program)).unwrap();
    let p = parse_program(&src).unwrap();
    let post = parse_expectation(row.post.as_deref().unwrap_or("0"), Some(&p.vars)).unwrap();
    let pre = parse_expectation(&row.pre, Some(&p.vars)).unwrap();
    Problem::new(p, post, pre, mode_of(row))
}

fn text_problem(src: &str, post: &str, bound: &str, mode: Mode) -> Problem {
    let p = parse_program(src).unwrap();
    let post = parse_expectation(post, Some(&p.vars)).unwrap();
    let bound = parse_expectation(bound, Some(&p.vars)).unwrap();
    Problem::new(p, post, bound, mode)
}

/// Runs manifest rows through the full verifier and compares verdict and k.
fn rows(names: &[&str], budget: u64) -> Check {
    let mut seen = Vec::new();
    for name in names {
        let row = find(name);
        let mut job = JobSpec::new(bench_dir().join(&row.program), row.pre.clone());
        job.post = row.post.clone();
        job.mode = mode_of(&row);
        job.deadline = Duration::from_secs(budget);
        let r = run(&job);
        let got = format!("{name}: {} {}", r.verdict, r.k.map(|k| k.to_string()).unwrap_or_default());
        if r.verdict != row.expect || r.k != row.k {
            let want = format!("{} {}", row.expect, row.k.map(|k| k.to_string()).unwrap_or_default());
            return Err(format!("{got} (expected {want}; {:.1}s; {})", r.total_t, r.message.unwrap_or_default()));
        }
        seen.push(format!("{got} ({:.1}s)", r.total_t));
    }
    Ok(seen.join(", "))
}

fn ac6() -> Check {
    let p = text_problem(CHAIN, "[f=1]", CHAIN_BOUND, Mode::Wp);
    let mut d = SmtDomain::new(&p, &EncodingOptions::default(), None).map_err(|e| e.to_string())?;
    let o = bmc(&mut d, &Limits::default().with_max_n(10)).map_err(|e| e.to_string())?;
    let Verdict::Refuted { n, witness } = o.verdict else { return Err(format!("got {:?}", o.verdict)) };
    if n != 3 || witness != State::new() {
        return Err(format!("refuted at n={n} with witness {witness}"));
    }
    let expected = rat(4, 5) * rat(1, 5) + rat(1, 5);
    let oracle = truncated_value_oracle(&p.program, &p.post, n, &witness, Mode::Wp).map_err(|e| e.to_string())?;
    let mut e = Encoding::new(&p, &EncodingOptions { scoped: false, ..EncodingOptions::default() }, None).map_err(|e| e.to_string())?;
    let mut z = e.zero().map_err(|e| e.to_string())?;
    for _ in 0..n {
        z = e.phi(z).map_err(|e| e.to_string())?;
    }
    let probe = e.probe(z, &witness, &big(30), &big(20)).map_err(|e| e.to_string())?;
    if oracle != ExtValue::Finite(expected.clone()) || probe != Probe::Exactly(expected.clone()) {
        return Err(format!("oracle {oracle}, encoding {probe:?}"));
    }
    Ok(format!("refuted at unrolling 3, witness count=0 f=0, value {expected} exactly"))
}

fn ac7() -> Check {
    let mut rng = StdRng::seed_from_u64(5);
    let mut compared = 0;
    let mut holds = 0;
    for _ in 0..500 {
        let n = rng.gen_range(1..=6usize);
        let mut init: BTreeSet<usize> = (0..n).filter(|_| rng.gen_bool(0.3)).collect();
        if init.is_empty() {
            init.insert(rng.gen_range(0..n));
        }
        let edges: Vec<(usize, usize)> =
            (0..rng.gen_range(0..=2 * n)).map(|_| (rng.gen_range(0..n), rng.gen_range(0..n))).collect();
        let ts = TransitionSystem::totalized(n, init, &edges).map_err(|e| e.to_string())?;
        let p: BTreeSet<usize> = (0..n).filter(|_| rng.gen_bool(0.7)).collect();
        for k in 1..=5 {
            let classical = classical_kinduction(&ts, &p, k).map_err(|e| e.to_string())?;
            if classical != latticed_kinduction_ts(&ts, &p, k) {
                return Err(format!("discrepancy at k={k}: {ts:?} P={p:?}"));
            }
            compared += 1;
            holds += classical as usize;
        }
    }
    Ok(format!("500 systems, {compared} comparisons ({holds} inductive), zero discrepancies"))
}

fn big(exp: u32) -> Rational {
    parse_rational(&format!("1{}", "0".repeat(exp as usize))).expect("power of ten")
}

fn expected_probe(v: ExtValue) -> Probe {
    match v {
        ExtValue::Finite(r) => Probe::Exactly(r),
        ExtValue::Infinity => Probe::Above,
    }
}

fn ac8() -> Check {
    let mut rng = StdRng::seed_from_u64(8);
    let options = EncodingOptions { scoped: false, ..EncodingOptions::default() };
    let mut checked = 0;
    let mut benchmarks = 0;
    for row in all_rows() {
        let p = problem_of(&row);
        benchmarks += 1;
        let states: Vec<State> = (0..20)
            .map(|_| State::from_pairs(p.program.vars.iter().map(|v| (v.clone(), rng.gen_range(0..4u64)))))
            .collect();
        let mut e = Encoding::new(&p, &options, None).map_err(|e| e.to_string())?;
        let mut q: FunId = e.candidate().map_err(|e| e.to_string())?;
        let mut z: FunId = e.zero().map_err(|e| e.to_string())?;
        for k in 0..=4u64 {
            if k > 0 {
                q = e.phi(q).and_then(|x| e.meet(x)).map_err(|e| e.to_string())?;
                z = e.phi(z).map_err(|e| e.to_string())?;
            }
            for s in &states {
                let want_q = kind_iterate_oracle(&p.program, &p.post, &p.candidate, k, s, p.mode).map_err(|e| e.to_string())?;
                let want_z = truncated_value_oracle(&p.program, &p.post, k, s, p.mode).map_err(|e| e.to_string())?;
                let got_q = e.probe(q, s, &big(30), &big(20)).map_err(|e| e.to_string())?;
                let got_z = if k == 0 { Probe::Exactly(int(0)) } else { e.probe(z, s, &big(30), &big(20)).map_err(|e| e.to_string())? };
                if got_q != expected_probe(want_q.clone()) {
                    return Err(format!("{}: Q_{k} at {s} is {got_q:?}, oracle {want_q}", row.name));
                }
                if got_z != expected_probe(want_z.clone()) {
                    return Err(format!("{}: Phi^{k}(0) at {s} is {got_z:?}, oracle {want_z}", row.name));
                }
                checked += 2;
            }
        }
    }
    Ok(format!("{benchmarks} benchmark rows, k <= 4, 20 states each: {checked} values equal the oracle"))
}

/// Confirms a solver witness against the exhaustive oracle.
fn confirm(row: &str, what: &str, w: Option<State>, lhs: impl Fn(&State) -> ExtValue, rhs: impl Fn(&State) -> ExtValue) -> Result<bool, String> {
    match w {
        None => Ok(false),
        Some(s) if lhs(&s) > rhs(&s) => Ok(true),
        Some(s) => Err(format!("{row}: unconfirmed {what} witness {s}")),
    }
}

fn lemma_two(row: &Row, p: &Problem, k: u64) -> Result<(), String> {
    let err = |e: pkind::error::Error| format!("{}: {e}", row.name);
    let frame = |j: u64, s: &State| kind_frame_oracle(&p.program, &p.post, &p.candidate, j, s, p.mode).unwrap();
    let iterate = |j: u64, s: &State| kind_iterate_oracle(&p.program, &p.post, &p.candidate, j, s, p.mode).unwrap();
    let mut e = Encoding::new(p, &EncodingOptions::default(), None).map_err(err)?;
    let mut q = e.candidate().map_err(err)?;
    for j in 1..=k {
        let phi = e.phi(q).map_err(err)?;
        let against_f = e.exceeds(phi).map_err(err)?;
        let against_q = e.exceeds_fun(phi, q, &big(30)).map_err(err)?;
        let a = confirm(&row.name, "bound", against_f, |s| frame(j - 1, s), |s| p.candidate.evaluate(s))?;
        let b = confirm(&row.name, "iterate", against_q, |s| frame(j - 1, s), |s| iterate(j - 1, s))?;
        if a != b {
            return Err(format!("{}: at k={j} the two inductivity checks disagree", row.name));
        }
        if a == (j == k) {
            return Err(format!("{}: inductivity at k={j} contradicts the verdict", row.name));
        }
        q = e.meet(phi).map_err(err)?;
    }
    Ok(())
}

fn ac9() -> Check {
    let mut rng = StdRng::seed_from_u64(9);
    let mut lemma_runs = 0;
    let mut sampled = 0;
    for row in all_rows() {
        let Some(k) = row.k.filter(|&k| k <= 6) else { continue };
        let p = problem_of(&row);
        if row.expect == VerdictKind::Ind {
            lemma_two(&row, &p, k)?;
            lemma_runs += 1;
        }
        for _ in 0..20 {
            let s = State::from_pairs(p.program.vars.iter().map(|v| (v.clone(), rng.gen_range(0..5u64))));
            let chain: Vec<ExtValue> = (0..=6)
                .map(|j| kind_iterate_oracle(&p.program, &p.post, &p.candidate, j, &s, p.mode))
                .collect::<Result<_, _>>()
                .map_err(|e| e.to_string())?;
            for j in 1..chain.len() {
                if chain[..j].iter().any(|earlier| chain[j] > *earlier) {
                    return Err(format!("{}: iterate {j} rises at {s}", row.name));
                }
                let phi = kind_frame_oracle(&p.program, &p.post, &p.candidate, j as u64 - 1, &s, p.mode).map_err(|e| e.to_string())?;
                if chain[j] > phi {
                    return Err(format!("{}: iterate {j} exceeds Phi of its predecessor at {s}", row.name));
                }
            }
            sampled += 1;
        }
    }
    Ok(format!("both inductivity checks agreed on every frame of {lemma_runs} induction runs; descending chain held at {sampled} sampled states"))
}

fn closed_form(n: u32, x: u64, c: u64) -> Rational {
    let x = int(x as i64);
    if c != 1 {
        return x;
    }
    if x == int(0) {
        return int(1);
    }
    let half = rat(1, 2);
    let sum: Rational = (1..n).map(|i| half.pow(i as i32)).sum();
    (int(2) - sum) * x + int(1) + int(n as i64 - 1) * half.pow(n as i32 - 1)
}

fn ac10() -> Check {
    let p = parse_program("nat c; nat x; while(c=1){ {c := 0}[0.5]{x := x+1} }").unwrap();
    let post = parse_expectation("x", Some(&p.vars)).unwrap();
    let f = parse_expectation("2*x+1", Some(&p.vars)).unwrap();
    let phi = characteristic_functional(&p, &post, Mode::Wp);
    let mut iterate = f.clone();
    let states: Vec<(u64, u64)> = (0..10).flat_map(|x| (0..5).map(move |c| (x, c))).collect();
    for n in 1..=6u32 {
        iterate = kind_step(&f, &phi, &iterate, &mut Syntactic).map_err(|e| e.to_string())?;
        for &(x, c) in &states {
            let s = State::from_pairs([("x", x), ("c", c)]);
            if iterate.evaluate(&s) != ExtValue::Finite(closed_form(n, x, c)) {
                return Err(format!("n={n} x={x} c={c}: {} vs {}", iterate.evaluate(&s), closed_form(n, x, c)));
            }
        }
        let at = phi.apply(&iterate).evaluate(&State::from_pairs([("c", 1)]));
        let want = int(1) + int(n as i64) * rat(1, 2).pow(n as i32);
        if at != ExtValue::Finite(want.clone()) {
            return Err(format!("Phi(Psi^{n}) at x=0,c=1 is {at}, expected {want}"));
        }
    }
    Ok(format!("n = 1..6 at {} states; Phi(Psi^n)(x=0,c=1) = 1 + n/2^n", states.len()))
}

fn ac11() -> Check {
    let p = text_problem(CHAIN, "[f=1]", CHAIN_BOUND, Mode::Wp);
    let mut answers = Vec::new();
    for closure in [false, true] {
        let options = EncodingOptions { closure, ..EncodingOptions::default() };
        let mut e = Encoding::new(&p, &options, None).map_err(|e| e.to_string())?;
        let zero = e.zero().map_err(|e| e.to_string())?;
        e.candidate().map_err(|e| e.to_string())?;
        let first = e.phi(zero).map_err(|e| e.to_string())?;
        let second = e.phi(first).map_err(|e| e.to_string())?;
        answers.push(e.exceeds(second).map_err(|e| e.to_string())?.is_some());
    }
    match answers.as_slice() {
        [true, false] => Ok("closure off: sat (unsound), closure on: unsat".into()),
        other => Err(format!("sat answers without/with closure: {other:?}")),
    }
}

fn main() {
    let criteria: Vec<Criterion> = vec![
        ("AC1", Box::new(|| rows(&["geo v1", "geo v2", "geo v3"], 120))),
        ("AC2", Box::new(|| rows(&["brp v1", "brp v5"], 300))),
        ("AC3", Box::new(|| rows(&["rabin v1", "rabin v4"], 120))),
        ("AC4", Box::new(|| rows(&["unif_gen v1", "unif_gen v2"], 300))),
        (
            "AC5",
            Box::new(|| {
                rows(
                    &["ber", "condand", "fcall", "hyper", "linear01", "prdwalk", "prspeed", "race", "rdwalk", "sprdwalk", "C4B_t303"],
                    120,
                )
            }),
        ),
        ("AC6", Box::new(ac6)),
        ("AC7", Box::new(ac7)),
        ("AC8", Box::new(ac8)),
        ("AC9", Box::new(ac9)),
        ("AC10", Box::new(ac10)),
        ("AC11", Box::new(ac11)),
    ];
    let only: Vec<String> = std::env::args().skip(1).filter(|a| a.starts_with("AC")).collect();
    let mut failed = 0;
    for (name, check) in &criteria {
        if !only.is_empty() && !only.iter().any(|o| o == name) {
            continue;
        }
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("{name} PASS ({secs:.1}s) {detail}"),
            Err(detail) => {
                failed += 1;
                println!("{name} FAIL ({secs:.1}s) {detail}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}

