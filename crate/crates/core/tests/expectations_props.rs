mod common;

use num_traits::{One, Zero};
use proptest::prelude::*;

use pkind::expectations::{
    characteristic_functional, gnf, kind_step, min_expectation, parse_expectation, wp_loopfree, LinExp, Mode, Syntactic,
};
use pkind::pgcl::semantics::execute;
use pkind::pgcl::{parse_program, State};
use pkind::value::{int, rat, ExtValue, Rational};

use common::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn gnf_is_pointwise_equal(h in linexp(), states in states(50)) {
        let g = gnf(&h, &mut Syntactic).unwrap();
        for s in &states {
            prop_assert_eq!(g.evaluate(s), h.evaluate(s));
            prop_assert_eq!(g.cells.iter().filter(|(b, _)| b.eval(s)).count(), 1);
        }
        let back = g.to_linexp();
        for s in &states {
            prop_assert_eq!(back.evaluate(s), h.evaluate(s));
        }
    }

    #[test]
    fn substitution_lemma(h in linexp(), x in var(), e in nat_expr(), s in state()) {
        let v = e.eval(&s).to_integer().to_biguint().unwrap();
        prop_assert_eq!(h.substitute(&x, &e).evaluate(&s), h.evaluate(&s.with(&x, v)));
    }

    #[test]
    fn min_is_pointwise(a in linexp(), b in linexp(), states in states(20)) {
        let m = min_expectation(&a, &b, &mut Syntactic).unwrap();
        for s in &states {
            prop_assert_eq!(m.evaluate(s), a.evaluate(s).min(b.evaluate(s)));
        }
    }

    #[test]
    fn rescale_is_pointwise(h in linexp(), c in prop_oneof![Just(Rational::zero()), weight(), Just(int(3))], s in state()) {
        prop_assert_eq!(h.rescale(&c).evaluate(&s), h.evaluate(&s).scale(&c));
    }

    #[test]
    fn loop_free_wp_matches_execution(c in stmt(), h in linexp(), s in state(), ert in any::<bool>()) {
        let mode = if ert { Mode::Ert } else { Mode::Wp };
        let mut expected = ExtValue::zero();
        for b in execute(&c, &s) {
            let mut v = h.evaluate(&b.state);
            if ert {
                v = v + ExtValue::Finite(b.cost);
            }
            expected = expected + v.scale(&b.prob);
        }
        prop_assert_eq!(wp_loopfree(&c, &h, mode).evaluate(&s), expected);
    }
}

#[test]
fn rescale_examples() {
    assert_eq!(LinExp::infinity().rescale(&Rational::zero()).evaluate(&State::new()), ExtValue::zero());
    let h = parse_expectation("[x=1]*4 + 1/3*x + inf", None).unwrap();
    let scaled = h.rescale(&rat(1, 2));
    assert!(scaled.evaluate(&State::new()).is_infinite());
    let expected = parse_expectation("[x=1]*2 + 1/6*x + inf", None).unwrap();
    for x in 0..4 {
        let s = State::from_pairs([("x", x)]);
        assert_eq!(scaled.evaluate(&s), expected.evaluate(&s));
    }
}

/// `[c!=1]*x + [c=1]*[x=0] + [c=1]*[x>=1]*((2 - sum_{i<n} 2^-i)*x + 1 + (n-1)/2^(n-1))`
fn closed_form(n: u32, x: u64, c: u64) -> Rational {
    let x = int(x as i64);
    if c != 1 {
        return x;
    }
    if x.is_zero() {
        return Rational::one();
    }
    let half = rat(1, 2);
    let sum: Rational = (1..n).map(|i| half.pow(i as i32)).sum();
    (int(2) - sum) * x + int(1) + int(n as i64 - 1) * half.pow(n as i32 - 1)
}

#[test]
fn two_x_plus_one_follows_the_closed_form() {
    let p = parse_program("nat c; nat x; while(c=1){ {c := 0}[0.5]{x := x+1} }").unwrap();
    let post = parse_expectation("x", Some(&p.vars)).unwrap();
    let f = parse_expectation("2*x+1", Some(&p.vars)).unwrap();
    let phi = characteristic_functional(&p, &post, Mode::Wp);
    let mut iterate = f.clone();
    for n in 1..=6u32 {
        iterate = kind_step(&f, &phi, &iterate, &mut Syntactic).unwrap();
        for x in 0..10u64 {
            for c in 0..5u64 {
                let s = State::from_pairs([("x", x), ("c", c)]);
                assert_eq!(iterate.evaluate(&s), ExtValue::Finite(closed_form(n, x, c)), "n={n} x={x} c={c}");
            }
        }
        let at = phi.apply(&iterate).evaluate(&State::from_pairs([("c", 1)]));
        let expected = int(1) + int(n as i64) * rat(1, 2).pow(n as i32);
        assert_eq!(at, ExtValue::Finite(expected.clone()));
        assert!(expected > int(1));
    }
}
