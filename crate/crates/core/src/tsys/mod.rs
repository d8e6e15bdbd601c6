//! Finite transition systems and exhaustive oracles for probabilistic loops.
//! Both exist to cross-check the symbolic machinery on small instances.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::expectations::{LinExp, Mode};
use crate::lattice::{k_induction, ExplicitDomain, Limits, Verdict};
use crate::pgcl::ast::Program;
use crate::pgcl::semantics::execute;
use crate::pgcl::state::State;
use crate::value::ExtValue;

pub type StateSet = BTreeSet<usize>;

/// States are `0..size`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransitionSystem {
    size: usize,
    initial: StateSet,
    succ: Vec<StateSet>,
}

impl TransitionSystem {
    /// Rejects empty initial sets, out-of-range states and sinks.
    pub fn new(size: usize, initial: impl IntoIterator<Item = usize>, transitions: &[(usize, usize)]) -> Result<Self> {
        let initial: StateSet = initial.into_iter().collect();
        if initial.is_empty() {
            return Err(Error::Invalid("the initial set is empty".into()));
        }
        if let Some(s) = initial.iter().find(|&&s| s >= size) {
            return Err(Error::Invalid(format!("initial state {s} out of range")));
        }
        let mut succ = vec![StateSet::new(); size];
        for &(a, b) in transitions {
            if a >= size || b >= size {
                return Err(Error::Invalid(format!("transition {a}->{b} out of range")));
            }
            succ[a].insert(b);
        }
        if let Some(s) = succ.iter().position(BTreeSet::is_empty) {
            return Err(Error::Invalid(format!("transition relation is not total: state {s} has no successor")));
        }
        Ok(TransitionSystem { size, initial, succ })
    }

    /// Like [`TransitionSystem::new`], but gives every sink a self-loop.
    pub fn totalized(size: usize, initial: impl IntoIterator<Item = usize>, transitions: &[(usize, usize)]) -> Result<Self> {
        let mut all = transitions.to_vec();
        for s in 0..size {
            if !transitions.iter().any(|&(a, _)| a == s) {
                all.push((s, s));
            }
        }
        TransitionSystem::new(size, initial, &all)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn initial(&self) -> &StateSet {
        &self.initial
    }

    pub fn successors(&self, s: usize) -> &StateSet {
        &self.succ[s]
    }

    /// `I ∪ Succs(F)`.
    pub fn phi(&self, f: &StateSet) -> StateSet {
        let mut out = self.initial.clone();
        for &s in f {
            out.extend(self.succ[s].iter().copied());
        }
        out
    }

    fn paths(&self, from: &mut Vec<usize>, len: usize, visit: &mut dyn FnMut(&[usize]) -> bool) -> bool {
        if from.len() == len {
            return visit(from);
        }
        let last = *from.last().expect("paths start nonempty");
        for &t in &self.succ[last] {
            from.push(t);
            let ok = self.paths(from, len, visit);
            from.pop();
            if !ok {
                return false;
            }
        }
        true
    }
}

/// Base case: every path of `k` states from an initial state stays in `p`.
/// Step case: `k` consecutive states in `p` are always followed by a state in `p`.
pub fn classical_kinduction(ts: &TransitionSystem, p: &StateSet, k: usize) -> Result<bool> {
    if k == 0 {
        return Err(Error::Invalid("k must be at least 1".into()));
    }
    for &i in &ts.initial {
        let ok = ts.paths(&mut vec![i], k, &mut |path| path.iter().all(|s| p.contains(s)));
        if !ok {
            return Ok(false);
        }
    }
    for s in 0..ts.size {
        let ok = ts.paths(&mut vec![s], k + 1, &mut |path| {
            !path[..k].iter().all(|s| p.contains(s)) || p.contains(&path[k])
        });
        if !ok {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Latticed k-induction on the powerset lattice with `Φ(F) = I ∪ Succs(F)`.
pub fn latticed_kinduction_ts(ts: &TransitionSystem, p: &StateSet, k: usize) -> bool {
    let system = ts.clone();
    let mut domain = ExplicitDomain::new(
        StateSet::new(),
        p.clone(),
        move |f: &StateSet| system.phi(f),
        |a: &StateSet, b: &StateSet| a.intersection(b).copied().collect(),
        |a: &StateSet, b: &StateSet| a.is_subset(b),
    );
    let limits = Limits::unbounded().with_max_k(k as u64);
    matches!(k_induction(&mut domain, &limits), Ok(o) if matches!(o.verdict, Verdict::Inductive { .. }))
}

pub const DEFAULT_NODE_CAP: u64 = 1_000_000;

struct Expander<'a> {
    program: &'a Program,
    post: &'a LinExp,
    mode: Mode,
    nodes: u64,
    cap: u64,
}

impl Expander<'_> {
    fn tick(&mut self) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.cap {
            return Err(Error::Resource(format!("probability tree exceeds {} nodes", self.cap)));
        }
        Ok(())
    }

    fn post_at(&self, s: &State) -> ExtValue {
        match self.mode {
            Mode::Wp => self.post.evaluate(s),
            Mode::Ert => ExtValue::zero(),
        }
    }

    /// `Φ(h)(s)` for `h` given by `next`.
    fn step(&mut self, s: &State, next: &mut dyn FnMut(&mut Self, &State) -> Result<ExtValue>) -> Result<ExtValue> {
        self.tick()?;
        if !self.program.guard.eval(s) {
            return Ok(self.post_at(s));
        }
        let mut acc = ExtValue::zero();
        for b in execute(&self.program.body, s) {
            let cost = match self.mode {
                Mode::Wp => ExtValue::zero(),
                Mode::Ert => ExtValue::Finite(b.cost.clone()),
            };
            let v = next(self, &b.state)? + cost;
            acc = acc + v.scale(&b.prob);
        }
        Ok(acc)
    }

    fn kleene(&mut self, n: u64, s: &State) -> Result<ExtValue> {
        if n == 0 {
            return Ok(ExtValue::zero());
        }
        self.step(s, &mut |me, t| me.kleene(n - 1, t))
    }

    fn kind(&mut self, bound: &LinExp, k: u64, s: &State) -> Result<ExtValue> {
        let f = bound.evaluate(s);
        if k == 0 {
            return Ok(f);
        }
        let phi = self.step(s, &mut |me, t| me.kind(bound, k - 1, t))?;
        Ok(phi.min(f))
    }
}

/// `Φ^n(0)(σ)`: the expected value of the postexpectation (or the expected
/// cost) over runs leaving the loop within `n` iterations, by exhaustive
/// expansion of the probability tree.
pub fn truncated_value_oracle(program: &Program, post: &LinExp, n: u64, state: &State, mode: Mode) -> Result<ExtValue> {
    truncated_value_oracle_capped(program, post, n, state, mode, DEFAULT_NODE_CAP)
}

pub fn truncated_value_oracle_capped(
    program: &Program,
    post: &LinExp,
    n: u64,
    state: &State,
    mode: Mode,
    cap: u64,
) -> Result<ExtValue> {
    Expander { program, post, mode, nodes: 0, cap }.kleene(n, state)
}

/// `Ψ_f^k(f)(σ)` where `Ψ_f(h) = min(Φ(h), f)`, by exhaustive expansion.
pub fn kind_iterate_oracle(program: &Program, post: &LinExp, bound: &LinExp, k: u64, state: &State, mode: Mode) -> Result<ExtValue> {
    Expander { program, post, mode, nodes: 0, cap: DEFAULT_NODE_CAP }.kind(bound, k, state)
}

/// `Φ(Ψ_f^k(f))(σ)`.
pub fn kind_frame_oracle(program: &Program, post: &LinExp, bound: &LinExp, k: u64, state: &State, mode: Mode) -> Result<ExtValue> {
    let mut e = Expander { program, post, mode, nodes: 0, cap: DEFAULT_NODE_CAP };
    e.step(state, &mut |me, t| me.kind(bound, k, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expectations::parse_expectation;
    use crate::pgcl::parse_program;
    use crate::value::{int, rat};

    fn set(xs: &[usize]) -> StateSet {
        xs.iter().copied().collect()
    }

    #[test]
    fn chain_system() {
        let ts = TransitionSystem::new(3, [0], &[(0, 1), (1, 2), (2, 2)]).unwrap();
        let p = set(&[0, 1]);
        assert!(!classical_kinduction(&ts, &p, 1).unwrap());
        assert!(!latticed_kinduction_ts(&ts, &p, 1));
        let all = set(&[0, 1, 2]);
        assert!(classical_kinduction(&ts, &all, 1).unwrap());
        assert!(latticed_kinduction_ts(&ts, &all, 1));
    }

    #[test]
    fn empty_relation_is_rejected() {
        let err = TransitionSystem::new(2, [0, 1], &[]).unwrap_err();
        assert!(err.to_string().contains("not total"));
        assert!(TransitionSystem::totalized(2, [0, 1], &[]).is_ok());
    }

    #[test]
    fn property_missing_initial_state_never_holds() {
        let ts = TransitionSystem::new(2, [0], &[(0, 0), (1, 1)]).unwrap();
        for k in 1..5 {
            assert!(!classical_kinduction(&ts, &set(&[1]), k).unwrap());
            assert!(!latticed_kinduction_ts(&ts, &set(&[1]), k));
        }
    }

    const CHAIN: &str = "nat count; nat f; while(count<5 & f=0){ {count:=count+1}[0.8]{f:=1} }";

    #[test]
    fn chain_oracle_values() {
        let p = parse_program(CHAIN).unwrap();
        let g = parse_expectation("[f=1]", None).unwrap();
        let s = State::new();
        let values: Vec<ExtValue> =
            (0..4).map(|n| truncated_value_oracle(&p, &g, n, &s, Mode::Wp).unwrap()).collect();
        let expected = [int(0), int(0), rat(1, 5), rat(9, 25)];
        for (v, e) in values.iter().zip(expected) {
            assert_eq!(*v, ExtValue::Finite(e));
        }
    }

    #[test]
    fn geo_oracle_by_hand() {
        let p = parse_program("nat c; nat f; while(f=1){ {f := 0}[0.5]{c := c+1} }").unwrap();
        let g = parse_expectation("c", None).unwrap();
        let s = State::from_pairs([("f", 1)]);
        // exits after one step with c=0 (1/2), after two with c=1 (1/4)
        assert_eq!(truncated_value_oracle(&p, &g, 3, &s, Mode::Wp).unwrap(), ExtValue::Finite(rat(1, 4)));
        assert_eq!(truncated_value_oracle(&p, &g, 4, &s, Mode::Wp).unwrap(), ExtValue::Finite(rat(1, 4) + rat(2, 8)));
    }

    #[test]
    fn node_cap_is_enforced() {
        let p = parse_program(CHAIN).unwrap();
        let g = parse_expectation("[f=1]", None).unwrap();
        let r = truncated_value_oracle_capped(&p, &g, 5, &State::new(), Mode::Wp, 3);
        assert!(matches!(r, Err(Error::Resource(_))));
    }
}
