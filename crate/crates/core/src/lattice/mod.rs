//! Latticed k-induction and bounded model checking over an abstract domain.

use std::fmt;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use crate::error::{Error, Result};

pub mod explicit;

pub use explicit::ExplicitDomain;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Entailment<W> {
    Holds,
    Violated(W),
}

impl<W> Entailment<W> {
    pub fn holds(&self) -> bool {
        matches!(self, Entailment::Holds)
    }
}

/// Solver bookkeeping a domain may report.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SolverStats {
    pub formula_count: u64,
    pub formulae_time: Duration,
    pub sat_time: Duration,
}

/// A complete lattice with a monotone operator and a fixed candidate upper bound.
pub trait VerificationDomain {
    type Element: Clone;
    type Witness: Clone + fmt::Debug;

    fn bottom(&mut self) -> Result<Self::Element>;
    fn candidate(&mut self) -> Result<Self::Element>;
    fn apply_phi(&mut self, e: &Self::Element) -> Result<Self::Element>;
    /// `e` meet the candidate.
    fn meet_with_bound(&mut self, e: &Self::Element) -> Result<Self::Element>;
    fn entails(&mut self, lhs: &Self::Element, rhs: &Self::Element) -> Result<Entailment<Self::Witness>>;

    fn solver_stats(&self) -> SolverStats {
        SolverStats::default()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict<W> {
    Inductive { k: u64 },
    /// `Phi^n(bottom)` exceeds the candidate.
    Refuted { n: u64, witness: W },
    Exhausted { bound: u64 },
    Timeout,
}

impl<W> Verdict<W> {
    pub fn is_definitive(&self) -> bool {
        matches!(self, Verdict::Inductive { .. } | Verdict::Refuted { .. })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Stats {
    pub formula_count: u64,
    pub formulae_time: Duration,
    pub sat_time: Duration,
    pub total_time: Duration,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome<W> {
    pub verdict: Verdict<W>,
    pub stats: Stats,
}

type Hook = Box<dyn Fn() + Send>;

/// Cooperative cancellation shared between a worker and its solver sessions.
#[derive(Clone, Default)]
pub struct CancelToken {
    flag: Arc<AtomicBool>,
    hooks: Arc<Mutex<Vec<Hook>>>,
}

impl CancelToken {
    pub fn new() -> Self {
        CancelToken::default()
    }

    pub fn is_cancelled(&self) -> bool {
        self.flag.load(Ordering::SeqCst)
    }

    pub fn cancel(&self) {
        self.flag.store(true, Ordering::SeqCst);
        let hooks = self.hooks.lock().unwrap_or_else(|e| e.into_inner());
        for h in hooks.iter() {
            h();
        }
    }

    /// Registers a hook run on cancellation, immediately if already cancelled.
    pub fn on_cancel(&self, hook: impl Fn() + Send + 'static) {
        if self.is_cancelled() {
            hook();
            return;
        }
        self.hooks.lock().unwrap_or_else(|e| e.into_inner()).push(Box::new(hook));
    }
}

impl fmt::Debug for CancelToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CancelToken").field("cancelled", &self.is_cancelled()).finish()
    }
}

#[derive(Clone, Debug)]
pub struct Limits {
    pub max_k: Option<u64>,
    pub max_n: Option<u64>,
    pub deadline: Option<Duration>,
    /// Cross-check the descending-chain and inductivity-equivalence properties
    /// after every step. Needs a domain that decides arbitrary entailments.
    pub check_lemmas: bool,
    pub cancel: Option<CancelToken>,
}

pub const DEFAULT_DEADLINE: Duration = Duration::from_secs(900);

impl Default for Limits {
    fn default() -> Self {
        Limits { max_k: None, max_n: None, deadline: Some(DEFAULT_DEADLINE), check_lemmas: false, cancel: None }
    }
}

impl Limits {
    pub fn unbounded() -> Self {
        Limits { deadline: None, ..Limits::default() }
    }

    pub fn with_max_k(mut self, k: u64) -> Self {
        self.max_k = Some(k);
        self
    }

    pub fn with_max_n(mut self, n: u64) -> Self {
        self.max_n = Some(n);
        self
    }

    pub fn with_deadline(mut self, d: Duration) -> Self {
        self.deadline = Some(d);
        self
    }

    pub fn checking_lemmas(mut self) -> Self {
        self.check_lemmas = true;
        self
    }
}

struct Clock {
    start: Instant,
    deadline: Option<Duration>,
    cancel: Option<CancelToken>,
}

impl Clock {
    fn new(limits: &Limits) -> Self {
        Clock { start: Instant::now(), deadline: limits.deadline, cancel: limits.cancel.clone() }
    }

    fn expired(&self) -> bool {
        self.deadline.is_some_and(|d| self.start.elapsed() >= d)
    }

    fn check_cancel(&self) -> Result<()> {
        match &self.cancel {
            Some(c) if c.is_cancelled() => Err(Error::Cancelled),
            _ => Ok(()),
        }
    }

    fn finish<D: VerificationDomain>(&self, d: &D, verdict: Verdict<D::Witness>) -> Outcome<D::Witness> {
        let s = d.solver_stats();
        Outcome {
            verdict,
            stats: Stats {
                formula_count: s.formula_count,
                formulae_time: s.formulae_time,
                sat_time: s.sat_time,
                total_time: self.start.elapsed(),
            },
        }
    }
}

/// Searches for the least `k` such that `Phi(Psi^(k-1)(f))` is below `f`.
pub fn k_induction<D: VerificationDomain>(domain: &mut D, limits: &Limits) -> Result<Outcome<D::Witness>> {
    let clock = Clock::new(limits);
    let f = domain.candidate()?;
    let mut g = f.clone();
    let mut k = 0u64;
    loop {
        clock.check_cancel()?;
        if clock.expired() {
            return Ok(clock.finish(domain, Verdict::Timeout));
        }
        if limits.max_k.is_some_and(|m| k >= m) {
            return Ok(clock.finish(domain, Verdict::Exhausted { bound: k }));
        }
        k += 1;
        let phi_g = domain.apply_phi(&g)?;
        clock.check_cancel()?;
        let against_f = domain.entails(&phi_g, &f)?;
        if limits.check_lemmas {
            let against_g = domain.entails(&phi_g, &g)?;
            if against_f.holds() != against_g.holds() {
                return Err(Error::Invariant(format!(
                    "at k={k}, checking Phi(g) against f and against g disagree"
                )));
            }
        }
        if against_f.holds() {
            return Ok(clock.finish(domain, Verdict::Inductive { k }));
        }
        let next = domain.meet_with_bound(&phi_g)?;
        if limits.check_lemmas {
            if !domain.entails(&next, &g)?.holds() {
                return Err(Error::Invariant(format!("iterate {k} is not below iterate {}", k - 1)));
            }
            if !domain.entails(&next, &phi_g)?.holds() {
                return Err(Error::Invariant(format!("iterate {k} is not below Phi of its predecessor")));
            }
        }
        g = next;
    }
}

/// Kleene iteration from bottom until an iterate exceeds the candidate.
pub fn bmc<D: VerificationDomain>(domain: &mut D, limits: &Limits) -> Result<Outcome<D::Witness>> {
    let clock = Clock::new(limits);
    let f = domain.candidate()?;
    let mut g = domain.bottom()?;
    let mut n = 0u64;
    loop {
        clock.check_cancel()?;
        if clock.expired() {
            return Ok(clock.finish(domain, Verdict::Timeout));
        }
        if limits.max_n.is_some_and(|m| n >= m) {
            return Ok(clock.finish(domain, Verdict::Exhausted { bound: n }));
        }
        n += 1;
        g = domain.apply_phi(&g)?;
        clock.check_cancel()?;
        if let Entailment::Violated(witness) = domain.entails(&g, &f)? {
            return Ok(clock.finish(domain, Verdict::Refuted { n, witness }));
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Role {
    Induction,
    Bmc,
}

/// Runs k-induction and BMC side by side on independent domains built by
/// `factory` and returns the first definitive verdict.
pub fn verify_parallel<D, F>(factory: F, limits: &Limits) -> Result<Outcome<D::Witness>>
where
    D: VerificationDomain,
    D::Witness: Send,
    F: Fn(Role, &CancelToken) -> Result<D> + Sync,
{
    let start = Instant::now();
    let outer = limits.cancel.clone();
    let tokens = [CancelToken::new(), CancelToken::new()];
    if let Some(outer) = &outer {
        for t in &tokens {
            let t = t.clone();
            outer.on_cancel(move || t.cancel());
        }
    }
    let (tx, rx) = mpsc::channel::<(Role, Result<Outcome<D::Witness>>)>();
    let mut results: Vec<(Role, Result<Outcome<D::Witness>>)> = Vec::new();
    let mut timed_out = false;
    std::thread::scope(|scope| {
        for (i, role) in [Role::Induction, Role::Bmc].into_iter().enumerate() {
            let tx = tx.clone();
            let token = tokens[i].clone();
            let factory = &factory;
            let mut worker_limits = limits.clone();
            worker_limits.cancel = Some(token.clone());
            scope.spawn(move || {
                let run = || -> Result<Outcome<D::Witness>> {
                    let mut domain = factory(role, &token)?;
                    match role {
                        Role::Induction => k_induction(&mut domain, &worker_limits),
                        Role::Bmc => bmc(&mut domain, &worker_limits),
                    }
                };
                let _ = tx.send((role, run()));
            });
        }
        drop(tx);
        let grace = Duration::from_secs(2);
        while results.len() < 2 {
            let received = match limits.deadline {
                Some(d) => {
                    let left = (d + grace).saturating_sub(start.elapsed());
                    rx.recv_timeout(left)
                }
                None => rx.recv().map_err(|_| mpsc::RecvTimeoutError::Disconnected),
            };
            match received {
                Ok((role, r)) => {
                    let decisive = matches!(&r, Ok(o) if o.verdict.is_definitive());
                    results.push((role, r));
                    if decisive {
                        tokens.iter().for_each(CancelToken::cancel);
                        break;
                    }
                }
                Err(mpsc::RecvTimeoutError::Timeout) => {
                    timed_out = true;
                    tokens.iter().for_each(CancelToken::cancel);
                    break;
                }
                Err(mpsc::RecvTimeoutError::Disconnected) => break,
            }
        }
    });
    let total_time = start.elapsed();
    let with_total = |mut o: Outcome<D::Witness>| {
        o.stats.total_time = total_time;
        o
    };
    if let Some(pos) = results.iter().position(|(_, r)| matches!(r, Ok(o) if o.verdict.is_definitive())) {
        let (_, r) = results.swap_remove(pos);
        return r.map(with_total);
    }
    if outer.as_ref().is_some_and(CancelToken::is_cancelled) {
        return Err(Error::Cancelled);
    }
    let mut oks = Vec::new();
    let mut errs = Vec::new();
    for (role, r) in results {
        match r {
            Ok(o) => oks.push((role, o)),
            Err(Error::Cancelled) if timed_out => {}
            Err(e) => errs.push((role, e)),
        }
    }
    if oks.is_empty() && !timed_out {
        let mut errs = errs.into_iter();
        return Err(match (errs.next(), errs.next()) {
            (Some((_, a)), Some((_, b))) => Error::Solver(format!("both workers failed: {a}; {b}")),
            (Some((_, a)), None) => a,
            _ => Error::Solver("no worker reported a result".into()),
        });
    }
    let stats = Stats {
        formula_count: oks.iter().map(|(_, o)| o.stats.formula_count).max().unwrap_or(0),
        formulae_time: oks.iter().map(|(_, o)| o.stats.formulae_time).sum(),
        sat_time: oks.iter().map(|(_, o)| o.stats.sat_time).sum(),
        total_time,
    };
    let any_timeout = timed_out || oks.iter().any(|(_, o)| matches!(o.verdict, Verdict::Timeout));
    let verdict = if any_timeout {
        Verdict::Timeout
    } else {
        let bound = oks
            .iter()
            .find(|(r, _)| *r == Role::Induction)
            .or_else(|| oks.first())
            .map(|(_, o)| match o.verdict {
                Verdict::Exhausted { bound } => bound,
                _ => 0,
            })
            .unwrap_or(0);
        Verdict::Exhausted { bound }
    };
    Ok(Outcome { verdict, stats })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_chain() -> ExplicitDomain<u8> {
        ExplicitDomain::new(
            0,
            1,
            |x: &u8| if *x == 0 { 0 } else { 2 },
            |a: &u8, b: &u8| *a.min(b),
            |a: &u8, b: &u8| a <= b,
        )
    }

    #[test]
    fn incompleteness_counterexample_exhausts() {
        let mut d = three_chain();
        let out = k_induction(&mut d, &Limits::unbounded().with_max_k(10)).unwrap();
        assert_eq!(out.verdict, Verdict::Exhausted { bound: 10 });
    }

    #[test]
    fn park_inductive_top_is_one_inductive() {
        let mut d = ExplicitDomain::new(0u8, 2, |x: &u8| (*x).min(2), |a: &u8, b: &u8| *a.min(b), |a: &u8, b: &u8| a <= b);
        let out = k_induction(&mut d, &Limits::unbounded().checking_lemmas()).unwrap();
        assert_eq!(out.verdict, Verdict::Inductive { k: 1 });
    }

    #[test]
    fn identity_never_exceeds() {
        let mut d = ExplicitDomain::new(0u8, 1, |x: &u8| *x, |a: &u8, b: &u8| *a.min(b), |a: &u8, b: &u8| a <= b);
        let out = bmc(&mut d, &Limits::unbounded().with_max_n(5)).unwrap();
        assert_eq!(out.verdict, Verdict::Exhausted { bound: 5 });
    }

    #[test]
    fn bmc_finds_first_exceeding_iterate() {
        let mut d = ExplicitDomain::new(0u32, 3, |x: &u32| x + 1, |a: &u32, b: &u32| *a.min(b), |a: &u32, b: &u32| a <= b);
        let out = bmc(&mut d, &Limits::unbounded()).unwrap();
        assert!(matches!(out.verdict, Verdict::Refuted { n: 4, .. }));
    }

    #[test]
    fn parallel_returns_definitive_verdict() {
        let build = |_: Role, _: &CancelToken| -> Result<ExplicitDomain<u32>> {
            Ok(ExplicitDomain::new(0u32, 3, |x: &u32| x + 1, |a: &u32, b: &u32| *a.min(b), |a: &u32, b: &u32| a <= b))
        };
        let out = verify_parallel(build, &Limits::default()).unwrap();
        assert!(matches!(out.verdict, Verdict::Refuted { n: 4, .. }));
        let build = |_: Role, _: &CancelToken| -> Result<ExplicitDomain<u32>> {
            Ok(ExplicitDomain::new(0u32, 3, |x: &u32| (*x).min(3), |a: &u32, b: &u32| *a.min(b), |a: &u32, b: &u32| a <= b))
        };
        let out = verify_parallel(build, &Limits::default()).unwrap();
        assert_eq!(out.verdict, Verdict::Inductive { k: 1 });
    }

    #[test]
    fn parallel_reports_exhaustion_when_both_give_up() {
        let build = |_: Role, _: &CancelToken| -> Result<ExplicitDomain<u8>> { Ok(three_chain()) };
        let out = verify_parallel(build, &Limits::default().with_max_k(4).with_max_n(4)).unwrap();
        assert_eq!(out.verdict, Verdict::Exhausted { bound: 4 });
    }

    #[test]
    fn parallel_tolerates_one_failing_worker() {
        let build = |role: Role, _: &CancelToken| -> Result<ExplicitDomain<u32>> {
            if role == Role::Bmc {
                return Err(Error::Solver("boom".into()));
            }
            Ok(ExplicitDomain::new(0u32, 3, |x: &u32| (*x).min(3), |a: &u32, b: &u32| *a.min(b), |a: &u32, b: &u32| a <= b))
        };
        let out = verify_parallel(build, &Limits::default()).unwrap();
        assert_eq!(out.verdict, Verdict::Inductive { k: 1 });
        let fail = |_: Role, _: &CancelToken| -> Result<ExplicitDomain<u32>> { Err(Error::Solver("boom".into())) };
        assert!(verify_parallel(fail, &Limits::default()).is_err());
    }
}
