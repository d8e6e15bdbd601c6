use std::fmt;

use crate::error::Result;
use crate::lattice::{Entailment, VerificationDomain};

type Op<E> = Box<dyn Fn(&E) -> E + Send>;
type BinOp<E> = Box<dyn Fn(&E, &E) -> E + Send>;
type Rel<E> = Box<dyn Fn(&E, &E) -> bool + Send>;

/// A domain whose elements are concrete values with a decidable order.
/// A violated entailment reports the offending left-hand element.
pub struct ExplicitDomain<E> {
    bottom: E,
    candidate: E,
    phi: Op<E>,
    meet: BinOp<E>,
    leq: Rel<E>,
    pub phi_calls: u64,
}

impl<E: Clone> ExplicitDomain<E> {
    pub fn new(
        bottom: E,
        candidate: E,
        phi: impl Fn(&E) -> E + Send + 'static,
        meet: impl Fn(&E, &E) -> E + Send + 'static,
        leq: impl Fn(&E, &E) -> bool + Send + 'static,
    ) -> Self {
        ExplicitDomain {
            bottom,
            candidate,
            phi: Box::new(phi),
            meet: Box::new(meet),
            leq: Box::new(leq),
            phi_calls: 0,
        }
    }
}

impl<E: Clone + fmt::Debug> VerificationDomain for ExplicitDomain<E> {
    type Element = E;
    type Witness = E;

    fn bottom(&mut self) -> Result<E> {
        Ok(self.bottom.clone())
    }

    fn candidate(&mut self) -> Result<E> {
        Ok(self.candidate.clone())
    }

    fn apply_phi(&mut self, e: &E) -> Result<E> {
        self.phi_calls += 1;
        Ok((self.phi)(e))
    }

    fn meet_with_bound(&mut self, e: &E) -> Result<E> {
        Ok((self.meet)(e, &self.candidate))
    }

    fn entails(&mut self, lhs: &E, rhs: &E) -> Result<Entailment<E>> {
        Ok(if (self.leq)(lhs, rhs) { Entailment::Holds } else { Entailment::Violated(lhs.clone()) })
    }
}
