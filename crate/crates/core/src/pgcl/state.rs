use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigUint;
use num_traits::Zero;

use crate::pgcl::ast::Var;

/// A program state. Unmapped variables read as zero.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct State {
    values: BTreeMap<Var, BigUint>,
}

impl State {
    pub fn new() -> Self {
        State::default()
    }

    pub fn from_pairs<I, V>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (V, u64)>,
        V: Into<Var>,
    {
        let mut s = State::new();
        for (v, n) in pairs {
            s.set(v.into(), BigUint::from(n));
        }
        s
    }

    pub fn get(&self, v: &Var) -> BigUint {
        self.values.get(v).cloned().unwrap_or_default()
    }

    pub fn set(&mut self, v: Var, n: BigUint) {
        if n.is_zero() {
            self.values.remove(&v);
        } else {
            self.values.insert(v, n);
        }
    }

    pub fn with(&self, v: &Var, n: BigUint) -> State {
        let mut s = self.clone();
        s.set(v.clone(), n);
        s
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Var, &BigUint)> {
        self.values.iter()
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (v, n)) in self.values.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{v}={n}")?;
        }
        f.write_str("}")
    }
}
