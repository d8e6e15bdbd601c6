use std::fmt;
use std::time::Duration;

use pkind::lattice::{Outcome, Verdict};
use pkind::pgcl::{State, Var};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VerdictKind {
    Ind,
    Ref,
    Exhausted,
    Timeout,
    Error,
}

impl VerdictKind {
    pub fn exit_code(self) -> i32 {
        match self {
            VerdictKind::Ind => 0,
            VerdictKind::Ref => 1,
            VerdictKind::Exhausted | VerdictKind::Timeout => 2,
            VerdictKind::Error => 3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            VerdictKind::Ind => "ind",
            VerdictKind::Ref => "ref",
            VerdictKind::Exhausted => "exhausted",
            VerdictKind::Timeout => "timeout",
            VerdictKind::Error => "error",
        }
    }
}

impl std::str::FromStr for VerdictKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "ind" => VerdictKind::Ind,
            "ref" => VerdictKind::Ref,
            "exhausted" => VerdictKind::Exhausted,
            "timeout" | "to" => VerdictKind::Timeout,
            "error" => VerdictKind::Error,
            other => return Err(format!("unknown verdict `{other}`")),
        })
    }
}

impl fmt::Display for VerdictKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Outcome of one verification job.
///
/// `k` is the induction depth for `ind`, the index of the first frame
/// exceeding the bound for `ref` (one less than the number of functional
/// applications), and the exhausted depth for `exhausted`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub verdict: VerdictKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<(String, String)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    pub formulae: u64,
    pub formulae_t: f64,
    pub sat_t: f64,
    pub total_t: f64,
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

impl Report {
    pub fn error(message: impl Into<String>, total: Duration) -> Self {
        Report {
            verdict: VerdictKind::Error,
            k: None,
            witness: None,
            message: Some(message.into()),
            formulae: 0,
            formulae_t: 0.0,
            sat_t: 0.0,
            total_t: secs(total),
        }
    }

    pub fn from_outcome(outcome: &Outcome<State>, vars: &[Var]) -> Self {
        let (verdict, k, witness) = match &outcome.verdict {
            Verdict::Inductive { k } => (VerdictKind::Ind, Some(*k), None),
            Verdict::Refuted { n, witness } => {
                let w = vars.iter().map(|v| (v.name().to_string(), witness.get(v).to_string())).collect();
                (VerdictKind::Ref, Some(n.saturating_sub(1)), Some(w))
            }
            Verdict::Exhausted { bound } => (VerdictKind::Exhausted, Some(*bound), None),
            Verdict::Timeout => (VerdictKind::Timeout, None, None),
        };
        let s = &outcome.stats;
        let total = s.total_time.max(s.formulae_time + s.sat_time);
        Report {
            verdict,
            k,
            witness,
            message: None,
            formulae: s.formula_count,
            formulae_t: secs(s.formulae_time),
            sat_t: secs(s.sat_time),
            total_t: secs(total),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn exit_code(&self) -> i32 {
        self.verdict.exit_code()
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "verdict: {}", self.verdict)?;
        if let Some(k) = self.k {
            write!(f, "\nk: {k}")?;
        }
        if let Some(w) = &self.witness {
            let pairs: Vec<String> = w.iter().map(|(v, x)| format!("{v}={x}")).collect();
            write!(f, "\nwitness: {}", pairs.join(" "))?;
        }
        if let Some(m) = &self.message {
            write!(f, "\nerror: {m}")?;
        }
        write!(
            f,
            "\n#formulae: {}\nformulae_t: {:.3}s\nsat_t: {:.3}s\ntotal_t: {:.3}s",
            self.formulae, self.formulae_t, self.sat_t, self.total_t
        )
    }
}
