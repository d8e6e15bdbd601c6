use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use pkind::expectations::Mode;
use pkind::smt::SolverConfig;
use serde::{Deserialize, Serialize};

use crate::job::{run, JobSpec};
use crate::report::{Report, VerdictKind};

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    /// Per-row deadline in seconds unless a row overrides it.
    #[serde(default)]
    pub timeout: Option<u64>,
    #[serde(default)]
    pub row: Vec<Row>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Row {
    pub name: String,
    /// Relative to the manifest's directory.
    pub program: PathBuf,
    #[serde(default = "default_mode")]
    pub mode: String,
    #[serde(default)]
    pub post: Option<String>,
    pub pre: String,
    pub expect: VerdictKind,
    #[serde(default)]
    pub k: Option<u64>,
    #[serde(default)]
    pub expected_timeout: bool,
    #[serde(default)]
    pub timeout: Option<u64>,
}

fn default_mode() -> String {
    "wp".into()
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Manifest, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }
}

#[derive(Clone, Debug)]
pub struct BenchOptions {
    pub jobs: usize,
    pub include_timeouts: bool,
    pub timeout: Option<Duration>,
    pub solver: SolverConfig,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions { jobs: 1, include_timeouts: false, timeout: None, solver: SolverConfig::from_env() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RowResult {
    pub name: String,
    pub expect: VerdictKind,
    pub expect_k: Option<u64>,
    pub skipped: bool,
    pub matches: bool,
    pub report: Option<Report>,
}

const DEFAULT_ROW_TIMEOUT: u64 = 900;

fn job_for(row: &Row, base: &Path, manifest: &Manifest, options: &BenchOptions) -> Result<JobSpec, String> {
    let mode = match row.mode.as_str() {
        "wp" => Mode::Wp,
        "ert" => Mode::Ert,
        other => return Err(format!("unknown mode `{other}`")),
    };
    let secs = row.timeout.or(manifest.timeout).unwrap_or(DEFAULT_ROW_TIMEOUT);
    let deadline = options.timeout.unwrap_or(Duration::from_secs(secs));
    let mut job = JobSpec::new(base.join(&row.program), row.pre.clone());
    job.post = row.post.clone();
    job.mode = mode;
    job.deadline = deadline;
    job.solver = options.solver.clone();
    Ok(job)
}

fn judge(row: &Row, report: &Report) -> bool {
    if row.expected_timeout {
        return matches!(report.verdict, VerdictKind::Timeout | VerdictKind::Exhausted);
    }
    report.verdict == row.expect && (row.k.is_none() || row.k == report.k)
}

fn run_row(row: &Row, base: &Path, manifest: &Manifest, options: &BenchOptions) -> RowResult {
    let skipped = row.expected_timeout && !options.include_timeouts;
    let mut result = RowResult {
        name: row.name.clone(),
        expect: row.expect,
        expect_k: row.k,
        skipped,
        matches: true,
        report: None,
    };
    if skipped {
        return result;
    }
    let start = Instant::now();
    let report = match job_for(row, base, manifest, options) {
        Ok(job) => std::panic::catch_unwind(|| run(&job))
            .unwrap_or_else(|_| Report::error("internal error while running the row", start.elapsed())),
        Err(e) => Report::error(e, start.elapsed()),
    };
    result.matches = judge(row, &report);
    result.report = Some(report);
    result
}

/// Runs every row of a manifest. A failing row is reported, never fatal.
pub fn run_manifest(path: &Path, options: &BenchOptions) -> Result<Vec<RowResult>, String> {
    let manifest = Manifest::load(path)?;
    let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
    let rows = &manifest.row;
    let slots: Mutex<Vec<Option<RowResult>>> = Mutex::new(vec![None; rows.len()]);
    let next = AtomicUsize::new(0);
    let workers = options.jobs.clamp(1, rows.len().max(1));
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(row) = rows.get(i) else { break };
                let r = run_row(row, &base, &manifest, options);
                slots.lock().unwrap_or_else(|e| e.into_inner())[i] = Some(r);
            });
        }
    });
    Ok(slots.into_inner().unwrap_or_else(|e| e.into_inner()).into_iter().flatten().collect())
}

fn cell(x: Option<u64>) -> String {
    x.map(|k| k.to_string()).unwrap_or_else(|| "-".into())
}

pub fn render_table(results: &[RowResult]) -> String {
    let mut lines = vec![format!(
        "{:<16} {:>9} {:>4} {:>9} {:>4} {:>9} {:>10} {:>8} {:>9}  {}",
        "row", "expected", "k", "verdict", "k", "#formulae", "formulae_t", "sat_t", "total_t", "ok"
    )];
    for r in results {
        let expected = if r.skipped { "TO".to_string() } else { r.expect.to_string() };
        let line = match &r.report {
            None => format!("{:<16} {:>9} {:>4} {:>9}", r.name, expected, cell(r.expect_k), "skipped"),
            Some(rep) => format!(
                "{:<16} {:>9} {:>4} {:>9} {:>4} {:>9} {:>10.2} {:>8.2} {:>9.2}  {}",
                r.name,
                expected,
                cell(r.expect_k),
                rep.verdict.as_str(),
                cell(rep.k),
                rep.formulae,
                rep.formulae_t,
                rep.sat_t,
                rep.total_t,
                if r.matches { "yes" } else { "NO" }
            ),
        };
        lines.push(line);
    }
    lines.join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_rows_parse() {
        let m: Manifest = toml::from_str(
            r#"
            [[row]]
            name = "geo v1"
            program = "wp/geo.pgcl"
            post = "c"
            pre = "c+1"
            expect = "ind"
            k = 2
            "#,
        )
        .unwrap();
        assert_eq!(m.row.len(), 1);
        assert_eq!(m.row[0].expect, VerdictKind::Ind);
        assert_eq!(m.row[0].mode, "wp");
        assert!(toml::from_str::<Manifest>("").unwrap().row.is_empty());
    }
}
