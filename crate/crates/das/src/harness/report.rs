//! Result tables, trace exports and the hashed file manifest.

use super::stats::Verdict;
use crate::de::POOL_SIZE;
use crate::env::TraceRow;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub const METHOD_NAMES: [&str; 6] = [
    "rl-das",
    "rand-das",
    "jde21",
    "madde",
    "nlshadersp",
    "as-star",
];
pub const METHOD_RL: usize = 0;
pub const METHOD_RAND: usize = 1;
pub const METHOD_BACKBONE0: usize = 2;
pub const METHOD_AS_STAR: usize = 5;

/// One evaluated (instance, run) pair of one method.
#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub instance: usize,
    pub run: usize,
    pub cost0: f64,
    pub cost_end: f64,
    pub descent_pct: f64,
    pub fes_end: u64,
}

#[derive(Clone, Debug)]
pub struct MethodRow {
    pub method: &'static str,
    pub mean_cost: f64,
    pub std_cost: f64,
    pub mean_descent: f64,
    pub median_descent: f64,
    pub mean_fes: f64,
    /// Comparison of this method against the learned policy on descents
    /// (`+` better, `-` worse, `~` no significant difference).
    pub mark_descent: char,
    pub p_descent: f64,
    pub mark_fes: char,
    pub p_fes: f64,
}

#[derive(Clone, Debug)]
pub struct ResultTable {
    pub class: String,
    pub dim: usize,
    pub runs_per_instance: usize,
    pub rows: Vec<MethodRow>,
}

pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        (v[mid - 1] + v[mid]) / 2.0
    }
}

/// `+` when the competitor beats the learned policy, `-` when it loses,
/// `~` otherwise. `higher_is_better` distinguishes descents from FE counts.
pub fn verdict_mark(v: Verdict, higher_is_better: bool) -> char {
    match (v, higher_is_better) {
        (Verdict::NoDifference, _) => '~',
        (Verdict::AGreater, true) | (Verdict::BGreater, false) => '+',
        _ => '-',
    }
}

impl ResultTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str("method,mean_cost,std_cost,mean_descent_pct,median_descent_pct,mean_fes,mark_descent,p_descent,mark_fes,p_fes\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{:.6e},{:.6e},{:.4},{:.4},{:.1},{},{:.6e},{},{:.6e}",
                r.method,
                r.mean_cost,
                r.std_cost,
                r.mean_descent,
                r.median_descent,
                r.mean_fes,
                r.mark_descent,
                r.p_descent,
                r.mark_fes,
                r.p_fes
            );
        }
        out
    }
}

/// Raw per-run results for all methods, in a fixed method order.
#[derive(Clone, Debug)]
pub struct RawResults {
    pub records: Vec<Vec<RunRecord>>,
}

impl RawResults {
    pub fn descents(&self, method: usize) -> Vec<f64> {
        self.records[method].iter().map(|r| r.descent_pct).collect()
    }

    pub fn fes(&self, method: usize) -> Vec<f64> {
        self.records[method].iter().map(|r| r.fes_end as f64).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str("method,instance,run,cost0,cost_end,descent_pct,fes_end\n");
        for (m, records) in self.records.iter().enumerate() {
            for r in records {
                let _ = writeln!(
                    out,
                    "{},{},{},{:.9e},{:.9e},{:.6},{}",
                    METHOD_NAMES[m], r.instance, r.run, r.cost0, r.cost_end, r.descent_pct, r.fes_end
                );
            }
        }
        out
    }
}

/// Full evaluation output: the aggregate table, the raw runs and the
/// step traces of the interval-driven methods.
#[derive(Clone, Debug)]
pub struct EvalOutcome {
    pub table: ResultTable,
    pub raw: RawResults,
    /// (instance, run, trace) for the learned policy and random selection.
    pub rl_traces: Vec<(usize, usize, Vec<TraceRow>)>,
    pub rand_traces: Vec<(usize, usize, Vec<TraceRow>)>,
}

fn descent_curve_csv(traces: &[(usize, usize, Vec<TraceRow>)]) -> String {
    let mut out = String::new();
    out.push_str("instance,run,step,action,fe_used,best_cost\n");
    for (inst, run, trace) in traces {
        for row in trace {
            let _ = writeln!(
                out,
                "{inst},{run},{},{},{},{:.9e}",
                row.step,
                row.action.name(),
                row.fe_used,
                row.best_cost
            );
        }
    }
    out
}

/// Per-step action counts over the learned policy's episodes. Each row adds
/// a `done` column so the counts always sum to the number of episodes.
fn action_histogram_csv(traces: &[(usize, usize, Vec<TraceRow>)]) -> String {
    let mut out = String::new();
    out.push_str("step,jde21,madde,nlshadersp,done,total\n");
    let episodes = traces.len();
    let max_len = traces.iter().map(|(_, _, t)| t.len()).max().unwrap_or(0);
    for step in 0..max_len {
        let mut counts = [0usize; POOL_SIZE];
        let mut done = 0usize;
        for (_, _, trace) in traces {
            match trace.get(step) {
                Some(row) => counts[row.action.index()] += 1,
                None => done += 1,
            }
        }
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            step + 1,
            counts[0],
            counts[1],
            counts[2],
            done,
            episodes
        );
    }
    out
}

#[derive(Serialize)]
struct ManifestEntry {
    name: String,
    bytes: usize,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest {
    files: Vec<ManifestEntry>,
}

/// Write the evaluation artifacts plus a manifest with content hashes.
/// Returns the written file paths (manifest last).
pub fn emit_report(outcome: &EvalOutcome, out_dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    let files = [
        ("table.csv", outcome.table.to_csv()),
        ("raw_runs.csv", outcome.raw.to_csv()),
        ("descent_curves_rl.csv", descent_curve_csv(&outcome.rl_traces)),
        (
            "descent_curves_rand.csv",
            descent_curve_csv(&outcome.rand_traces),
        ),
        (
            "action_histogram.csv",
            action_histogram_csv(&outcome.rl_traces),
        ),
    ];
    let mut written = Vec::new();
    let mut manifest = Manifest { files: Vec::new() };
    for (name, content) in files {
        let path = out_dir.join(name);
        std::fs::write(&path, content.as_bytes())?;
        let mut hasher = Sha256::new();
        hasher.update(content.as_bytes());
        manifest.files.push(ManifestEntry {
            name: name.to_string(),
            bytes: content.len(),
            sha256: format!("{:x}", hasher.finalize()),
        });
        written.push(path);
    }
    let manifest_path = out_dir.join("manifest.json");
    std::fs::write(
        &manifest_path,
        serde_json::to_string_pretty(&manifest).expect("manifest serializes"),
    )?;
    written.push(manifest_path);
    Ok(written)
}
