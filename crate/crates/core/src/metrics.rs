//! Lifelong-learning metrics over run logs: per-task combined score, its
//! running mean (AS), the lifetime average of the running mean (AAS), the
//! cumulative gain over a no-memory baseline (CMA), and token-proxy costs.

use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{MemError, Result};
use crate::store::write_atomic;
use crate::types::{combined_score, ItemId, MemoryKind};

/// One task of a lifelong run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLogEntry {
    pub task_index: u64,
    pub task_id: String,
    pub ts: f64,
    pub cs: f64,
    pub tokens_in: u64,
    pub tokens_out: u64,
    pub team_size: usize,
    pub kind_used: Option<MemoryKind>,
    pub retrieved_ids: Vec<ItemId>,
    pub procedures_used: Vec<String>,
    /// Executing agent.
    #[serde(default)]
    pub agent_id: String,
    /// Token-proxy of the rendered memory block alone.
    #[serde(default)]
    pub memory_tokens: u64,
}

impl RunLogEntry {
    pub fn score(&self) -> f64 {
        (self.ts + self.cs) / 2.0
    }

    pub fn tokens(&self) -> u64 {
        self.tokens_in + self.tokens_out
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunLog {
    pub entries: Vec<RunLogEntry>,
}

impl RunLog {
    pub fn new(entries: Vec<RunLogEntry>) -> Self {
        RunLog { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Checks that task indices run 1, 2, 3, ... and scores are in range.
    pub fn validate(&self) -> Result<()> {
        for (i, e) in self.entries.iter().enumerate() {
            let expected = i as u64 + 1;
            if e.task_index != expected {
                return Err(MemError::LogMismatch(format!(
                    "entry {i} has task_index {} (expected {expected})",
                    e.task_index
                )));
            }
            combined_score(e.ts, e.cs)?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&serde_json::to_string(e).expect("log entries serialize"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        Self::parse_lines(text.lines().map(|l| Ok(l.to_string())), Path::new("<memory>"))
    }

    pub fn read_jsonl(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let f = fs::File::open(path).map_err(|e| MemError::io(path, e))?;
        let lines = BufReader::new(f)
            .lines()
            .map(|l| l.map_err(|e| MemError::io(path, e)));
        Self::parse_lines(lines, path)
    }

    fn parse_lines(lines: impl Iterator<Item = Result<String>>, path: &Path) -> Result<Self> {
        let mut entries = Vec::new();
        for (n, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let e: RunLogEntry = serde_json::from_str(&line).map_err(|e| MemError::Load {
                path: path.to_path_buf(),
                message: format!("line {}: {e}", n + 1),
            })?;
            entries.push(e);
        }
        let log = RunLog { entries };
        log.validate()?;
        Ok(log)
    }

    pub fn write_jsonl(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomic(path.as_ref(), self.to_jsonl().as_bytes())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSeries {
    pub s: Vec<f64>,
    pub as_curve: Vec<f64>,
    pub aas: f64,
    pub cma: Option<Vec<f64>>,
}

/// Per-task scores, running mean and its lifetime average.
pub fn series_from_log(log: &RunLog) -> Result<MetricSeries> {
    if log.is_empty() {
        return Err(MemError::EmptyLog);
    }
    let s: Vec<f64> = log.entries.iter().map(RunLogEntry::score).collect();
    let mut as_curve = Vec::with_capacity(s.len());
    let mut sum = 0.0;
    for (t, v) in s.iter().enumerate() {
        sum += v;
        as_curve.push(sum / (t + 1) as f64);
    }
    let aas = as_curve.iter().sum::<f64>() / as_curve.len() as f64;
    Ok(MetricSeries {
        s,
        as_curve,
        aas,
        cma: None,
    })
}

/// Cumulative per-task gain of `method` over `baseline`, aligned by position
/// with task ids verified.
pub fn cma(method: &RunLog, baseline: &RunLog) -> Result<Vec<f64>> {
    if method.len() != baseline.len() {
        return Err(MemError::LogMismatch(format!(
            "method has {} tasks, baseline has {}",
            method.len(),
            baseline.len()
        )));
    }
    let mut out = Vec::with_capacity(method.len());
    let mut acc = 0.0;
    for (m, b) in method.entries.iter().zip(&baseline.entries) {
        if m.task_id != b.task_id {
            return Err(MemError::LogMismatch(format!(
                "task {} is `{}` in method but `{}` in baseline",
                m.task_index, m.task_id, b.task_id
            )));
        }
        acc += m.score() - b.score();
        out.push(acc);
    }
    Ok(out)
}

/// [`series_from_log`] plus CMA against `baseline`.
pub fn series_with_baseline(log: &RunLog, baseline: &RunLog) -> Result<MetricSeries> {
    let mut s = series_from_log(log)?;
    s.cma = Some(cma(log, baseline)?);
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostSummary {
    pub avg_tokens_per_task: f64,
    pub total_in: u64,
    pub total_out: u64,
}

pub fn cost_summary(log: &RunLog) -> Result<CostSummary> {
    if log.is_empty() {
        return Err(MemError::EmptyLog);
    }
    let total_in: u64 = log.entries.iter().map(|e| e.tokens_in).sum();
    let total_out: u64 = log.entries.iter().map(|e| e.tokens_out).sum();
    Ok(CostSummary {
        avg_tokens_per_task: (total_in + total_out) as f64 / log.len() as f64,
        total_in,
        total_out,
    })
}

/// Percentage reduction of `a`'s average tokens per task relative to `b`.
pub fn cost_reduction(a: &RunLog, b: &RunLog) -> Result<f64> {
    let avg_a = cost_summary(a)?.avg_tokens_per_task;
    let avg_b = cost_summary(b)?.avg_tokens_per_task;
    if avg_b == 0.0 {
        return Err(MemError::InvalidArgument(
            "baseline uses zero tokens; reduction undefined".into(),
        ));
    }
    Ok(100.0 * (1.0 - avg_a / avg_b))
}

/// A named run for reporting.
#[derive(Debug, Clone)]
pub struct NamedRun<'a> {
    pub name: &'a str,
    pub log: &'a RunLog,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub name: String,
    pub tasks: usize,
    pub aas: f64,
    pub final_as: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_cma: Option<f64>,
    /// Whitespace-token proxy, not provider tokens.
    pub token_proxy: CostSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub token_unit: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baseline: Option<String>,
    pub runs: Vec<RunSummary>,
}

pub const TOKEN_UNIT: &str = "token-proxy (whitespace tokens)";

/// Builds the summary report for `runs`, with CMA when a baseline is given.
pub fn build_report(runs: &[NamedRun<'_>], baseline: Option<NamedRun<'_>>) -> Result<Report> {
    let mut summaries = Vec::with_capacity(runs.len());
    for r in runs {
        let series = match &baseline {
            Some(b) => series_with_baseline(r.log, b.log)?,
            None => series_from_log(r.log)?,
        };
        summaries.push(RunSummary {
            name: r.name.to_string(),
            tasks: r.log.len(),
            aas: series.aas,
            final_as: *series.as_curve.last().expect("non-empty"),
            final_cma: series.cma.as_ref().and_then(|c| c.last().copied()),
            token_proxy: cost_summary(r.log)?,
        });
    }
    Ok(Report {
        token_unit: TOKEN_UNIT.to_string(),
        baseline: baseline.map(|b| b.name.to_string()),
        runs: summaries,
    })
}

/// Writes `report.json` and `series.csv` into `out_dir`. CMA columns appear
/// only when a baseline is supplied.
pub fn emit_report(
    runs: &[NamedRun<'_>],
    baseline: Option<NamedRun<'_>>,
    out_dir: impl AsRef<Path>,
) -> Result<Report> {
    let out_dir = out_dir.as_ref();
    let report = build_report(runs, baseline.clone())?;
    let mut json = serde_json::to_vec_pretty(&report).expect("report serializes");
    json.push(b'\n');
    write_atomic(&out_dir.join("report.json"), &json)?;

    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| MemError::InvalidArgument(format!("csv: {e}"));
    let mut header = vec!["run", "task_index", "task_id", "S", "AS"];
    if baseline.is_some() {
        header.push("CMA");
    }
    header.push("tokens");
    w.write_record(&header).map_err(csv_err)?;
    for r in runs {
        let series = match &baseline {
            Some(b) => series_with_baseline(r.log, b.log)?,
            None => series_from_log(r.log)?,
        };
        for (i, e) in r.log.entries.iter().enumerate() {
            let mut row = vec![
                r.name.to_string(),
                e.task_index.to_string(),
                e.task_id.clone(),
                series.s[i].to_string(),
                series.as_curve[i].to_string(),
            ];
            if let Some(c) = &series.cma {
                row.push(c[i].to_string());
            }
            row.push(e.tokens().to_string());
            w.write_record(&row).map_err(csv_err)?;
        }
    }
    let bytes = w
        .into_inner()
        .map_err(|e| MemError::InvalidArgument(format!("csv: {e}")))?;
    write_atomic(&out_dir.join("series.csv"), &bytes)?;
    Ok(report)
}
