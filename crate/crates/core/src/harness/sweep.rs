//! Team-size sweep: every (team size, seed) cell is run with and without
//! memory in its own directory, cells in parallel.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{MemError, Result};
use crate::metrics::{cma, cost_summary, series_from_log, RunLog, TOKEN_UNIT};

use super::config::SimConfig;
use super::sim::run_sim;

/// Consolidation interval used by sweeps unless the config sets one.
pub const SWEEP_CONSOLIDATION_N: u64 = 3;
pub const SWEEP_REPORT_FILE: &str = "sweep.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub team_size: usize,
    pub seed: u64,
    pub aas_memory: f64,
    pub aas_no_memory: f64,
    pub final_cma: f64,
    pub avg_tokens_memory: f64,
    pub avg_tokens_no_memory: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub token_unit: String,
    pub team_sizes: Vec<usize>,
    pub seeds: Vec<u64>,
    pub cells: Vec<SweepCell>,
}

impl SweepReport {
    pub fn cell(&self, team_size: usize, seed: u64) -> Option<&SweepCell> {
        self.cells
            .iter()
            .find(|c| c.team_size == team_size && c.seed == seed)
    }
}

pub fn cell_dir(out_dir: &Path, team_size: usize, seed: u64) -> PathBuf {
    out_dir.join(format!("size{team_size}_seed{seed}"))
}

fn run_cell(base: &SimConfig, team_size: usize, seed: u64, dir: &Path) -> Result<SweepCell> {
    let mut cfg = base.clone();
    cfg.team_size = team_size;
    cfg.seed = seed;
    cfg.memory_enabled = true;
    let with_mem: RunLog = run_sim(&cfg, dir.join("memory"))?;
    cfg.memory_enabled = false;
    let without: RunLog = run_sim(&cfg, dir.join("no_memory"))?;
    let curve = cma(&with_mem, &without)?;
    Ok(SweepCell {
        team_size,
        seed,
        aas_memory: series_from_log(&with_mem)?.aas,
        aas_no_memory: series_from_log(&without)?.aas,
        final_cma: *curve.last().expect("n_tasks >= 1"),
        avg_tokens_memory: cost_summary(&with_mem)?.avg_tokens_per_task,
        avg_tokens_no_memory: cost_summary(&without)?.avg_tokens_per_task,
    })
}

/// Runs the grid `team_sizes × {base.seed, .., base.seed + n_seeds - 1}` and
/// writes `sweep.json` into `out_dir`.
pub fn sweep(
    base_cfg: &SimConfig,
    team_sizes: &[usize],
    n_seeds: u64,
    out_dir: impl AsRef<Path>,
) -> Result<SweepReport> {
    if team_sizes.is_empty() {
        return Err(MemError::config("sizes", "at least one team size required"));
    }
    if let Some(bad) = team_sizes.iter().find(|&&s| s == 0) {
        return Err(MemError::config("sizes", format!("team size {bad} must be >= 1")));
    }
    if n_seeds == 0 {
        return Err(MemError::config("seeds", "must be >= 1"));
    }
    base_cfg.validate()?;
    let out_dir = out_dir.as_ref();

    let mut sizes = team_sizes.to_vec();
    sizes.sort_unstable();
    sizes.dedup();
    let seeds: Vec<u64> = (0..n_seeds).map(|i| base_cfg.seed + i).collect();
    let grid: Vec<(usize, u64)> = sizes
        .iter()
        .flat_map(|&s| seeds.iter().map(move |&seed| (s, seed)))
        .collect();

    let results: Vec<Result<SweepCell>> = std::thread::scope(|scope| {
        let handles: Vec<_> = grid
            .iter()
            .map(|&(size, seed)| {
                let dir = cell_dir(out_dir, size, seed);
                scope.spawn(move || run_cell(base_cfg, size, seed, &dir))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    });
    let cells = results.into_iter().collect::<Result<Vec<_>>>()?;

    let report = SweepReport {
        token_unit: TOKEN_UNIT.to_string(),
        team_sizes: sizes,
        seeds,
        cells,
    };
    let mut bytes = serde_json::to_vec_pretty(&report).expect("report serializes");
    bytes.push(b'\n');
    crate::store::write_atomic(&out_dir.join(SWEEP_REPORT_FILE), &bytes)?;
    log::info!("sweep wrote {} cells to {}", report.cells.len(), out_dir.display());
    Ok(report)
}
