use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use teammem::embedding::HashEmbedder;
use teammem::harness::{run_sim, sweep, SimConfig, SWEEP_CONSOLIDATION_N};
use teammem::lifecycle::{force_consolidate, ConsolidationConfig, StubGenerator};
use teammem::metrics::{build_report, emit_report, NamedRun, Report, RunLog};
use teammem::store::{MemoryStore, MANIFEST_FILE};
use teammem::{MemError, Result};

#[derive(Parser)]
#[command(name = "teammem", version, about = "Structured team memory simulator and tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run (or resume) one simulation.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every team size and seed with and without memory.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "1,3,5,7")]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 1)]
        seeds: u64,
        #[arg(long, default_value = "sweep-out")]
        out: PathBuf,
    },
    /// Summarize a run log, optionally against a no-memory baseline.
    Metrics {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        baseline: Option<PathBuf>,
        /// Also write report.json and series.csv here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Consolidate a store now, ignoring the interval.
    Consolidate {
        #[arg(long)]
        store: PathBuf,
        #[arg(long, default_value_t = 0.80)]
        threshold: f64,
    },
    /// Print store contents.
    Inspect {
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        agent: Option<String>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Run { config, out } => cmd_run(&config, &out),
        Command::Sweep {
            config,
            sizes,
            seeds,
            out,
        } => cmd_sweep(&config, &sizes, seeds, &out),
        Command::Metrics { log, baseline, out } => cmd_metrics(&log, baseline.as_deref(), out.as_deref()),
        Command::Consolidate { store, threshold } => cmd_consolidate(&store, threshold),
        Command::Inspect { store, agent } => cmd_inspect(&store, agent.as_deref()),
    }
}

fn print_report(report: &Report) {
    println!("token unit: {}", report.token_unit);
    if let Some(b) = &report.baseline {
        println!("baseline: {b}");
    }
    for r in &report.runs {
        println!("run: {}", r.name);
        println!("  tasks: {}", r.tasks);
        println!("  AAS: {}", r.aas);
        println!("  final AS: {}", r.final_as);
        if let Some(c) = r.final_cma {
            println!("  final CMA: {c}");
        }
        println!("  avg tokens/task: {}", r.token_proxy.avg_tokens_per_task);
    }
}

fn cmd_run(config: &Path, out: &Path) -> Result<()> {
    let cfg = SimConfig::from_file(config)?;
    let log = run_sim(&cfg, out)?;
    let name = if cfg.memory_enabled { "memory" } else { "no_memory" };
    let report = emit_report(&[NamedRun { name, log: &log }], None, out)?;
    print_report(&report);
    Ok(())
}

fn cmd_sweep(config: &Path, sizes: &[usize], seeds: u64, out: &Path) -> Result<()> {
    let text = std::fs::read_to_string(config).map_err(|e| MemError::Io {
        path: config.to_path_buf(),
        source: e,
    })?;
    let mut cfg = SimConfig::from_json(&text)?;
    let sets_interval = serde_json::from_str::<serde_json::Value>(&text)
        .ok()
        .and_then(|v| v.pointer("/consolidation/n").cloned())
        .is_some();
    if !sets_interval {
        cfg.consolidation_n = SWEEP_CONSOLIDATION_N;
    }
    let report = sweep(&cfg, sizes, seeds, out)?;
    println!("token unit: {}", report.token_unit);
    println!("team_size\tseed\tAAS_mem\tAAS_nomem\tfinal_CMA\ttokens_mem\ttokens_nomem");
    for c in &report.cells {
        println!(
            "{}\t{}\t{:.4}\t{:.4}\t{:.4}\t{:.2}\t{:.2}",
            c.team_size,
            c.seed,
            c.aas_memory,
            c.aas_no_memory,
            c.final_cma,
            c.avg_tokens_memory,
            c.avg_tokens_no_memory
        );
    }
    Ok(())
}

fn cmd_metrics(log: &Path, baseline: Option<&Path>, out: Option<&Path>) -> Result<()> {
    let method = RunLog::read_jsonl(log)?;
    let base = baseline.map(RunLog::read_jsonl).transpose()?;
    let method_name = log.display().to_string();
    let base_name = baseline.map(|b| b.display().to_string());
    let runs = [NamedRun {
        name: &method_name,
        log: &method,
    }];
    let base_run = base.as_ref().map(|l| NamedRun {
        name: base_name.as_deref().unwrap_or_default(),
        log: l,
    });
    let report = match out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| MemError::Io {
                path: dir.to_path_buf(),
                source: e,
            })?;
            emit_report(&runs, base_run, dir)?
        }
        None => build_report(&runs, base_run)?,
    };
    print_report(&report);
    Ok(())
}

fn cmd_consolidate(root: &Path, threshold: f64) -> Result<()> {
    let mut store = MemoryStore::open_existing(root)?;
    let cfg = ConsolidationConfig {
        cluster_threshold: threshold,
        ..ConsolidationConfig::default()
    };
    cfg.validate()?;
    let embedder = HashEmbedder::default();
    let mut seen = BTreeSet::new();
    let (mut created, mut removed) = (0usize, 0usize);
    for view in store.views() {
        if !seen.insert(view.episodic_owner()) {
            continue;
        }
        let outcome = force_consolidate(&mut store, &view, &cfg, &StubGenerator, &embedder)?;
        created += outcome.created.len();
        removed += outcome.removed.len();
        for p in &outcome.created {
            println!("created {} ({} sources): {}", p.id, p.source_episodes.len(), p.title);
        }
        for id in &outcome.removed {
            println!("removed {id}");
        }
    }
    store.persist()?;
    println!("procedures created: {created}, removed: {removed}");
    Ok(())
}

fn cmd_inspect(root: &Path, agent: Option<&str>) -> Result<()> {
    if !root.is_dir() {
        return Err(MemError::Io {
            path: root.to_path_buf(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "store directory not found"),
        });
    }
    if !root.join(MANIFEST_FILE).exists() {
        println!("episodes: 0\nprocedures: 0\nprofiles: 0\nteam_patterns: 0");
        return Ok(());
    }
    let store = MemoryStore::open_existing(root)?;
    println!("topology: {}", store.topology());
    let views = match agent {
        Some(a) => vec![store.view(a)?],
        None => store.views(),
    };
    for view in views {
        let snap = store.snapshot(&view);
        println!(
            "{}: episodes: {} procedures: {} profiles: {} team_patterns: {}",
            view.agent_id,
            snap.episodic.episodes.len(),
            snap.procedural.procedures.len(),
            snap.transactive.profiles.len(),
            snap.transactive.team_patterns.len()
        );
        if agent.is_some() {
            println!(
                "{}",
                serde_json::to_string_pretty(&snap).expect("store sets serialize")
            );
        }
    }
    Ok(())
}
