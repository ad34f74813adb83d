//! Resumable scripted simulation of a lifelong task sequence.
//!
//! Each task is executed by one team member chosen round-robin. With memory
//! enabled the agent retrieves from its view, the rendered memory block is
//! inserted in the action prompt, and the task earns the family's memory
//! bonus when any retrieved item traces back to the same family. The episode
//! is then recorded and consolidation runs on its interval.
//!
//! All progress lives on disk (`runlog.jsonl` plus the store directory), so
//! a simulator can be dropped after any task and reopened to continue.

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::clock::ManualClock;
use crate::embedding::{EmbeddingProvider, HashEmbedder};
use crate::error::{MemError, Result};
use crate::lifecycle::{maybe_consolidate, post_task_update, Generator, StubGenerator, TaskExecution};
use crate::metrics::{RunLog, RunLogEntry};
use crate::prompts::{render_action_prompt, token_proxy, ActionPrompt};
use crate::retrieval::{render_memory_context, retrieve_from, MemoryRecord, Query, RetrievalResult};
use crate::store::MemoryStore;
use crate::types::{ItemId, MemoryKind, Outcome, SUCCESS_THRESHOLD};

use super::config::{EmbeddingKind, GeneratorKind, SimConfig};
use super::tasks::{family_of, generate_task, SyntheticTask};

pub const RUNLOG_FILE: &str = "runlog.jsonl";
pub const CONFIG_FILE: &str = "config.json";
pub const STORE_DIR: &str = "store";

const ROLES: &[&str] = &[
    "planner who splits the task into ordered steps and assigns them to teammates",
    "implementer who writes the changes and runs the required tools",
    "reviewer who checks every result against the task requirements",
    "tester who reproduces failures and confirms fixes with targeted checks",
    "analyst who gathers context from logs, documents and prior results",
    "coordinator who tracks progress and resolves blocking dependencies",
    "specialist who handles domain specific edge cases and data quirks",
];

pub fn agent_role(agent_number: usize) -> &'static str {
    ROLES[(agent_number.max(1) - 1) % ROLES.len()]
}

/// "Other agents" section for `agent_id` within `team`.
pub fn agent_descriptions(team: &[String], agent_id: &str) -> String {
    team.iter()
        .enumerate()
        .filter(|(_, a)| a.as_str() != agent_id)
        .map(|(i, a)| format!("- {a}: {}", agent_role(i + 1)))
        .collect::<Vec<_>>()
        .join("\n")
}

pub struct Simulator {
    cfg: SimConfig,
    out_dir: PathBuf,
    agents: Vec<String>,
    store: Option<MemoryStore>,
    clock: Arc<ManualClock>,
    embedder: Box<dyn EmbeddingProvider>,
    generator: Box<dyn Generator>,
    log: RunLog,
}

impl std::fmt::Debug for Simulator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Simulator")
            .field("out_dir", &self.out_dir)
            .field("completed", &self.log.len())
            .finish_non_exhaustive()
    }
}

impl Simulator {
    /// Opens a simulation directory with the built-in embedder and generator.
    pub fn open(cfg: SimConfig, out_dir: impl AsRef<Path>) -> Result<Self> {
        if cfg.embedding == EmbeddingKind::External {
            return Err(MemError::config(
                "embedding.provider",
                "external providers must be supplied through Simulator::with_providers",
            ));
        }
        if cfg.generator == GeneratorKind::External {
            return Err(MemError::config(
                "generator.kind",
                "external generators must be supplied through Simulator::with_providers",
            ));
        }
        let embedder = HashEmbedder::new(cfg.embedding_dim)?;
        Self::with_providers(cfg, out_dir, Box::new(embedder), Box::new(StubGenerator))
    }

    pub fn with_providers(
        cfg: SimConfig,
        out_dir: impl AsRef<Path>,
        embedder: Box<dyn EmbeddingProvider>,
        generator: Box<dyn Generator>,
    ) -> Result<Self> {
        cfg.validate()?;
        let out_dir = out_dir.as_ref().to_path_buf();
        fs::create_dir_all(&out_dir).map_err(|e| MemError::io(&out_dir, e))?;

        let cfg_path = out_dir.join(CONFIG_FILE);
        let cfg_json = serde_json::to_value(&cfg).expect("config serializes");
        if cfg_path.exists() {
            let text = fs::read_to_string(&cfg_path).map_err(|e| MemError::io(&cfg_path, e))?;
            let stored: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| MemError::Load {
                    path: cfg_path.clone(),
                    message: e.to_string(),
                })?;
            if stored != cfg_json {
                return Err(MemError::Load {
                    path: cfg_path,
                    message: "existing run was started with a different configuration".into(),
                });
            }
        } else {
            let mut bytes = serde_json::to_vec_pretty(&cfg_json).expect("config serializes");
            bytes.push(b'\n');
            crate::store::write_atomic(&cfg_path, &bytes)?;
        }

        let log_path = out_dir.join(RUNLOG_FILE);
        let log = if log_path.exists() {
            RunLog::read_jsonl(&log_path)?
        } else {
            RunLog::default()
        };

        let agents = cfg.agents();
        let clock = Arc::new(ManualClock::default());
        let store = if cfg.memory_enabled {
            let store = MemoryStore::open(out_dir.join(STORE_DIR), cfg.topology, &agents)?
                .with_clock(clock.clone());
            // a crash between the store write and the log append leaves the
            // store one task ahead; replaying would duplicate that episode
            let recorded = store
                .views()
                .iter()
                .flat_map(|v| store.episodes(v).iter().map(|e| e.task_index))
                .max()
                .unwrap_or(0);
            if recorded > log.len() as u64 {
                return Err(MemError::Load {
                    path: log_path,
                    message: format!(
                        "store holds task {recorded} but the run log ends at task {}",
                        log.len()
                    ),
                });
            }
            Some(store)
        } else {
            None
        };
        Ok(Simulator {
            cfg,
            out_dir,
            agents,
            store,
            clock,
            embedder,
            generator,
            log,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn log(&self) -> &RunLog {
        &self.log
    }

    pub fn store(&self) -> Option<&MemoryStore> {
        self.store.as_ref()
    }

    pub fn out_dir(&self) -> &Path {
        &self.out_dir
    }

    pub fn is_finished(&self) -> bool {
        self.log.len() as u64 >= self.cfg.n_tasks
    }

    fn matches_family(&self, result: &RetrievalResult, family: usize) -> bool {
        let n = self.cfg.families.len();
        result.records.iter().any(|rec| match rec {
            MemoryRecord::Episodic(e) => family_of(e.task_index, n) == family,
            MemoryRecord::Procedural(p) => p
                .source_episodes
                .iter()
                .any(|r| family_of(r.task_index, n) == family),
        })
    }

    /// Executes the next task. Returns `None` once the sequence is complete.
    pub fn step(&mut self) -> Result<Option<RunLogEntry>> {
        if self.is_finished() {
            return Ok(None);
        }
        let task_index = self.log.len() as u64 + 1;
        let task: SyntheticTask = generate_task(&self.cfg.families, task_index, self.cfg.seed);
        let agent_number = ((task_index - 1) % self.cfg.team_size as u64) as usize + 1;
        let agent_id = self.agents[agent_number - 1].clone();
        self.clock.set_task(task_index);

        let result = match &self.store {
            Some(store) => {
                let view = store.view(&agent_id)?;
                let procedures = if self.cfg.episodic_only {
                    Vec::new()
                } else {
                    store.procedures(&view)
                };
                let q = Query::new(task.description.clone())
                    .with_k(self.cfg.retrieval_k)
                    .with_threshold(self.cfg.proc_threshold);
                retrieve_from(store.episodes(&view), &procedures, &q, self.embedder.as_ref())?
            }
            None => RetrievalResult::default(),
        };
        let memory_block = render_memory_context(&result);
        let bonus = if self.matches_family(&result, task.family_index) {
            task.memory_bonus
        } else {
            0.0
        };
        let ts = (task.base_ts + bonus).clamp(0.0, 100.0);
        let cs = (task.base_cs + bonus).clamp(0.0, 100.0);
        let outcome = Outcome::scored(ts, cs, SUCCESS_THRESHOLD)?;

        let descriptions = agent_descriptions(&self.agents, &agent_id);
        let prompt = render_action_prompt(&ActionPrompt {
            agent_id: &agent_id,
            agent_profile: agent_role(agent_number),
            reasoning_prompt: "",
            memory_block: &memory_block,
            task: &task.description,
            agent_descriptions: &descriptions,
        });
        let response = task.actions.join("\n");

        let procedures_used: Vec<String> = match result.kind_used {
            Some(MemoryKind::Procedural) => result
                .items
                .iter()
                .filter_map(|s| match &s.item.id {
                    ItemId::Procedure(id) => Some(id.clone()),
                    ItemId::Episode(_) => None,
                })
                .collect(),
            _ => Vec::new(),
        };

        if let Some(store) = self.store.as_mut() {
            let view = store.view(&agent_id)?;
            post_task_update(
                store,
                &view,
                &TaskExecution {
                    task_index,
                    description: task.description.clone(),
                    team: self.agents.clone(),
                    actions: task.actions.clone(),
                    outcome,
                    env_context: format!("family={} seed={}", task.task_id, task.seed),
                    role: None,
                },
                &procedures_used,
                self.generator.as_ref(),
                &task.task_type,
            )?;
            maybe_consolidate(
                store,
                &view,
                &self.cfg.consolidation(),
                self.generator.as_ref(),
                self.embedder.as_ref(),
            )?;
        }

        let entry = RunLogEntry {
            task_index,
            task_id: task.task_id.clone(),
            ts,
            cs,
            tokens_in: token_proxy(&prompt),
            tokens_out: token_proxy(&response),
            team_size: self.cfg.team_size,
            kind_used: result.kind_used,
            retrieved_ids: result.ids(),
            procedures_used,
            agent_id,
            memory_tokens: token_proxy(&memory_block),
        };
        self.append_log(&entry)?;
        Ok(Some(entry))
    }

    fn append_log(&mut self, entry: &RunLogEntry) -> Result<()> {
        let path = self.out_dir.join(RUNLOG_FILE);
        let mut line = serde_json::to_string(entry).expect("log entries serialize");
        line.push('\n');
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| MemError::io(&path, e))?;
        f.write_all(line.as_bytes())
            .and_then(|_| f.sync_all())
            .map_err(|e| MemError::io(&path, e))?;
        self.log.entries.push(entry.clone());
        Ok(())
    }

    pub fn run_to_end(&mut self) -> Result<&RunLog> {
        while self.step()?.is_some() {}
        Ok(&self.log)
    }
}

/// Runs (or resumes) a full simulation in `out_dir` and returns its log.
pub fn run_sim(cfg: &SimConfig, out_dir: impl AsRef<Path>) -> Result<RunLog> {
    let mut sim = Simulator::open(cfg.clone(), out_dir)?;
    sim.run_to_end()?;
    Ok(sim.log)
}
