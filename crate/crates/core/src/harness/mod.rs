//! Deterministic scripted-task simulator, team-size sweeps and their config.

pub mod config;
pub mod sim;
pub mod sweep;
pub mod tasks;

pub use config::{EmbeddingKind, GeneratorKind, SimConfig};
pub use sim::{agent_descriptions, agent_role, run_sim, Simulator, CONFIG_FILE, RUNLOG_FILE, STORE_DIR};
pub use sweep::{sweep, SweepCell, SweepReport, SWEEP_CONSOLIDATION_N};
pub use tasks::{default_families, family_of, generate_task, SyntheticTask, TaskFamily};
