use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::embedding::DEFAULT_DIM;
use crate::error::{MemError, Result};
use crate::lifecycle::ConsolidationConfig;
use crate::retrieval::{DEFAULT_K, DEFAULT_PROC_THRESHOLD};
use crate::store::Topology;

use super::tasks::{default_families, TaskFamily};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingKind {
    Hash,
    External,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    Stub,
    External,
}

/// Simulation settings. Parsed from JSON with nested sections for the
/// dotted keys (`consolidation.n` lives at `{"consolidation": {"n": ..}}`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub topology: Topology,
    pub team_size: usize,
    pub n_tasks: u64,
    pub seed: u64,
    pub memory_enabled: bool,
    pub consolidation_n: u64,
    pub cluster_threshold: f64,
    pub retrieval_k: usize,
    pub proc_threshold: f64,
    /// Never consult procedural memory (counterfactual runs).
    pub episodic_only: bool,
    pub embedding: EmbeddingKind,
    pub embedding_dim: usize,
    pub generator: GeneratorKind,
    pub families: Vec<TaskFamily>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            topology: Topology::Local,
            team_size: 3,
            n_tasks: 60,
            seed: 0,
            memory_enabled: true,
            consolidation_n: 5,
            cluster_threshold: 0.80,
            retrieval_k: DEFAULT_K,
            proc_threshold: DEFAULT_PROC_THRESHOLD,
            episodic_only: false,
            embedding: EmbeddingKind::Hash,
            embedding_dim: DEFAULT_DIM,
            generator: GeneratorKind::Stub,
            families: default_families(),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConsolidation {
    n: Option<u64>,
    cluster_threshold: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRetrieval {
    k: Option<usize>,
    proc_threshold: Option<f64>,
    episodic_only: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEmbedding {
    provider: Option<String>,
    dim: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGenerator {
    kind: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    topology: Option<String>,
    team_size: Option<usize>,
    n_tasks: Option<u64>,
    seed: Option<u64>,
    memory_enabled: Option<bool>,
    #[serde(default)]
    consolidation: RawConsolidation,
    #[serde(default)]
    retrieval: RawRetrieval,
    #[serde(default)]
    embedding: RawEmbedding,
    #[serde(default)]
    generator: RawGenerator,
    families: Option<Vec<TaskFamily>>,
}

impl SimConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let raw: RawConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            MemError::config(path, e.into_inner().to_string())
        })?;
        let d = SimConfig::default();
        let cfg = SimConfig {
            topology: match raw.topology {
                Some(t) => t.parse()?,
                None => d.topology,
            },
            team_size: raw.team_size.unwrap_or(d.team_size),
            n_tasks: raw.n_tasks.unwrap_or(d.n_tasks),
            seed: raw.seed.unwrap_or(d.seed),
            memory_enabled: raw.memory_enabled.unwrap_or(d.memory_enabled),
            consolidation_n: raw.consolidation.n.unwrap_or(d.consolidation_n),
            cluster_threshold: raw
                .consolidation
                .cluster_threshold
                .unwrap_or(d.cluster_threshold),
            retrieval_k: raw.retrieval.k.unwrap_or(d.retrieval_k),
            proc_threshold: raw.retrieval.proc_threshold.unwrap_or(d.proc_threshold),
            episodic_only: raw.retrieval.episodic_only.unwrap_or(d.episodic_only),
            embedding: match raw.embedding.provider.as_deref() {
                None | Some("hash") => EmbeddingKind::Hash,
                Some("external") => EmbeddingKind::External,
                Some(other) => {
                    return Err(MemError::config(
                        "embedding.provider",
                        format!("expected hash or external, got `{other}`"),
                    ))
                }
            },
            embedding_dim: raw.embedding.dim.unwrap_or(d.embedding_dim),
            generator: match raw.generator.kind.as_deref() {
                None | Some("stub") => GeneratorKind::Stub,
                Some("external") => GeneratorKind::External,
                Some(other) => {
                    return Err(MemError::config(
                        "generator.kind",
                        format!("expected stub or external, got `{other}`"),
                    ))
                }
            },
            families: raw.families.unwrap_or(d.families),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| MemError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.team_size == 0 {
            return Err(MemError::config("team_size", "must be >= 1"));
        }
        if self.n_tasks == 0 {
            return Err(MemError::config("n_tasks", "must be >= 1"));
        }
        if self.retrieval_k == 0 {
            return Err(MemError::config("retrieval.k", "must be >= 1"));
        }
        if !self.proc_threshold.is_finite() {
            return Err(MemError::config("retrieval.proc_threshold", "must be finite"));
        }
        if self.embedding_dim < crate::embedding::MIN_DIM {
            return Err(MemError::config("embedding.dim", "must be >= 8"));
        }
        self.consolidation().validate()?;
        if self.families.is_empty() {
            return Err(MemError::config("families", "at least one family required"));
        }
        for (i, f) in self.families.iter().enumerate() {
            f.validate()
                .map_err(|m| MemError::config(format!("families[{i}]"), m))?;
        }
        Ok(())
    }

    pub fn consolidation(&self) -> ConsolidationConfig {
        ConsolidationConfig {
            interval_n: self.consolidation_n,
            cluster_threshold: self.cluster_threshold,
            ..ConsolidationConfig::default()
        }
    }

    pub fn agents(&self) -> Vec<String> {
        (1..=self.team_size).map(|i| format!("agent_{i}")).collect()
    }
}
