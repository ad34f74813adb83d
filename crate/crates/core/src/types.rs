//! Data model for the three memory kinds: episodic records, consolidated
//! procedures, and transactive (who-knows-what) statistics.
//!
//! Everything here is a plain value object. Field names double as the JSON
//! persistence and run-log schema, so renaming a field is a format change.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{MemError, Result};

/// Fraction of the combined score (rescaled to [0,1]) at or above which a
/// task counts as successful.
pub const SUCCESS_THRESHOLD: f64 = 0.60;

/// Reliability reported for procedures and agents with no evidence yet.
pub const NEUTRAL_RELIABILITY: f64 = 0.5;

/// Owner id used for procedures written into the shared store.
pub const SHARED_OWNER: &str = "shared";

/// Scores from the environment plus the success flag derived from them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub ts: f64,
    pub cs: f64,
    pub success: bool,
}

impl Outcome {
    /// Builds an outcome whose success flag is `combined/100 >= threshold`.
    pub fn scored(ts: f64, cs: f64, threshold: f64) -> Result<Self> {
        let s = combined_score(ts, cs)?;
        Ok(Outcome {
            ts,
            cs,
            success: s / 100.0 >= threshold,
        })
    }

    /// Builds an outcome for environments that report success directly.
    pub fn with_flag(ts: f64, cs: f64, success: bool) -> Result<Self> {
        combined_score(ts, cs)?;
        Ok(Outcome { ts, cs, success })
    }

    pub fn combined(&self) -> f64 {
        (self.ts + self.cs) / 2.0
    }
}

fn check_score(name: &'static str, value: f64) -> Result<()> {
    if !(0.0..=100.0).contains(&value) {
        return Err(MemError::ScoreOutOfRange { name, value });
    }
    Ok(())
}

/// Per-task combined score `S = (TS + CS) / 2` on the 0-100 scale.
pub fn combined_score(ts: f64, cs: f64) -> Result<f64> {
    check_score("ts", ts)?;
    check_score("cs", cs)?;
    Ok((ts + cs) / 2.0)
}

/// Stable reference to an episode: the owning agent plus its task position.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EpisodeRef {
    pub agent_id: String,
    pub task_index: u64,
}

impl fmt::Display for EpisodeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.agent_id, self.task_index)
    }
}

/// One task execution record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub agent_id: String,
    pub task_index: u64,
    pub timestamp: String,
    pub task_description: String,
    pub team_composition: Vec<String>,
    pub actions: Vec<String>,
    pub outcome: Outcome,
    pub env_context: String,
    pub lessons: Vec<String>,
    pub related_procedures: BTreeSet<String>,
}

impl Episode {
    pub fn reference(&self) -> EpisodeRef {
        EpisodeRef {
            agent_id: self.agent_id.clone(),
            task_index: self.task_index,
        }
    }

    /// Importance used by retrieval: the combined score rescaled to [0,1].
    pub fn importance(&self) -> f64 {
        self.outcome.combined() / 100.0
    }

    /// Text embedded for retrieval: task description followed by the lessons.
    /// The environment context is not embedded.
    pub fn embedding_text(&self) -> String {
        let mut text = self.task_description.clone();
        for lesson in &self.lessons {
            text.push(' ');
            text.push_str(lesson);
        }
        text
    }
}

/// A consolidated, reusable strategy backed by successful source episodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Procedure {
    pub id: String,
    pub owner_id: String,
    pub created_at: String,
    pub updated_at: String,
    pub title: String,
    pub knowledge: String,
    pub successes: u64,
    pub failures: u64,
    pub source_episodes: BTreeSet<EpisodeRef>,
}

impl Procedure {
    pub fn reliability(&self) -> f64 {
        derive_reliability(self.successes, self.failures)
    }

    pub fn embedding_text(&self) -> String {
        format!("{} {}", self.title, self.knowledge)
    }
}

/// Empirical success rate `s / (s + f)`, neutral 0.5 without evidence.
pub fn derive_reliability(successes: u64, failures: u64) -> f64 {
    let total = successes + failures;
    if total == 0 {
        NEUTRAL_RELIABILITY
    } else {
        successes as f64 / total as f64
    }
}

/// Attempt/success counters for one task type.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeStats {
    pub attempts: u64,
    pub successes: u64,
}

impl TypeStats {
    pub fn record(&mut self, success: bool) {
        self.attempts += 1;
        self.successes += u64::from(success);
    }

    pub fn rate(&self) -> f64 {
        if self.attempts == 0 {
            NEUTRAL_RELIABILITY
        } else {
            self.successes as f64 / self.attempts as f64
        }
    }

    /// A type counts as suited/specialized once it has at least two attempts
    /// and a success rate of at least one half.
    pub fn is_effective(&self) -> bool {
        self.attempts >= 2 && self.rate() >= 0.5
    }
}

/// Joint task counters with one partner agent.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Collaboration {
    pub joint_tasks: u64,
    pub joint_successes: u64,
}

/// Transactive profile of a single agent.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AgentProfile {
    pub agent_id: String,
    pub specializations: BTreeSet<String>,
    pub proficiency: BTreeMap<String, f64>,
    pub collaboration_history: BTreeMap<String, Collaboration>,
    pub successes: u64,
    pub total_tasks: u64,
    /// Raw counters behind `proficiency`.
    #[serde(default)]
    pub task_type_stats: BTreeMap<String, TypeStats>,
}

impl AgentProfile {
    pub fn new(agent_id: impl Into<String>) -> Self {
        AgentProfile {
            agent_id: agent_id.into(),
            ..Default::default()
        }
    }

    /// Overall success rate, 0.5 before the first task.
    pub fn reliability(&self) -> f64 {
        derive_agent_reliability(self.successes, self.total_tasks)
    }

    /// Folds one task outcome into the aggregate statistics.
    pub fn record_task(&mut self, task_type: &str, success: bool) {
        self.total_tasks += 1;
        self.successes += u64::from(success);
        let stats = self
            .task_type_stats
            .entry(task_type.to_string())
            .or_default();
        stats.record(success);
        let stats = *stats;
        self.proficiency.insert(task_type.to_string(), stats.rate());
        if stats.is_effective() {
            self.specializations.insert(task_type.to_string());
        } else {
            self.specializations.remove(task_type);
        }
    }

    pub fn record_collaboration(&mut self, partner: &str, success: bool) {
        let entry = self
            .collaboration_history
            .entry(partner.to_string())
            .or_default();
        entry.joint_tasks += 1;
        entry.joint_successes += u64::from(success);
    }
}

pub fn derive_agent_reliability(successes: u64, total_tasks: u64) -> f64 {
    if total_tasks == 0 {
        NEUTRAL_RELIABILITY
    } else {
        successes as f64 / total_tasks as f64
    }
}

/// Which task types a team composition has handled, and how well.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TeamPattern {
    pub composition: Vec<String>,
    pub suited_task_types: BTreeMap<String, TypeStats>,
}

impl TeamPattern {
    pub fn new(composition: Vec<String>) -> Self {
        TeamPattern {
            composition,
            suited_task_types: BTreeMap::new(),
        }
    }

    /// Task types for which this team has proven effective.
    pub fn suited(&self) -> BTreeSet<&str> {
        self.suited_task_types
            .iter()
            .filter(|(_, stats)| stats.is_effective())
            .map(|(k, _)| k.as_str())
            .collect()
    }
}

/// Sorted, duplicate-free team composition.
pub fn canonical_team_key<S: AsRef<str>>(ids: &[S]) -> Result<Vec<String>> {
    if ids.is_empty() {
        return Err(MemError::InvalidArgument(
            "team composition must not be empty".into(),
        ));
    }
    let set: BTreeSet<&str> = ids.iter().map(AsRef::as_ref).collect();
    Ok(set.into_iter().map(str::to_string).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MemoryKind {
    Episodic,
    Procedural,
}

impl fmt::Display for MemoryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MemoryKind::Episodic => "episodic",
            MemoryKind::Procedural => "procedural",
        })
    }
}

/// Identifier of a retrievable item. Serialized as `ep:<agent>#<index>` or
/// `proc:<id>`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum ItemId {
    Episode(EpisodeRef),
    Procedure(String),
}

impl ItemId {
    pub fn kind(&self) -> MemoryKind {
        match self {
            ItemId::Episode(_) => MemoryKind::Episodic,
            ItemId::Procedure(_) => MemoryKind::Procedural,
        }
    }
}

impl fmt::Display for ItemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ItemId::Episode(r) => write!(f, "ep:{r}"),
            ItemId::Procedure(id) => write!(f, "proc:{id}"),
        }
    }
}

impl From<ItemId> for String {
    fn from(id: ItemId) -> String {
        id.to_string()
    }
}

impl FromStr for ItemId {
    type Err = MemError;

    fn from_str(s: &str) -> Result<Self> {
        if let Some(rest) = s.strip_prefix("proc:") {
            return Ok(ItemId::Procedure(rest.to_string()));
        }
        if let Some(rest) = s.strip_prefix("ep:") {
            if let Some((agent, idx)) = rest.rsplit_once('#') {
                if let Ok(task_index) = idx.parse() {
                    return Ok(ItemId::Episode(EpisodeRef {
                        agent_id: agent.to_string(),
                        task_index,
                    }));
                }
            }
        }
        Err(MemError::InvalidArgument(format!("malformed item id `{s}`")))
    }
}

impl TryFrom<String> for ItemId {
    type Error = MemError;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Uniform retrieval candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryItem {
    pub kind: MemoryKind,
    pub id: ItemId,
    pub text_for_embedding: String,
    pub importance_raw: f64,
}

impl MemoryItem {
    pub fn from_episode(e: &Episode) -> Self {
        MemoryItem {
            kind: MemoryKind::Episodic,
            id: ItemId::Episode(e.reference()),
            text_for_embedding: e.embedding_text(),
            importance_raw: e.importance(),
        }
    }

    pub fn from_procedure(p: &Procedure) -> Self {
        MemoryItem {
            kind: MemoryKind::Procedural,
            id: ItemId::Procedure(p.id.clone()),
            text_for_embedding: p.embedding_text(),
            importance_raw: p.reliability(),
        }
    }
}
