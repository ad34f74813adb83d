//! Post-task updates, lesson extraction and periodic consolidation of
//! episodes into procedures.

use std::collections::{BTreeMap, BTreeSet};

use log::warn;
use serde::{Deserialize, Serialize};

use crate::embedding::{cosine, fnv1a64, EmbeddingProvider, EmbeddingVector};
use crate::error::{MemError, Result};
use crate::prompts::{
    parse_generalize_response, parse_lessons_response, render_generalize_prompt,
    render_lesson_prompt, LessonPrompt, GENERALIZE_SYSTEM_PROMPT, LESSON_SYSTEM_PROMPT,
};
use crate::store::{MemoryStore, MemoryView, Topology};
use crate::types::{Episode, EpisodeRef, Outcome, Procedure, SHARED_OWNER};

/// Lesson stored when the generator fails.
pub const EXTRACTION_FAILED: &str = "<extraction failed>";

pub struct LessonRequest<'a> {
    pub task: &'a str,
    pub actions: &'a [String],
    pub outcome: &'a Outcome,
    pub role: Option<&'a str>,
}

/// Produces lessons after a task and strategies during consolidation.
pub trait Generator {
    /// One to three non-empty lessons.
    fn extract_lessons(&self, req: &LessonRequest<'_>) -> Result<Vec<String>>;
    /// `(title, knowledge)` generalized from successful episodes.
    fn generalize(&self, episodes: &[&Episode]) -> Result<(String, String)>;
}

impl<G: Generator + ?Sized> Generator for &G {
    fn extract_lessons(&self, req: &LessonRequest<'_>) -> Result<Vec<String>> {
        (**self).extract_lessons(req)
    }

    fn generalize(&self, episodes: &[&Episode]) -> Result<(String, String)> {
        (**self).generalize(episodes)
    }
}

/// Deterministic template-based generator used offline.
///
/// Lessons are keyed on the success flag; the task-text hash picks the order
/// in which the lessons are returned. Generalization titles the procedure
/// with the first six tokens of the most frequent lesson and joins the
/// distinct lessons in sorted order.
#[derive(Debug, Default, Clone, Copy)]
pub struct StubGenerator;

impl StubGenerator {
    pub fn lessons(task: &str, actions: &[String], success: bool) -> Vec<String> {
        let mut lessons = match (actions.first(), success) {
            (None, true) => vec!["Restate the task goal before acting".to_string()],
            (None, false) => vec!["Break the task into concrete steps before acting".to_string()],
            (Some(first), true) => {
                let mut l = vec![format!("Call {first} first")];
                if actions.len() > 1 {
                    l.push(format!("Then run {}", actions[1..].join(", ")));
                }
                l
            }
            (Some(first), false) => {
                let last = actions.last().unwrap_or(first);
                let mut l = vec![format!("Do not stop after {first}")];
                if actions.len() > 1 {
                    l.push(format!("Verify results with {last} before finishing"));
                }
                l
            }
        };
        if fnv1a64(task.as_bytes()) % 2 == 1 {
            lessons.reverse();
        }
        lessons
    }
}

impl Generator for StubGenerator {
    fn extract_lessons(&self, req: &LessonRequest<'_>) -> Result<Vec<String>> {
        Ok(Self::lessons(req.task, req.actions, req.outcome.success))
    }

    fn generalize(&self, episodes: &[&Episode]) -> Result<(String, String)> {
        let mut freq: BTreeMap<&str, usize> = BTreeMap::new();
        for e in episodes {
            for l in &e.lessons {
                *freq.entry(l.as_str()).or_default() += 1;
            }
        }
        // ties go to the lexicographically smallest lesson
        let top = freq
            .iter()
            .max_by(|a, b| a.1.cmp(b.1).then_with(|| b.0.cmp(a.0)))
            .map(|(l, _)| *l)
            .ok_or_else(|| MemError::Generator("no lessons to generalize".into()))?;
        let title = top.split_whitespace().take(6).collect::<Vec<_>>().join(" ");
        let knowledge = freq.keys().copied().collect::<Vec<_>>().join("; ");
        Ok((title, knowledge))
    }
}

/// Generator backed by a text-completion callback `(system, user) -> reply`,
/// driven by the standard prompt templates.
pub struct PromptGenerator<F> {
    complete: F,
}

impl<F> PromptGenerator<F>
where
    F: Fn(&str, &str) -> std::result::Result<String, String>,
{
    pub fn new(complete: F) -> Self {
        PromptGenerator { complete }
    }
}

impl<F> Generator for PromptGenerator<F>
where
    F: Fn(&str, &str) -> std::result::Result<String, String>,
{
    fn extract_lessons(&self, req: &LessonRequest<'_>) -> Result<Vec<String>> {
        let prompt = render_lesson_prompt(&LessonPrompt {
            task_description: req.task,
            actions: req.actions,
            outcome: Some(req.outcome),
            role: req.role,
            task_summary: None,
        });
        let reply = (self.complete)(LESSON_SYSTEM_PROMPT, &prompt).map_err(MemError::Generator)?;
        parse_lessons_response(&reply)
    }

    fn generalize(&self, episodes: &[&Episode]) -> Result<(String, String)> {
        let prompt = render_generalize_prompt(episodes);
        let reply =
            (self.complete)(GENERALIZE_SYSTEM_PROMPT, &prompt).map_err(MemError::Generator)?;
        parse_generalize_response(&reply)
    }
}

fn checked_lessons(lessons: Result<Vec<String>>) -> Result<Vec<String>> {
    let lessons = lessons?;
    if lessons.is_empty() || lessons.len() > 3 || lessons.iter().any(|l| l.trim().is_empty()) {
        return Err(MemError::Generator(format!(
            "expected 1-3 non-empty lessons, got {lessons:?}"
        )));
    }
    Ok(lessons)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsolidationConfig {
    pub interval_n: u64,
    pub cluster_threshold: f64,
    pub min_cluster: usize,
    pub min_successes: usize,
}

impl Default for ConsolidationConfig {
    fn default() -> Self {
        ConsolidationConfig {
            interval_n: 5,
            cluster_threshold: 0.80,
            min_cluster: 2,
            min_successes: 2,
        }
    }
}

impl ConsolidationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.interval_n == 0 {
            return Err(MemError::config("consolidation.n", "must be >= 1"));
        }
        if !(self.cluster_threshold > 0.0 && self.cluster_threshold <= 1.0) {
            return Err(MemError::config(
                "consolidation.cluster_threshold",
                "must lie in (0, 1]",
            ));
        }
        Ok(())
    }
}

/// A finished task as reported by the environment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaskExecution {
    pub task_index: u64,
    pub description: String,
    pub team: Vec<String>,
    pub actions: Vec<String>,
    pub outcome: Outcome,
    #[serde(default)]
    pub env_context: String,
    #[serde(default)]
    pub role: Option<String>,
}

/// Records a finished task: extracts lessons, appends the episode, updates
/// the counters of every procedure used, and refreshes transactive memory.
pub fn post_task_update(
    store: &mut MemoryStore,
    view: &MemoryView,
    task: &TaskExecution,
    procedures_used: &[String],
    generator: &dyn Generator,
    task_type: &str,
) -> Result<Episode> {
    for id in procedures_used {
        if store.procedure(view, id).is_none() {
            return Err(MemError::UnknownProcedure(id.clone()));
        }
    }
    let lessons = checked_lessons(generator.extract_lessons(&LessonRequest {
        task: &task.description,
        actions: &task.actions,
        outcome: &task.outcome,
        role: task.role.as_deref(),
    }))
    .unwrap_or_else(|e| {
        warn!(
            "lesson extraction failed for task {} ({}): {e}",
            task.task_index, view.agent_id
        );
        vec![EXTRACTION_FAILED.to_string()]
    });
    let episode = Episode {
        agent_id: view.agent_id.clone(),
        task_index: task.task_index,
        timestamp: store.now(),
        task_description: task.description.clone(),
        team_composition: task.team.clone(),
        actions: task.actions.clone(),
        outcome: task.outcome,
        env_context: task.env_context.clone(),
        lessons,
        related_procedures: procedures_used.iter().cloned().collect(),
    };
    store.append_episode(view, episode.clone())?;
    let used: BTreeSet<&String> = procedures_used.iter().collect();
    for id in used {
        store.record_procedure_outcome(view, id, task.outcome.success)?;
    }
    store.update_transactive(view, &episode, task_type)?;
    Ok(episode)
}

/// Mean of the embeddings of an episode's lessons; failed extractions count
/// as no lessons.
pub fn lesson_embedding(e: &Episode, embedder: &dyn EmbeddingProvider) -> EmbeddingVector {
    let vs: Vec<EmbeddingVector> = e
        .lessons
        .iter()
        .filter(|l| l.as_str() != EXTRACTION_FAILED)
        .map(|l| embedder.embed(l))
        .collect();
    EmbeddingVector::mean(&vs, embedder.dimension())
}

/// Greedy single-link agglomerative clustering: repeatedly merge the two
/// clusters with the highest single-link similarity while it is at least
/// `threshold`. Clusters are returned as sorted index lists ordered by their
/// smallest member.
pub fn cluster_by_lessons(
    episodes: &[Episode],
    threshold: f64,
    embedder: &dyn EmbeddingProvider,
) -> Result<Vec<Vec<usize>>> {
    let n = episodes.len();
    let vecs: Vec<EmbeddingVector> = episodes
        .iter()
        .map(|e| lesson_embedding(e, embedder))
        .collect();
    // link[i][j]: single-link similarity between active clusters i and j
    let mut link = vec![vec![f64::NEG_INFINITY; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let c = cosine(&vecs[i], &vecs[j])?;
            link[i][j] = c;
            link[j][i] = c;
        }
    }
    let mut members: Vec<Option<Vec<usize>>> = (0..n).map(|i| Some(vec![i])).collect();
    loop {
        let mut best: Option<(usize, usize, f64)> = None;
        for i in 0..n {
            if members[i].is_none() {
                continue;
            }
            for j in (i + 1)..n {
                if members[j].is_none() {
                    continue;
                }
                if best.is_none_or(|(_, _, b)| link[i][j] > b) {
                    best = Some((i, j, link[i][j]));
                }
            }
        }
        let Some((i, j, _)) = best.filter(|b| b.2 >= threshold) else {
            break;
        };
        let moved = members[j].take().unwrap_or_default();
        members[i].as_mut().expect("active cluster").extend(moved);
        for k in 0..n {
            if k != i && members[k].is_some() {
                let merged = link[i][k].max(link[j][k]);
                link[i][k] = merged;
                link[k][i] = merged;
            }
        }
    }
    let mut clusters: Vec<Vec<usize>> = members
        .into_iter()
        .flatten()
        .map(|mut c| {
            c.sort_unstable();
            c
        })
        .collect();
    clusters.sort_by_key(|c| c[0]);
    Ok(clusters)
}

/// Content-derived procedure id from its source set.
pub fn procedure_id(sources: &BTreeSet<EpisodeRef>) -> String {
    let key = sources
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("|");
    format!("p-{:016x}", fnv1a64(key.as_bytes()))
}

/// Result of one consolidation pass.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConsolidationOutcome {
    /// New procedures that survived pruning.
    pub created: Vec<Procedure>,
    /// Ids of pre-existing procedures pruned as redundant.
    pub removed: Vec<String>,
}

/// Ordering for procedures sharing an identical source set: higher
/// reliability first, then earlier creation, then lower id.
fn keep_order(a: &Procedure, b: &Procedure) -> std::cmp::Ordering {
    b.reliability()
        .total_cmp(&a.reliability())
        .then_with(|| a.created_at.cmp(&b.created_at))
        .then_with(|| a.id.cmp(&b.id))
}

/// Ids of procedures that are redundant: their source set is a strict
/// subset of another's, or equal to a preferred procedure's.
pub fn redundant_procedures(procs: &[&Procedure]) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for p in procs {
        for q in procs {
            if p.id == q.id {
                continue;
            }
            let strict = p.source_episodes.len() < q.source_episodes.len()
                && p.source_episodes.is_subset(&q.source_episodes);
            let dominated_tie = p.source_episodes == q.source_episodes
                && keep_order(q, p) == std::cmp::Ordering::Less;
            if strict || dominated_tie {
                out.insert(p.id.clone());
                break;
            }
        }
    }
    out
}

/// Clusters `episodes` by lesson similarity and turns clusters with enough
/// successful members into procedures, then prunes redundant procedures
/// across both the new candidates and `existing`.
///
/// A candidate whose source set equals an existing procedure's is dropped in
/// favor of the existing one so application counters are never reset.
pub fn consolidate(
    episodes: &[Episode],
    existing: &[&Procedure],
    cfg: &ConsolidationConfig,
    generator: &dyn Generator,
    embedder: &dyn EmbeddingProvider,
    owner: &str,
    now: &str,
) -> Result<ConsolidationOutcome> {
    cfg.validate()?;
    let clusters = cluster_by_lessons(episodes, cfg.cluster_threshold, embedder)?;
    let mut candidates = Vec::new();
    for cluster in clusters.iter().filter(|c| c.len() >= cfg.min_cluster) {
        let succ: Vec<&Episode> = cluster
            .iter()
            .map(|&i| &episodes[i])
            .filter(|e| e.outcome.success)
            .collect();
        if succ.len() < cfg.min_successes {
            continue;
        }
        let (title, knowledge) = match generator.generalize(&succ) {
            Ok((t, k)) if !t.trim().is_empty() && !k.trim().is_empty() => (t, k),
            Ok(_) => {
                warn!("generalization returned an empty title or knowledge; cluster skipped");
                continue;
            }
            Err(e) => {
                warn!("generalization failed; cluster skipped: {e}");
                continue;
            }
        };
        let sources: BTreeSet<EpisodeRef> = succ.iter().map(|e| e.reference()).collect();
        if existing.iter().any(|p| p.source_episodes == sources) {
            continue;
        }
        candidates.push(Procedure {
            id: procedure_id(&sources),
            owner_id: owner.to_string(),
            created_at: now.to_string(),
            updated_at: now.to_string(),
            title,
            knowledge,
            successes: succ.len() as u64,
            failures: 0,
            source_episodes: sources,
        });
    }
    let all: Vec<&Procedure> = existing.iter().copied().chain(candidates.iter()).collect();
    let redundant = redundant_procedures(&all);
    let removed = existing
        .iter()
        .filter(|p| redundant.contains(&p.id))
        .map(|p| p.id.clone())
        .collect();
    let created = candidates
        .into_iter()
        .filter(|p| !redundant.contains(&p.id))
        .collect();
    Ok(ConsolidationOutcome { created, removed })
}

fn consolidation_owner(view: &MemoryView) -> String {
    match view.topology {
        Topology::Local => view.agent_id.clone(),
        Topology::Shared | Topology::Hybrid => SHARED_OWNER.to_string(),
    }
}

/// Runs a consolidation pass over every episode visible to `view` and
/// applies it to the view's procedural store, regardless of the interval.
pub fn force_consolidate(
    store: &mut MemoryStore,
    view: &MemoryView,
    cfg: &ConsolidationConfig,
    generator: &dyn Generator,
    embedder: &dyn EmbeddingProvider,
) -> Result<ConsolidationOutcome> {
    let now = store.now();
    let owner = consolidation_owner(view);
    let outcome = consolidate(
        store.episodes(view),
        &store.procedures(view),
        cfg,
        generator,
        embedder,
        &owner,
        &now,
    )?;
    for id in &outcome.removed {
        store.remove_procedure(view, id)?;
    }
    for p in &outcome.created {
        store.upsert_procedure(view, p.clone())?;
    }
    let count = store.episodes(view).len() as u64;
    store.set_consolidated_at(view, count)?;
    Ok(outcome)
}

/// Consolidates once at least `interval_n` episodes have arrived since the
/// last pass. Returns the procedures created (empty when not triggered).
pub fn maybe_consolidate(
    store: &mut MemoryStore,
    view: &MemoryView,
    cfg: &ConsolidationConfig,
    generator: &dyn Generator,
    embedder: &dyn EmbeddingProvider,
) -> Result<Vec<Procedure>> {
    cfg.validate()?;
    let count = store.episodes(view).len() as u64;
    let since = count.saturating_sub(store.consolidated_at_count(view));
    if since < cfg.interval_n {
        return Ok(Vec::new());
    }
    Ok(force_consolidate(store, view, cfg, generator, embedder)?.created)
}
