//! Relevance + importance retrieval with procedural-first fallback.
//!
//! Each candidate gets `score = z(rel) + z(imp)` where both terms are
//! standardized over the candidate pool of a single memory kind. Procedures
//! are consulted first; if none is at least `proc_fallback_threshold`
//! relevant (raw cosine), episodes are used instead.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::embedding::{cosine, EmbeddingProvider};
use crate::error::{MemError, Result};
use crate::store::{MemoryStore, MemoryView, StoreSet};
use crate::types::{Episode, ItemId, MemoryItem, MemoryKind, Procedure};

pub const DEFAULT_K: usize = 3;
pub const DEFAULT_PROC_THRESHOLD: f64 = 0.30;
const ZERO_STD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Query {
    pub text: String,
    pub k: usize,
    pub proc_fallback_threshold: f64,
}

impl Query {
    pub fn new(text: impl Into<String>) -> Self {
        Query {
            text: text.into(),
            k: DEFAULT_K,
            proc_fallback_threshold: DEFAULT_PROC_THRESHOLD,
        }
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k = k;
        self
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.proc_fallback_threshold = threshold;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(MemError::InvalidArgument("retrieval k must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredItem {
    pub item: MemoryItem,
    pub rel: f64,
    pub imp: f64,
    pub rel_z: f64,
    pub imp_z: f64,
    pub score: f64,
}

/// The full record behind a retrieved item, kept for prompt rendering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MemoryRecord {
    Episodic(Episode),
    Procedural(Procedure),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RetrievalResult {
    /// `None` when nothing was retrievable.
    pub kind_used: Option<MemoryKind>,
    pub items: Vec<ScoredItem>,
    pub records: Vec<MemoryRecord>,
}

impl RetrievalResult {
    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn ids(&self) -> Vec<ItemId> {
        self.items.iter().map(|s| s.item.id.clone()).collect()
    }
}

/// Importance of an item resolved against a store snapshot: reliability for
/// procedures, combined score / 100 for episodes.
pub fn importance(item: &MemoryItem, stores: &StoreSet) -> Result<f64> {
    match &item.id {
        ItemId::Procedure(id) => stores
            .procedure(id)
            .map(Procedure::reliability)
            .ok_or_else(|| MemError::DanglingReference(item.id.to_string())),
        ItemId::Episode(r) => stores
            .episode(r)
            .map(Episode::importance)
            .ok_or_else(|| MemError::DanglingReference(item.id.to_string())),
    }
}

fn z_scores(values: &[f64]) -> Vec<f64> {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    if std < ZERO_STD {
        vec![0.0; values.len()]
    } else {
        values.iter().map(|v| (v - mean) / std).collect()
    }
}

/// Scores closer than this rank as ties, so rounding noise in the z-scores
/// cannot decide between items that are equal in exact arithmetic.
pub const SCORE_RESOLUTION: f64 = 1e-9;

/// Integer ranking key for a score at [`SCORE_RESOLUTION`].
pub fn score_key(score: f64) -> i64 {
    (score / SCORE_RESOLUTION).round() as i64
}

/// Ranking order: score desc, then raw relevance desc, then id asc.
pub fn rank_order(a: &ScoredItem, b: &ScoredItem) -> Ordering {
    score_key(b.score)
        .cmp(&score_key(a.score))
        .then_with(|| b.rel.total_cmp(&a.rel))
        .then_with(|| a.item.id.cmp(&b.item.id))
}

/// Scores and ranks a single-kind pool.
pub fn score_pool(
    q: &Query,
    pool: &[MemoryItem],
    embedder: &dyn EmbeddingProvider,
) -> Result<Vec<ScoredItem>> {
    let Some(first) = pool.first() else {
        return Ok(Vec::new());
    };
    if pool.iter().any(|m| m.kind != first.kind) {
        return Err(MemError::InvalidArgument(
            "retrieval pools may not mix memory kinds".into(),
        ));
    }
    let qv = embedder.embed(&q.text);
    let rels = pool
        .iter()
        .map(|m| cosine(&qv, &embedder.embed(&m.text_for_embedding)))
        .collect::<Result<Vec<_>>>()?;
    let imps: Vec<f64> = pool.iter().map(|m| m.importance_raw).collect();
    let rel_z = z_scores(&rels);
    let imp_z = z_scores(&imps);
    let mut scored: Vec<ScoredItem> = pool
        .iter()
        .enumerate()
        .map(|(i, m)| ScoredItem {
            item: m.clone(),
            rel: rels[i],
            imp: imps[i],
            rel_z: rel_z[i],
            imp_z: imp_z[i],
            score: rel_z[i] + imp_z[i],
        })
        .collect();
    scored.sort_by(rank_order);
    Ok(scored)
}

/// Hierarchical retrieval over explicit candidate lists.
pub fn retrieve_from(
    episodes: &[Episode],
    procedures: &[&Procedure],
    q: &Query,
    embedder: &dyn EmbeddingProvider,
) -> Result<RetrievalResult> {
    q.validate()?;
    if !procedures.is_empty() {
        let pool: Vec<MemoryItem> = procedures
            .iter()
            .map(|p| MemoryItem::from_procedure(p))
            .collect();
        let scored = score_pool(q, &pool, embedder)?;
        let best_rel = scored.iter().map(|s| s.rel).fold(f64::NEG_INFINITY, f64::max);
        if best_rel >= q.proc_fallback_threshold {
            let items: Vec<ScoredItem> = scored.into_iter().take(q.k).collect();
            let records = items
                .iter()
                .map(|s| {
                    let id = match &s.item.id {
                        ItemId::Procedure(id) => id,
                        ItemId::Episode(_) => unreachable!("procedural pool"),
                    };
                    let p = procedures
                        .iter()
                        .find(|p| &p.id == id)
                        .expect("scored item comes from pool");
                    MemoryRecord::Procedural((*p).clone())
                })
                .collect();
            return Ok(RetrievalResult {
                kind_used: Some(MemoryKind::Procedural),
                items,
                records,
            });
        }
    }
    if episodes.is_empty() {
        return Ok(RetrievalResult::default());
    }
    let pool: Vec<MemoryItem> = episodes.iter().map(MemoryItem::from_episode).collect();
    let items: Vec<ScoredItem> = score_pool(q, &pool, embedder)?
        .into_iter()
        .take(q.k)
        .collect();
    let records = items
        .iter()
        .map(|s| {
            let r = match &s.item.id {
                ItemId::Episode(r) => r,
                ItemId::Procedure(_) => unreachable!("episodic pool"),
            };
            let e = episodes
                .iter()
                .find(|e| e.agent_id == r.agent_id && e.task_index == r.task_index)
                .expect("scored item comes from pool");
            MemoryRecord::Episodic(e.clone())
        })
        .collect();
    Ok(RetrievalResult {
        kind_used: Some(MemoryKind::Episodic),
        items,
        records,
    })
}

/// Retrieves the top-k items visible to `view`.
pub fn retrieve(
    store: &MemoryStore,
    view: &MemoryView,
    q: &Query,
    embedder: &dyn EmbeddingProvider,
) -> Result<RetrievalResult> {
    retrieve_from(store.episodes(view), &store.procedures(view), q, embedder)
}

/// Renders retrieved memory as the prompt block inserted into the action
/// prompt. Empty results render as the empty string.
pub fn render_memory_context(r: &RetrievalResult) -> String {
    let Some(kind) = r.kind_used else {
        return String::new();
    };
    if r.records.is_empty() {
        return String::new();
    }
    let mut lines = Vec::new();
    match kind {
        MemoryKind::Procedural => lines.push("[Relevant Procedures & Strategies]".to_string()),
        MemoryKind::Episodic => lines.push("[Past Experiences]".to_string()),
    }
    for rec in &r.records {
        match rec {
            MemoryRecord::Procedural(p) => {
                lines.push(format!(
                    "- {} (success rate: {:.2})",
                    p.title,
                    p.reliability()
                ));
                lines.push(format!("  Strategy : {}", p.knowledge));
            }
            MemoryRecord::Episodic(e) => {
                lines.push(format!("- Similar past task: {}", e.task_description));
                let result = if e.outcome.success {
                    "succeeded"
                } else {
                    "had issues"
                };
                lines.push(format!("  Result: {result}"));
                lines.push(format!("  Takeaway: {}", e.lessons.join("; ")));
            }
        }
    }
    lines.join("\n")
}
