//! Shared fixtures and independent reference implementations for the
//! integration tests.
#![allow(dead_code)]

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};
use std::path::PathBuf;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use teammem::embedding::{EmbeddingProvider, EmbeddingVector};
use teammem::metrics::{RunLog, RunLogEntry};
use teammem::types::{Episode, EpisodeRef, ItemId, MemoryKind, Outcome, Procedure};

pub fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests")
        .join("golden")
        .join(name)
}

pub fn golden(name: &str) -> String {
    std::fs::read_to_string(golden_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests")
        .join("data")
        .join(name)
}

// ---- run logs and the exact-rational metric oracle ---------------------------

pub fn entry(task_index: u64, task_id: &str, ts: f64, cs: f64) -> RunLogEntry {
    RunLogEntry {
        task_index,
        task_id: task_id.to_string(),
        ts,
        cs,
        tokens_in: 0,
        tokens_out: 0,
        team_size: 1,
        kind_used: None,
        retrieved_ids: vec![],
        procedures_used: vec![],
        agent_id: String::new(),
        memory_tokens: 0,
    }
}

/// Log whose task ids are `t{index}`.
pub fn log_of(scores: &[(f64, f64)]) -> RunLog {
    RunLog::new(
        scores
            .iter()
            .enumerate()
            .map(|(i, &(ts, cs))| entry(i as u64 + 1, &format!("t{}", i + 1), ts, cs))
            .collect(),
    )
}

pub fn q(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite")
}

pub fn qi(n: usize) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

pub struct ExactSeries {
    pub s: Vec<BigRational>,
    pub as_curve: Vec<BigRational>,
    pub aas: BigRational,
    pub cma: Option<Vec<BigRational>>,
}

pub fn exact_series(log: &RunLog, baseline: Option<&RunLog>) -> ExactSeries {
    let two = qi(2);
    let score = |e: &RunLogEntry| (q(e.ts) + q(e.cs)) / &two;
    let s: Vec<BigRational> = log.entries.iter().map(score).collect();
    let mut as_curve = Vec::new();
    let mut sum = BigRational::zero();
    for (t, v) in s.iter().enumerate() {
        sum += v;
        as_curve.push(&sum / qi(t + 1));
    }
    let mut aas = BigRational::zero();
    for a in &as_curve {
        aas += a;
    }
    aas /= qi(as_curve.len());
    let cma = baseline.map(|b| {
        let mut acc = BigRational::zero();
        s.iter()
            .zip(b.entries.iter().map(score))
            .map(|(m, bs)| {
                acc += m - bs;
                acc.clone()
            })
            .collect()
    });
    ExactSeries {
        s,
        as_curve,
        aas,
        cma,
    }
}

pub fn f(r: &BigRational) -> f64 {
    r.to_f64().expect("representable")
}

// ---- embeddings --------------------------------------------------------------

/// Embedder backed by a fixed text -> vector table; unknown text maps to zero.
pub struct TableEmbedder {
    pub table: HashMap<String, Vec<f64>>,
    pub dim: usize,
}

impl EmbeddingProvider for TableEmbedder {
    fn embed(&self, text: &str) -> EmbeddingVector {
        EmbeddingVector {
            values: self
                .table
                .get(text)
                .cloned()
                .unwrap_or_else(|| vec![0.0; self.dim]),
        }
    }

    fn dimension(&self) -> usize {
        self.dim
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn ref_cosine(a: &[f64], b: &[f64]) -> f64 {
    let na = dot(a, a).sqrt();
    let nb = dot(b, b).sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        (dot(a, b) / (na * nb)).clamp(-1.0, 1.0)
    }
}

// ---- brute-force retrieval reference ------------------------------------------

pub struct RefItem {
    pub id: ItemId,
    pub vector: Vec<f64>,
    pub importance: f64,
}

fn ref_z(xs: &[f64]) -> Vec<f64> {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let std = (xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt();
    xs.iter()
        .map(|x| if std < 1e-12 { 0.0 } else { (x - mean) / std })
        .collect()
}

fn ref_id_cmp(a: &ItemId, b: &ItemId) -> Ordering {
    match (a, b) {
        (ItemId::Episode(x), ItemId::Episode(y)) => x
            .agent_id
            .cmp(&y.agent_id)
            .then(x.task_index.cmp(&y.task_index)),
        (ItemId::Procedure(x), ItemId::Procedure(y)) => x.cmp(y),
        _ => panic!("mixed pool"),
    }
}

/// Full ranking of one pool: returns `(id, rel)` pairs best first.
pub fn ref_rank(query: &[f64], pool: &[RefItem]) -> Vec<(ItemId, f64)> {
    let rel: Vec<f64> = pool.iter().map(|i| ref_cosine(query, &i.vector)).collect();
    let imp: Vec<f64> = pool.iter().map(|i| i.importance).collect();
    let (rz, iz) = (ref_z(&rel), ref_z(&imp));
    let mut idx: Vec<usize> = (0..pool.len()).collect();
    // scores equal at 1e-9 resolution are ties
    let key = |i: usize| ((rz[i] + iz[i]) * 1e9).round() as i64;
    idx.sort_by(|&a, &b| {
        key(b)
            .cmp(&key(a))
            .then(rel[b].partial_cmp(&rel[a]).unwrap())
            .then(ref_id_cmp(&pool[a].id, &pool[b].id))
    });
    idx.into_iter().map(|i| (pool[i].id.clone(), rel[i])).collect()
}

/// Procedures first when the best raw relevance reaches `theta`, else
/// episodes; top `k` of the chosen pool.
pub fn ref_retrieve(
    query: &[f64],
    procedures: &[RefItem],
    episodes: &[RefItem],
    k: usize,
    theta: f64,
) -> (Option<MemoryKind>, Vec<ItemId>) {
    if !procedures.is_empty() {
        let ranked = ref_rank(query, procedures);
        let best = ranked.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
        if best >= theta {
            return (
                Some(MemoryKind::Procedural),
                ranked.into_iter().take(k).map(|r| r.0).collect(),
            );
        }
    }
    if episodes.is_empty() {
        return (None, vec![]);
    }
    (
        Some(MemoryKind::Episodic),
        ref_rank(query, episodes)
            .into_iter()
            .take(k)
            .map(|r| r.0)
            .collect(),
    )
}

// ---- single-link reference -----------------------------------------------------

/// Connected components of the graph with an edge wherever cosine >= tau.
/// Single-link agglomeration stopped at tau yields exactly these.
pub fn ref_components(vectors: &[Vec<f64>], tau: f64) -> Vec<Vec<usize>> {
    let n = vectors.len();
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut stack = vec![start];
        let mut comp = vec![];
        while let Some(i) = stack.pop() {
            comp.push(i);
            for j in 0..n {
                if !seen[j] && ref_cosine(&vectors[i], &vectors[j]) >= tau {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

// ---- fixtures --------------------------------------------------------------------

pub fn outcome(success: bool) -> Outcome {
    if success {
        Outcome::with_flag(80.0, 70.0, true).unwrap()
    } else {
        Outcome::with_flag(30.0, 40.0, false).unwrap()
    }
}

pub fn episode(agent: &str, idx: u64, desc: &str, lessons: &[&str], success: bool) -> Episode {
    Episode {
        agent_id: agent.to_string(),
        task_index: idx,
        timestamp: "2025-01-01T00:00:00Z".into(),
        task_description: desc.to_string(),
        team_composition: vec![agent.to_string()],
        actions: vec!["act".into()],
        outcome: outcome(success),
        env_context: String::new(),
        lessons: lessons.iter().map(|s| s.to_string()).collect(),
        related_procedures: BTreeSet::new(),
    }
}

pub fn procedure(id: &str, owner: &str, s: u64, f: u64, sources: &[(&str, u64)]) -> Procedure {
    Procedure {
        id: id.to_string(),
        owner_id: owner.to_string(),
        created_at: "2025-01-01T00:00:00Z".into(),
        updated_at: "2025-01-01T00:00:00Z".into(),
        title: format!("title {id}"),
        knowledge: format!("knowledge {id}"),
        successes: s,
        failures: f,
        source_episodes: sources
            .iter()
            .map(|&(a, i)| EpisodeRef {
                agent_id: a.to_string(),
                task_index: i,
            })
            .collect(),
    }
}

pub fn refs(agent: &str, idx: &[u64]) -> BTreeSet<EpisodeRef> {
    idx.iter()
        .map(|&i| EpisodeRef {
            agent_id: agent.to_string(),
            task_index: i,
        })
        .collect()
}

// ---- prompt fixtures ---------------------------------------------------------------

pub const FIXTURE_TASK_A: &str =
    "update the ledger index for amber comet and keep totals stable under onyx";
pub const FIXTURE_TASK_B: &str =
    "repair the query planner for delta raven and keep latency stable under helix";

pub fn fixture_procedures() -> Vec<Procedure> {
    let mut a = procedure("p-a", "shared", 2, 1, &[("agent_1", 1), ("agent_1", 7)]);
    a.title = "Patch the index before totals".into();
    a.knowledge = "Call scan ledger index first; Then run patch ledger totals".into();
    let mut b = procedure("p-b", "shared", 1, 1, &[("agent_2", 2), ("agent_2", 8)]);
    b.title = "Rerun parser tokens last".into();
    b.knowledge = "Read the grammar; fix tokens; rerun the parser".into();
    vec![a, b]
}

pub fn fixture_episodes() -> Vec<Episode> {
    let a = episode(
        "agent_1",
        1,
        FIXTURE_TASK_A,
        &[
            "Call scan ledger index first",
            "Then run patch ledger totals, verify index totals",
        ],
        true,
    );
    let b = episode(
        "agent_2",
        2,
        FIXTURE_TASK_B,
        &["Do not stop after profile query latency"],
        false,
    );
    vec![a, b]
}
