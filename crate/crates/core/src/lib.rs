//! Structured memory for teams of LLM agents.
//!
//! Three stores back every agent: episodic (full task records), procedural
//! (strategies consolidated from repeated successes) and transactive (who is
//! good at what, and which team compositions suit which task types). A
//! [`store::Topology`] decides which of these are private and which are
//! shared. Retrieval ranks items by standardized similarity plus importance,
//! preferring procedures when one is relevant enough.
//!
//! The [`harness`] module drives the whole lifecycle with scripted tasks so
//! learning curves and token costs can be measured offline.

pub mod clock;
pub mod embedding;
pub mod error;
pub mod harness;
pub mod lifecycle;
pub mod metrics;
pub mod prompts;
pub mod retrieval;
pub mod store;
pub mod types;

pub use clock::{Clock, ManualClock, SystemClock};
pub use embedding::{cosine, hash_embed, EmbeddingProvider, EmbeddingVector, HashEmbedder};
pub use error::{MemError, Result};
pub use lifecycle::{
    consolidate, force_consolidate, maybe_consolidate, post_task_update, ConsolidationConfig,
    Generator, StubGenerator, TaskExecution,
};
pub use metrics::{cma, series_from_log, MetricSeries, RunLog, RunLogEntry};
pub use retrieval::{render_memory_context, retrieve, Query, RetrievalResult};
pub use store::{open_store, MemoryStore, MemoryView, Owner, StoreKind, Topology};
pub use types::{
    AgentProfile, Episode, EpisodeRef, ItemId, MemoryItem, MemoryKind, Outcome, Procedure,
    TeamPattern,
};
