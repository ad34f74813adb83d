//! C ABI for the `teammem` memory engine.
//!
//! Stores are exposed as opaque `TmStore` handles. Every fallible call
//! returns a `TmStatus`; on failure the message is kept per thread and can be
//! fetched with [`tm_last_error`]. Structured data crosses the boundary as
//! UTF-8 JSON. Strings returned through out-pointers are owned by the caller
//! and must be released with [`tm_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use teammem::embedding::HashEmbedder;
use teammem::harness::{run_sim, SimConfig};
use teammem::lifecycle::{
    maybe_consolidate, post_task_update, ConsolidationConfig, StubGenerator, TaskExecution,
};
use teammem::metrics::{series_from_log, series_with_baseline, RunLog};
use teammem::prompts::{render_action_prompt, ActionPrompt};
use teammem::retrieval::{render_memory_context, retrieve, Query};
use teammem::store::{MemoryStore, Topology};
use teammem::types::Episode;
use teammem::MemError;

/// Result codes for every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[allow(clippy::enum_variant_names)]
pub enum TmStatus {
    TmOk = 0,
    TmNullPointer = 1,
    TmInvalidUtf8 = 2,
    TmInvalidJson = 3,
    TmInvalidArgument = 4,
    TmNotFound = 5,
    TmConflict = 6,
    TmIo = 7,
    TmLoad = 8,
    TmConfig = 9,
    TmGenerator = 10,
    TmPanic = 11,
}

/// Opaque store handle.
pub struct TmStore {
    store: MemoryStore,
    embedder: HashEmbedder,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<String>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(e: &MemError) -> TmStatus {
    match e {
        MemError::InvalidArgument(_)
        | MemError::ScoreOutOfRange { .. }
        | MemError::DimensionMismatch { .. }
        | MemError::AgentMismatch { .. }
        | MemError::LogMismatch(_)
        | MemError::EmptyLog => TmStatus::TmInvalidArgument,
        MemError::UnknownProcedure(_) | MemError::UnknownAgent(_) => TmStatus::TmNotFound,
        MemError::DuplicateEpisode { .. } | MemError::DanglingReference(_) => TmStatus::TmConflict,
        MemError::Io { .. } => TmStatus::TmIo,
        MemError::Load { .. } => TmStatus::TmLoad,
        MemError::Config { .. } => TmStatus::TmConfig,
        MemError::Generator(_) => TmStatus::TmGenerator,
    }
}

struct Failure(TmStatus, String);

impl From<MemError> for Failure {
    fn from(e: MemError) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure(TmStatus::TmInvalidJson, e.to_string())
    }
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> TmStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TmStatus::TmOk,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            TmStatus::TmPanic
        }
    }
}

unsafe fn arg_str<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(TmStatus::TmNullPointer, format!("`{name}` is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(TmStatus::TmInvalidUtf8, format!("`{name}` is not valid UTF-8")))
}

unsafe fn opt_str<'a>(p: *const c_char, name: &str) -> Result<Option<&'a str>, Failure> {
    if p.is_null() {
        Ok(None)
    } else {
        arg_str(p, name).map(Some)
    }
}

unsafe fn store_mut<'a>(h: *mut TmStore) -> Result<&'a mut TmStore, Failure> {
    h.as_mut()
        .ok_or_else(|| Failure(TmStatus::TmNullPointer, "store handle is null".into()))
}

unsafe fn write_out(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure(TmStatus::TmNullPointer, "output pointer is null".into()));
    }
    let c = CString::new(s)
        .map_err(|_| Failure(TmStatus::TmInvalidArgument, "output contains a NUL byte".into()))?;
    *out = c.into_raw();
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. The returned
/// string is owned by the caller.
#[no_mangle]
pub extern "C" fn tm_last_error() -> *mut c_char {
    LAST_ERROR.with(|e| match e.borrow().as_deref() {
        Some(m) => CString::new(m.replace('\0', " "))
            .map_or(ptr::null_mut(), CString::into_raw),
        None => ptr::null_mut(),
    })
}

/// # Safety
/// `s` must be NULL or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tm_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Opens or creates a store. `agents_json` is a JSON array of agent ids;
/// `topology` is `local`, `shared` or `hybrid`.
///
/// # Safety
/// String arguments must be valid NUL-terminated strings; `out` must be a
/// valid pointer. The handle must be released with [`tm_store_free`].
#[no_mangle]
pub unsafe extern "C" fn tm_store_open(
    root: *const c_char,
    topology: *const c_char,
    agents_json: *const c_char,
    out: *mut *mut TmStore,
) -> TmStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure(TmStatus::TmNullPointer, "`out` is null".into()));
        }
        let root = arg_str(root, "root")?;
        let topology: Topology = arg_str(topology, "topology")?.parse()?;
        let agents: Vec<String> = serde_json::from_str(arg_str(agents_json, "agents_json")?)?;
        let store = MemoryStore::open(root, topology, &agents)?;
        *out = Box::into_raw(Box::new(TmStore {
            store,
            embedder: HashEmbedder::default(),
        }));
        Ok(())
    })
}

/// Opens a store created earlier, reading topology and agents from disk.
///
/// # Safety
/// As for [`tm_store_open`].
#[no_mangle]
pub unsafe extern "C" fn tm_store_open_existing(
    root: *const c_char,
    out: *mut *mut TmStore,
) -> TmStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure(TmStatus::TmNullPointer, "`out` is null".into()));
        }
        let store = MemoryStore::open_existing(arg_str(root, "root")?)?;
        *out = Box::into_raw(Box::new(TmStore {
            store,
            embedder: HashEmbedder::default(),
        }));
        Ok(())
    })
}

/// # Safety
/// `h` must be NULL or a handle from [`tm_store_open`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tm_store_free(h: *mut TmStore) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Appends an episode (JSON) through `agent_id`'s view.
///
/// # Safety
/// `h` must be a live handle; strings must be valid NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn tm_store_append_episode(
    h: *mut TmStore,
    agent_id: *const c_char,
    episode_json: *const c_char,
) -> TmStatus {
    guard(|| {
        let s = store_mut(h)?;
        let view = s.store.view(arg_str(agent_id, "agent_id")?)?;
        let e: Episode = serde_json::from_str(arg_str(episode_json, "episode_json")?)?;
        s.store.append_episode(&view, e)?;
        Ok(())
    })
}

/// Records a finished task with the built-in lesson generator.
/// `task_json` holds task_index, description, team, actions, outcome and
/// optionally env_context and role; `procedures_json` is a JSON array of the
/// procedure ids used (NULL for none). The stored episode is written to
/// `out_episode` as JSON.
///
/// # Safety
/// `h` must be a live handle; strings must be valid; `out_episode` must be
/// a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tm_post_task(
    h: *mut TmStore,
    agent_id: *const c_char,
    task_json: *const c_char,
    procedures_json: *const c_char,
    task_type: *const c_char,
    out_episode: *mut *mut c_char,
) -> TmStatus {
    guard(|| {
        let s = store_mut(h)?;
        let view = s.store.view(arg_str(agent_id, "agent_id")?)?;
        let task: TaskExecution = serde_json::from_str(arg_str(task_json, "task_json")?)?;
        let used: Vec<String> = match opt_str(procedures_json, "procedures_json")? {
            Some(j) => serde_json::from_str(j)?,
            None => Vec::new(),
        };
        let task_type = arg_str(task_type, "task_type")?;
        let e = post_task_update(&mut s.store, &view, &task, &used, &StubGenerator, task_type)?;
        write_out(out_episode, serde_json::to_string(&e)?)
    })
}

/// Retrieves the top `k` memories for `query`. The full result is written
/// to `out_json` and the prompt-ready block to `out_block` (either may be
/// NULL to skip it).
///
/// # Safety
/// `h` must be a live handle; strings must be valid.
#[no_mangle]
pub unsafe extern "C" fn tm_retrieve(
    h: *mut TmStore,
    agent_id: *const c_char,
    query: *const c_char,
    k: usize,
    proc_threshold: f64,
    out_json: *mut *mut c_char,
    out_block: *mut *mut c_char,
) -> TmStatus {
    guard(|| {
        let s = store_mut(h)?;
        let view = s.store.view(arg_str(agent_id, "agent_id")?)?;
        let q = Query::new(arg_str(query, "query")?)
            .with_k(k)
            .with_threshold(proc_threshold);
        let r = retrieve(&s.store, &view, &q, &s.embedder)?;
        if !out_json.is_null() {
            write_out(out_json, serde_json::to_string(&r)?)?;
        }
        if !out_block.is_null() {
            write_out(out_block, render_memory_context(&r))?;
        }
        Ok(())
    })
}

/// Consolidates `agent_id`'s visible episodes when `interval_n` new ones
/// have arrived. The number of procedures created goes to `out_created`.
///
/// # Safety
/// `h` must be a live handle; `agent_id` valid; `out_created` NULL or valid.
#[no_mangle]
pub unsafe extern "C" fn tm_maybe_consolidate(
    h: *mut TmStore,
    agent_id: *const c_char,
    interval_n: u64,
    cluster_threshold: f64,
    out_created: *mut usize,
) -> TmStatus {
    guard(|| {
        let s = store_mut(h)?;
        let view = s.store.view(arg_str(agent_id, "agent_id")?)?;
        let cfg = ConsolidationConfig {
            interval_n,
            cluster_threshold,
            ..ConsolidationConfig::default()
        };
        let created = maybe_consolidate(&mut s.store, &view, &cfg, &StubGenerator, &s.embedder)?;
        if !out_created.is_null() {
            *out_created = created.len();
        }
        Ok(())
    })
}

/// Writes any pending changes to disk.
///
/// # Safety
/// `h` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn tm_store_persist(h: *mut TmStore) -> TmStatus {
    guard(|| {
        store_mut(h)?.store.persist()?;
        Ok(())
    })
}

/// Computes S, AS, AAS (and CMA when `baseline_jsonl` is not NULL) from run
/// logs given as JSONL text. The series is written to `out_json`.
///
/// # Safety
/// Strings must be valid; `out_json` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tm_metrics_series(
    log_jsonl: *const c_char,
    baseline_jsonl: *const c_char,
    out_json: *mut *mut c_char,
) -> TmStatus {
    guard(|| {
        let log = RunLog::from_jsonl(arg_str(log_jsonl, "log_jsonl")?)?;
        let series = match opt_str(baseline_jsonl, "baseline_jsonl")? {
            Some(b) => series_with_baseline(&log, &RunLog::from_jsonl(b)?)?,
            None => series_from_log(&log)?,
        };
        write_out(out_json, serde_json::to_string(&series)?)
    })
}

/// Renders the agent action prompt. Any text argument may be NULL, which
/// is treated as empty.
///
/// # Safety
/// Non-NULL strings must be valid; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tm_render_action_prompt(
    agent_id: *const c_char,
    agent_profile: *const c_char,
    reasoning_prompt: *const c_char,
    memory_block: *const c_char,
    task: *const c_char,
    agent_descriptions: *const c_char,
    out: *mut *mut c_char,
) -> TmStatus {
    guard(|| {
        let text = render_action_prompt(&ActionPrompt {
            agent_id: opt_str(agent_id, "agent_id")?.unwrap_or_default(),
            agent_profile: opt_str(agent_profile, "agent_profile")?.unwrap_or_default(),
            reasoning_prompt: opt_str(reasoning_prompt, "reasoning_prompt")?.unwrap_or_default(),
            memory_block: opt_str(memory_block, "memory_block")?.unwrap_or_default(),
            task: opt_str(task, "task")?.unwrap_or_default(),
            agent_descriptions: opt_str(agent_descriptions, "agent_descriptions")?
                .unwrap_or_default(),
        });
        write_out(out, text)
    })
}

/// Runs (or resumes) a simulation configured by `config_json` in `out_dir`.
/// The resulting run log is written to `out_jsonl` when it is not NULL.
///
/// # Safety
/// Strings must be valid; `out_jsonl` NULL or a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tm_run_sim(
    config_json: *const c_char,
    out_dir: *const c_char,
    out_jsonl: *mut *mut c_char,
) -> TmStatus {
    guard(|| {
        let cfg = SimConfig::from_json(arg_str(config_json, "config_json")?)?;
        let log = run_sim(&cfg, arg_str(out_dir, "out_dir")?)?;
        if !out_jsonl.is_null() {
            write_out(out_jsonl, log.to_jsonl())?;
        }
        Ok(())
    })
}
