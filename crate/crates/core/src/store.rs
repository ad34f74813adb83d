//! Episodic, procedural and transactive stores plus the topology rules that
//! decide which physical store an agent reads from and writes to.
//!
//! On disk every owner (an agent or `shared`) gets a directory with one JSON
//! document per store kind:
//!
//! ```text
//! root/store.json                       topology + agent list
//! root/{agent_id|shared}/episodic.json
//! root/{agent_id|shared}/procedural.json
//! root/{agent_id|shared}/transactive.json
//! ```
//!
//! All mutations go through one [`MemoryStore`] and are written through to
//! disk before the call returns. Files are replaced via write-then-rename.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::clock::{Clock, SystemClock};
use crate::error::{MemError, Result};
use crate::types::{
    canonical_team_key, AgentProfile, Episode, EpisodeRef, Procedure, TeamPattern,
};

pub const SCHEMA_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "store.json";
const SHARED_DIR: &str = "shared";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    Local,
    Shared,
    Hybrid,
}

impl FromStr for Topology {
    type Err = MemError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "local" => Ok(Topology::Local),
            "shared" => Ok(Topology::Shared),
            "hybrid" => Ok(Topology::Hybrid),
            other => Err(MemError::config(
                "topology",
                format!("expected one of local, shared, hybrid; got `{other}`"),
            )),
        }
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Topology::Local => "local",
            Topology::Shared => "shared",
            Topology::Hybrid => "hybrid",
        })
    }
}

/// Physical owner of a store set.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Owner {
    Agent(String),
    Shared,
}

impl Owner {
    fn dir_name(&self) -> &str {
        match self {
            Owner::Agent(id) => id,
            Owner::Shared => SHARED_DIR,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StoreKind {
    Episodic,
    Procedural,
    Transactive,
}

impl StoreKind {
    fn file_name(self) -> &'static str {
        match self {
            StoreKind::Episodic => "episodic.json",
            StoreKind::Procedural => "procedural.json",
            StoreKind::Transactive => "transactive.json",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EpisodicStore {
    /// Episode count at the last consolidation.
    #[serde(default)]
    pub consolidated_at_count: u64,
    pub episodes: Vec<Episode>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ProceduralStore {
    pub procedures: BTreeMap<String, Procedure>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TransactiveStore {
    pub profiles: BTreeMap<String, AgentProfile>,
    pub team_patterns: BTreeMap<Vec<String>, TeamPattern>,
}

#[derive(Serialize, Deserialize)]
struct TransactiveDoc {
    profiles: BTreeMap<String, AgentProfile>,
    team_patterns: Vec<TeamPattern>,
}

impl Serialize for TransactiveStore {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        TransactiveDoc {
            profiles: self.profiles.clone(),
            team_patterns: self.team_patterns.values().cloned().collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for TransactiveStore {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = TransactiveDoc::deserialize(d)?;
        Ok(TransactiveStore {
            profiles: doc.profiles,
            team_patterns: doc
                .team_patterns
                .into_iter()
                .map(|p| (p.composition.clone(), p))
                .collect(),
        })
    }
}

/// One owner's three stores. Cloning it is how snapshots are taken.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StoreSet {
    pub episodic: EpisodicStore,
    pub procedural: ProceduralStore,
    pub transactive: TransactiveStore,
}

impl StoreSet {
    pub fn episode(&self, r: &EpisodeRef) -> Option<&Episode> {
        self.episodic
            .episodes
            .iter()
            .find(|e| e.agent_id == r.agent_id && e.task_index == r.task_index)
    }

    pub fn procedure(&self, id: &str) -> Option<&Procedure> {
        self.procedural.procedures.get(id)
    }
}

/// An agent's window onto the stores.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemoryView {
    pub agent_id: String,
    pub topology: Topology,
}

impl MemoryView {
    fn own(&self) -> Owner {
        Owner::Agent(self.agent_id.clone())
    }

    fn private_or_shared(&self) -> Owner {
        match self.topology {
            Topology::Local => self.own(),
            Topology::Shared | Topology::Hybrid => Owner::Shared,
        }
    }

    pub fn episodic_owner(&self) -> Owner {
        match self.topology {
            Topology::Shared => Owner::Shared,
            Topology::Local | Topology::Hybrid => self.own(),
        }
    }

    pub fn procedural_owner(&self) -> Owner {
        self.private_or_shared()
    }

    /// Owner of profile aggregates and team patterns.
    pub fn transactive_owner(&self) -> Owner {
        self.private_or_shared()
    }

    /// Owner of this agent's collaboration history.
    pub fn collaboration_owner(&self) -> Owner {
        match self.topology {
            Topology::Shared => Owner::Shared,
            Topology::Local | Topology::Hybrid => self.own(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Manifest {
    schema_version: u32,
    topology: Topology,
    agents: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct Versioned<T> {
    schema_version: u32,
    #[serde(flatten)]
    body: T,
}

/// Owner of all store sets for one run.
pub struct MemoryStore {
    root: PathBuf,
    topology: Topology,
    agents: Vec<String>,
    sets: BTreeMap<Owner, StoreSet>,
    dirty: BTreeSet<(Owner, StoreKind)>,
    clock: Arc<dyn Clock>,
}

impl fmt::Debug for MemoryStore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MemoryStore")
            .field("root", &self.root)
            .field("topology", &self.topology)
            .field("agents", &self.agents)
            .finish_non_exhaustive()
    }
}

fn validate_agent_id(id: &str) -> Result<()> {
    if id.is_empty()
        || id == SHARED_DIR
        || id == "."
        || id == ".."
        || id.contains(['/', '\\'])
    {
        return Err(MemError::InvalidArgument(format!(
            "agent id `{id}` is not usable as a store directory name"
        )));
    }
    Ok(())
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<Option<T>> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(MemError::io(path, e)),
    };
    serde_json::from_str(&text)
        .map(Some)
        .map_err(|e| MemError::Load {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
}

fn read_versioned<T: DeserializeOwned>(path: &Path) -> Result<Option<T>> {
    let Some(doc) = read_json::<Versioned<T>>(path)? else {
        return Ok(None);
    };
    if doc.schema_version != SCHEMA_VERSION {
        return Err(MemError::Load {
            path: path.to_path_buf(),
            message: format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                doc.schema_version
            ),
        });
    }
    Ok(Some(doc.body))
}

/// Writes `bytes` to a sibling temp file, syncs it, then renames over `path`.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| MemError::io(parent, e))?;
    }
    let tmp = path.with_extension("json.tmp");
    let mut f = fs::File::create(&tmp).map_err(|e| MemError::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| MemError::io(&tmp, e))?;
    f.sync_all().map_err(|e| MemError::io(&tmp, e))?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| MemError::io(path, e))
}

fn to_pretty<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("store documents serialize");
    out.push(b'\n');
    out
}

/// Opens (or creates) a store under `root` and returns one view per agent.
pub fn open_store(
    root: impl AsRef<Path>,
    topology: Topology,
    agents: &[String],
) -> Result<(MemoryStore, Vec<MemoryView>)> {
    let store = MemoryStore::open(root, topology, agents)?;
    let views = agents
        .iter()
        .map(|a| MemoryView {
            agent_id: a.clone(),
            topology,
        })
        .collect();
    Ok((store, views))
}

impl MemoryStore {
    pub fn open(root: impl AsRef<Path>, topology: Topology, agents: &[String]) -> Result<Self> {
        let root = root.as_ref().to_path_buf();
        if agents.is_empty() {
            return Err(MemError::InvalidArgument("at least one agent required".into()));
        }
        let mut seen = BTreeSet::new();
        for a in agents {
            validate_agent_id(a)?;
            if !seen.insert(a.as_str()) {
                return Err(MemError::InvalidArgument(format!("duplicate agent id `{a}`")));
            }
        }
        let manifest_path = root.join(MANIFEST_FILE);
        match read_json::<Manifest>(&manifest_path)? {
            Some(m) => {
                if m.topology != topology {
                    return Err(MemError::Load {
                        path: manifest_path,
                        message: format!(
                            "store was created with topology {}, requested {topology}",
                            m.topology
                        ),
                    });
                }
                if m.agents != agents {
                    return Err(MemError::Load {
                        path: manifest_path,
                        message: format!(
                            "store agents {:?} differ from requested {agents:?}",
                            m.agents
                        ),
                    });
                }
            }
            None => {
                let manifest = Manifest {
                    schema_version: SCHEMA_VERSION,
                    topology,
                    agents: agents.to_vec(),
                };
                write_atomic(&manifest_path, &to_pretty(&manifest))?;
            }
        }
        Self::load(root, topology, agents.to_vec())
    }

    /// Opens a store previously created with [`MemoryStore::open`], taking
    /// topology and agents from its manifest.
    pub fn open_existing(root: impl AsRef<Path>) -> Result<Self> {
        let root = root.as_ref().to_path_buf();
        let manifest_path = root.join(MANIFEST_FILE);
        let m = read_json::<Manifest>(&manifest_path)?.ok_or_else(|| MemError::Load {
            path: manifest_path.clone(),
            message: "no store manifest found".into(),
        })?;
        if m.schema_version != SCHEMA_VERSION {
            return Err(MemError::Load {
                path: manifest_path,
                message: format!("unsupported schema_version {}", m.schema_version),
            });
        }
        Self::load(root, m.topology, m.agents)
    }

    fn load(root: PathBuf, topology: Topology, agents: Vec<String>) -> Result<Self> {
        let mut sets = BTreeMap::new();
        let owners = agents
            .iter()
            .map(|a| Owner::Agent(a.clone()))
            .chain(std::iter::once(Owner::Shared));
        for owner in owners {
            let dir = root.join(owner.dir_name());
            let mut set = StoreSet::default();
            let mut any = false;
            if let Some(e) = read_versioned(&dir.join(StoreKind::Episodic.file_name()))? {
                set.episodic = e;
                any = true;
            }
            if let Some(p) = read_versioned(&dir.join(StoreKind::Procedural.file_name()))? {
                set.procedural = p;
                any = true;
            }
            if let Some(t) = read_versioned(&dir.join(StoreKind::Transactive.file_name()))? {
                set.transactive = t;
                any = true;
            }
            if any {
                sets.insert(owner, set);
            }
        }
        Ok(MemoryStore {
            root,
            topology,
            agents,
            sets,
            dirty: BTreeSet::new(),
            clock: Arc::new(SystemClock),
        })
    }

    pub fn with_clock(mut self, clock: Arc<dyn Clock>) -> Self {
        self.clock = clock;
        self
    }

    pub fn set_clock(&mut self, clock: Arc<dyn Clock>) {
        self.clock = clock;
    }

    pub fn now(&self) -> String {
        self.clock.now()
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn agents(&self) -> &[String] {
        &self.agents
    }

    pub fn view(&self, agent_id: &str) -> Result<MemoryView> {
        if !self.agents.iter().any(|a| a == agent_id) {
            return Err(MemError::UnknownAgent(agent_id.to_string()));
        }
        Ok(MemoryView {
            agent_id: agent_id.to_string(),
            topology: self.topology,
        })
    }

    pub fn views(&self) -> Vec<MemoryView> {
        self.agents
            .iter()
            .map(|a| MemoryView {
                agent_id: a.clone(),
                topology: self.topology,
            })
            .collect()
    }

    /// Raw access to one owner's stores, bypassing topology.
    pub fn set(&self, owner: &Owner) -> Option<&StoreSet> {
        self.sets.get(owner)
    }

    fn set_mut(&mut self, owner: &Owner) -> &mut StoreSet {
        self.sets.entry(owner.clone()).or_default()
    }

    fn mark(&mut self, owner: Owner, kind: StoreKind) {
        self.dirty.insert((owner, kind));
    }

    pub fn is_dirty(&self) -> bool {
        !self.dirty.is_empty()
    }

    // ---- reads -------------------------------------------------------------

    pub fn episodes(&self, view: &MemoryView) -> &[Episode] {
        self.sets
            .get(&view.episodic_owner())
            .map(|s| s.episodic.episodes.as_slice())
            .unwrap_or(&[])
    }

    /// Number of visible episodes at the last consolidation.
    pub fn consolidated_at_count(&self, view: &MemoryView) -> u64 {
        self.sets
            .get(&view.episodic_owner())
            .map_or(0, |s| s.episodic.consolidated_at_count)
    }

    pub fn procedures(&self, view: &MemoryView) -> Vec<&Procedure> {
        self.sets
            .get(&view.procedural_owner())
            .map(|s| s.procedural.procedures.values().collect())
            .unwrap_or_default()
    }

    pub fn procedure(&self, view: &MemoryView, id: &str) -> Option<&Procedure> {
        self.sets.get(&view.procedural_owner())?.procedure(id)
    }

    /// Looks up an episode anywhere in the store, ignoring visibility. Used
    /// for provenance checks (e.g. a shared procedure's source episodes).
    pub fn find_episode_anywhere(&self, r: &EpisodeRef) -> Option<&Episode> {
        self.sets.values().find_map(|s| s.episode(r))
    }

    /// Profile of `agent_id` as seen from `view`. Under hybrid topology the
    /// aggregate statistics come from the shared store while the
    /// collaboration history comes from the viewer's private store.
    pub fn agent_profile(&self, view: &MemoryView, agent_id: &str) -> Option<AgentProfile> {
        let aggregate = self
            .sets
            .get(&view.transactive_owner())
            .and_then(|s| s.transactive.profiles.get(agent_id))
            .cloned();
        if view.topology != Topology::Hybrid {
            return aggregate;
        }
        let history = self
            .sets
            .get(&view.collaboration_owner())
            .and_then(|s| s.transactive.profiles.get(agent_id))
            .map(|p| p.collaboration_history.clone());
        match (aggregate, history) {
            (None, None) => None,
            (agg, hist) => {
                let mut p = agg.unwrap_or_else(|| AgentProfile::new(agent_id));
                p.collaboration_history = hist.unwrap_or_default();
                Some(p)
            }
        }
    }

    pub fn team_pattern(&self, view: &MemoryView, team: &[String]) -> Option<&TeamPattern> {
        let key = canonical_team_key(team).ok()?;
        self.sets
            .get(&view.transactive_owner())?
            .transactive
            .team_patterns
            .get(&key)
    }

    pub fn team_patterns(&self, view: &MemoryView) -> Vec<&TeamPattern> {
        self.sets
            .get(&view.transactive_owner())
            .map(|s| s.transactive.team_patterns.values().collect())
            .unwrap_or_default()
    }

    /// Immutable copy of everything visible to `view`, merged into one set.
    pub fn snapshot(&self, view: &MemoryView) -> StoreSet {
        let mut snap = StoreSet::default();
        if let Some(s) = self.sets.get(&view.episodic_owner()) {
            snap.episodic = s.episodic.clone();
        }
        if let Some(s) = self.sets.get(&view.procedural_owner()) {
            snap.procedural = s.procedural.clone();
        }
        if let Some(s) = self.sets.get(&view.transactive_owner()) {
            snap.transactive.team_patterns = s.transactive.team_patterns.clone();
            let ids: Vec<String> = s.transactive.profiles.keys().cloned().collect();
            for id in ids {
                if let Some(p) = self.agent_profile(view, &id) {
                    snap.transactive.profiles.insert(id, p);
                }
            }
        }
        if view.topology == Topology::Hybrid {
            if let Some(p) = self.agent_profile(view, &view.agent_id) {
                snap.transactive.profiles.insert(view.agent_id.clone(), p);
            }
        }
        snap
    }

    // ---- writes ------------------------------------------------------------

    /// Appends an episode to the view's episodic store and persists it.
    pub fn append_episode(&mut self, view: &MemoryView, e: Episode) -> Result<EpisodeRef> {
        if e.agent_id != view.agent_id {
            return Err(MemError::AgentMismatch {
                episode: e.agent_id,
                view: view.agent_id.clone(),
            });
        }
        for pid in &e.related_procedures {
            if self.procedure(view, pid).is_none() {
                return Err(MemError::UnknownProcedure(pid.clone()));
            }
        }
        let owner = view.episodic_owner();
        let set = self.set_mut(&owner);
        if let Some(last) = set
            .episodic
            .episodes
            .iter()
            .filter(|x| x.agent_id == e.agent_id)
            .map(|x| x.task_index)
            .max()
        {
            if e.task_index == last
                || set
                    .episodic
                    .episodes
                    .iter()
                    .any(|x| x.agent_id == e.agent_id && x.task_index == e.task_index)
            {
                return Err(MemError::DuplicateEpisode {
                    agent_id: e.agent_id,
                    task_index: e.task_index,
                });
            }
            if e.task_index < last {
                return Err(MemError::InvalidArgument(format!(
                    "episode task index {} precedes last index {last} for agent `{}`",
                    e.task_index, e.agent_id
                )));
            }
        }
        let r = e.reference();
        set.episodic.episodes.push(e);
        self.mark(owner, StoreKind::Episodic);
        self.persist()?;
        Ok(r)
    }

    pub(crate) fn set_consolidated_at(&mut self, view: &MemoryView, count: u64) -> Result<()> {
        let owner = view.episodic_owner();
        let set = self.set_mut(&owner);
        if set.episodic.consolidated_at_count != count {
            set.episodic.consolidated_at_count = count;
            self.mark(owner, StoreKind::Episodic);
        }
        self.persist()
    }

    /// Inserts or replaces a procedure, refreshing `updated_at`.
    pub fn upsert_procedure(&mut self, view: &MemoryView, mut p: Procedure) -> Result<String> {
        if p.id.is_empty() {
            return Err(MemError::InvalidArgument("procedure id must not be empty".into()));
        }
        if p.source_episodes.is_empty() {
            return Err(MemError::InvalidArgument(format!(
                "procedure `{}` has no source episodes",
                p.id
            )));
        }
        let scope = self.sets.get(&view.episodic_owner());
        if let Some(r) = p
            .source_episodes
            .iter()
            .find(|r| scope.and_then(|s| s.episode(r)).is_none())
        {
            return Err(MemError::DanglingReference(format!(
                "procedure `{}` cites episode {r}, which is not visible to `{}`",
                p.id, view.agent_id
            )));
        }
        let now = self.now();
        let owner = view.procedural_owner();
        let set = self.set_mut(&owner);
        if let Some(existing) = set.procedural.procedures.get(&p.id) {
            if p.successes < existing.successes || p.failures < existing.failures {
                return Err(MemError::InvalidArgument(format!(
                    "procedure `{}` counters may not decrease",
                    p.id
                )));
            }
            p.created_at = existing.created_at.clone();
        } else if p.created_at.is_empty() {
            p.created_at = now.clone();
        }
        p.updated_at = if now.as_str() < p.created_at.as_str() {
            p.created_at.clone()
        } else {
            now
        };
        let id = p.id.clone();
        set.procedural.procedures.insert(id.clone(), p);
        self.mark(owner, StoreKind::Procedural);
        self.persist()?;
        Ok(id)
    }

    pub(crate) fn remove_procedure(&mut self, view: &MemoryView, id: &str) -> Result<()> {
        let owner = view.procedural_owner();
        if self
            .set_mut(&owner)
            .procedural
            .procedures
            .remove(id)
            .is_some()
        {
            self.mark(owner, StoreKind::Procedural);
        }
        self.persist()
    }

    /// Counts one application of a procedure as a success or failure.
    pub fn record_procedure_outcome(
        &mut self,
        view: &MemoryView,
        procedure_id: &str,
        success: bool,
    ) -> Result<Procedure> {
        let now = self.now();
        let owner = view.procedural_owner();
        let p = self
            .sets
            .get_mut(&owner)
            .and_then(|s| s.procedural.procedures.get_mut(procedure_id))
            .ok_or_else(|| MemError::UnknownProcedure(procedure_id.to_string()))?;
        if success {
            p.successes += 1;
        } else {
            p.failures += 1;
        }
        if now > p.updated_at {
            p.updated_at = now;
        }
        let updated = p.clone();
        self.mark(owner, StoreKind::Procedural);
        self.persist()?;
        Ok(updated)
    }

    /// Folds an appended episode into agent profiles, collaboration history
    /// and the team pattern for its composition.
    pub fn update_transactive(
        &mut self,
        view: &MemoryView,
        episode: &Episode,
        task_type: &str,
    ) -> Result<()> {
        let r = episode.reference();
        let appended = self
            .sets
            .get(&view.episodic_owner())
            .is_some_and(|s| s.episode(&r).is_some());
        if !appended {
            return Err(MemError::DanglingReference(format!(
                "episode {r} has not been appended"
            )));
        }
        let agent = episode.agent_id.as_str();
        let success = episode.outcome.success;
        let team = if episode.team_composition.is_empty() {
            vec![agent.to_string()]
        } else {
            canonical_team_key(&episode.team_composition)?
        };
        let partners: Vec<&String> = team.iter().filter(|p| p.as_str() != agent).collect();

        let agg_owner = view.transactive_owner();
        self.set_mut(&agg_owner)
            .transactive
            .profiles
            .entry(agent.to_string())
            .or_insert_with(|| AgentProfile::new(agent))
            .record_task(task_type, success);
        self.mark(agg_owner.clone(), StoreKind::Transactive);

        match view.topology {
            Topology::Local => {
                let own = view.collaboration_owner();
                let profile = self
                    .set_mut(&own)
                    .transactive
                    .profiles
                    .entry(agent.to_string())
                    .or_insert_with(|| AgentProfile::new(agent));
                for p in &partners {
                    profile.record_collaboration(p, success);
                }
                self.mark(own, StoreKind::Transactive);
            }
            Topology::Shared | Topology::Hybrid => {
                for p in &partners {
                    let (own, peer) = match view.topology {
                        Topology::Shared => (Owner::Shared, Owner::Shared),
                        _ => (Owner::Agent(agent.to_string()), Owner::Agent((*p).clone())),
                    };
                    self.set_mut(&own)
                        .transactive
                        .profiles
                        .entry(agent.to_string())
                        .or_insert_with(|| AgentProfile::new(agent))
                        .record_collaboration(p, success);
                    self.set_mut(&peer)
                        .transactive
                        .profiles
                        .entry((*p).clone())
                        .or_insert_with(|| AgentProfile::new(p.as_str()))
                        .record_collaboration(agent, success);
                    self.mark(own, StoreKind::Transactive);
                    self.mark(peer, StoreKind::Transactive);
                }
            }
        }

        self.set_mut(&agg_owner)
            .transactive
            .team_patterns
            .entry(team.clone())
            .or_insert_with(|| TeamPattern::new(team))
            .suited_task_types
            .entry(task_type.to_string())
            .or_default()
            .record(success);
        self.persist()
    }

    /// Flushes every dirty document. A clean store touches no files.
    pub fn persist(&mut self) -> Result<()> {
        let dirty = std::mem::take(&mut self.dirty);
        for (owner, kind) in &dirty {
            let path = self.root.join(owner.dir_name()).join(kind.file_name());
            let set = self.sets.get(owner).cloned().unwrap_or_default();
            let bytes = match kind {
                StoreKind::Episodic => to_pretty(&Versioned {
                    schema_version: SCHEMA_VERSION,
                    body: &set.episodic,
                }),
                StoreKind::Procedural => to_pretty(&Versioned {
                    schema_version: SCHEMA_VERSION,
                    body: &set.procedural,
                }),
                StoreKind::Transactive => to_pretty(&Versioned {
                    schema_version: SCHEMA_VERSION,
                    body: &set.transactive,
                }),
            };
            if let Err(e) = write_atomic(&path, &bytes) {
                // keep what has not been written so a retry can flush it
                self.dirty.extend(dirty.iter().cloned());
                return Err(e);
            }
        }
        Ok(())
    }
}
