//! Shared server state: the token table and one handle per project.
//!
//! Each project has a single writer behind an async mutex. Writes run on
//! the blocking pool so a long fixpoint never stalls the runtime. Reads go
//! through the project's [`SnapshotReader`] and never touch the mutex.

use std::collections::{BTreeMap, VecDeque};
use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock};

use triagebase::document::{Document, Store};
use triagebase::kb::Query;
use triagebase::project::{Project, ProjectError, ProjectSettings, SnapshotReader};

use crate::auth::TokenTable;
use crate::config::Config;
use crate::error::ApiError;

/// Snapshots kept alive for open pagination cursors.
const PINNED_SNAPSHOTS: usize = 16;

pub struct ProjectHandle {
    writer: tokio::sync::Mutex<Project>,
    reader: SnapshotReader,
    pinned: Mutex<VecDeque<Arc<Store>>>,
}

impl ProjectHandle {
    fn new(project: Project) -> Self {
        Self {
            reader: project.reader(),
            writer: tokio::sync::Mutex::new(project),
            pinned: Mutex::new(VecDeque::new()),
        }
    }

    /// Runs `f` as the project's only writer.
    pub async fn write<T, F>(self: &Arc<Self>, f: F) -> Result<T, ApiError>
    where
        F: FnOnce(&mut Project) -> T + Send + 'static,
        T: Send + 'static,
    {
        let handle = Arc::clone(self);
        tokio::task::spawn_blocking(move || {
            let mut project = handle.writer.blocking_lock();
            f(&mut project)
        })
        .await
        .map_err(|e| ApiError::internal(format!("writer task failed: {e}")))
    }

    pub fn snapshot(&self) -> Arc<Store> {
        self.reader.load()
    }

    /// Keeps `store` reachable by its version for later pages.
    pub fn pin(&self, store: &Arc<Store>) {
        let mut pinned = self.pinned.lock().expect("pin cache poisoned");
        if pinned.iter().any(|s| s.version() == store.version()) {
            return;
        }
        if pinned.len() == PINNED_SNAPSHOTS {
            pinned.pop_front();
        }
        pinned.push_back(Arc::clone(store));
    }

    pub fn pinned(&self, version: u64) -> Option<Arc<Store>> {
        let current = self.snapshot();
        if current.version() == version {
            return Some(current);
        }
        let pinned = self.pinned.lock().expect("pin cache poisoned");
        pinned.iter().find(|s| s.version() == version).cloned()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum StartupError {
    #[error("cannot list {path}: {source}")]
    Storage { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Project(#[from] ProjectError),
}

#[derive(Clone)]
pub struct AppState {
    pub tokens: Arc<TokenTable>,
    pub queries: Arc<BTreeMap<&'static str, Box<dyn Query<Document>>>>,
    projects: Arc<Projects>,
}

struct Projects {
    settings: ProjectSettings,
    storage: Option<PathBuf>,
    open: RwLock<BTreeMap<String, Arc<ProjectHandle>>>,
}

/// Project ids become directory names, so they are kept plain.
pub fn valid_project_id(id: &str) -> bool {
    !id.is_empty()
        && id.len() <= 64
        && !id.starts_with('.')
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
}

impl AppState {
    /// Builds the state and opens every project already on disk.
    pub fn new(config: &Config) -> Result<Self, StartupError> {
        let state = Self {
            tokens: Arc::new(TokenTable::from_config(&config.tokens)),
            queries: Arc::new(triagebase::queries::all().into_iter().map(|q| (q.name(), q)).collect()),
            projects: Arc::new(Projects {
                settings: config.project_settings(),
                storage: config.storage.path.clone(),
                open: RwLock::new(BTreeMap::new()),
            }),
        };
        if let Some(root) = &config.storage.path {
            if root.is_dir() {
                let entries = std::fs::read_dir(root).map_err(|source| StartupError::Storage {
                    path: root.clone(),
                    source,
                })?;
                for entry in entries.flatten() {
                    let name = entry.file_name().to_string_lossy().into_owned();
                    if entry.path().is_dir() && valid_project_id(&name) {
                        state.open_project(&name)?;
                    }
                }
            }
        }
        Ok(state)
    }

    pub fn project(&self, id: &str) -> Result<Arc<ProjectHandle>, ApiError> {
        let open = self.projects.open.read().expect("project table poisoned");
        open.get(id).cloned().ok_or_else(|| ApiError::not_found(format!("unknown project `{id}`")))
    }

    pub fn project_ids(&self) -> Vec<String> {
        self.projects.open.read().expect("project table poisoned").keys().cloned().collect()
    }

    /// The project's handle, creating the project on first upload.
    pub fn project_or_create(&self, id: &str) -> Result<Arc<ProjectHandle>, ApiError> {
        if let Ok(h) = self.project(id) {
            return Ok(h);
        }
        if !valid_project_id(id) {
            return Err(ApiError::bad_request(format!("invalid project id `{id}`")));
        }
        self.open_project(id).map_err(ApiError::from)
    }

    fn open_project(&self, id: &str) -> Result<Arc<ProjectHandle>, ProjectError> {
        let mut open = self.projects.open.write().expect("project table poisoned");
        if let Some(h) = open.get(id) {
            return Ok(Arc::clone(h));
        }
        let settings = self.projects.settings.clone();
        let project = match &self.projects.storage {
            Some(root) => Project::open(id, settings, root.join(id))?,
            None => Project::in_memory(id, settings)?,
        };
        tracing::info!(project = id, "project opened");
        let handle = Arc::new(ProjectHandle::new(project));
        open.insert(id.to_string(), Arc::clone(&handle));
        Ok(handle)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn project_ids_are_plain_names() {
        assert!(valid_project_id("shop-api_2.x"));
        assert!(!valid_project_id(""));
        assert!(!valid_project_id(".hidden"));
        assert!(!valid_project_id("a/b"));
        assert!(!valid_project_id(&"x".repeat(65)));
    }
}
