//! Job persistence: one directory per job holding its manifest and
//! artifacts.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::manifest::JobManifest;
use crate::ServiceError;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Writes `bytes` to a sibling temp file, syncs it, then renames it over
/// `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("file");
    let tmp = dir.join(format!(".{name}.tmp"));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

/// Storage for job manifests and the directories their artifacts live in.
pub trait JobStore: Send + Sync {
    /// Creates an empty directory for a new job; fails if it exists.
    fn create(&self, job_id: &str) -> Result<PathBuf, ServiceError>;
    fn exists(&self, job_id: &str) -> bool;
    fn dir(&self, job_id: &str) -> PathBuf;
    fn save(&self, manifest: &JobManifest) -> Result<(), ServiceError>;
    fn load(&self, job_id: &str) -> Result<JobManifest, ServiceError>;
    fn remove(&self, job_id: &str) -> Result<(), ServiceError>;
    fn list(&self) -> Result<Vec<String>, ServiceError>;
}

#[derive(Debug, Clone)]
pub struct FsJobStore {
    root: PathBuf,
}

fn valid_id(id: &str) -> bool {
    !id.is_empty()
        && id.len() <= 128
        && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

impl FsJobStore {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, ServiceError> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|e| ServiceError::Storage(format!("{}: {e}", root.display())))?;
        Ok(FsJobStore { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn checked(&self, job_id: &str) -> Result<PathBuf, ServiceError> {
        if valid_id(job_id) {
            Ok(self.root.join(job_id))
        } else {
            Err(ServiceError::NotFound(format!("job {job_id:?}")))
        }
    }
}

impl JobStore for FsJobStore {
    fn create(&self, job_id: &str) -> Result<PathBuf, ServiceError> {
        let dir = self.checked(job_id)?;
        fs::create_dir(&dir).map_err(|e| ServiceError::JobCreateFailed(format!("{}: {e}", dir.display())))?;
        Ok(dir)
    }

    fn exists(&self, job_id: &str) -> bool {
        self.checked(job_id).map(|d| d.exists()).unwrap_or(false)
    }

    fn dir(&self, job_id: &str) -> PathBuf {
        self.root.join(job_id)
    }

    fn save(&self, manifest: &JobManifest) -> Result<(), ServiceError> {
        let dir = self.checked(&manifest.job_id)?;
        let mut body = serde_json::to_vec_pretty(manifest).map_err(|e| ServiceError::Storage(e.to_string()))?;
        body.push(b'\n');
        write_atomic(&dir.join(MANIFEST_FILE), &body).map_err(|e| ServiceError::Storage(e.to_string()))
    }

    fn load(&self, job_id: &str) -> Result<JobManifest, ServiceError> {
        let path = self.checked(job_id)?.join(MANIFEST_FILE);
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(ServiceError::NotFound(format!("job {job_id}")));
            }
            Err(e) => return Err(ServiceError::Storage(e.to_string())),
        };
        serde_json::from_slice(&bytes).map_err(|e| ServiceError::Storage(format!("{}: {e}", path.display())))
    }

    fn remove(&self, job_id: &str) -> Result<(), ServiceError> {
        let dir = self.checked(job_id)?;
        fs::remove_dir_all(&dir).map_err(|e| ServiceError::Storage(e.to_string()))
    }

    fn list(&self) -> Result<Vec<String>, ServiceError> {
        let mut ids = Vec::new();
        for entry in fs::read_dir(&self.root).map_err(|e| ServiceError::Storage(e.to_string()))? {
            let entry = entry.map_err(|e| ServiceError::Storage(e.to_string()))?;
            let name = entry.file_name().to_string_lossy().into_owned();
            if valid_id(&name) && entry.path().join(MANIFEST_FILE).is_file() {
                ids.push(name);
            }
        }
        ids.sort();
        Ok(ids)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.json");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"two");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn ids_cannot_escape_root() {
        let dir = tempfile::tempdir().unwrap();
        let s = FsJobStore::open(dir.path()).unwrap();
        assert!(matches!(s.load("../etc"), Err(ServiceError::NotFound(_))));
        assert!(matches!(s.create("a/b"), Err(ServiceError::NotFound(_))));
        assert!(!s.exists(".."));
    }
}
