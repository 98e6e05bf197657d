//! Response cache keyed by backend id and request digest, optionally
//! persisted as one JSON file per entry so interrupted runs can resume.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::Mutex;

use sha2::{Digest, Sha256};

use super::{BackendError, BackendRequest, BackendResponse, MllmBackend};

pub struct CachingBackend<B> {
    inner: B,
    dir: Option<PathBuf>,
    memory: Mutex<HashMap<String, BackendResponse>>,
}

impl<B: MllmBackend> CachingBackend<B> {
    pub fn new(inner: B) -> Self {
        Self {
            inner,
            dir: None,
            memory: Mutex::new(HashMap::new()),
        }
    }

    /// Also reads and writes entries under `dir`.
    pub fn persistent(inner: B, dir: impl Into<PathBuf>) -> std::io::Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        Ok(Self {
            inner,
            dir: Some(dir),
            memory: Mutex::new(HashMap::new()),
        })
    }

    pub fn inner(&self) -> &B {
        &self.inner
    }

    pub fn len(&self) -> usize {
        self.memory.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn key(&self, request: &BackendRequest) -> String {
        let mut h = Sha256::new();
        h.update(self.inner.id().as_bytes());
        h.update([0]);
        h.update(request.digest().as_bytes());
        hex::encode(h.finalize())
    }

    fn load(&self, key: &str) -> Option<BackendResponse> {
        let path = self.dir.as_ref()?.join(format!("{key}.json"));
        let text = std::fs::read_to_string(path).ok()?;
        serde_json::from_str(&text).ok()
    }

    fn store(&self, key: &str, resp: &BackendResponse) {
        if let Some(dir) = &self.dir {
            let path = dir.join(format!("{key}.json"));
            let tmp = dir.join(format!("{key}.json.tmp"));
            let text = serde_json::to_string(resp).expect("response serializes");
            // a failed write only costs a repeated call later
            if std::fs::write(&tmp, text).is_ok() {
                let _ = std::fs::rename(tmp, path);
            }
        }
    }
}

impl<B: MllmBackend> MllmBackend for CachingBackend<B> {
    fn complete(&self, request: &BackendRequest) -> Result<BackendResponse, BackendError> {
        let key = self.key(request);
        if let Some(hit) = self.memory.lock().expect("cache lock").get(&key) {
            return Ok(hit.clone());
        }
        if let Some(hit) = self.load(&key) {
            self.memory.lock().expect("cache lock").insert(key, hit.clone());
            return Ok(hit);
        }
        let resp = self.inner.complete(request)?;
        self.store(&key, &resp);
        self.memory.lock().expect("cache lock").insert(key, resp.clone());
        Ok(resp)
    }

    fn id(&self) -> String {
        self.inner.id()
    }

    fn max_concurrency(&self) -> usize {
        self.inner.max_concurrency()
    }
}
