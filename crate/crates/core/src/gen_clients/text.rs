//! Text-generation clients: live HTTP, record, and replay.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::{Arc, Mutex};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{ClientError, Error, Result};
use crate::gen_clients::http::{HttpSettings, JsonClient};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub prompt: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub seed: u64,
}

impl GenerationRequest {
    /// Stable content hash used as the cassette key.
    pub fn key(&self) -> String {
        let canonical = serde_json::to_string(self).expect("request serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationResponse {
    pub text: String,
    pub latency_ms: u64,
    pub backend: String,
}

pub trait TextGenerator: Send + Sync {
    fn generate(&self, request: &GenerationRequest) -> Result<GenerationResponse, ClientError>;

    fn backend_id(&self) -> &str;
}

#[derive(Deserialize)]
struct TextReply {
    text: String,
}

/// `{prompt, temperature, max_tokens, seed} -> {text}` over HTTP.
pub struct HttpTextGenerator {
    client: JsonClient,
}

impl HttpTextGenerator {
    pub fn new(settings: HttpSettings) -> Self {
        Self { client: JsonClient::new(settings) }
    }
}

impl TextGenerator for HttpTextGenerator {
    fn generate(&self, request: &GenerationRequest) -> Result<GenerationResponse, ClientError> {
        let start = Instant::now();
        let reply: TextReply = self.client.post(request)?;
        if reply.text.is_empty() {
            return Err(ClientError::Malformed("empty completion".into()));
        }
        Ok(GenerationResponse {
            text: reply.text,
            latency_ms: start.elapsed().as_millis() as u64,
            backend: self.backend_id().to_string(),
        })
    }

    fn backend_id(&self) -> &str {
        self.client.endpoint()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CassetteEntry {
    pub key: String,
    pub request: GenerationRequest,
    pub text: String,
}

pub fn read_cassette(path: &Path) -> Result<Vec<CassetteEntry>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line).map_err(|e| Error::json(path, e))?);
        }
    }
    Ok(out)
}

/// Serves recorded responses keyed by request hash; never calls out.
pub struct ReplayTextGenerator {
    responses: HashMap<String, String>,
    id: String,
}

impl ReplayTextGenerator {
    pub fn new(entries: impl IntoIterator<Item = CassetteEntry>) -> Self {
        Self {
            responses: entries.into_iter().map(|e| (e.key, e.text)).collect(),
            id: "replay".into(),
        }
    }

    pub fn load(paths: &[impl AsRef<Path>]) -> Result<Self> {
        let mut entries = Vec::new();
        for p in paths {
            entries.extend(read_cassette(p.as_ref())?);
        }
        Ok(Self::new(entries))
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }
}

impl TextGenerator for ReplayTextGenerator {
    fn generate(&self, request: &GenerationRequest) -> Result<GenerationResponse, ClientError> {
        let key = request.key();
        let text = self.responses.get(&key).ok_or(ClientError::CassetteMiss(key))?;
        Ok(GenerationResponse { text: text.clone(), latency_ms: 0, backend: self.id.clone() })
    }

    fn backend_id(&self) -> &str {
        &self.id
    }
}

/// Wraps a generator and keeps every successful exchange for saving as a
/// cassette.
pub struct RecordingTextGenerator<G> {
    inner: G,
    entries: Mutex<Vec<CassetteEntry>>,
}

impl<G: TextGenerator> RecordingTextGenerator<G> {
    pub fn new(inner: G) -> Self {
        Self { inner, entries: Mutex::new(Vec::new()) }
    }

    /// Recorded entries sorted by key, duplicates removed.
    pub fn entries(&self) -> Vec<CassetteEntry> {
        let mut entries = self.entries.lock().expect("recorder lock").clone();
        entries.sort_by(|a, b| a.key.cmp(&b.key));
        entries.dedup_by(|a, b| a.key == b.key);
        entries
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        for entry in self.entries() {
            let line = serde_json::to_string(&entry).map_err(|e| Error::json(path, e))?;
            writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    }
}

impl<G: TextGenerator> TextGenerator for RecordingTextGenerator<G> {
    fn generate(&self, request: &GenerationRequest) -> Result<GenerationResponse, ClientError> {
        let response = self.inner.generate(request)?;
        self.entries.lock().expect("recorder lock").push(CassetteEntry {
            key: request.key(),
            request: request.clone(),
            text: response.text.clone(),
        });
        Ok(response)
    }

    fn backend_id(&self) -> &str {
        self.inner.backend_id()
    }
}

impl<T: TextGenerator + ?Sized> TextGenerator for Box<T> {
    fn generate(&self, request: &GenerationRequest) -> Result<GenerationResponse, ClientError> {
        (**self).generate(request)
    }

    fn backend_id(&self) -> &str {
        (**self).backend_id()
    }
}

impl<T: TextGenerator + ?Sized> TextGenerator for Arc<T> {
    fn generate(&self, request: &GenerationRequest) -> Result<GenerationResponse, ClientError> {
        (**self).generate(request)
    }

    fn backend_id(&self) -> &str {
        (**self).backend_id()
    }
}
