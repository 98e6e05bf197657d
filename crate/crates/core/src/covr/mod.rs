//! Chain-of-visual-residuals inference over a pluggable vision-language
//! backend.
//!
//! Each consecutive image pair goes to the backend with a residual prompt
//! (pair requests may run concurrently), and the parsed residual chain plus
//! every image then goes into a single preference prompt.

mod cache;
mod http;
mod oracle;
mod parse;
mod prompt;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::episode::EpisodeRecord;
use crate::render::{render_png, RenderError, RenderOptions};
use crate::residual::VisualResidual;
use crate::scene::{PreferenceLabel, Task};

pub use cache::CachingBackend;
pub use http::{HttpBackend, HttpConfig};
pub use oracle::GroundTruthOracle;
pub use parse::{format_vrd_response, parse_prd_response, parse_vrd_response, ParseError};
pub use prompt::{
    build_l2r_prompt, build_naive_prompt, build_prd_prompt, build_vrd_prompt, default_few_shot,
    serialize_residual, FewShot,
};

/// Encoded PNG image shared between bundles without copying.
pub type ImageBytes = Arc<[u8]>;

/// Renders every scene of an episode as PNG.
pub fn episode_images(
    episode: &EpisodeRecord,
    options: &RenderOptions,
) -> Result<Vec<ImageBytes>, RenderError> {
    episode
        .scenes
        .iter()
        .map(|s| render_png(s, options).map(ImageBytes::from))
        .collect()
}

/// Which stage a prompt belongs to. Backends may use it for routing; the
/// HTTP backend ignores it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "stage", rename_all = "snake_case")]
pub enum PromptKind {
    Vrd { pair_index: usize },
    Prd,
    Naive,
    L2rPositions,
}

impl PromptKind {
    pub fn label(self) -> String {
        match self {
            PromptKind::Vrd { pair_index } => format!("vrd[{pair_index}]"),
            PromptKind::Prd => "prd".into(),
            PromptKind::Naive => "naive".into(),
            PromptKind::L2rPositions => "l2r".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PromptBundle {
    pub kind: PromptKind,
    pub system: String,
    pub user: String,
    pub images: Vec<ImageBytes>,
    pub few_shot: Vec<FewShot>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecodingParams {
    pub temperature: f64,
    pub max_tokens: u32,
}

impl Default for DecodingParams {
    fn default() -> Self {
        Self {
            temperature: 0.0,
            max_tokens: 512,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackendRequest {
    pub bundle: PromptBundle,
    pub decoding: DecodingParams,
}

impl BackendRequest {
    pub fn new(bundle: PromptBundle) -> Self {
        Self {
            bundle,
            decoding: DecodingParams::default(),
        }
    }

    /// Hex SHA-256 over everything that can influence the response.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        let b = &self.bundle;
        let field = |h: &mut Sha256, bytes: &[u8]| {
            h.update((bytes.len() as u64).to_le_bytes());
            h.update(bytes);
        };
        field(&mut h, b.kind.label().as_bytes());
        field(&mut h, b.system.as_bytes());
        field(&mut h, b.user.as_bytes());
        h.update((b.images.len() as u64).to_le_bytes());
        for img in &b.images {
            field(&mut h, img);
        }
        h.update((b.few_shot.len() as u64).to_le_bytes());
        for (q, a) in &b.few_shot {
            field(&mut h, q.as_bytes());
            field(&mut h, a.as_bytes());
        }
        h.update(self.decoding.temperature.to_bits().to_le_bytes());
        h.update(self.decoding.max_tokens.to_le_bytes());
        hex::encode(h.finalize())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendResponse {
    pub text: String,
    pub latency_ms: u64,
    pub prompt_tokens: Option<u64>,
    pub completion_tokens: Option<u64>,
}

impl BackendResponse {
    pub fn text(text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            latency_ms: 0,
            prompt_tokens: None,
            completion_tokens: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BackendError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("backend returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("backend returned an empty response")]
    EmptyResponse,
    #[error("backend does not recognize request {0}")]
    UnrecognizedRequest(String),
    #[error("backend configuration: {0}")]
    Config(String),
}

/// A vision-language completion service. Implementations must tolerate
/// concurrent calls up to `max_concurrency`.
pub trait MllmBackend: Send + Sync {
    fn complete(&self, request: &BackendRequest) -> Result<BackendResponse, BackendError>;

    /// Short identifier recorded in reports and cache keys.
    fn id(&self) -> String;

    fn max_concurrency(&self) -> usize {
        1
    }
}

impl<B: MllmBackend + ?Sized> MllmBackend for Arc<B> {
    fn complete(&self, request: &BackendRequest) -> Result<BackendResponse, BackendError> {
        (**self).complete(request)
    }
    fn id(&self) -> String {
        (**self).id()
    }
    fn max_concurrency(&self) -> usize {
        (**self).max_concurrency()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub stage: String,
    pub attempt: u32,
    pub digest: String,
    /// Response text, or the error message when the call failed.
    pub response: String,
    pub ok: bool,
}

/// A residual as predicted by the backend. `Unparsed` is recorded when every
/// attempt produced malformed text; it scores zero.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum PredictedResidual {
    Parsed(VisualResidual),
    Unparsed { raw: String },
}

impl PredictedResidual {
    pub fn as_parsed(&self) -> Option<&VisualResidual> {
        match self {
            PredictedResidual::Parsed(r) => Some(r),
            PredictedResidual::Unparsed { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceResult {
    pub residuals: Vec<PredictedResidual>,
    /// `None` when the answer could not be mapped to a single label.
    pub preference: Option<PreferenceLabel>,
    /// Scored candidates, best first. Methods without scores list only the
    /// parsed label, at 1.0.
    pub ranked: Vec<(PreferenceLabel, f64)>,
    pub transcript: Vec<TranscriptEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetryPolicy {
    /// Extra attempts after the first one.
    pub retries: u32,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { retries: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CovrError {
    #[error("need at least {needed} images, got {got}")]
    TooFewImages { needed: usize, got: usize },
    #[error("backend failed after retries: {0}")]
    BackendFailure(BackendError),
}

/// One backend call, recorded in `transcript` whether or not it succeeds.
fn call_once(
    backend: &dyn MllmBackend,
    request: &BackendRequest,
    attempt: u32,
    transcript: &mut Vec<TranscriptEntry>,
) -> Result<BackendResponse, BackendError> {
    let result = backend.complete(request).and_then(|r| {
        if r.text.trim().is_empty() {
            Err(BackendError::EmptyResponse)
        } else {
            Ok(r)
        }
    });
    transcript.push(TranscriptEntry {
        stage: request.bundle.kind.label(),
        attempt,
        digest: request.digest(),
        response: match &result {
            Ok(r) => r.text.clone(),
            Err(e) => e.to_string(),
        },
        ok: result.is_ok(),
    });
    result
}

/// Calls the backend until it answers, at most `1 + policy.retries` times.
pub fn call_with_retries(
    backend: &dyn MllmBackend,
    request: &BackendRequest,
    policy: RetryPolicy,
    transcript: &mut Vec<TranscriptEntry>,
) -> Result<BackendResponse, CovrError> {
    let mut last = BackendError::EmptyResponse;
    for attempt in 0..=policy.retries {
        match call_once(backend, request, attempt, transcript) {
            Ok(resp) => return Ok(resp),
            Err(e) => last = e,
        }
    }
    Err(CovrError::BackendFailure(last))
}

/// One pair with the shared attempt budget: transport failures and
/// unparseable answers both consume an attempt.
fn vrd_pair(
    images: &[ImageBytes],
    k: usize,
    task: Task,
    few_shot: &[FewShot],
    backend: &dyn MllmBackend,
    policy: RetryPolicy,
) -> (Result<PredictedResidual, CovrError>, Vec<TranscriptEntry>) {
    let request = BackendRequest::new(build_vrd_prompt(
        &images[k],
        &images[k + 1],
        k,
        task,
        few_shot,
    ));
    let mut transcript = Vec::new();
    let mut raw = None;
    let mut last_err = BackendError::EmptyResponse;
    for attempt in 0..=policy.retries {
        match call_once(backend, &request, attempt, &mut transcript) {
            Ok(resp) => match parse_vrd_response(&resp.text) {
                Ok(r) => return (Ok(PredictedResidual::Parsed(r)), transcript),
                Err(_) => raw = Some(resp.text),
            },
            Err(e) => last_err = e,
        }
    }
    let out = match raw {
        Some(raw) => Ok(PredictedResidual::Unparsed { raw }),
        None => Err(CovrError::BackendFailure(last_err)),
    };
    (out, transcript)
}

/// Residual for every consecutive image pair, in pair order.
///
/// Up to `backend.max_concurrency()` pairs are in flight at once. A pair
/// whose response never parses within the retry budget yields
/// [`PredictedResidual::Unparsed`]; a pair that never gets a response at all
/// fails the chain.
pub fn run_vrd_chain(
    images: &[ImageBytes],
    task: Task,
    backend: &dyn MllmBackend,
    policy: RetryPolicy,
) -> Result<(Vec<PredictedResidual>, Vec<TranscriptEntry>), CovrError> {
    if images.len() < 2 {
        return Err(CovrError::TooFewImages {
            needed: 2,
            got: images.len(),
        });
    }
    let pairs = images.len() - 1;
    let few_shot = default_few_shot(task);
    let workers = backend.max_concurrency().clamp(1, pairs);
    let slots: Vec<Mutex<Option<_>>> = (0..pairs).map(|_| Mutex::new(None)).collect();

    if workers == 1 {
        for (k, slot) in slots.iter().enumerate() {
            *slot.lock().expect("slot lock") =
                Some(vrd_pair(images, k, task, &few_shot, backend, policy));
        }
    } else {
        let next = AtomicUsize::new(0);
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    let k = next.fetch_add(1, Ordering::Relaxed);
                    if k >= pairs {
                        break;
                    }
                    let out = vrd_pair(images, k, task, &few_shot, backend, policy);
                    *slots[k].lock().expect("slot lock") = Some(out);
                });
            }
        });
    }

    let mut residuals = Vec::with_capacity(pairs);
    let mut transcript = Vec::new();
    for slot in slots {
        let (res, entries) = slot
            .into_inner()
            .expect("slot lock")
            .expect("every pair was processed");
        transcript.extend(entries);
        residuals.push(res?);
    }
    Ok((residuals, transcript))
}

/// Full pipeline: residual chain, then one preference request.
pub fn infer_preference_covr(
    images: &[ImageBytes],
    task: Task,
    backend: &dyn MllmBackend,
    policy: RetryPolicy,
) -> Result<InferenceResult, CovrError> {
    let (residuals, mut transcript) = run_vrd_chain(images, task, backend, policy)?;
    let request = BackendRequest::new(build_prd_prompt(images, &residuals));
    let resp = call_with_retries(backend, &request, policy, &mut transcript)?;
    let preference = parse_prd_response(&resp.text).ok();
    Ok(InferenceResult {
        residuals,
        preference,
        ranked: preference.map(|p| (p, 1.0)).into_iter().collect(),
        transcript,
    })
}
