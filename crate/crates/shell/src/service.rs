//! HTTP render service over an immutable registry.

use std::net::SocketAddr;
use std::num::NonZeroUsize;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use ampforge_core::filterbank::Profile;
use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use lru::LruCache;
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};
use tower_http::services::ServeDir;

use crate::error::ShellError;
use crate::inspect::weights_report;
use crate::registry::Registry;
use crate::render::{encode_wav, render, BlendEntry, ModelSelection};

pub const DEFAULT_CLIP_CAP_S: f64 = 30.0;
pub const DEFAULT_CACHE_ENTRIES: usize = 64;

/// Body of `POST /api/render`. Exactly one of `model_id`, `model_i`/`model_j`/`alpha`
/// or `blend` selects the model; `model_i` alone is treated like `model_id`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenderRequest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_i: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_j: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blend: Option<Vec<BlendEntry>>,
    pub clip_id: String,
    #[serde(default)]
    pub gain_db: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ir_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<Profile>,
}

impl RenderRequest {
    pub fn selection(&self) -> Result<ModelSelection, ShellError> {
        let pair_form = self.model_i.is_some() || self.model_j.is_some() || self.alpha.is_some();
        let forms = [self.model_id.is_some(), pair_form, self.blend.is_some()];
        if forms.iter().filter(|&&f| f).count() != 1 {
            return Err(ShellError::Invalid("give exactly one of model_id, model_i/model_j/alpha, blend".into()));
        }
        if let Some(id) = &self.model_id {
            return Ok(ModelSelection::Single(id.clone()));
        }
        if let Some(entries) = &self.blend {
            if entries.is_empty() {
                return Err(ShellError::Invalid("blend needs at least one entry".into()));
            }
            return Ok(ModelSelection::Blend(entries.iter().map(|e| (e.parts().0.to_string(), e.parts().1)).collect()));
        }
        match (&self.model_i, &self.model_j, self.alpha) {
            (Some(i), None, None) => Ok(ModelSelection::Single(i.clone())),
            (Some(i), Some(j), Some(alpha)) => Ok(ModelSelection::Pair { model_i: i.clone(), model_j: j.clone(), alpha }),
            _ => Err(ShellError::Invalid("model_i, model_j and alpha go together".into())),
        }
    }

    /// Cache key: hash of the canonical re-serialization, so formatting and key order don't matter.
    pub fn cache_key(&self) -> [u8; 32] {
        let canonical = serde_json::to_vec(self).expect("request serializes");
        Sha256::digest(canonical).into()
    }
}

/// Render a request to WAV bytes. The clip is truncated to `clip_cap_s`.
pub fn render_request(registry: &Registry, req: &RenderRequest, clip_cap_s: f64) -> Result<Vec<u8>, ShellError> {
    let model = req.selection()?.resolve(registry)?;
    let mut clip = registry.clip(&req.clip_id)?;
    let cap = (clip_cap_s * clip.sample_rate_hz).floor() as usize;
    clip.samples.truncate(cap);
    let ir = req.ir_id.as_deref().map(|id| registry.ir(id)).transpose()?;
    let out = render(&model, &clip, req.gain_db, ir.as_ref(), req.profile)?;
    encode_wav(&out)
}

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub clip_cap_s: f64,
    pub cache_entries: usize,
    pub static_dir: Option<PathBuf>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self { clip_cap_s: DEFAULT_CLIP_CAP_S, cache_entries: DEFAULT_CACHE_ENTRIES, static_dir: None }
    }
}

struct AppState {
    registry: Registry,
    cache: Mutex<LruCache<[u8; 32], Bytes>>,
    clip_cap_s: f64,
}

type Shared = Arc<AppState>;

impl IntoResponse for ShellError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.http_status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(json!({ "error": self.to_string() }))).into_response()
    }
}

pub fn router(registry: Registry, config: &ServiceConfig) -> Router {
    let cap = NonZeroUsize::new(config.cache_entries.max(1)).unwrap();
    let state = Arc::new(AppState { registry, cache: Mutex::new(LruCache::new(cap)), clip_cap_s: config.clip_cap_s });
    let api = Router::new()
        .route("/api/health", get(health))
        .route("/api/models", get(list_models))
        .route("/api/clips", get(list_clips))
        .route("/api/irs", get(list_irs))
        .route("/api/model/{id}/weights", get(model_weights))
        .route("/api/render", post(render_handler))
        .with_state(state);
    match &config.static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

async fn health(State(s): State<Shared>) -> Json<serde_json::Value> {
    Json(json!({ "status": "ok", "models": s.registry.models().count() }))
}

async fn list_models(State(s): State<Shared>) -> Json<serde_json::Value> {
    let models: Vec<_> = s.registry.models().map(|(id, m)| json!({ "id": id, "name": m.name })).collect();
    Json(json!(models))
}

async fn list_clips(State(s): State<Shared>) -> Json<serde_json::Value> {
    Json(json!(s.registry.clip_ids().map(|id| json!({ "id": id })).collect::<Vec<_>>()))
}

async fn list_irs(State(s): State<Shared>) -> Json<serde_json::Value> {
    Json(json!(s.registry.ir_ids().map(|id| json!({ "id": id })).collect::<Vec<_>>()))
}

async fn model_weights(State(s): State<Shared>, Path(id): Path<String>) -> Result<Response, ShellError> {
    let model = s.registry.model(&id).ok_or_else(|| ShellError::UnknownModel(id.clone()))?;
    Ok(Json(weights_report(Some(&id), model)?).into_response())
}

async fn render_handler(State(s): State<Shared>, body: Bytes) -> Result<Response, ShellError> {
    let req: RenderRequest = serde_json::from_slice(&body).map_err(|e| ShellError::Parse(e.to_string()))?;
    req.selection()?;
    let key = req.cache_key();
    let cached = s.cache.lock().unwrap().get(&key).cloned();
    let wav = match cached {
        Some(bytes) => bytes,
        None => {
            let state = s.clone();
            let bytes = tokio::task::spawn_blocking(move || render_request(&state.registry, &req, state.clip_cap_s))
                .await
                .map_err(|e| ShellError::Io(format!("render task failed: {e}")))??;
            let bytes = Bytes::from(bytes);
            s.cache.lock().unwrap().put(key, bytes.clone());
            bytes
        }
    };
    Ok(([(header::CONTENT_TYPE, "audio/wav")], wav).into_response())
}

pub async fn serve(registry: Registry, config: ServiceConfig, addr: SocketAddr) -> anyhow::Result<()> {
    let app = router(registry, &config);
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, app).await?;
    Ok(())
}
