//! HTTP API over a single dataset.
//!
//! Built indices are cached per backend configuration and profiles per
//! cutoff and index, so `/api/cluster` can reuse the profile the client last
//! looked at.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex};
use std::time::Instant;

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use dpc_core::clustering::flag_outliers;
use dpc_core::{
    assign, select_centers, AnyIndex, CenterSelection, Dataset, DensityIndex, DensityProfile,
    DpcError,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::{backend_spec, INDEX_KINDS};

const DEFAULT_INDEX: &str = "rtree";

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn bad_request(message: impl Into<String>) -> ApiError {
        ApiError {
            status: StatusCode::BAD_REQUEST,
            message: message.into(),
        }
    }
}

impl From<DpcError> for ApiError {
    fn from(e: DpcError) -> ApiError {
        let status = if e.is_usage() {
            StatusCode::BAD_REQUEST
        } else {
            StatusCode::INTERNAL_SERVER_ERROR
        };
        ApiError {
            status,
            message: e.to_string(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct ProfileKey {
    dc: u64,
    index: String,
    tau: Option<u64>,
}

struct CachedProfile {
    index: String,
    profile: DensityProfile,
}

#[derive(Default)]
struct Cache {
    indexes: HashMap<String, Arc<AnyIndex>>,
    profiles: HashMap<ProfileKey, Arc<CachedProfile>>,
    latest: HashMap<u64, ProfileKey>,
}

pub struct AppState {
    ds: Arc<Dataset>,
    cache: Mutex<Cache>,
}

pub fn router(ds: Arc<Dataset>) -> Router {
    let state = Arc::new(AppState {
        ds,
        cache: Mutex::default(),
    });
    Router::new()
        .route("/api/summary", get(summary))
        .route("/api/profile", post(profile))
        .route("/api/cluster", post(cluster))
        .route("/api/points", get(points))
        .with_state(state)
}

pub async fn serve(ds: Arc<Dataset>, addr: SocketAddr) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(ds))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

async fn summary(State(st): State<Arc<AppState>>) -> Json<Value> {
    let bb = st.ds.bbox();
    Json(json!({
        "n": st.ds.len(),
        "d": st.ds.dim(),
        "bbox": { "lo": bb.lo, "hi": bb.hi },
        "indexes": INDEX_KINDS,
        "source": st.ds.source(),
    }))
}

fn check_dc(dc: f64) -> ApiResult<()> {
    if dc > 0.0 && dc.is_finite() {
        Ok(())
    } else {
        Err(ApiError::bad_request(format!(
            "dc must be positive and finite, got {dc}"
        )))
    }
}

fn default_index() -> String {
    DEFAULT_INDEX.to_string()
}

#[derive(Debug, Deserialize)]
pub struct ProfileRequest {
    pub dc: f64,
    #[serde(default = "default_index")]
    pub index: String,
    pub tau: Option<f64>,
    pub w: Option<f64>,
    pub capacity: Option<usize>,
    pub fanout: Option<usize>,
    /// Include wall-clock timings (which makes the body non-deterministic).
    #[serde(default)]
    pub timings: bool,
}

#[derive(Serialize)]
struct Timings {
    build_secs: f64,
    rho_secs: f64,
    delta_secs: f64,
}

async fn profile(
    State(st): State<Arc<AppState>>,
    req: Result<Json<ProfileRequest>, JsonRejection>,
) -> ApiResult<Json<Value>> {
    let Json(req) = req.map_err(|e| ApiError::bad_request(e.body_text()))?;
    check_dc(req.dc)?;
    let spec = backend_spec(
        &req.index,
        req.w,
        req.tau,
        req.capacity,
        req.fanout,
        Some(req.dc),
    )?;
    let spec_key = serde_json::to_string(&spec).expect("backend spec serializes");
    let key = ProfileKey {
        dc: req.dc.to_bits(),
        index: req.index.clone(),
        tau: req.tau.map(f64::to_bits),
    };
    let cached = st.cache.lock().unwrap().indexes.get(&spec_key).cloned();
    let ds = st.ds.clone();
    let dc = req.dc;
    let (index, profile, timings) = tokio::task::spawn_blocking(move || -> ApiResult<_> {
        let t = Instant::now();
        let index = match cached {
            Some(i) => i,
            None => Arc::new(spec.build(ds)?),
        };
        let build_secs = t.elapsed().as_secs_f64();
        let t = Instant::now();
        let rho = index.rho(dc)?;
        let rho_secs = t.elapsed().as_secs_f64();
        let t = Instant::now();
        let out = index.delta(&rho)?;
        let delta_secs = t.elapsed().as_secs_f64();
        let profile = DensityProfile {
            dc,
            rho,
            delta: out.delta,
            mu: out.mu,
            resolved: out.resolved,
            degraded: index.degraded(dc),
        };
        let timings = Timings {
            build_secs,
            rho_secs,
            delta_secs,
        };
        Ok((index, profile, timings))
    })
    .await
    .map_err(|e| ApiError {
        status: StatusCode::INTERNAL_SERVER_ERROR,
        message: e.to_string(),
    })??;

    let j = profile.to_json();
    let mut body = json!({
        "dc": req.dc,
        "index": req.index,
        "backend": index.name(),
        "params": spec,
        "n": j.n,
        "rho": j.rho,
        "delta": j.delta,
        "mu": j.mu,
        "resolved": j.resolved,
        "gamma": profile.gamma(),
        "degraded": j.degraded,
        "unresolved": profile.unresolved_count(),
        "hash": profile.content_hash(),
    });
    if let Some(tau) = req.tau {
        body["tau"] = json!(tau);
    }
    if req.timings {
        body["timings"] = serde_json::to_value(timings).expect("timings serialize");
    }
    let mut cache = st.cache.lock().unwrap();
    cache.indexes.entry(spec_key).or_insert(index);
    cache.latest.insert(key.dc, key.clone());
    cache.profiles.insert(
        key,
        Arc::new(CachedProfile {
            index: req.index,
            profile,
        }),
    );
    Ok(Json(body))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Thresholds {
    pub rho_min: u32,
    pub delta_min: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutlierRule {
    pub rho_max: u32,
    pub delta_min: f64,
}

#[derive(Debug, Deserialize)]
pub struct ClusterRequest {
    pub dc: f64,
    /// Profile to use; defaults to the one most recently computed at `dc`.
    pub index: Option<String>,
    pub tau: Option<f64>,
    pub centers: Option<Vec<usize>>,
    pub topk: Option<usize>,
    pub thresholds: Option<Thresholds>,
    pub outliers: Option<OutlierRule>,
}

async fn cluster(
    State(st): State<Arc<AppState>>,
    req: Result<Json<ClusterRequest>, JsonRejection>,
) -> ApiResult<Json<Value>> {
    let Json(req) = req.map_err(|e| ApiError::bad_request(e.body_text()))?;
    check_dc(req.dc)?;
    let (sel, echo) = match (&req.centers, req.topk, &req.thresholds) {
        (Some(c), None, None) => (
            CenterSelection::Explicit(c.clone()),
            json!({ "centers": c }),
        ),
        (None, Some(k), None) => (CenterSelection::TopK(k), json!({ "topk": k })),
        (None, None, Some(t)) => (
            CenterSelection::Thresholds {
                rho_min: t.rho_min,
                delta_min: t.delta_min,
            },
            json!({ "thresholds": t }),
        ),
        _ => {
            return Err(ApiError::bad_request(
                "give exactly one of centers, topk or thresholds",
            ))
        }
    };
    let cached = {
        let cache = st.cache.lock().unwrap();
        let key = match &req.index {
            Some(index) => Some(ProfileKey {
                dc: req.dc.to_bits(),
                index: index.clone(),
                tau: req.tau.map(f64::to_bits),
            }),
            None => cache.latest.get(&req.dc.to_bits()).cloned(),
        };
        key.and_then(|k| cache.profiles.get(&k).cloned())
    };
    let cached = cached.ok_or_else(|| ApiError {
        status: StatusCode::CONFLICT,
        message: format!(
            "no profile computed for dc {}; request /api/profile first",
            req.dc
        ),
    })?;
    let p = &cached.profile;
    let centers = select_centers(p, &sel)?;
    let mut c = assign(p, &centers)?;
    if let Some(o) = &req.outliers {
        c = c.with_outliers(flag_outliers(p, o.rho_max, o.delta_min));
    }
    let j = c.to_json();
    Ok(Json(json!({
        "dc": req.dc,
        "index": cached.index,
        "selection": echo,
        "centers": j.centers,
        "labels": j.labels,
        "outliers": j.outliers,
        "unassigned": j.unassigned,
        "sizes": c.sizes(),
    })))
}

#[derive(Debug, Deserialize)]
pub struct PointsQuery {
    pub sample: Option<usize>,
    #[serde(default)]
    pub seed: u64,
}

async fn points(
    State(st): State<Arc<AppState>>,
    q: Result<Query<PointsQuery>, QueryRejection>,
) -> ApiResult<Json<Value>> {
    let Query(q) = q.map_err(|e| ApiError::bad_request(e.body_text()))?;
    let n = st.ds.len();
    let m = q.sample.unwrap_or(n);
    if m == 0 {
        return Err(ApiError::bad_request("sample must be at least 1"));
    }
    let ids: Vec<usize> = if m >= n {
        (0..n).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(q.seed);
        let mut ids = rand::seq::index::sample(&mut rng, n, m).into_vec();
        ids.sort_unstable();
        ids
    };
    let pts: Vec<&[f64]> = ids.iter().map(|&i| st.ds.point(i)).collect();
    Ok(Json(json!({
        "n": n,
        "sample": m,
        "seed": q.seed,
        "ids": ids,
        "points": pts,
    })))
}
