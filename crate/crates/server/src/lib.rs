//! HTTP front end for a relabeling session.
//!
//! Routes:
//!
//! * `GET /api/queue?limit=N&offset=M`: the current review queue
//! * `POST /api/decisions`: `[{"tweet_id", "new_label"}]`, returns applied/rejected counts
//! * `POST /api/retrain`: 202 with the iteration being built, 409 while a retrain runs
//! * `GET /api/stats`: per-iteration history
//! * `GET /api/status`: busy flag, iteration and the last retrain error
//! * `GET /api/tweets/{id}`: one tweet with topic annotation and lexicon hits
//! * `GET /`: the review UI bundle when a directory is configured

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex, MutexGuard};

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tokio::sync::Notify;
use tower_http::services::ServeDir;
use tweetmine::corpus::Label;
use tweetmine::relabel::{ApplyReport, Decider, IterationStats, RelabelState, ReviewDecision, ReviewItem};

const PLACEHOLDER: &str = "<!doctype html><title>tweetmine review</title>\
<p>The review UI is not installed. The JSON API is under <code>/api</code>.</p>";

/// Shared session behind the routes. Label changes go through one mutex;
/// retraining runs off-lock as a single background job.
pub struct Service {
    state: Mutex<RelabelState>,
    busy: AtomicBool,
    idle: Notify,
    last_error: Mutex<Option<String>>,
}

/// Held while a retrain runs; dropping it clears the busy flag.
pub struct RetrainGuard {
    service: Arc<Service>,
}

impl Drop for RetrainGuard {
    fn drop(&mut self) {
        self.service.busy.store(false, Ordering::SeqCst);
        self.service.idle.notify_waiters();
    }
}

impl Service {
    pub fn new(state: RelabelState) -> Arc<Self> {
        Arc::new(Self {
            state: Mutex::new(state),
            busy: AtomicBool::new(false),
            idle: Notify::new(),
            last_error: Mutex::new(None),
        })
    }

    pub fn lock(&self) -> MutexGuard<'_, RelabelState> {
        self.state.lock().unwrap_or_else(|p| p.into_inner())
    }

    pub fn is_busy(&self) -> bool {
        self.busy.load(Ordering::SeqCst)
    }

    /// `None` when a retrain is already running.
    pub fn begin_retrain(self: &Arc<Self>) -> Option<RetrainGuard> {
        self.busy
            .compare_exchange(false, true, Ordering::SeqCst, Ordering::SeqCst)
            .ok()
            .map(|_| RetrainGuard { service: Arc::clone(self) })
    }

    pub async fn wait_idle(&self) {
        loop {
            let notified = self.idle.notified();
            if !self.is_busy() {
                return;
            }
            notified.await;
        }
    }

    pub fn last_error(&self) -> Option<String> {
        self.last_error.lock().unwrap_or_else(|p| p.into_inner()).clone()
    }

    /// Start a background retrain; returns the iteration it will produce.
    pub fn spawn_retrain(self: &Arc<Self>) -> Option<usize> {
        let guard = self.begin_retrain()?;
        let (job, next) = {
            let st = self.lock();
            (st.scoring_job(), st.iteration() + 1)
        };
        let service = Arc::clone(self);
        tokio::task::spawn_blocking(move || {
            let result = job.run().and_then(|scored| service.lock().finish_iteration(scored));
            let mut err = service.last_error.lock().unwrap_or_else(|p| p.into_inner());
            match result {
                Ok(stats) => {
                    log::info!("iteration {} queued {} items", stats.iteration, stats.queued);
                    *err = None;
                }
                Err(e) => {
                    log::error!("retrain failed: {e}");
                    *err = Some(e.to_string());
                }
            }
            drop(err);
            drop(guard);
        });
        Some(next)
    }
}

#[derive(Debug)]
struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(serde_json::json!({ "error": self.1 }))).into_response()
    }
}

#[derive(Debug, Deserialize)]
pub struct QueueParams {
    pub limit: Option<usize>,
    #[serde(default)]
    pub offset: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct QueuePage {
    pub iteration: usize,
    pub total: usize,
    pub offset: usize,
    pub items: Vec<ReviewItem>,
}

#[derive(Debug, Deserialize)]
pub struct DecisionInput {
    pub tweet_id: String,
    pub new_label: Label,
    #[serde(default = "human")]
    pub decider: Decider,
}

fn human() -> Decider {
    Decider::Human
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RetrainAccepted {
    pub iteration: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Status {
    pub busy: bool,
    pub iteration: usize,
    pub last_error: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TweetDetail {
    pub id: String,
    pub text: String,
    pub tokens: Vec<String>,
    pub label: Label,
    pub topic_annotation: Option<String>,
    pub lexicon_hits: Vec<String>,
    pub queued: bool,
    pub reviewed: bool,
}

async fn queue(State(svc): State<Arc<Service>>, Query(p): Query<QueueParams>) -> Json<QueuePage> {
    let st = svc.lock();
    let q = st.queue();
    let items = q
        .iter()
        .skip(p.offset)
        .take(p.limit.unwrap_or(usize::MAX))
        .cloned()
        .collect();
    Json(QueuePage {
        iteration: st.iteration(),
        total: q.len(),
        offset: p.offset,
        items,
    })
}

async fn decisions(State(svc): State<Arc<Service>>, Json(input): Json<Vec<DecisionInput>>) -> Result<Json<ApplyReport>, ApiError> {
    if svc.is_busy() {
        return Err(ApiError(StatusCode::CONFLICT, "retraining in progress".into()));
    }
    let decisions: Vec<ReviewDecision> = input
        .into_iter()
        .map(|d| ReviewDecision::now(d.tweet_id, d.new_label, d.decider))
        .collect();
    svc.lock()
        .apply_decisions(&decisions)
        .map(Json)
        .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))
}

async fn retrain(State(svc): State<Arc<Service>>) -> Result<(StatusCode, Json<RetrainAccepted>), ApiError> {
    match svc.spawn_retrain() {
        Some(iteration) => Ok((StatusCode::ACCEPTED, Json(RetrainAccepted { iteration }))),
        None => Err(ApiError(StatusCode::CONFLICT, "busy".into())),
    }
}

async fn stats(State(svc): State<Arc<Service>>) -> Json<Vec<IterationStats>> {
    Json(svc.lock().stats().to_vec())
}

async fn status(State(svc): State<Arc<Service>>) -> Json<Status> {
    let iteration = svc.lock().iteration();
    Json(Status {
        busy: svc.is_busy(),
        iteration,
        last_error: svc.last_error(),
    })
}

async fn tweet(State(svc): State<Arc<Service>>, Path(id): Path<String>) -> Result<Json<TweetDetail>, ApiError> {
    let st = svc.lock();
    let t = st
        .corpus()
        .get(&id)
        .ok_or_else(|| ApiError(StatusCode::NOT_FOUND, format!("no tweet {id:?}")))?;
    Ok(Json(TweetDetail {
        id: t.id.clone(),
        text: t.raw_text.clone(),
        tokens: t.tokens.clone(),
        label: t.label,
        topic_annotation: st.topic_annotation(&id),
        lexicon_hits: st.lexicon_hits(&id),
        queued: st.queue().iter().any(|i| i.tweet_id == id),
        reviewed: st.reviewed().contains(&id),
    }))
}

pub fn router(service: Arc<Service>, ui_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/queue", get(queue))
        .route("/api/decisions", post(decisions))
        .route("/api/retrain", post(retrain))
        .route("/api/stats", get(stats))
        .route("/api/status", get(status))
        .route("/api/tweets/{id}", get(tweet))
        .with_state(service);
    match ui_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.route("/", get(|| async { Html(PLACEHOLDER) })),
    }
}

pub async fn serve(service: Arc<Service>, addr: SocketAddr, ui_dir: Option<PathBuf>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(service, ui_dir)).await
}
