//! Human-evaluation chat sessions and run listing over JSON/HTTP.
//!
//! | method | path                    | body                                  |
//! |--------|-------------------------|---------------------------------------|
//! | POST   | `/sessions`             | `{"config": name}`                    |
//! | POST   | `/sessions/{id}/messages` | `{"text": ...}`                     |
//! | POST   | `/sessions/{id}/close`  | `{"success": bool, "stars": 1..=5, "comment"?}` |
//! | GET    | `/sessions/{id}`        |                                       |
//! | GET    | `/configs`              |                                       |
//! | GET    | `/runs`                 |                                       |
//!
//! Closed sessions are written to `<runs>/human/<date>/<id>.json` as one JSON line.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use axum::extract::{Path as UrlPath, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::agent::Agent;
use crate::config::{build_agent, world_for, ExperimentConfig, Registry};
use crate::dialog::{ActType, DialogAct, DialogActSet, Episode};
use crate::domain::UserGoal;
use crate::env::{EnvSpec, HumanEnv};
use crate::error::{Error, Result};
use crate::nlg::{render_goal, Role};
use crate::world::World;

/// An agent config the service can chat with.
struct ChatConfig {
    config: ExperimentConfig,
    world: Arc<World>,
    spec: EnvSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Open,
    Closed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rating {
    pub success: bool,
    pub stars: u8,
    #[serde(default)]
    pub comment: String,
}

pub struct ChatSession {
    pub id: String,
    pub config: String,
    pub instructions: String,
    pub status: Status,
    pub rating: Option<Rating>,
    agent: Agent,
    env: HumanEnv,
}

impl ChatSession {
    pub fn goal(&self) -> &UserGoal {
        self.env.goal()
    }

    pub fn transcript(&self) -> &Episode {
        self.env.episode()
    }
}

/// One persisted human-evaluation record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HumanRecord {
    pub id: String,
    pub config: String,
    pub instructions: String,
    pub episode: Episode,
    pub rating: Rating,
    /// The person's own judgment.
    pub human_success: bool,
    /// The simulator's goal check applied to the same dialog.
    pub auto_success: bool,
    pub closed_at: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Created {
    pub id: String,
    pub config: String,
    pub instructions: String,
    pub prompt: String,
    pub status: Status,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Reply {
    pub reply: String,
    pub done: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Closed {
    pub path: PathBuf,
    pub human_success: bool,
    pub auto_success: bool,
}

pub struct ChatService {
    configs: IndexMap<String, ChatConfig>,
    registry: Registry,
    sessions: Mutex<HashMap<String, Arc<tokio::sync::Mutex<ChatSession>>>>,
    runs_dir: PathBuf,
}

impl ChatService {
    /// Serves the first agent and env of each experiment whose agent reads and writes text.
    pub fn new(configs: Vec<ExperimentConfig>, runs_dir: impl Into<PathBuf>) -> Result<Self> {
        let registry = Registry::builtin();
        let mut map = IndexMap::new();
        for config in configs {
            let world = world_for(&config)?;
            // probe that the agent builds and can chat
            let agent = build_agent(&config.agents[0], &registry, &world, 0)?;
            if !agent.layout().speaks_text() {
                continue;
            }
            let spec = config.envs[0].spec.clone();
            map.insert(config.name.clone(), ChatConfig { config, world, spec });
        }
        Ok(ChatService { configs: map, registry, sessions: Mutex::new(HashMap::new()), runs_dir: runs_dir.into() })
    }

    pub fn config_names(&self) -> Vec<String> {
        self.configs.keys().cloned().collect()
    }

    pub fn runs_dir(&self) -> &Path {
        &self.runs_dir
    }

    fn session(&self, id: &str) -> Result<Arc<tokio::sync::Mutex<ChatSession>>> {
        self.sessions
            .lock()
            .expect("session map lock")
            .get(id)
            .cloned()
            .ok_or_else(|| Error::UnknownSession(id.to_string()))
    }

    pub fn create_session(&self, config: &str) -> Result<Created> {
        let chat = self.configs.get(config).ok_or_else(|| Error::UnknownConfig(config.to_string()))?;
        let seed: u64 = rand::random();
        let mut agent = build_agent(&chat.config.agents[0], &self.registry, &chat.world, seed)?;
        agent.set_training(false);
        agent.begin_episode(0, 1);
        let env = HumanEnv::new(chat.world.clone(), chat.spec.clone(), seed)?;
        let instructions = render_goal(env.goal(), &chat.world.templates);
        let greet: DialogActSet = vec![DialogAct::general(ActType::Greet)].into();
        let prompt = chat
            .world
            .templates
            .generate(&greet, Role::System)
            .unwrap_or_else(|_| "Hello, how can I help you?".into());
        let id = uuid::Uuid::new_v4().simple().to_string();
        let session = ChatSession {
            id: id.clone(),
            config: config.to_string(),
            instructions: instructions.clone(),
            status: Status::Open,
            rating: None,
            agent,
            env,
        };
        self.sessions.lock().expect("session map lock").insert(id.clone(), Arc::new(tokio::sync::Mutex::new(session)));
        Ok(Created { id, config: config.to_string(), instructions, prompt, status: Status::Open })
    }

    pub async fn post_message(&self, id: &str, text: &str) -> Result<Reply> {
        let session = self.session(id)?;
        let mut s = session.lock().await;
        if s.status == Status::Closed {
            return Err(Error::SessionClosed(id.to_string()));
        }
        let s = &mut *s;
        let obs = s.env.user_says(text)?;
        let out = s.agent.respond(&obs.payload)?;
        let reply = match out.text {
            Some(t) => t,
            None => return Err(Error::Incompatible("agent produced no text".into())),
        };
        s.env.system_says(out.acts, reply.clone())?;
        Ok(Reply { reply, done: s.env.is_done() })
    }

    /// Closes the session and persists its record.
    pub async fn close_session(&self, id: &str, rating: Rating) -> Result<Closed> {
        if !(1..=5).contains(&rating.stars) {
            return Err(Error::validation("stars", "must lie in 1..=5"));
        }
        let session = self.session(id)?;
        let mut s = session.lock().await;
        if s.status == Status::Closed {
            return Err(Error::UnknownSession(id.to_string()));
        }
        let now = chrono::Utc::now();
        let record = HumanRecord {
            id: s.id.clone(),
            config: s.config.clone(),
            instructions: s.instructions.clone(),
            episode: s.env.episode().clone(),
            human_success: rating.success,
            auto_success: s.env.adjudicate(),
            rating: rating.clone(),
            closed_at: now.to_rfc3339(),
        };
        let dir = self.runs_dir.join("human").join(now.format("%Y-%m-%d").to_string());
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let path = dir.join(format!("{}.json", s.id));
        let mut line = serde_json::to_string(&record).expect("records serialize");
        line.push('\n');
        std::fs::write(&path, line).map_err(|e| Error::io(&path, e))?;
        s.status = Status::Closed;
        s.rating = Some(rating);
        Ok(Closed { path, human_success: record.human_success, auto_success: record.auto_success })
    }

    pub async fn describe(&self, id: &str) -> Result<Value> {
        let session = self.session(id)?;
        let s = session.lock().await;
        Ok(json!({
            "id": s.id,
            "config": s.config,
            "status": s.status,
            "instructions": s.instructions,
            "goal": s.goal(),
            "done": s.env.is_done(),
            "transcript": s.transcript(),
            "rating": s.rating,
        }))
    }

    /// Experiments under the runs directory, with their best trials.
    pub fn list_runs(&self) -> Vec<Value> {
        let Ok(entries) = std::fs::read_dir(&self.runs_dir) else {
            return Vec::new();
        };
        let mut dirs: Vec<PathBuf> = entries.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.is_dir()).collect();
        dirs.sort();
        dirs.iter()
            .filter_map(|d| crate::harness::load_experiment(d).ok())
            .map(|r| {
                json!({
                    "experiment": r.experiment,
                    "objective": r.objective,
                    "trials": r.trials.len(),
                    "best_trial": r.best_trial,
                    "best_value": r.best_value,
                })
            })
            .collect()
    }
}

/// JSON error body with a status code per error kind.
pub struct ApiError(Error);

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        ApiError(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match &self.0 {
            Error::UnknownConfig(_) | Error::UnknownSession(_) => StatusCode::NOT_FOUND,
            Error::SessionClosed(_) | Error::SteppedAfterDone => StatusCode::CONFLICT,
            Error::Validation { .. } => StatusCode::BAD_REQUEST,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let kind = match &self.0 {
            Error::UnknownConfig(_) => "UnknownConfig",
            Error::UnknownSession(_) => "UnknownSession",
            Error::SessionClosed(_) => "SessionClosed",
            Error::SteppedAfterDone => "DialogFinished",
            Error::Validation { .. } => "Validation",
            _ => "Internal",
        };
        (status, Json(json!({"error": kind, "message": self.0.to_string()}))).into_response()
    }
}

type ApiResult<T> = std::result::Result<T, ApiError>;

#[derive(Deserialize)]
struct CreateBody {
    config: String,
}

#[derive(Deserialize)]
struct MessageBody {
    text: String,
}

async fn create(State(svc): State<Arc<ChatService>>, Json(body): Json<CreateBody>) -> ApiResult<(StatusCode, Json<Created>)> {
    Ok((StatusCode::CREATED, Json(svc.create_session(&body.config)?)))
}

async fn message(
    State(svc): State<Arc<ChatService>>,
    UrlPath(id): UrlPath<String>,
    Json(body): Json<MessageBody>,
) -> ApiResult<Json<Reply>> {
    Ok(Json(svc.post_message(&id, &body.text).await?))
}

async fn close(
    State(svc): State<Arc<ChatService>>,
    UrlPath(id): UrlPath<String>,
    Json(rating): Json<Rating>,
) -> ApiResult<Json<Closed>> {
    Ok(Json(svc.close_session(&id, rating).await?))
}

async fn show(State(svc): State<Arc<ChatService>>, UrlPath(id): UrlPath<String>) -> ApiResult<Json<Value>> {
    Ok(Json(svc.describe(&id).await?))
}

async fn configs(State(svc): State<Arc<ChatService>>) -> Json<Vec<String>> {
    Json(svc.config_names())
}

async fn runs(State(svc): State<Arc<ChatService>>) -> Json<Vec<Value>> {
    Json(svc.list_runs())
}

pub fn router(service: Arc<ChatService>) -> Router {
    Router::new()
        .route("/sessions", post(create))
        .route("/sessions/{id}/messages", post(message))
        .route("/sessions/{id}/close", post(close))
        .route("/sessions/{id}", get(show))
        .route("/configs", get(configs))
        .route("/runs", get(runs))
        .with_state(service)
}

/// Serves until the process is stopped.
pub async fn serve(service: Arc<ChatService>, port: u16) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(("127.0.0.1", port)).await?;
    axum::serve(listener, router(service)).await
}
