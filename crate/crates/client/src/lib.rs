//! Typed client for the rater-console API served by `teamharness serve`.

use reqwest::{Method, RequestBuilder, StatusCode};
use serde::de::DeserializeOwned;
use serde::Serialize;
use teamharness_core::scoring::{CalibrationCase, Dimension, ScoreSheet};
use teamharness_core::workspace::api::{ApiErrorBody, AssignRequest, ScoreSubmission, StoredSheet};
use teamharness_core::workspace::{ConsistencyReport, ResponseView, SessionView, SubmitOutcome};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("{status}: {}", body.error)]
    Api { status: StatusCode, body: ApiErrorBody },
    #[error("transport: {0}")]
    Transport(#[from] reqwest::Error),
}

impl ClientError {
    pub fn status(&self) -> Option<StatusCode> {
        match self {
            ClientError::Api { status, .. } => Some(*status),
            ClientError::Transport(e) => e.status(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Client {
    http: reqwest::Client,
    base: String,
    token: Option<String>,
}

impl Client {
    pub fn new(base_url: impl Into<String>) -> Self {
        Self {
            http: reqwest::Client::new(),
            base: base_url.into().trim_end_matches('/').to_string(),
            token: None,
        }
    }

    pub fn with_token(mut self, token: Option<String>) -> Self {
        self.token = token;
        self
    }

    fn request(&self, method: Method, path: &str) -> RequestBuilder {
        let builder = self.http.request(method, format!("{}{path}", self.base));
        match &self.token {
            Some(t) => builder.bearer_auth(t),
            None => builder,
        }
    }

    async fn send<T: DeserializeOwned>(&self, builder: RequestBuilder) -> Result<T, ClientError> {
        let response = builder.send().await?;
        let status = response.status();
        if status.is_success() {
            return Ok(response.json().await?);
        }
        let text = response.text().await.unwrap_or_default();
        let body = serde_json::from_str(&text).unwrap_or(ApiErrorBody {
            error: text,
            violations: Vec::new(),
            current_version: None,
        });
        Err(ClientError::Api { status, body })
    }

    async fn get<T: DeserializeOwned>(&self, path: &str) -> Result<T, ClientError> {
        self.send(self.request(Method::GET, path)).await
    }

    async fn with_body<B: Serialize, T: DeserializeOwned>(
        &self,
        method: Method,
        path: &str,
        body: &B,
    ) -> Result<T, ClientError> {
        self.send(self.request(method, path).json(body)).await
    }

    pub async fn health(&self) -> Result<bool, ClientError> {
        let response = self.request(Method::GET, "/health").send().await?;
        Ok(response.status().is_success())
    }

    pub async fn rubric(&self) -> Result<Vec<Dimension>, ClientError> {
        self.get("/rubric").await
    }

    pub async fn sessions(&self) -> Result<Vec<SessionView>, ClientError> {
        self.get("/sessions").await
    }

    pub async fn session(&self, id: &str) -> Result<SessionView, ClientError> {
        self.get(&format!("/sessions/{id}")).await
    }

    pub async fn response(&self, id: &str) -> Result<ResponseView, ClientError> {
        self.get(&format!("/responses/{id}")).await
    }

    pub async fn score(&self, response_id: &str, rater_id: &str) -> Result<StoredSheet, ClientError> {
        self.get(&format!("/scores/{response_id}/{rater_id}")).await
    }

    pub async fn put_score(
        &self,
        response_id: &str,
        rater_id: &str,
        body: &ScoreSubmission,
    ) -> Result<SubmitOutcome, ClientError> {
        self.with_body(Method::PUT, &format!("/scores/{response_id}/{rater_id}"), body)
            .await
    }

    /// Submits a whole sheet under its own response and rater ids.
    pub async fn submit(
        &self,
        sheet: &ScoreSheet,
        expected_version: Option<u64>,
    ) -> Result<SubmitOutcome, ClientError> {
        self.put_score(
            &sheet.response_id,
            &sheet.rater_id,
            &ScoreSubmission::from_sheet(sheet, expected_version),
        )
        .await
    }

    pub async fn consistency(&self, session_id: &str) -> Result<ConsistencyReport, ClientError> {
        self.get(&format!("/consistency/{session_id}")).await
    }

    pub async fn calibration_cases(&self) -> Result<Vec<CalibrationCase>, ClientError> {
        self.get("/calibration").await
    }

    pub async fn assign(&self, case_id: &str, rater_id: &str) -> Result<CalibrationCase, ClientError> {
        let body = AssignRequest {
            rater_id: rater_id.to_string(),
        };
        self.with_body(Method::POST, &format!("/calibration/{case_id}/assign"), &body)
            .await
    }
}
