use std::sync::OnceLock;

use async_trait::async_trait;
use regex::Regex;

use super::{BackendReply, ChatBackend, ChatRequest, GatewayError};

/// Calls a closure for every request. Handy for tests and fakes.
pub struct ScriptedBackend<F> {
    respond: F,
}

impl<F> ScriptedBackend<F>
where
    F: Fn(&ChatRequest) -> Result<String, GatewayError> + Send + Sync,
{
    pub fn new(respond: F) -> Self {
        Self { respond }
    }
}

#[async_trait]
impl<F> ChatBackend for ScriptedBackend<F>
where
    F: Fn(&ChatRequest) -> Result<String, GatewayError> + Send + Sync,
{
    async fn send(&self, request: &ChatRequest) -> Result<BackendReply, GatewayError> {
        (self.respond)(request).map(|text| BackendReply { text, attempts: 1 })
    }
}

/// Deterministic offline backend.
///
/// The reply depends only on the request, so a stub run is reproducible and
/// answers still parse: numbered lists, an underlying problem and a valid
/// score matrix, chosen by the step the last message mentions.
pub struct StubBackend;

impl StubBackend {
    pub fn reply_for(request: &ChatRequest) -> String {
        let last = request.messages.last().map(|m| m.content.as_str()).unwrap_or_default();
        let tag = &request.fingerprint()[..8];
        let Some(step) = step_number(last) else {
            return format!("Hello, glad to work with everyone ({tag}).");
        };
        let wants_answer = last.contains("final answer") || last.starts_with(&format!("Step {step}:"));
        if !wants_answer {
            return format!("Noted for Step {step} ({tag}).");
        }
        match step {
            1 => numbered("Challenge", tag),
            2 => format!(
                "Challenge ID: 1.\nIn 2035, as conditions shift, how might we reduce pressure on the region in order to restore balance ({tag})?\nTime: 2035\nLocation: Stub Region\nTheme: Stub Theme"
            ),
            3 => numbered("Solution", tag),
            4 => "1. Cost\n2. Time\n3. Acceptance\n4. Safety\n5. Impact".to_string(),
            5 => {
                let mut out = String::from(
                    "Solution ID | Criterion 1 | Criterion 2 | Criterion 3 | Criterion 4 | Criterion 5 | Total Score\n",
                );
                for id in 1..=8u32 {
                    let v = 9 - id;
                    out.push_str(&format!("{id} | {v} | {v} | {v} | {v} | {v} | {}\n", 5 * v));
                }
                out.push_str("The solution with the highest total score is: 1. Stub solution 1.");
                out
            }
            _ => format!("Action plan for Step {step} ({tag}): pilot, evaluate, scale."),
        }
    }
}

fn numbered(kind: &str, tag: &str) -> String {
    (1..=8)
        .map(|i| format!("{i}. {kind} {i} ({tag})"))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Number from the first "Step N" mention that is not a history header; later
/// mentions may come from output specs that refer back to earlier steps.
fn step_number(text: &str) -> Option<u32> {
    static PATTERN: OnceLock<Regex> = OnceLock::new();
    let re = PATTERN.get_or_init(|| Regex::new(r"Step (\d+)( final answer)?").unwrap());
    re.captures_iter(text)
        .filter(|c| c.get(2).is_none())
        .filter_map(|c| c[1].parse().ok())
        .next()
}

#[async_trait]
impl ChatBackend for StubBackend {
    async fn send(&self, request: &ChatRequest) -> Result<BackendReply, GatewayError> {
        Ok(BackendReply {
            text: Self::reply_for(request),
            attempts: 1,
        })
    }
}
