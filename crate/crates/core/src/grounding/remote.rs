use std::time::Duration;

use serde_json::{json, Value};

use super::{parse_selection, Grounder, GroundingError, GroundingResult, Retriever, SceneRequest, TextualIndex, RESERVED_PREDICATES};

/// Environment variable holding the bearer token for remote calls.
pub const API_KEY_ENV: &str = "MOBIPLAN_API_KEY";

const RETRIEVAL_SYSTEM: &str = "You pick the map nodes a household robot must visit for a task. \
Reply with a JSON object {\"reasoning\": string, \"selected_nodes\": [node names]}. \
Only use node names that appear in the index.";
const RETRIEVAL_USER: &str = "Task: {instruction}\n\nIndex:\n{index}";
const GROUNDING_SYSTEM: &str = "You turn observations of map nodes into PDDL facts. \
Reply with a JSON object {\"reasoning\": string, \"objects\": {node: [object names]}, \
\"init\": [\"(predicate arg ...)\"], \"goal\": \"(and ...)\"}. \
Use only predicates declared in the domain. Never use these predicates: {reserved}.";
const GROUNDING_USER: &str = "Task: {instruction}\n\nDomain:\n{domain}\n\nNodes:\n{nodes}";

/// Chat-completion endpoint settings.
#[derive(Clone, Debug, PartialEq)]
pub struct RemoteSpec {
    pub endpoint: String,
    pub model: String,
    pub timeout: Duration,
    pub max_retries: u32,
    pub backoff: Duration,
    pub retrieval_system: String,
    pub retrieval_user: String,
    pub grounding_system: String,
    pub grounding_user: String,
}

impl Default for RemoteSpec {
    fn default() -> Self {
        RemoteSpec {
            endpoint: "http://127.0.0.1:8000/v1/chat/completions".into(),
            model: "default".into(),
            timeout: Duration::from_secs(60),
            max_retries: 2,
            backoff: Duration::from_millis(500),
            retrieval_system: RETRIEVAL_SYSTEM.into(),
            retrieval_user: RETRIEVAL_USER.into(),
            grounding_system: GROUNDING_SYSTEM.into(),
            grounding_user: GROUNDING_USER.into(),
        }
    }
}

fn fill(template: &str, vars: &[(&str, &str)]) -> String {
    vars.iter().fold(template.to_string(), |acc, (k, v)| acc.replace(&format!("{{{k}}}"), v))
}

/// Strips a Markdown code fence around a JSON reply.
fn unfence(s: &str) -> &str {
    let t = s.trim();
    match t.strip_prefix("```") {
        Some(rest) => {
            let rest = rest.trim_start_matches("json");
            rest.strip_suffix("```").unwrap_or(rest).trim()
        }
        None => t,
    }
}

pub struct RemoteClient {
    spec: RemoteSpec,
    agent: ureq::Agent,
}

impl RemoteClient {
    pub fn new(spec: RemoteSpec) -> Self {
        let agent = ureq::AgentBuilder::new().timeout(spec.timeout).build();
        RemoteClient { spec, agent }
    }

    /// One chat completion; returns the assistant message text.
    pub fn complete(&self, system: &str, user: &str) -> Result<String, GroundingError> {
        let body = json!({
            "model": self.spec.model,
            "messages": [{"role": "system", "content": system}, {"role": "user", "content": user}],
            "response_format": {"type": "json_object"},
        });
        let key = std::env::var(API_KEY_ENV).ok();
        let mut attempt = 0;
        loop {
            let mut req = self.agent.post(&self.spec.endpoint).set("Content-Type", "application/json");
            if let Some(k) = &key {
                req = req.set("Authorization", &format!("Bearer {k}"));
            }
            let err = match req.send_json(body.clone()) {
                Ok(resp) => {
                    let v: Value = resp.into_json().map_err(|e| GroundingError::Remote(format!("bad response body: {e}")))?;
                    return v["choices"][0]["message"]["content"]
                        .as_str()
                        .map(|s| unfence(s).to_string())
                        .ok_or_else(|| GroundingError::Remote("response has no message content".into()));
                }
                Err(ureq::Error::Status(code, _)) if code < 500 => {
                    return Err(GroundingError::Remote(format!("status {code}")));
                }
                Err(ureq::Error::Status(code, _)) => format!("status {code}"),
                Err(ureq::Error::Transport(t)) => t.to_string(),
            };
            if attempt >= self.spec.max_retries {
                return Err(GroundingError::Remote(format!("{err} after {} attempts", attempt + 1)));
            }
            log::warn!("remote call failed ({err}), retrying");
            std::thread::sleep(self.spec.backoff * 2u32.pow(attempt));
            attempt += 1;
        }
    }
}

impl Retriever for RemoteClient {
    fn retrieve(&self, instruction: &str, index: &TextualIndex) -> Result<Vec<String>, GroundingError> {
        let user = fill(&self.spec.retrieval_user, &[("instruction", instruction), ("index", &index.render())]);
        parse_selection(&self.complete(&self.spec.retrieval_system, &user)?)
    }
}

impl Grounder for RemoteClient {
    fn ground(&self, req: &SceneRequest<'_>) -> Result<GroundingResult, GroundingError> {
        let empty = Vec::new();
        let nodes: Vec<String> = req
            .nodes
            .iter()
            .map(|n| {
                let images: &Vec<String> = req.images.get(n).unwrap_or(&empty);
                let mut line = format!("- {n}: {}", req.index.caption(n).unwrap_or(""));
                if !images.is_empty() {
                    line.push_str(&format!(" [images: {}]", images.join(", ")));
                }
                line
            })
            .collect();
        let reserved = RESERVED_PREDICATES.join(", ");
        let system = fill(&self.spec.grounding_system, &[("reserved", &reserved)]);
        let user = fill(
            &self.spec.grounding_user,
            &[("instruction", req.instruction), ("domain", req.domain_text), ("nodes", &nodes.join("\n"))],
        );
        GroundingResult::from_json(&self.complete(&system, &user)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn templates_and_fences() {
        assert_eq!(fill("a {x} b {x}", &[("x", "1")]), "a 1 b 1");
        assert_eq!(unfence("```json\n{\"a\":1}\n```"), "{\"a\":1}");
        assert_eq!(unfence(" {} "), "{}");
    }
}
