//! Participant specs (`kind:key=value,...`) and the live chat endpoint.
//!
//! - `simulated:tau=0.1,dim=32[,seed=N][,planted=path.lemb][,fault=0.1][,fault_seed=N]`
//! - `http:url=https://host/v1/chat/completions,model=name[,token_env=VAR][,timeout=60][,retries=4]`

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Duration;

use assocgeom_core::harness::{DecodeMode, DecodeParams, FaultInjector, Message, Participant, Role};
use assocgeom_core::seed::derive;
use assocgeom_core::simulator::PlantedGeometryParticipant;
use assocgeom_core::vocab::Vocabulary;
use assocgeom_core::Error as CoreError;

use crate::error::{Error, Result};
use crate::lemb;

pub const DEFAULT_TOKEN_ENV: &str = "ASSOCGEOM_API_TOKEN";

#[derive(Debug, Clone, PartialEq)]
pub struct Spec {
    pub kind: String,
    pub options: BTreeMap<String, String>,
}

impl Spec {
    pub fn parse(text: &str) -> Result<Spec> {
        let (kind, rest) = text.split_once(':').unwrap_or((text, ""));
        let mut options = BTreeMap::new();
        for part in rest.split(',').filter(|p| !p.trim().is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("participant option {part:?} is not key=value")))?;
            options.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(Spec { kind: kind.trim().to_string(), options })
    }

    fn get<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.options.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| Error::Config(format!("participant option {key}={v:?} is invalid"))),
        }
    }

    fn check_keys(&self, allowed: &[&str]) -> Result<()> {
        match self.options.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(Error::Config(format!("unknown option {k:?} for participant {:?}", self.kind))),
            None => Ok(()),
        }
    }
}

pub type BoxedParticipant = Box<dyn Participant + Send + Sync>;

/// Builds the participant a spec describes. `base_dir` resolves relative
/// `planted=` paths.
pub fn build(
    spec_text: &str,
    vocab: &Vocabulary,
    master_seed: u64,
    n_picks: usize,
    fa_words: usize,
    base_dir: &Path,
) -> Result<BoxedParticipant> {
    let spec = Spec::parse(spec_text)?;
    match spec.kind.as_str() {
        "simulated" => {
            spec.check_keys(&["tau", "dim", "seed", "planted", "fault", "fault_seed"])?;
            let tau: f64 = spec.get("tau", 0.1)?;
            let seed: u64 = spec.get("seed", master_seed)?;
            let sim = match spec.options.get("planted") {
                Some(p) => {
                    let path = base_dir.join(p);
                    let e = lemb::read_for_vocab(&path, vocab.len())?;
                    PlantedGeometryParticipant::from_embeddings(
                        vocab.clone(),
                        e.vectors().to_vec(),
                        e.dim(),
                        tau,
                        derive(seed, &[1]),
                    )?
                }
                None => PlantedGeometryParticipant::seeded(vocab.clone(), spec.get("dim", 32)?, tau, seed)?,
            }
            .with_counts(n_picks, fa_words);
            let fault: f64 = spec.get("fault", 0.0)?;
            if !(0.0..=1.0).contains(&fault) {
                return Err(Error::Config(format!("fault rate must lie in [0, 1], got {fault}")));
            }
            if fault > 0.0 {
                Ok(Box::new(FaultInjector::new(sim, fault, spec.get("fault_seed", seed)?)))
            } else {
                Ok(Box::new(sim))
            }
        }
        "http" => {
            spec.check_keys(&["url", "model", "token_env", "timeout", "retries"])?;
            let url = spec.options.get("url").ok_or_else(|| Error::Config("http participant needs url=".into()))?;
            let model =
                spec.options.get("model").ok_or_else(|| Error::Config("http participant needs model=".into()))?;
            let token_env = spec.get("token_env", DEFAULT_TOKEN_ENV.to_string())?;
            Ok(Box::new(HttpParticipant::new(
                url.clone(),
                model.clone(),
                std::env::var(&token_env).ok(),
                Duration::from_secs(spec.get("timeout", 60)?),
                spec.get("retries", 4)?,
            )))
        }
        other => Err(Error::Config(format!("unknown participant kind {other:?} (expected simulated or http)"))),
    }
}

/// OpenAI-style chat-completions client.
pub struct HttpParticipant {
    url: String,
    model: String,
    token: Option<String>,
    agent: ureq::Agent,
    retries: u32,
    backoff: Duration,
}

impl HttpParticipant {
    pub fn new(url: String, model: String, token: Option<String>, timeout: Duration, retries: u32) -> Self {
        let agent = ureq::AgentBuilder::new().timeout(timeout).build();
        HttpParticipant { url, model, token, agent, retries, backoff: Duration::from_millis(250) }
    }

    pub fn with_backoff(mut self, backoff: Duration) -> Self {
        self.backoff = backoff;
        self
    }

    fn body(&self, messages: &[Message], decode: &DecodeParams) -> serde_json::Value {
        let msgs: Vec<serde_json::Value> = messages
            .iter()
            .map(|m| {
                let role = match m.role {
                    Role::System => "system",
                    Role::User => "user",
                    Role::Assistant => "assistant",
                };
                serde_json::json!({ "role": role, "content": m.content })
            })
            .collect();
        let mut body = serde_json::json!({
            "model": self.model,
            "messages": msgs,
            "max_tokens": decode.max_new_tokens,
        });
        match decode.mode {
            DecodeMode::Greedy => {
                body["temperature"] = 0.0.into();
            }
            DecodeMode::Nucleus => {
                body["temperature"] = decode.temperature.into();
                body["top_p"] = decode.top_p.into();
            }
        }
        if let Some(seed) = decode.seed {
            body["seed"] = seed.into();
        }
        body
    }

    fn attempt(&self, body: &serde_json::Value) -> std::result::Result<String, (bool, String)> {
        let mut req = self.agent.post(&self.url).set("Content-Type", "application/json");
        if let Some(t) = &self.token {
            req = req.set("Authorization", &format!("Bearer {t}"));
        }
        match req.send_json(body.clone()) {
            Ok(resp) => {
                let v: serde_json::Value = resp.into_json().map_err(|e| (true, format!("reading response: {e}")))?;
                v["choices"][0]["message"]["content"]
                    .as_str()
                    .map(str::to_string)
                    .ok_or_else(|| (false, "response has no choices[0].message.content".to_string()))
            }
            Err(ureq::Error::Status(code, resp)) => {
                let retriable = code == 429 || code >= 500;
                let text = resp.into_string().unwrap_or_default();
                Err((retriable, format!("HTTP {code}: {}", text.chars().take(200).collect::<String>())))
            }
            Err(ureq::Error::Transport(t)) => Err((true, t.to_string())),
        }
    }
}

impl Participant for HttpParticipant {
    fn complete(&self, messages: &[Message], decode: &DecodeParams) -> assocgeom_core::Result<String> {
        let body = self.body(messages, decode);
        let mut delay = self.backoff;
        for attempt in 0..=self.retries {
            match self.attempt(&body) {
                Ok(text) => return Ok(text),
                Err((true, msg)) if attempt < self.retries => {
                    log::warn!("{}: {msg}; retrying in {delay:?}", self.url);
                    std::thread::sleep(delay);
                    delay *= 2;
                }
                Err((_, msg)) => return Err(CoreError::Transport(format!("{}: {msg}", self.url))),
            }
        }
        unreachable!("the last attempt always returns")
    }
}
