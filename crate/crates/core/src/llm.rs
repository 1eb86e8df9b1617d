//! Provider-agnostic chat-completion client.
//!
//! A transport turns one prompt into one reply: over HTTP for real
//! providers (OpenAI-style JSON protocol), or from a directory of recorded
//! replies keyed by prompt fingerprint for fully offline, bit-reproducible
//! runs. The client adds bounded in-flight concurrency, retry with
//! exponential backoff, and a cost ledger of token usage per call.

use crate::prompt::{SimpleTokenizer, Tokenizer};
use sha2::{Digest, Sha256};
use std::path::PathBuf;
use std::sync::{Condvar, Mutex};
use std::time::Duration;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("provider unavailable after {attempts} attempts: {last_error}")]
    ProviderUnavailable { attempts: u32, last_error: String },
    #[error("rate limited; retry after {0:?}")]
    RateLimited(Option<Duration>),
    #[error("offline replay store has no entry for fingerprint {0}")]
    ReplayMiss(String),
    #[error("no SQL statement found in reply")]
    NoSqlFound,
    #[error("provider error: {0}")]
    Fatal(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProviderConfig {
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
    pub max_in_flight: usize,
    pub max_attempts: u32,
    pub backoff_base_ms: u64,
    /// Decoding temperature; 0 keeps generations deterministic-leaning.
    pub temperature: f64,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        ProviderConfig {
            endpoint: "https://api.openai.com/v1/chat/completions".to_string(),
            model: "gpt-4".to_string(),
            api_key_env: "OPENAI_API_KEY".to_string(),
            max_in_flight: 4,
            max_attempts: 4,
            backoff_base_ms: 500,
            temperature: 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RawReply {
    pub text: String,
    /// (prompt tokens, reply tokens) when the provider reports usage.
    pub usage: Option<(u64, u64)>,
}

#[derive(Debug)]
pub enum TransportError {
    /// Worth retrying: connection failures, 5xx.
    Transient(String),
    RateLimited(Option<Duration>),
    Fatal(String),
    ReplayMiss(String),
}

pub trait Transport: Send + Sync {
    fn send(&self, prompt: &str) -> Result<RawReply, TransportError>;
    fn describe(&self) -> String;
}

// ---------------------------------------------------------------------------
// HTTP transport
// ---------------------------------------------------------------------------

/// OpenAI-compatible chat-completions endpoint.
pub struct HttpTransport {
    pub config: ProviderConfig,
    client: reqwest::blocking::Client,
}

impl HttpTransport {
    pub fn new(config: ProviderConfig) -> Self {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(120))
            .build()
            .expect("http client");
        HttpTransport { client, config }
    }
}

impl Transport for HttpTransport {
    fn send(&self, prompt: &str) -> Result<RawReply, TransportError> {
        let key = std::env::var(&self.config.api_key_env).map_err(|_| {
            TransportError::Fatal(format!(
                "environment variable {} is not set",
                self.config.api_key_env
            ))
        })?;
        let body = serde_json::json!({
            "model": self.config.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.config.temperature,
        });
        let response = self
            .client
            .post(&self.config.endpoint)
            .bearer_auth(key)
            .json(&body)
            .send()
            .map_err(|e| TransportError::Transient(e.to_string()))?;
        let status = response.status();
        if status.as_u16() == 429 {
            let retry_after = response
                .headers()
                .get("retry-after")
                .and_then(|v| v.to_str().ok())
                .and_then(|v| v.parse::<u64>().ok())
                .map(Duration::from_secs);
            return Err(TransportError::RateLimited(retry_after));
        }
        if status.is_server_error() {
            return Err(TransportError::Transient(format!("server error {status}")));
        }
        if !status.is_success() {
            return Err(TransportError::Fatal(format!("http status {status}")));
        }
        #[derive(serde::Deserialize)]
        struct Choice {
            message: Message,
        }
        #[derive(serde::Deserialize)]
        struct Message {
            content: String,
        }
        #[derive(serde::Deserialize)]
        struct UsageBody {
            prompt_tokens: Option<u64>,
            completion_tokens: Option<u64>,
        }
        #[derive(serde::Deserialize)]
        struct Body {
            choices: Vec<Choice>,
            usage: Option<UsageBody>,
        }
        let parsed: Body = response
            .json()
            .map_err(|e| TransportError::Fatal(format!("malformed reply: {e}")))?;
        let text = parsed
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| TransportError::Fatal("reply has no choices".to_string()))?;
        let usage = parsed.usage.and_then(|u| {
            Some((u.prompt_tokens?, u.completion_tokens.unwrap_or(0)))
        });
        Ok(RawReply { text, usage })
    }

    fn describe(&self) -> String {
        format!("http:{}:{}", self.config.endpoint, self.config.model)
    }
}

// ---------------------------------------------------------------------------
// replay transport
// ---------------------------------------------------------------------------

/// Fingerprint of a request: SHA-256 over the model id and the exact prompt
/// bytes.
pub fn prompt_fingerprint(model: &str, prompt: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(model.as_bytes());
    hasher.update([0u8]);
    hasher.update(prompt.as_bytes());
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Directory of `<fingerprint>.txt` files. Misses are errors in offline
/// mode, or delegated to an inner transport (and recorded) when one is set.
pub struct ReplayTransport {
    pub dir: PathBuf,
    pub model: String,
    pub record_from: Option<Box<dyn Transport>>,
}

impl ReplayTransport {
    pub fn offline(dir: PathBuf, model: &str) -> Self {
        ReplayTransport {
            dir,
            model: model.to_string(),
            record_from: None,
        }
    }

    /// Store a canned reply for a prompt; used to build fixtures.
    pub fn record(dir: &std::path::Path, model: &str, prompt: &str, reply: &str) -> std::io::Result<String> {
        std::fs::create_dir_all(dir)?;
        let fingerprint = prompt_fingerprint(model, prompt);
        std::fs::write(dir.join(format!("{fingerprint}.txt")), reply)?;
        Ok(fingerprint)
    }
}

impl Transport for ReplayTransport {
    fn send(&self, prompt: &str) -> Result<RawReply, TransportError> {
        let fingerprint = prompt_fingerprint(&self.model, prompt);
        let path = self.dir.join(format!("{fingerprint}.txt"));
        match std::fs::read_to_string(&path) {
            Ok(text) => Ok(RawReply { text, usage: None }),
            Err(_) => match &self.record_from {
                Some(inner) => {
                    let reply = inner.send(prompt)?;
                    let _ = std::fs::create_dir_all(&self.dir);
                    let _ = std::fs::write(path, &reply.text);
                    Ok(reply)
                }
                None => Err(TransportError::ReplayMiss(fingerprint)),
            },
        }
    }

    fn describe(&self) -> String {
        format!("replay:{}:{}", self.dir.display(), self.model)
    }
}

// ---------------------------------------------------------------------------
// client
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub reply_tokens: u64,
}

#[derive(Debug, Clone, Default)]
pub struct CostLedger {
    pub calls: u64,
    pub prompt_tokens: u64,
    pub reply_tokens: u64,
}

#[derive(Debug, Clone)]
pub struct Reply {
    pub text: String,
    pub usage: Usage,
    pub attempts: u32,
}

struct Semaphore {
    permits: Mutex<usize>,
    available: Condvar,
}

impl Semaphore {
    fn new(permits: usize) -> Self {
        Semaphore {
            permits: Mutex::new(permits.max(1)),
            available: Condvar::new(),
        }
    }

    fn acquire(&self) {
        let mut permits = self.permits.lock().expect("semaphore lock");
        while *permits == 0 {
            permits = self.available.wait(permits).expect("semaphore wait");
        }
        *permits -= 1;
    }

    fn release(&self) {
        *self.permits.lock().expect("semaphore lock") += 1;
        self.available.notify_one();
    }
}

/// Retrying, rate-bounded front end over a transport. Shareable across
/// threads; the ledger accumulates every successful call's usage.
pub struct LlmClient {
    transport: Box<dyn Transport>,
    max_attempts: u32,
    backoff_base_ms: u64,
    in_flight_limit: usize,
    gate: Semaphore,
    ledger: Mutex<CostLedger>,
    tokenizer: SimpleTokenizer,
}

impl LlmClient {
    pub fn new(transport: Box<dyn Transport>, max_in_flight: usize, max_attempts: u32, backoff_base_ms: u64) -> Self {
        LlmClient {
            transport,
            max_attempts: max_attempts.max(1),
            backoff_base_ms,
            in_flight_limit: max_in_flight.max(1),
            gate: Semaphore::new(max_in_flight),
            ledger: Mutex::new(CostLedger::default()),
            tokenizer: SimpleTokenizer,
        }
    }

    pub fn from_config(config: ProviderConfig) -> Self {
        let max_in_flight = config.max_in_flight;
        let max_attempts = config.max_attempts;
        let backoff = config.backoff_base_ms;
        LlmClient::new(Box::new(HttpTransport::new(config)), max_in_flight, max_attempts, backoff)
    }

    pub fn describe(&self) -> String {
        self.transport.describe()
    }

    pub fn ledger(&self) -> CostLedger {
        self.ledger.lock().expect("ledger lock").clone()
    }

    pub fn in_flight_limit(&self) -> usize {
        self.in_flight_limit
    }

    pub fn complete(&self, prompt: &str) -> Result<Reply, LlmError> {
        self.gate.acquire();
        let result = self.complete_inner(prompt);
        self.gate.release();
        result
    }

    fn complete_inner(&self, prompt: &str) -> Result<Reply, LlmError> {
        let mut last_error = String::new();
        for attempt in 1..=self.max_attempts {
            match self.transport.send(prompt) {
                Ok(raw) => {
                    let usage = match raw.usage {
                        Some((p, r)) => Usage {
                            prompt_tokens: p,
                            reply_tokens: r,
                        },
                        // replays carry no usage; meter with the tokenizer
                        None => Usage {
                            prompt_tokens: self.tokenizer.count(prompt),
                            reply_tokens: self.tokenizer.count(&raw.text),
                        },
                    };
                    let mut ledger = self.ledger.lock().expect("ledger lock");
                    ledger.calls += 1;
                    ledger.prompt_tokens += usage.prompt_tokens;
                    ledger.reply_tokens += usage.reply_tokens;
                    return Ok(Reply {
                        text: raw.text,
                        usage,
                        attempts: attempt,
                    });
                }
                Err(TransportError::Transient(message)) => {
                    last_error = message;
                    if attempt < self.max_attempts {
                        std::thread::sleep(self.backoff(attempt));
                    }
                }
                Err(TransportError::RateLimited(retry_after)) => {
                    last_error = "rate limited".to_string();
                    if attempt < self.max_attempts {
                        std::thread::sleep(retry_after.unwrap_or_else(|| self.backoff(attempt)));
                    } else {
                        return Err(LlmError::RateLimited(retry_after));
                    }
                }
                Err(TransportError::Fatal(message)) => return Err(LlmError::Fatal(message)),
                Err(TransportError::ReplayMiss(fp)) => return Err(LlmError::ReplayMiss(fp)),
            }
        }
        Err(LlmError::ProviderUnavailable {
            attempts: self.max_attempts,
            last_error,
        })
    }

    fn backoff(&self, attempt: u32) -> Duration {
        Duration::from_millis(self.backoff_base_ms.saturating_mul(1u64 << (attempt - 1).min(8)))
    }
}

// ---------------------------------------------------------------------------
// SQL extraction
// ---------------------------------------------------------------------------

/// Pull the first SQL statement out of a chat reply: fenced code blocks
/// first, then the first SELECT line, then the whole reply. The result must
/// parse; otherwise `NoSqlFound`.
pub fn extract_sql(reply: &str) -> Result<String, LlmError> {
    for candidate in extraction_candidates(reply) {
        let trimmed = candidate.trim().trim_end_matches(';').trim();
        if trimmed.is_empty() {
            continue;
        }
        if crate::ast::parse_sql(trimmed).is_ok() {
            return Ok(trimmed.to_string());
        }
    }
    Err(LlmError::NoSqlFound)
}

fn extraction_candidates(reply: &str) -> Vec<String> {
    let mut candidates = Vec::new();
    // fenced code blocks
    let mut rest = reply;
    while let Some(open) = rest.find("```") {
        let after = &rest[open + 3..];
        let Some(close) = after.find("```") else {
            break;
        };
        let mut block = &after[..close];
        if let Some(newline) = block.find('\n') {
            let first = block[..newline].trim();
            // language tag line
            if !first.is_empty() && first.len() <= 10 && !first.contains(' ') {
                block = &block[newline + 1..];
            }
        }
        candidates.push(block.to_string());
        rest = &after[close + 3..];
    }
    // first line starting with SELECT/WITH, to end of text with shrinking cuts
    let lower = reply.to_lowercase();
    let start = lower
        .lines()
        .scan(0usize, |offset, line| {
            let this = *offset;
            *offset += line.len() + 1;
            Some((this, line))
        })
        .find(|(_, line)| {
            let t = line.trim_start();
            t.starts_with("select") || t.starts_with("with")
        })
        .map(|(offset, _)| offset);
    if let Some(start) = start {
        let tail = &reply[start.min(reply.len())..];
        candidates.push(tail.to_string());
        if let Some(semi) = tail.find(';') {
            candidates.push(tail[..semi].to_string());
        }
        if let Some(blank) = tail.find("\n\n") {
            candidates.push(tail[..blank].to_string());
        }
        if let Some(line) = tail.lines().next() {
            candidates.push(line.to_string());
        }
    }
    candidates.push(reply.to_string());
    candidates
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicU32, AtomicUsize, Ordering};
    use std::sync::Arc;

    struct FlakyTransport {
        failures: AtomicU32,
    }

    impl Transport for FlakyTransport {
        fn send(&self, _prompt: &str) -> Result<RawReply, TransportError> {
            if self.failures.fetch_update(Ordering::SeqCst, Ordering::SeqCst, |f| {
                if f > 0 { Some(f - 1) } else { None }
            }).is_ok()
            {
                return Err(TransportError::Transient("503".to_string()));
            }
            Ok(RawReply {
                text: "SELECT count(*) FROM singer".to_string(),
                usage: Some((100, 7)),
            })
        }

        fn describe(&self) -> String {
            "flaky".to_string()
        }
    }

    #[test]
    fn transient_failures_are_retried() {
        let client = LlmClient::new(
            Box::new(FlakyTransport {
                failures: AtomicU32::new(1),
            }),
            2,
            4,
            0,
        );
        let reply = client.complete("hello").unwrap();
        assert_eq!(reply.attempts, 2);
        assert_eq!(reply.usage.prompt_tokens, 100);
        let ledger = client.ledger();
        assert_eq!(ledger.calls, 1);
        assert_eq!(ledger.prompt_tokens, 100);
    }

    #[test]
    fn exhausted_retries_surface_unavailable() {
        let client = LlmClient::new(
            Box::new(FlakyTransport {
                failures: AtomicU32::new(100),
            }),
            1,
            3,
            0,
        );
        assert!(matches!(
            client.complete("hello"),
            Err(LlmError::ProviderUnavailable { attempts: 3, .. })
        ));
        assert_eq!(client.ledger().calls, 0);
    }

    struct SlowTransport {
        current: AtomicUsize,
        peak: AtomicUsize,
    }

    impl Transport for SlowTransport {
        fn send(&self, _prompt: &str) -> Result<RawReply, TransportError> {
            let now = self.current.fetch_add(1, Ordering::SeqCst) + 1;
            self.peak.fetch_max(now, Ordering::SeqCst);
            std::thread::sleep(Duration::from_millis(20));
            self.current.fetch_sub(1, Ordering::SeqCst);
            Ok(RawReply {
                text: "ok".to_string(),
                usage: Some((1, 1)),
            })
        }

        fn describe(&self) -> String {
            "slow".to_string()
        }
    }

    #[test]
    fn in_flight_requests_stay_bounded() {
        let transport = Arc::new(SlowTransport {
            current: AtomicUsize::new(0),
            peak: AtomicUsize::new(0),
        });
        struct Shared(Arc<SlowTransport>);
        impl Transport for Shared {
            fn send(&self, prompt: &str) -> Result<RawReply, TransportError> {
                self.0.send(prompt)
            }
            fn describe(&self) -> String {
                self.0.describe()
            }
        }
        let client = Arc::new(LlmClient::new(Box::new(Shared(transport.clone())), 3, 1, 0));
        let mut handles = Vec::new();
        for _ in 0..12 {
            let client = client.clone();
            handles.push(std::thread::spawn(move || {
                client.complete("x").unwrap();
            }));
        }
        for handle in handles {
            handle.join().unwrap();
        }
        assert!(transport.peak.load(Ordering::SeqCst) <= 3);
        assert_eq!(client.ledger().calls, 12);
    }

    #[test]
    fn replay_store_round_trip_and_miss() {
        let dir = tempfile::tempdir().unwrap();
        ReplayTransport::record(dir.path(), "test-model", "the prompt", "SELECT 1").unwrap();
        let transport = ReplayTransport::offline(dir.path().to_path_buf(), "test-model");
        let hit = transport.send("the prompt").unwrap();
        assert_eq!(hit.text, "SELECT 1");
        assert!(matches!(
            transport.send("another prompt"),
            Err(TransportError::ReplayMiss(_))
        ));
        // different model id, different fingerprint
        let other = ReplayTransport::offline(dir.path().to_path_buf(), "other-model");
        assert!(matches!(
            other.send("the prompt"),
            Err(TransportError::ReplayMiss(_))
        ));
    }

    #[test]
    fn extracts_sql_from_fenced_block() {
        let reply = "Here you go:\n```sql\nSELECT count(*) FROM singer\n```\nHope that helps!";
        assert_eq!(extract_sql(reply).unwrap(), "SELECT count(*) FROM singer");
    }

    #[test]
    fn extracts_bare_sql() {
        assert_eq!(
            extract_sql("SELECT count(*) FROM singer").unwrap(),
            "SELECT count(*) FROM singer"
        );
        assert_eq!(
            extract_sql("The answer is:\nSELECT name FROM t WHERE x = 1;\nLet me know!").unwrap(),
            "SELECT name FROM t WHERE x = 1"
        );
    }

    #[test]
    fn refuses_replies_without_sql() {
        assert!(matches!(
            extract_sql("I cannot answer that question."),
            Err(LlmError::NoSqlFound)
        ));
    }
}
