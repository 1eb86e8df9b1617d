//! Canned chat transports for offline pipeline runs.

use text2sql_core::llm::{RawReply, Transport, TransportError};

/// Answers generation prompts by looking up the question line and replying
/// with its gold SQL; answers correction prompts by echoing the candidate
/// statement back. Combined with a recording replay store this primes
/// fixtures for fully offline reruns.
pub struct QuestionLookupTransport {
    /// (question, gold sql)
    pub answers: Vec<(String, String)>,
}

impl Transport for QuestionLookupTransport {
    fn send(&self, prompt: &str) -> Result<RawReply, TransportError> {
        if let Some(start) = prompt.find("### SQL query to fix: ") {
            let sql = prompt[start + "### SQL query to fix: ".len()..]
                .lines()
                .next()
                .unwrap_or("")
                .to_string();
            return Ok(RawReply {
                text: sql,
                usage: None,
            });
        }
        if let Some(start) = prompt.find("### Question: ") {
            let question = prompt[start + "### Question: ".len()..]
                .lines()
                .next()
                .unwrap_or("")
                .trim();
            if let Some((_, sql)) = self.answers.iter().find(|(q, _)| q == question) {
                return Ok(RawReply {
                    text: sql.clone(),
                    usage: None,
                });
            }
            return Err(TransportError::Fatal(format!(
                "no canned answer for question `{question}`"
            )));
        }
        Err(TransportError::Fatal("unrecognized prompt shape".to_string()))
    }

    fn describe(&self) -> String {
        "question-lookup".to_string()
    }
}
