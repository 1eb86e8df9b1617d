//! Text-to-SQL prompt engineering toolkit.
//!
//! The pipeline: pick demonstration (question, SQL) pairs for a new question
//! by structural similarity of SQL — tree edit distance over label-only ASTs,
//! its pq-gram approximation, or cosine similarity of contrastively trained
//! graph embeddings — build a prompt with schema DDL, call a chat-completion
//! provider, post-process the reply with rule- and prompt-based error
//! correction, and score predictions with exact-set-match and execution-match
//! accuracy over SQLite databases.

pub mod ast;
pub mod augment;
pub mod correct;
pub mod embed;
pub mod eval;
pub mod gcl;
pub mod graph;
pub mod llm;
pub mod prompt;
pub mod schema;
pub mod select;
pub mod treedist;
