//! Spider/BIRD-format dataset loading.

use super::EvalError;
use crate::select::Hardness;
use serde::Deserialize;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetFormat {
    Spider,
    Bird,
}

impl DatasetFormat {
    pub fn parse(s: &str) -> Option<DatasetFormat> {
        match s.to_ascii_lowercase().as_str() {
            "spider" => Some(DatasetFormat::Spider),
            "bird" => Some(DatasetFormat::Bird),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetInstance {
    pub question: String,
    pub gold_sql: String,
    pub db_id: String,
    pub hardness_tag: Option<Hardness>,
    pub evidence: Option<String>,
}

#[derive(Debug, Deserialize)]
struct RawRow {
    question: Option<String>,
    // Spider uses `query`, BIRD uses `SQL`
    query: Option<String>,
    #[serde(rename = "SQL")]
    sql: Option<String>,
    db_id: Option<String>,
    evidence: Option<String>,
    #[serde(alias = "difficulty")]
    hardness: Option<String>,
}

/// Load a dataset JSON array. When `db_root` is given, every referenced
/// database file must exist under `<db_root>/<db_id>/<db_id>.sqlite`.
pub fn load_dataset(
    path: &Path,
    format: DatasetFormat,
    db_root: Option<&Path>,
) -> Result<Vec<DatasetInstance>, EvalError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| EvalError::Format(format!("cannot read {}: {e}", path.display())))?;
    let rows: Vec<RawRow> = serde_json::from_str(&text)
        .map_err(|e| EvalError::Format(format!("{}: {e}", path.display())))?;
    let mut out = Vec::with_capacity(rows.len());
    for (index, row) in rows.into_iter().enumerate() {
        let question = row
            .question
            .ok_or_else(|| EvalError::Format(format!("row {index}: missing question")))?;
        let gold_sql = match format {
            DatasetFormat::Spider => row.query.or(row.sql),
            DatasetFormat::Bird => row.sql.or(row.query),
        }
        .ok_or_else(|| EvalError::Format(format!("row {index}: missing SQL")))?;
        let db_id = row
            .db_id
            .ok_or_else(|| EvalError::Format(format!("row {index}: missing db_id")))?;
        if let Some(root) = db_root {
            let db_file = database_path(root, &db_id);
            if !db_file.exists() {
                return Err(EvalError::Format(format!(
                    "row {index}: database file for `{db_id}` not found at {}",
                    db_file.display()
                )));
            }
        }
        let evidence = match format {
            DatasetFormat::Bird => row.evidence.filter(|e| !e.trim().is_empty()),
            DatasetFormat::Spider => None,
        };
        out.push(DatasetInstance {
            question,
            gold_sql,
            db_id,
            hardness_tag: row.hardness.as_deref().and_then(Hardness::parse),
            evidence,
        });
    }
    Ok(out)
}

/// Conventional location of a database file under the dataset's db root.
pub fn database_path(db_root: &Path, db_id: &str) -> std::path::PathBuf {
    db_root.join(db_id).join(format!("{db_id}.sqlite"))
}
