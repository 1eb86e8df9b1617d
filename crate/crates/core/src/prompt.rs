//! Prompt assembly and token accounting.
//!
//! A prompt is five ordered sections — instruction, demonstrations, schema
//! DDL, optional evidence, question — rendered through an editable layout
//! template with `{instruction}`, `{demonstrations}`, `{schema}`,
//! `{evidence}`, and `{question}` placeholders. With zero demonstrations the
//! demonstration section disappears entirely (the zero-shot form).

use crate::ast::{render_create_table, ColumnDef, CreateTable, ForeignKeyClause};
use crate::schema::DatabaseSchema;

pub const DEFAULT_INSTRUCTION: &str =
    "Answer the question using a single sqlite SQL query only, with no explanation.";

pub const CORRECTION_INSTRUCTION: &str =
    "Fix any mistakes in the SQL query below using the schema and the guidelines. \
     Reply with the corrected sqlite SQL query only, with no explanation.";

/// Section layout for Spider-style prompts.
pub const SPIDER_LAYOUT: &str = "### {instruction}\n\n{demonstrations}### Database schema:\n{schema}\n\n{evidence}### Question: {question}\n";

/// BIRD adds an evidence section between the schema and the question.
pub const BIRD_LAYOUT: &str = SPIDER_LAYOUT;

const DEMONSTRATION_HEADER: &str =
    "### Some example pairs of question and corresponding SQL query:\n";
const EVIDENCE_HEADER: &str = "### Evidence: ";

#[derive(Debug, Clone, PartialEq)]
pub struct PromptBundle {
    pub instruction: String,
    /// (question, sql) pairs, at most ten.
    pub demonstrations: Vec<(String, String)>,
    pub schema_ddl: String,
    pub evidence: Option<String>,
    pub question: String,
}

impl PromptBundle {
    pub fn zero_shot(schema_ddl: String, question: String) -> PromptBundle {
        PromptBundle {
            instruction: DEFAULT_INSTRUCTION.to_string(),
            demonstrations: Vec::new(),
            schema_ddl,
            evidence: None,
            question,
        }
    }
}

/// One CREATE TABLE statement per table, schema order, with primary and
/// foreign keys; the text shown to the model as database context.
pub fn render_schema_ddl(schema: &DatabaseSchema) -> String {
    let mut statements = Vec::with_capacity(schema.tables.len());
    for table in &schema.tables {
        let ddl = CreateTable {
            name: table.name.clone(),
            columns: table
                .columns
                .iter()
                .map(|c| ColumnDef {
                    name: c.name.clone(),
                    type_name: c.col_type.ddl_name().to_string(),
                    primary_key: table.primary_keys.iter().any(|pk| pk.eq_ignore_ascii_case(&c.name)),
                })
                .collect(),
            primary_key: table.primary_keys.clone(),
            foreign_keys: schema
                .foreign_keys
                .iter()
                .filter(|fk| fk.from_table.eq_ignore_ascii_case(&table.name))
                .map(|fk| ForeignKeyClause {
                    columns: vec![fk.from_column.clone()],
                    ref_table: fk.to_table.clone(),
                    ref_columns: vec![fk.to_column.clone()],
                })
                .collect(),
        };
        statements.push(format!("{};", render_create_table(&ddl)));
    }
    statements.join("\n")
}

/// Render a bundle through a layout template.
pub fn build_prompt_with_layout(bundle: &PromptBundle, layout: &str) -> String {
    let demonstrations = if bundle.demonstrations.is_empty() {
        String::new()
    } else {
        let mut block = String::from(DEMONSTRATION_HEADER);
        for (question, sql) in &bundle.demonstrations {
            block.push_str(&format!("Question: {question}\nSQL: {sql}\n"));
        }
        block.push('\n');
        block
    };
    let evidence = match &bundle.evidence {
        Some(text) if !text.trim().is_empty() => format!("{EVIDENCE_HEADER}{text}\n\n"),
        _ => String::new(),
    };
    layout
        .replace("{instruction}", &bundle.instruction)
        .replace("{demonstrations}", &demonstrations)
        .replace("{schema}", &bundle.schema_ddl)
        .replace("{evidence}", &evidence)
        .replace("{question}", &bundle.question)
}

/// Render with the default Spider layout.
pub fn build_prompt(bundle: &PromptBundle) -> String {
    build_prompt_with_layout(bundle, SPIDER_LAYOUT)
}

// ---------------------------------------------------------------------------
// token counting
// ---------------------------------------------------------------------------

/// Prompt-size metric. The default splitter is deliberately simple; a
/// provider-specific tokenizer can be plugged in where absolute parity with
/// a billing meter matters.
pub trait Tokenizer: Send + Sync {
    fn count(&self, text: &str) -> u64;
}

/// Alphanumeric runs count as one token each; every other non-whitespace
/// character is its own token.
#[derive(Debug, Clone, Copy, Default)]
pub struct SimpleTokenizer;

impl Tokenizer for SimpleTokenizer {
    fn count(&self, text: &str) -> u64 {
        let mut count = 0u64;
        let mut in_word = false;
        for c in text.chars() {
            if c.is_alphanumeric() || c == '_' {
                if !in_word {
                    count += 1;
                    in_word = true;
                }
            } else {
                in_word = false;
                if !c.is_whitespace() {
                    count += 1;
                }
            }
        }
        count
    }
}

pub fn count_tokens(text: &str) -> u64 {
    SimpleTokenizer.count(text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::parse_tables_json;

    fn sample_schema() -> DatabaseSchema {
        parse_tables_json(
            r#"[{
                "db_id": "concert_singer",
                "table_names_original": ["singer", "concert"],
                "column_names_original": [[-1,"*"],[0,"Singer_ID"],[0,"Name"],[1,"concert_ID"],[1,"Singer_ID"]],
                "column_types": ["text","number","text","number","number"],
                "primary_keys": [1,3],
                "foreign_keys": [[4,1]]
            }]"#,
        )
        .unwrap()
        .databases
        .remove(0)
    }

    #[test]
    fn ddl_mentions_every_column_and_reparses() {
        let schema = sample_schema();
        let ddl = render_schema_ddl(&schema);
        assert!(ddl.contains("CREATE TABLE singer"));
        for column in ["Singer_ID", "Name", "concert_ID"] {
            assert!(ddl.contains(column), "missing {column} in:\n{ddl}");
        }
        // parse each statement back and compare against the source schema
        for (statement, table) in ddl.split(";\n").zip(&schema.tables) {
            let parsed = crate::ast::parse_create_table(statement.trim_end_matches(';')).unwrap();
            assert_eq!(parsed.name, table.name);
            assert_eq!(parsed.columns.len(), table.columns.len());
        }
        // the FK pair appears exactly once
        assert_eq!(ddl.matches("FOREIGN KEY").count(), 1);
    }

    #[test]
    fn empty_schema_renders_empty() {
        let schema = DatabaseSchema {
            db_id: "empty".to_string(),
            tables: vec![],
            foreign_keys: vec![],
        };
        assert_eq!(render_schema_ddl(&schema), "");
    }

    #[test]
    fn zero_shot_prompt_has_no_demonstration_section() {
        let bundle = PromptBundle::zero_shot("CREATE TABLE t (x INTEGER);".into(), "How many?".into());
        let text = build_prompt(&bundle);
        assert!(!text.contains("example pairs"));
        assert!(text.contains("### Question: How many?"));
    }

    #[test]
    fn sections_appear_in_order() {
        let bundle = PromptBundle {
            instruction: DEFAULT_INSTRUCTION.to_string(),
            demonstrations: vec![
                ("q one".to_string(), "SELECT 1".to_string()),
                ("q two".to_string(), "SELECT 2".to_string()),
            ],
            schema_ddl: "CREATE TABLE t (x INTEGER);".to_string(),
            evidence: Some("budgets are in thousands".to_string()),
            question: "What is the total budget?".to_string(),
        };
        let text = build_prompt(&bundle);
        let pos = |needle: &str| text.find(needle).unwrap_or_else(|| panic!("missing {needle}"));
        assert!(pos(DEFAULT_INSTRUCTION) < pos("q one"));
        assert!(pos("q one") < pos("q two"));
        assert!(pos("q two") < pos("CREATE TABLE"));
        assert!(pos("CREATE TABLE") < pos("budgets are in thousands"));
        assert!(pos("budgets are in thousands") < pos("What is the total budget?"));
    }

    #[test]
    fn identical_bundles_render_identically() {
        let bundle = PromptBundle::zero_shot("CREATE TABLE t (x INTEGER);".into(), "q?".into());
        assert_eq!(build_prompt(&bundle), build_prompt(&bundle));
    }

    #[test]
    fn token_counts() {
        assert_eq!(count_tokens(""), 0);
        assert_eq!(count_tokens("SELECT count(*) FROM singer"), 7);
        let a = "How many singers do we have?";
        let b = " SELECT count(*) FROM singer";
        assert!(count_tokens(&format!("{a}{b}")) >= count_tokens(a).max(count_tokens(b)));
    }
}
