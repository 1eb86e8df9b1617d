//! Database schema metadata in the shape of the Spider `tables.json` format,
//! shared by prompt construction, augmentation, error correction, and the
//! evaluation harness.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SchemaError {
    #[error("malformed tables metadata: {0}")]
    Malformed(String),
    #[error("unknown database `{0}`")]
    UnknownDatabase(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnType {
    Number,
    Text,
    Boolean,
    Time,
    Others,
}

impl ColumnType {
    pub fn from_str_lossy(s: &str) -> ColumnType {
        match s.to_ascii_lowercase().as_str() {
            "number" | "int" | "integer" | "real" | "float" | "double" | "numeric" | "decimal" => {
                ColumnType::Number
            }
            "text" | "varchar" | "char" | "string" | "blob" => ColumnType::Text,
            "boolean" | "bool" | "bit" => ColumnType::Boolean,
            "time" | "date" | "datetime" | "timestamp" | "year" => ColumnType::Time,
            _ => ColumnType::Others,
        }
    }

    /// SQLite-flavored type name for DDL rendering.
    pub fn ddl_name(self) -> &'static str {
        match self {
            ColumnType::Number => "NUMERIC",
            ColumnType::Text => "TEXT",
            ColumnType::Boolean => "BOOLEAN",
            ColumnType::Time => "TIMESTAMP",
            ColumnType::Others => "TEXT",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSchema {
    pub name: String,
    pub col_type: ColumnType,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableSchema {
    pub name: String,
    pub columns: Vec<ColumnSchema>,
    pub primary_keys: Vec<String>,
}

impl TableSchema {
    pub fn column(&self, name: &str) -> Option<&ColumnSchema> {
        self.columns.iter().find(|c| c.name.eq_ignore_ascii_case(name))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForeignKeyRef {
    pub from_table: String,
    pub from_column: String,
    pub to_table: String,
    pub to_column: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatabaseSchema {
    pub db_id: String,
    pub tables: Vec<TableSchema>,
    pub foreign_keys: Vec<ForeignKeyRef>,
}

impl DatabaseSchema {
    pub fn table(&self, name: &str) -> Option<&TableSchema> {
        self.tables.iter().find(|t| t.name.eq_ignore_ascii_case(name))
    }

    pub fn has_table(&self, name: &str) -> bool {
        self.table(name).is_some()
    }

    /// Declared FK pairs between two tables, either direction.
    pub fn foreign_keys_between(&self, a: &str, b: &str) -> Vec<&ForeignKeyRef> {
        self.foreign_keys
            .iter()
            .filter(|fk| {
                (fk.from_table.eq_ignore_ascii_case(a) && fk.to_table.eq_ignore_ascii_case(b))
                    || (fk.from_table.eq_ignore_ascii_case(b) && fk.to_table.eq_ignore_ascii_case(a))
            })
            .collect()
    }

    pub fn is_foreign_key_pair(&self, t1: &str, c1: &str, t2: &str, c2: &str) -> bool {
        self.foreign_keys.iter().any(|fk| {
            (fk.from_table.eq_ignore_ascii_case(t1)
                && fk.from_column.eq_ignore_ascii_case(c1)
                && fk.to_table.eq_ignore_ascii_case(t2)
                && fk.to_column.eq_ignore_ascii_case(c2))
                || (fk.from_table.eq_ignore_ascii_case(t2)
                    && fk.from_column.eq_ignore_ascii_case(c2)
                    && fk.to_table.eq_ignore_ascii_case(t1)
                    && fk.to_column.eq_ignore_ascii_case(c1))
        })
    }
}

/// All databases known to a run; the donor pool for database replacement and
/// the schema source for prompts and corrections.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SchemaCatalog {
    pub databases: Vec<DatabaseSchema>,
}

impl SchemaCatalog {
    pub fn get(&self, db_id: &str) -> Option<&DatabaseSchema> {
        self.databases.iter().find(|d| d.db_id == db_id)
    }

    pub fn require(&self, db_id: &str) -> Result<&DatabaseSchema, SchemaError> {
        self.get(db_id)
            .ok_or_else(|| SchemaError::UnknownDatabase(db_id.to_string()))
    }
}

/// Raw row of the Spider `tables.json` file.
#[derive(Debug, Deserialize)]
struct RawTablesEntry {
    db_id: String,
    table_names_original: Vec<String>,
    /// `[table_index, column_name]`; index −1 marks the `*` pseudo-column.
    column_names_original: Vec<(i64, String)>,
    column_types: Vec<String>,
    #[serde(default)]
    primary_keys: Vec<serde_json::Value>,
    #[serde(default)]
    foreign_keys: Vec<(usize, usize)>,
}

/// Parse the Spider tables metadata JSON (an array of database entries).
pub fn parse_tables_json(text: &str) -> Result<SchemaCatalog, SchemaError> {
    let raw: Vec<RawTablesEntry> = serde_json::from_str(text)?;
    let mut databases = Vec::with_capacity(raw.len());
    for entry in raw {
        let mut tables: Vec<TableSchema> = entry
            .table_names_original
            .iter()
            .map(|name| TableSchema {
                name: name.clone(),
                columns: Vec::new(),
                primary_keys: Vec::new(),
            })
            .collect();
        // global column index -> (table index, name)
        let mut flat: Vec<(i64, String)> = Vec::new();
        for (idx, (table_idx, col_name)) in entry.column_names_original.iter().enumerate() {
            flat.push((*table_idx, col_name.clone()));
            if *table_idx < 0 {
                continue;
            }
            let t = usize::try_from(*table_idx).map_err(|_| {
                SchemaError::Malformed(format!("bad table index in {}", entry.db_id))
            })?;
            let col_type = entry
                .column_types
                .get(idx)
                .map(|s| ColumnType::from_str_lossy(s))
                .unwrap_or(ColumnType::Others);
            let table = tables.get_mut(t).ok_or_else(|| {
                SchemaError::Malformed(format!("column references missing table in {}", entry.db_id))
            })?;
            table.columns.push(ColumnSchema {
                name: col_name.clone(),
                col_type,
            });
        }
        // primary keys may be plain indices or nested lists of indices
        let mut pk_indices: Vec<usize> = Vec::new();
        for value in &entry.primary_keys {
            match value {
                serde_json::Value::Number(n) => {
                    pk_indices.push(n.as_u64().unwrap_or(0) as usize);
                }
                serde_json::Value::Array(items) => {
                    for item in items {
                        if let Some(n) = item.as_u64() {
                            pk_indices.push(n as usize);
                        }
                    }
                }
                _ => {}
            }
        }
        for pk in pk_indices {
            if let Some((t, name)) = flat.get(pk) {
                if *t >= 0 {
                    tables[*t as usize].primary_keys.push(name.clone());
                }
            }
        }
        let mut foreign_keys = Vec::new();
        for (from, to) in &entry.foreign_keys {
            let (ft, fc) = flat.get(*from).cloned().ok_or_else(|| {
                SchemaError::Malformed(format!("bad foreign key index in {}", entry.db_id))
            })?;
            let (tt, tc) = flat.get(*to).cloned().ok_or_else(|| {
                SchemaError::Malformed(format!("bad foreign key index in {}", entry.db_id))
            })?;
            if ft < 0 || tt < 0 {
                continue;
            }
            foreign_keys.push(ForeignKeyRef {
                from_table: entry.table_names_original[ft as usize].clone(),
                from_column: fc,
                to_table: entry.table_names_original[tt as usize].clone(),
                to_column: tc,
            });
        }
        databases.push(DatabaseSchema {
            db_id: entry.db_id,
            tables,
            foreign_keys,
        });
    }
    Ok(SchemaCatalog { databases })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"[{
        "db_id": "concert_singer",
        "table_names_original": ["singer", "concert"],
        "column_names_original": [[-1, "*"], [0, "Singer_ID"], [0, "Name"], [1, "concert_ID"], [1, "Singer_ID"]],
        "column_types": ["text", "number", "text", "number", "number"],
        "primary_keys": [1, 3],
        "foreign_keys": [[4, 1]]
    }]"#;

    #[test]
    fn parses_spider_tables_json() {
        let catalog = parse_tables_json(SAMPLE).unwrap();
        let db = catalog.require("concert_singer").unwrap();
        assert_eq!(db.tables.len(), 2);
        let singer = db.table("singer").unwrap();
        assert_eq!(singer.columns.len(), 2);
        assert_eq!(singer.primary_keys, vec!["Singer_ID".to_string()]);
        assert_eq!(db.foreign_keys.len(), 1);
        assert!(db.is_foreign_key_pair("concert", "Singer_ID", "singer", "Singer_ID"));
        assert!(!db.is_foreign_key_pair("concert", "concert_ID", "singer", "Singer_ID"));
    }

    #[test]
    fn column_type_classification_is_lenient() {
        assert_eq!(ColumnType::from_str_lossy("INTEGER"), ColumnType::Number);
        assert_eq!(ColumnType::from_str_lossy("varchar"), ColumnType::Text);
        assert_eq!(ColumnType::from_str_lossy("others"), ColumnType::Others);
    }
}
