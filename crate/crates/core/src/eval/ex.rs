//! Execution match: run both statements on the instance's database and
//! compare results — as multisets when the gold has no top-level ORDER BY,
//! in order when it does. Numeric cells compare with 1e-6 tolerance via a
//! fixed-precision canonical key.

use super::EvalError;
use crate::ast::parse_sql;
use rusqlite::types::ValueRef;
use rusqlite::Connection;
use std::path::Path;

/// One result cell in canonical, comparable text form.
fn cell_key(value: ValueRef<'_>) -> String {
    match value {
        ValueRef::Null => "∅".to_string(),
        ValueRef::Integer(i) => format!("n:{:.6}", i as f64),
        ValueRef::Real(f) => format!("n:{f:.6}"),
        ValueRef::Text(t) => format!("t:{}", String::from_utf8_lossy(t)),
        ValueRef::Blob(b) => format!(
            "b:{}",
            b.iter().map(|x| format!("{x:02x}")).collect::<String>()
        ),
    }
}

fn run_query(conn: &Connection, sql: &str) -> Result<Vec<String>, rusqlite::Error> {
    let mut stmt = conn.prepare(sql)?;
    let width = stmt.column_count();
    let mut rows = stmt.query([])?;
    let mut out = Vec::new();
    while let Some(row) = rows.next()? {
        let mut key = String::new();
        for i in 0..width {
            key.push_str(&cell_key(row.get_ref(i)?));
            key.push('\u{1f}');
        }
        out.push(key);
    }
    Ok(out)
}

/// True iff prediction and gold produce the same result set on the database.
/// A prediction that fails to execute is simply false; a gold that fails is
/// a dataset defect and surfaces as `GoldExecutionError`.
pub fn execution_match(pred_sql: &str, gold_sql: &str, db_path: &Path) -> Result<bool, EvalError> {
    let conn = Connection::open_with_flags(db_path, rusqlite::OpenFlags::SQLITE_OPEN_READ_ONLY)
        .map_err(|e| EvalError::Db(e.to_string()))?;
    let mut gold_rows = run_query(&conn, gold_sql)
        .map_err(|e| EvalError::GoldExecution(format!("{gold_sql}: {e}")))?;
    let mut pred_rows = match run_query(&conn, pred_sql) {
        Ok(rows) => rows,
        Err(_) => return Ok(false),
    };
    let ordered = parse_sql(gold_sql)
        .map(|q| !q.order_by.is_empty())
        .unwrap_or(false);
    if !ordered {
        gold_rows.sort_unstable();
        pred_rows.sort_unstable();
    }
    Ok(gold_rows == pred_rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture_db(dir: &Path) -> std::path::PathBuf {
        let path = dir.join("test.sqlite");
        let conn = Connection::open(&path).unwrap();
        conn.execute_batch(
            "CREATE TABLE singer (id INTEGER PRIMARY KEY, name TEXT, age INTEGER, fee REAL);
             INSERT INTO singer VALUES (1, 'Joe', 52, 10.5), (2, 'Ann', 43, 8.25), (3, 'Bo', 43, 12.0);",
        )
        .unwrap();
        path
    }

    #[test]
    fn identical_sql_matches() {
        let dir = tempfile::tempdir().unwrap();
        let db = fixture_db(dir.path());
        assert!(execution_match(
            "SELECT name FROM singer",
            "SELECT name FROM singer",
            &db
        )
        .unwrap());
    }

    #[test]
    fn semantically_equal_sql_matches() {
        let dir = tempfile::tempdir().unwrap();
        let db = fixture_db(dir.path());
        assert!(execution_match(
            "SELECT name FROM singer WHERE age >= 43 AND age <= 52",
            "SELECT name FROM singer WHERE age BETWEEN 43 AND 52",
            &db
        )
        .unwrap());
        // row order is ignored without ORDER BY
        assert!(execution_match(
            "SELECT name FROM singer ORDER BY id DESC",
            "SELECT name FROM singer",
            &db
        )
        .unwrap());
    }

    #[test]
    fn ordered_gold_requires_matching_order() {
        let dir = tempfile::tempdir().unwrap();
        let db = fixture_db(dir.path());
        assert!(!execution_match(
            "SELECT name FROM singer ORDER BY age DESC",
            "SELECT name FROM singer ORDER BY age ASC",
            &db
        )
        .unwrap());
    }

    #[test]
    fn erroring_prediction_is_false() {
        let dir = tempfile::tempdir().unwrap();
        let db = fixture_db(dir.path());
        assert!(!execution_match(
            "SELECT nope FROM missing_table",
            "SELECT name FROM singer",
            &db
        )
        .unwrap());
    }

    #[test]
    fn erroring_gold_is_a_dataset_defect() {
        let dir = tempfile::tempdir().unwrap();
        let db = fixture_db(dir.path());
        assert!(matches!(
            execution_match("SELECT name FROM singer", "SELECT zz FROM nowhere", &db),
            Err(EvalError::GoldExecution(_))
        ));
    }

    #[test]
    fn integer_and_real_compare_with_tolerance() {
        let dir = tempfile::tempdir().unwrap();
        let db = fixture_db(dir.path());
        assert!(execution_match(
            "SELECT age * 1.0 FROM singer",
            "SELECT age FROM singer",
            &db
        )
        .unwrap());
    }
}
