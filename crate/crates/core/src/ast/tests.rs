use super::*;

fn roundtrip(sql: &str) -> Query {
    let ast = parse_sql(sql).unwrap_or_else(|e| panic!("parse failed for `{sql}`: {e}"));
    let rendered = render_sql(&ast);
    let reparsed = parse_sql(&rendered)
        .unwrap_or_else(|e| panic!("re-parse failed for `{rendered}`: {e}"));
    assert_eq!(ast, reparsed, "round-trip mismatch for `{sql}` -> `{rendered}`");
    ast
}

#[test]
fn parses_fig2_query() {
    let ast = parse_sql("SELECT count(*) FROM singer").unwrap();
    let SetExpr::Select(select) = &ast.body else {
        panic!("expected plain select");
    };
    assert_eq!(select.items.len(), 1);
    assert!(matches!(
        &select.items[0],
        SelectItem::Expr { expr: Expr::Function { name, args, .. }, .. }
            if name.eq_ignore_ascii_case("count") && args == &[Expr::Wildcard]
    ));
    let from = select.from.as_ref().unwrap();
    assert!(matches!(&from.base, TableRef::Named { name, .. } if name == "singer"));
}

#[test]
fn empty_input_is_a_syntax_error() {
    assert!(parse_sql("").is_err());
    assert!(parse_sql("   \n\t ").is_err());
}

#[test]
fn keyword_soup_is_a_syntax_error() {
    assert!(parse_sql("SELECT FROM WHERE").is_err());
}

#[test]
fn error_carries_position() {
    let err = parse_sql("SELECT a FROM t WHERE ???").unwrap_err();
    assert!(err.position >= 22, "position {} should point at the bad token", err.position);
}

#[test]
fn roundtrip_corpus() {
    for sql in [
        "SELECT count(*) FROM singer",
        "select distinct name , age from singer where age > 20 order by age desc limit 5",
        "SELECT T1.name FROM singer AS T1 JOIN concert AS T2 ON T1.singer_id = T2.singer_id WHERE T2.year = 2014",
        "SELECT name FROM head WHERE born_state != 'California'",
        "SELECT stuid FROM student EXCEPT SELECT T1.stuid FROM student AS T1 JOIN has_pet AS T2 ON T1.stuid = T2.stuid JOIN pets AS T3 ON T3.petid = T2.petid WHERE T3.pettype = 'cat'",
        "SELECT avg(age), min(age), max(age) FROM singer WHERE country = 'France'",
        "SELECT name FROM stadium WHERE stadium_id NOT IN (SELECT stadium_id FROM concert)",
        "SELECT creation FROM department GROUP BY creation HAVING count(*) > 1",
        "SELECT country FROM singer WHERE age > 40 INTERSECT SELECT country FROM singer WHERE age < 30",
        "SELECT name FROM t WHERE a BETWEEN 1 AND 5 AND b LIKE '%x%'",
        "SELECT a FROM t WHERE NOT EXISTS (SELECT b FROM u WHERE u.id = t.id)",
        "SELECT a + b * c FROM t WHERE (a + b) * c > 10",
        "SELECT a FROM t WHERE c IS NOT NULL AND d IN (1, 2, 3)",
        "SELECT a FROM (SELECT a FROM u WHERE x = 1) AS sub WHERE a > 0",
        "SELECT a, count(*) FROM t GROUP BY a ORDER BY count(*) DESC LIMIT 1",
        "SELECT count(DISTINCT name) FROM singer",
        "SELECT a FROM t UNION ALL SELECT b FROM u",
        "SELECT CASE WHEN a > 0 THEN 'pos' ELSE 'neg' END FROM t",
        "SELECT CAST(a AS REAL) FROM t WHERE b = -1",
        "SELECT t.* FROM t, u WHERE t.id = u.id",
        "SELECT `quoted name` FROM \"weird table\" WHERE x = 'it''s'",
        "SELECT a FROM t LIMIT 2, 10",
        "SELECT a FROM t WHERE x > (SELECT avg(x) FROM t)",
        "SELECT a || b FROM t WHERE a % 2 = 0",
    ] {
        roundtrip(sql);
    }
}

#[test]
fn rendered_sql_is_a_fixed_point() {
    for sql in [
        "select   Count( * )   from  singer",
        "SELECT name FROM t WHERE a = 1 AND b = 2 OR c = 3",
    ] {
        let once = render_sql(&parse_sql(sql).unwrap());
        let twice = render_sql(&parse_sql(&once).unwrap());
        assert_eq!(once, twice);
    }
}

#[test]
fn render_preserves_distinct_and_desc() {
    let ast = parse_sql("select distinct name from singer order by age desc").unwrap();
    let rendered = render_sql(&ast);
    assert!(rendered.contains("DISTINCT"));
    assert!(rendered.contains("DESC"));
}

#[test]
fn render_emits_edited_literal_verbatim() {
    let mut ast = parse_sql("SELECT name FROM pets WHERE pettype = 'cat'").unwrap();
    let SetExpr::Select(select) = &mut ast.body else { unreachable!() };
    let Some(Expr::Binary { right, .. }) = select.where_clause.as_mut() else { unreachable!() };
    **right = Expr::Literal(Literal::String("bird".into()));
    let rendered = render_sql(&ast);
    assert!(rendered.contains("'bird'"), "got `{rendered}`");
    roundtrip(&rendered);
}

#[test]
fn precedence_of_and_over_or_survives_roundtrip() {
    let a = parse_sql("SELECT x FROM t WHERE a = 1 OR b = 2 AND c = 3").unwrap();
    let b = parse_sql("SELECT x FROM t WHERE a = 1 OR (b = 2 AND c = 3)").unwrap();
    assert_eq!(a, b);
    let c = parse_sql("SELECT x FROM t WHERE (a = 1 OR b = 2) AND c = 3").unwrap();
    assert_ne!(a, c);
    roundtrip("SELECT x FROM t WHERE (a = 1 OR b = 2) AND c = 3");
}

#[test]
fn normalization_erases_names() {
    let a = parse_sql("SELECT name FROM singer WHERE age > 20").unwrap();
    let b = parse_sql("SELECT title FROM album WHERE year > 1999").unwrap();
    assert_eq!(normalize_ast(&a), normalize_ast(&b));
}

#[test]
fn normalization_keeps_clause_labels() {
    let t = normalize_ast(&parse_sql("SELECT a FROM t WHERE b > 1 ORDER BY a").unwrap());
    let labels = t.labels();
    assert!(labels.contains(&TreeLabel::Where));
    assert!(labels.contains(&TreeLabel::OrderBy));
    assert!(labels.contains(&TreeLabel::Gt));
    assert_eq!(labels[0], TreeLabel::Root);
}

#[test]
fn normalization_of_grouped_having_query() {
    let t = normalize_ast(
        &parse_sql("SELECT creation FROM department GROUP BY creation HAVING count(*) > 1").unwrap(),
    );
    use TreeLabel::*;
    assert_eq!(t.labels(), vec![Root, Select, Table, GroupBy, Having, Gt, Count]);
}

#[test]
fn normalization_is_stable_across_renderings() {
    let ast = parse_sql(
        "select T1.name from singer as T1 join concert as T2 on T1.id = T2.sid where T2.year = 2014",
    )
    .unwrap();
    let re_rendered = parse_sql(&render_sql(&ast)).unwrap();
    assert_eq!(normalize_ast(&ast), normalize_ast(&re_rendered));
}

#[test]
fn create_table_roundtrip() {
    let ddl = "CREATE TABLE singer (singer_id INTEGER PRIMARY KEY, name TEXT, age INTEGER, country TEXT, FOREIGN KEY (country) REFERENCES nation (code))";
    let table = parse_create_table(ddl).unwrap();
    assert_eq!(table.name, "singer");
    assert_eq!(table.columns.len(), 4);
    assert_eq!(table.primary_key, vec!["singer_id".to_string()]);
    assert_eq!(table.foreign_keys.len(), 1);
    let rendered = render_create_table(&table);
    let reparsed = parse_create_table(&rendered).unwrap();
    assert_eq!(table, reparsed);
}
