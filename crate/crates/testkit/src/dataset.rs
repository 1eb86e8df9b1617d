//! Deterministic synthetic datasets in the Spider on-disk layout: a
//! tables.json catalog, dev/train JSON arrays, and one SQLite file per
//! database. Every generated query is executable against its database, and
//! every instance carries a difficulty tag computed from the template's
//! static clause counts — independently of the production parser, so
//! classifier tests compare two genuinely different routes.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::Path;

const ENTITY_POOL: [&str; 30] = [
    "student", "course", "teacher", "singer", "concert", "stadium", "pet", "owner", "employee",
    "department", "shop", "product", "customer", "flight", "airport", "team", "player", "coach",
    "book", "author", "library", "member", "car", "dealer", "artist", "album", "museum",
    "visitor", "doctor", "clinic",
];

const TEXT_ATTRS: [&str; 8] = ["name", "location", "country", "theme", "type", "status", "city", "title"];
const NUM_ATTRS: [&str; 8] = ["age", "year", "budget", "capacity", "ranking", "score", "price", "weight"];

const TEXT_VALUES: [&str; 16] = [
    "Alpha", "Beta", "Gamma", "Delta", "East", "West", "North", "South", "Red", "Blue", "Green",
    "Gold", "Prime", "Major", "Minor", "Central",
];

#[derive(Debug, Clone)]
pub struct ColumnSpec {
    pub name: String,
    pub is_text: bool,
}

#[derive(Debug, Clone)]
pub struct TableSpec {
    pub name: String,
    pub columns: Vec<ColumnSpec>,
    /// index into columns
    pub pk: usize,
    /// (own column index, parent table index, parent column index)
    pub fks: Vec<(usize, usize, usize)>,
    pub rows: Vec<Vec<Cell>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Text(String),
}

#[derive(Debug, Clone)]
pub struct DatabaseSpec {
    pub db_id: String,
    pub tables: Vec<TableSpec>,
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub question: String,
    pub sql: String,
    pub db_id: String,
    /// difficulty from the template's static counts
    pub hardness: &'static str,
}

#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub databases: Vec<DatabaseSpec>,
    pub dev: Vec<Instance>,
    pub train: Vec<Instance>,
}

pub struct GenSpec {
    pub databases: usize,
    pub dev_instances: usize,
    pub train_instances: usize,
    pub seed: u64,
}

impl Default for GenSpec {
    fn default() -> Self {
        GenSpec {
            databases: 20,
            dev_instances: 1034,
            train_instances: 600,
            seed: 20240901,
        }
    }
}

// ---------------------------------------------------------------------------
// independent difficulty arithmetic (mirrors the standard convention, but
// computed from static template structure, never from parsed SQL)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, Default)]
pub struct StaticCounts {
    pub where_present: bool,
    pub group_present: bool,
    pub order_present: bool,
    pub limit_present: bool,
    pub joins: usize,
    pub ors: usize,
    pub likes: usize,
    pub nested: usize,
    pub aggregates: usize,
    pub select_columns: usize,
    pub where_conditions: usize,
    pub group_columns: usize,
}

pub fn static_difficulty(c: &StaticCounts) -> &'static str {
    let comp1 = usize::from(c.where_present)
        + usize::from(c.group_present)
        + usize::from(c.order_present)
        + usize::from(c.limit_present)
        + c.joins
        + c.ors
        + c.likes;
    let comp2 = c.nested;
    let mut others = 0;
    if c.aggregates > 1 {
        others += 1;
    }
    if c.select_columns > 1 {
        others += 1;
    }
    if c.where_conditions > 1 {
        others += 1;
    }
    if c.group_columns > 1 {
        others += 1;
    }
    if comp1 <= 1 && others == 0 && comp2 == 0 {
        "easy"
    } else if (others <= 2 && comp1 <= 1 && comp2 == 0) || (comp1 <= 2 && others < 2 && comp2 == 0)
    {
        "medium"
    } else if (others > 2 && comp1 <= 2 && comp2 == 0)
        || (comp1 > 2 && comp1 <= 3 && others <= 2 && comp2 == 0)
        || (comp1 <= 1 && others == 0 && comp2 <= 1)
    {
        "hard"
    } else {
        "extra"
    }
}

// ---------------------------------------------------------------------------
// schema and data generation
// ---------------------------------------------------------------------------

fn make_database(index: usize, rng: &mut ChaCha8Rng) -> DatabaseSpec {
    let mut entities: Vec<&str> = ENTITY_POOL.to_vec();
    entities.shuffle(rng);
    let table_count = rng.gen_range(3..=5);
    let mut tables: Vec<TableSpec> = Vec::with_capacity(table_count);
    for t in 0..table_count {
        let entity = entities[t];
        let mut columns = vec![ColumnSpec {
            name: format!("{entity}_id"),
            is_text: false,
        }];
        let mut text_attrs: Vec<&str> = TEXT_ATTRS.to_vec();
        let mut num_attrs: Vec<&str> = NUM_ATTRS.to_vec();
        text_attrs.shuffle(rng);
        num_attrs.shuffle(rng);
        for name in text_attrs.iter().take(rng.gen_range(2..=3)) {
            columns.push(ColumnSpec {
                name: name.to_string(),
                is_text: true,
            });
        }
        for name in num_attrs.iter().take(rng.gen_range(2..=3)) {
            columns.push(ColumnSpec {
                name: name.to_string(),
                is_text: false,
            });
        }
        let mut fks = Vec::new();
        if t > 0 {
            // each non-root table references one earlier table
            let parent = rng.gen_range(0..t);
            let parent_name = &tables[parent].name;
            columns.push(ColumnSpec {
                name: format!("{parent_name}_id"),
                is_text: false,
            });
            fks.push((columns.len() - 1, parent, 0));
        }
        tables.push(TableSpec {
            name: entity.to_string(),
            columns,
            pk: 0,
            fks,
            rows: Vec::new(),
        });
    }
    // rows, parents before children so FK values always resolve
    for t in 0..tables.len() {
        let row_count = rng.gen_range(8..=16);
        let parents: Vec<(usize, i64)> = tables[t]
            .fks
            .iter()
            .map(|&(own, parent, _)| (own, tables[parent].rows.len() as i64))
            .collect();
        let columns = tables[t].columns.clone();
        let mut rows = Vec::with_capacity(row_count);
        for row_index in 0..row_count {
            let mut row = Vec::with_capacity(columns.len());
            for (c, column) in columns.iter().enumerate() {
                if c == 0 {
                    row.push(Cell::Int(row_index as i64 + 1));
                } else if let Some((_, parent_len)) = parents.iter().find(|(own, _)| *own == c) {
                    row.push(Cell::Int(rng.gen_range(1..=(*parent_len).max(1))));
                } else if column.is_text {
                    row.push(Cell::Text(
                        TEXT_VALUES[rng.gen_range(0..TEXT_VALUES.len())].to_string(),
                    ));
                } else {
                    row.push(Cell::Int(rng.gen_range(1..=100)));
                }
            }
            rows.push(row);
        }
        tables[t].rows = rows;
    }
    DatabaseSpec {
        db_id: format!("synth_{index:02}"),
        tables,
    }
}

// ---------------------------------------------------------------------------
// query templates
// ---------------------------------------------------------------------------

struct Ctx<'a> {
    db: &'a DatabaseSpec,
    rng: &'a mut ChaCha8Rng,
}

impl Ctx<'_> {
    fn table(&mut self) -> usize {
        self.rng.gen_range(0..self.db.tables.len())
    }

    fn text_col(&mut self, t: usize) -> Option<usize> {
        let options: Vec<usize> = self.db.tables[t]
            .columns
            .iter()
            .enumerate()
            .filter(|(_, c)| c.is_text)
            .map(|(i, _)| i)
            .collect();
        options.choose(self.rng).copied()
    }

    fn num_col(&mut self, t: usize) -> Option<usize> {
        let options: Vec<usize> = self.db.tables[t]
            .columns
            .iter()
            .enumerate()
            .skip(1)
            .filter(|(_, c)| !c.is_text)
            .map(|(i, _)| i)
            .collect();
        options.choose(self.rng).copied()
    }

    fn text_value(&mut self, t: usize, c: usize) -> String {
        let rows = &self.db.tables[t].rows;
        let row = &rows[self.rng.gen_range(0..rows.len())];
        match &row[c] {
            Cell::Text(s) => s.clone(),
            Cell::Int(i) => i.to_string(),
        }
    }

    fn joined_pair(&mut self) -> Option<(usize, usize, usize, usize)> {
        // (child, child fk col, parent, parent pk col)
        let candidates: Vec<(usize, usize, usize, usize)> = self
            .db
            .tables
            .iter()
            .enumerate()
            .flat_map(|(t, table)| {
                table
                    .fks
                    .iter()
                    .map(move |&(own, parent, ppk)| (t, own, parent, ppk))
            })
            .collect();
        candidates.choose(self.rng).copied()
    }

    fn join_chain(&mut self) -> Option<[(usize, usize, usize, usize); 2]> {
        // two FK hops: grandchild -> child -> parent, or two children of one parent
        let pairs: Vec<(usize, usize, usize, usize)> = self
            .db
            .tables
            .iter()
            .enumerate()
            .flat_map(|(t, table)| {
                table
                    .fks
                    .iter()
                    .map(move |&(own, parent, ppk)| (t, own, parent, ppk))
            })
            .collect();
        for &(t1, own1, p1, pk1) in &pairs {
            for &(t2, own2, p2, pk2) in &pairs {
                if t2 == p1 && t1 != t2 && p2 != t1 {
                    // t1 -> t2 (= p1) -> p2
                    return Some([(t1, own1, p1, pk1), (t2, own2, p2, pk2)]);
                }
            }
        }
        None
    }
}

fn name(db: &DatabaseSpec, t: usize, c: usize) -> String {
    db.tables[t].columns[c].name.clone()
}

/// One generated instance with its static counts.
fn generate_instance(ctx: &mut Ctx<'_>) -> Option<(String, String, StaticCounts)> {
    let template = ctx.rng.gen_range(0..14);
    let db = ctx.db;
    let mut counts = StaticCounts {
        select_columns: 1,
        ..StaticCounts::default()
    };
    let made = match template {
        0 => {
            let t = ctx.table();
            counts.aggregates = 1;
            (
                format!("How many {}s are there?", db.tables[t].name),
                format!("SELECT count(*) FROM {}", db.tables[t].name),
            )
        }
        1 => {
            let t = ctx.table();
            let c = ctx.text_col(t)?;
            (
                format!("List the {} of every {}.", name(db, t, c), db.tables[t].name),
                format!("SELECT {} FROM {}", name(db, t, c), db.tables[t].name),
            )
        }
        2 => {
            let t = ctx.table();
            let c = ctx.text_col(t)?;
            let n = ctx.num_col(t)?;
            let threshold = ctx.rng.gen_range(10..60);
            counts.where_present = true;
            counts.where_conditions = 1;
            (
                format!(
                    "What is the {} of {}s with {} above {threshold}?",
                    name(db, t, c),
                    db.tables[t].name,
                    name(db, t, n)
                ),
                format!(
                    "SELECT {} FROM {} WHERE {} > {threshold}",
                    name(db, t, c),
                    db.tables[t].name,
                    name(db, t, n)
                ),
            )
        }
        3 => {
            let t = ctx.table();
            let c = ctx.text_col(t)?;
            let c2 = ctx.num_col(t)?;
            let tc = ctx.text_col(t)?;
            let value = ctx.text_value(t, tc);
            counts.where_present = true;
            counts.where_conditions = 1;
            counts.select_columns = 2;
            (
                format!(
                    "Show the {} and {} of {}s whose {} is {value}.",
                    name(db, t, c),
                    name(db, t, c2),
                    db.tables[t].name,
                    name(db, t, tc)
                ),
                format!(
                    "SELECT {}, {} FROM {} WHERE {} = '{value}'",
                    name(db, t, c),
                    name(db, t, c2),
                    db.tables[t].name,
                    name(db, t, tc)
                ),
            )
        }
        4 => {
            let t = ctx.table();
            let c = ctx.text_col(t)?;
            counts.select_columns = 2;
            counts.aggregates = 1;
            counts.group_present = true;
            counts.group_columns = 1;
            (
                format!("How many {}s are there for each {}?", db.tables[t].name, name(db, t, c)),
                format!(
                    "SELECT {}, count(*) FROM {} GROUP BY {}",
                    name(db, t, c),
                    db.tables[t].name,
                    name(db, t, c)
                ),
            )
        }
        5 => {
            let t = ctx.table();
            let c = ctx.text_col(t)?;
            let n = ctx.num_col(t)?;
            counts.order_present = true;
            counts.limit_present = true;
            (
                format!(
                    "What are the three {}s with the highest {}?",
                    db.tables[t].name,
                    name(db, t, n)
                ),
                format!(
                    "SELECT {} FROM {} ORDER BY {} DESC LIMIT 3",
                    name(db, t, c),
                    db.tables[t].name,
                    name(db, t, n)
                ),
            )
        }
        6 => {
            let (child, fk, parent, ppk) = ctx.joined_pair()?;
            let c = ctx.text_col(parent)?;
            let n = ctx.num_col(child)?;
            let threshold = ctx.rng.gen_range(10..60);
            counts.joins = 1;
            counts.where_present = true;
            counts.where_conditions = 1;
            (
                format!(
                    "What is the {} of {}s with a {} whose {} exceeds {threshold}?",
                    name(db, parent, c),
                    db.tables[parent].name,
                    db.tables[child].name,
                    name(db, child, n)
                ),
                format!(
                    "SELECT T1.{} FROM {} AS T1 JOIN {} AS T2 ON T1.{} = T2.{} WHERE T2.{} > {threshold}",
                    name(db, parent, c),
                    db.tables[parent].name,
                    db.tables[child].name,
                    name(db, parent, ppk),
                    name(db, child, fk),
                    name(db, child, n)
                ),
            )
        }
        7 => {
            let t = ctx.table();
            let c = ctx.text_col(t)?;
            let n = ctx.num_col(t)?;
            let tc = ctx.text_col(t)?;
            let value = ctx.text_value(t, tc);
            let threshold = ctx.rng.gen_range(10..60);
            counts.where_present = true;
            counts.where_conditions = 2;
            (
                format!(
                    "Which {}s have {} above {threshold} and {} equal to {value}? Show the {}.",
                    db.tables[t].name,
                    name(db, t, n),
                    name(db, t, tc),
                    name(db, t, c)
                ),
                format!(
                    "SELECT {} FROM {} WHERE {} > {threshold} AND {} = '{value}'",
                    name(db, t, c),
                    db.tables[t].name,
                    name(db, t, n),
                    name(db, t, tc)
                ),
            )
        }
        8 => {
            let t = ctx.table();
            let c = ctx.text_col(t)?;
            counts.select_columns = 2;
            counts.aggregates = 2;
            counts.group_present = true;
            counts.group_columns = 1;
            (
                format!(
                    "Which values of {} appear on more than one {}?",
                    name(db, t, c),
                    db.tables[t].name
                ),
                format!(
                    "SELECT {}, count(*) FROM {} GROUP BY {} HAVING count(*) > 1",
                    name(db, t, c),
                    db.tables[t].name,
                    name(db, t, c)
                ),
            )
        }
        9 => {
            let chain = ctx.join_chain()?;
            let [(t1, own1, p1, pk1), (_, own2, p2, pk2)] = chain;
            let c = ctx.text_col(p2)?;
            let n = ctx.num_col(t1)?;
            let threshold = ctx.rng.gen_range(10..60);
            counts.joins = 2;
            counts.where_present = true;
            counts.where_conditions = 1;
            (
                format!(
                    "Find the {} of {}s linked through {} to a {} whose {} is below {threshold}.",
                    name(db, p2, c),
                    db.tables[p2].name,
                    db.tables[p1].name,
                    db.tables[t1].name,
                    name(db, t1, n)
                ),
                format!(
                    "SELECT T3.{} FROM {} AS T1 JOIN {} AS T2 ON T1.{} = T2.{} JOIN {} AS T3 ON T2.{} = T3.{} WHERE T1.{} < {threshold}",
                    name(db, p2, c),
                    db.tables[t1].name,
                    db.tables[p1].name,
                    name(db, t1, own1),
                    name(db, p1, pk1),
                    db.tables[p2].name,
                    name(db, p1, own2),
                    name(db, p2, pk2),
                    name(db, t1, n)
                ),
            )
        }
        10 => {
            let (child, fk, parent, ppk) = ctx.joined_pair()?;
            let c = ctx.text_col(parent)?;
            counts.where_present = true;
            counts.where_conditions = 1;
            counts.nested = 1;
            (
                format!(
                    "Which {}s have at least one {}? Show the {}.",
                    db.tables[parent].name,
                    db.tables[child].name,
                    name(db, parent, c)
                ),
                format!(
                    "SELECT {} FROM {} WHERE {} IN (SELECT {} FROM {})",
                    name(db, parent, c),
                    db.tables[parent].name,
                    name(db, parent, ppk),
                    name(db, child, fk),
                    db.tables[child].name
                ),
            )
        }
        11 => {
            let (child, fk, parent, ppk) = ctx.joined_pair()?;
            let c = ctx.text_col(parent)?;
            let n = ctx.num_col(child)?;
            let threshold = ctx.rng.gen_range(10..60);
            counts.where_present = true;
            counts.where_conditions = 1;
            counts.nested = 1;
            counts.select_columns = 2;
            (
                format!(
                    "Show the {} and {} of {}s without a {} whose {} is over {threshold}.",
                    name(db, parent, c),
                    name(db, parent, ppk),
                    db.tables[parent].name,
                    db.tables[child].name,
                    name(db, child, n)
                ),
                format!(
                    "SELECT {}, {} FROM {} WHERE {} NOT IN (SELECT {} FROM {} WHERE {} > {threshold})",
                    name(db, parent, c),
                    name(db, parent, ppk),
                    db.tables[parent].name,
                    name(db, parent, ppk),
                    name(db, child, fk),
                    db.tables[child].name,
                    name(db, child, n)
                ),
            )
        }
        12 => {
            let t = ctx.table();
            let c = ctx.text_col(t)?;
            let n = ctx.num_col(t)?;
            let threshold = ctx.rng.gen_range(10..60);
            counts.nested = 1;
            (
                format!(
                    "List the {} of every {} except those with {} above {threshold}.",
                    name(db, t, c),
                    db.tables[t].name,
                    name(db, t, n)
                ),
                format!(
                    "SELECT {} FROM {} EXCEPT SELECT {} FROM {} WHERE {} > {threshold}",
                    name(db, t, c),
                    db.tables[t].name,
                    name(db, t, c),
                    db.tables[t].name,
                    name(db, t, n)
                ),
            )
        }
        _ => {
            let (child, fk, parent, ppk) = ctx.joined_pair()?;
            let c = ctx.text_col(parent)?;
            counts.joins = 1;
            counts.where_present = true;
            counts.where_conditions = 1;
            counts.group_present = true;
            counts.group_columns = 1;
            counts.order_present = true;
            counts.select_columns = 2;
            counts.aggregates = 2;
            let threshold = ctx.rng.gen_range(10..60);
            let n = ctx.num_col(child)?;
            (
                format!(
                    "For each {}, count the {}s with {} under {threshold}, ordered by the count.",
                    name(db, parent, c),
                    db.tables[child].name,
                    name(db, child, n)
                ),
                format!(
                    "SELECT T1.{}, count(*) FROM {} AS T1 JOIN {} AS T2 ON T1.{} = T2.{} WHERE T2.{} < {threshold} GROUP BY T1.{} ORDER BY count(*) DESC",
                    name(db, parent, c),
                    db.tables[parent].name,
                    db.tables[child].name,
                    name(db, parent, ppk),
                    name(db, child, fk),
                    name(db, child, n),
                    name(db, parent, c)
                ),
            )
        }
    };
    Some((made.0, made.1, counts))
}

pub fn generate(spec: &GenSpec) -> SyntheticDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let databases: Vec<DatabaseSpec> = (0..spec.databases)
        .map(|i| make_database(i, &mut rng))
        .collect();
    let mut make_split = |count: usize, rng: &mut ChaCha8Rng| -> Vec<Instance> {
        let mut out = Vec::with_capacity(count);
        while out.len() < count {
            let db = &databases[rng.gen_range(0..databases.len())];
            let mut ctx = Ctx { db, rng };
            if let Some((question, sql, counts)) = generate_instance(&mut ctx) {
                out.push(Instance {
                    question,
                    sql,
                    db_id: db.db_id.clone(),
                    hardness: static_difficulty(&counts),
                });
            }
        }
        out
    };
    let dev = make_split(spec.dev_instances, &mut rng);
    let train = make_split(spec.train_instances, &mut rng);
    SyntheticDataset {
        databases,
        dev,
        train,
    }
}

// ---------------------------------------------------------------------------
// on-disk materialization (Spider layout)
// ---------------------------------------------------------------------------

impl SyntheticDataset {
    /// Write tables.json, dev.json, train.json, and one SQLite file per
    /// database under `<root>/database/<db_id>/<db_id>.sqlite`.
    pub fn materialize(&self, root: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(root)?;
        let tables_json: Vec<serde_json::Value> = self
            .databases
            .iter()
            .map(|db| {
                let mut column_names = vec![serde_json::json!([-1, "*"])];
                let mut column_types = vec!["text".to_string()];
                let mut primary_keys = Vec::new();
                let mut foreign_keys: Vec<[usize; 2]> = Vec::new();
                // global column index bookkeeping
                let mut offsets = Vec::with_capacity(db.tables.len());
                let mut next = 1usize;
                for table in &db.tables {
                    offsets.push(next);
                    next += table.columns.len();
                }
                for (t, table) in db.tables.iter().enumerate() {
                    for (c, column) in table.columns.iter().enumerate() {
                        column_names.push(serde_json::json!([t, column.name]));
                        column_types
                            .push(if column.is_text { "text" } else { "number" }.to_string());
                        if c == table.pk {
                            primary_keys.push(offsets[t] + c);
                        }
                    }
                }
                for (t, table) in db.tables.iter().enumerate() {
                    for &(own, parent, ppk) in &table.fks {
                        foreign_keys.push([offsets[t] + own, offsets[parent] + ppk]);
                    }
                }
                serde_json::json!({
                    "db_id": db.db_id,
                    "table_names_original": db.tables.iter().map(|t| t.name.clone()).collect::<Vec<_>>(),
                    "table_names": db.tables.iter().map(|t| t.name.clone()).collect::<Vec<_>>(),
                    "column_names_original": column_names,
                    "column_names": column_names,
                    "column_types": column_types,
                    "primary_keys": primary_keys,
                    "foreign_keys": foreign_keys,
                })
            })
            .collect();
        std::fs::write(
            root.join("tables.json"),
            serde_json::to_string_pretty(&tables_json)?,
        )?;

        let to_rows = |instances: &[Instance]| -> Vec<serde_json::Value> {
            instances
                .iter()
                .map(|i| {
                    serde_json::json!({
                        "question": i.question,
                        "query": i.sql,
                        "db_id": i.db_id,
                        "hardness": i.hardness,
                    })
                })
                .collect()
        };
        std::fs::write(
            root.join("dev.json"),
            serde_json::to_string_pretty(&to_rows(&self.dev))?,
        )?;
        std::fs::write(
            root.join("train.json"),
            serde_json::to_string_pretty(&to_rows(&self.train))?,
        )?;

        for db in &self.databases {
            let dir = root.join("database").join(&db.db_id);
            std::fs::create_dir_all(&dir)?;
            let path = dir.join(format!("{}.sqlite", db.db_id));
            if path.exists() {
                std::fs::remove_file(&path)?;
            }
            let conn = rusqlite::Connection::open(&path).expect("create sqlite file");
            for table in &db.tables {
                let columns: Vec<String> = table
                    .columns
                    .iter()
                    .enumerate()
                    .map(|(c, column)| {
                        let sql_type = if column.is_text { "TEXT" } else { "INTEGER" };
                        let pk = if c == table.pk { " PRIMARY KEY" } else { "" };
                        format!("\"{}\" {sql_type}{pk}", column.name)
                    })
                    .collect();
                let create = format!(
                    "CREATE TABLE \"{}\" ({})",
                    table.name,
                    columns.join(", ")
                );
                conn.execute_batch(&create).expect("create table");
                let placeholders: Vec<&str> =
                    table.columns.iter().map(|_| "?").collect();
                let insert = format!(
                    "INSERT INTO \"{}\" VALUES ({})",
                    table.name,
                    placeholders.join(", ")
                );
                let mut stmt = conn.prepare(&insert).expect("prepare insert");
                for row in &table.rows {
                    let params: Vec<rusqlite::types::Value> = row
                        .iter()
                        .map(|cell| match cell {
                            Cell::Int(i) => rusqlite::types::Value::Integer(*i),
                            Cell::Text(s) => rusqlite::types::Value::Text(s.clone()),
                        })
                        .collect();
                    stmt.execute(rusqlite::params_from_iter(params))
                        .expect("insert row");
                }
            }
        }
        Ok(())
    }

    /// A small BIRD-format dev file (`SQL` key plus evidence strings).
    pub fn materialize_bird_dev(&self, path: &Path, count: usize) -> std::io::Result<()> {
        let rows: Vec<serde_json::Value> = self
            .dev
            .iter()
            .take(count)
            .map(|i| {
                serde_json::json!({
                    "question": i.question,
                    "SQL": i.sql,
                    "db_id": i.db_id,
                    "evidence": format!("{} values are recorded once per row.", i.db_id),
                    "difficulty": "simple",
                })
            })
            .collect();
        std::fs::write(path, serde_json::to_string_pretty(&rows)?)
    }
}
