use super::*;
use crate::gcl::EncoderMeta;

fn pool_rows() -> Vec<(String, String, String)> {
    [
        ("How many singers do we have?", "SELECT count(*) FROM singer", "concert_singer"),
        ("List the name of all singers.", "SELECT name FROM singer", "concert_singer"),
        ("Show names of singers older than 20.", "SELECT name FROM singer WHERE age > 20", "concert_singer"),
        ("What are the names and ages of every singer?", "SELECT name, age FROM singer", "concert_singer"),
        (
            "Which countries have more than two singers?",
            "SELECT country FROM singer GROUP BY country HAVING count(*) > 2",
            "concert_singer",
        ),
        (
            "Names of stadiums with concerts after 2013?",
            "SELECT T1.name FROM stadium AS T1 JOIN concert AS T2 ON T1.stadium_id = T2.stadium_id WHERE T2.year > 2013",
            "concert_singer",
        ),
        (
            "Which stadiums never hosted a concert?",
            "SELECT name FROM stadium WHERE stadium_id NOT IN (SELECT stadium_id FROM concert)",
            "concert_singer",
        ),
        ("broken row", "SELECT FROM WHERE", "concert_singer"),
    ]
    .iter()
    .map(|(q, s, d)| (q.to_string(), s.to_string(), d.to_string()))
    .collect()
}

fn built() -> BuildReport {
    build_index(&pool_rows(), None, 2, 3).unwrap()
}

#[test]
fn unparseable_rows_are_skipped_with_count() {
    let report = built();
    assert_eq!(report.skipped, 1);
    assert_eq!(report.index.len(), 7);
}

#[test]
fn hardness_classification_spot_checks() {
    let classify = |sql: &str| classify_hardness(&parse_sql(sql).unwrap());
    assert_eq!(classify("SELECT count(*) FROM singer"), Hardness::Easy);
    assert_eq!(classify("SELECT name FROM singer WHERE age > 20"), Hardness::Easy);
    assert_eq!(classify("SELECT name, age FROM singer WHERE age > 20"), Hardness::Medium);
    assert_eq!(
        classify("SELECT T1.name FROM stadium AS T1 JOIN concert AS T2 ON T1.stadium_id = T2.stadium_id WHERE T2.year > 2013"),
        Hardness::Medium
    );
    assert_eq!(
        classify("SELECT name, count(*) FROM concert JOIN stadium ON 1 = 1 WHERE year > 2013 GROUP BY name"),
        Hardness::Hard
    );
    assert_eq!(
        classify("SELECT name FROM stadium WHERE stadium_id NOT IN (SELECT stadium_id FROM concert)"),
        Hardness::Hard
    );
    // compound query: the first arm is plain, the EXCEPT arm counts as one
    // nested query, which the standard rules place in the hard tier
    assert_eq!(
        classify("SELECT stuid FROM student EXCEPT SELECT T1.stuid FROM student AS T1 JOIN has_pet AS T2 ON T1.stuid = T2.stuid JOIN pets AS T3 ON T3.petid = T2.petid WHERE T3.pettype = 'cat'"),
        Hardness::Hard
    );
    // nesting combined with clause-heavy first arms is extra
    assert_eq!(
        classify("SELECT name FROM singer WHERE age > 20 AND country = 'US' OR age < 10 EXCEPT SELECT name FROM band"),
        Hardness::Extra
    );
}

#[test]
fn random_selection_is_seeded_and_distinct() {
    let index = built().index;
    let a = index.select_random(4, 9).unwrap();
    let b = index.select_random(4, 9).unwrap();
    assert_eq!(a, b);
    let set: BTreeSet<_> = a.iter().collect();
    assert_eq!(set.len(), 4);
    assert!(matches!(
        index.select_random(100, 0),
        Err(SelectError::PoolTooSmall(7, 100))
    ));
    // whole pool
    let all = index.select_random(7, 1).unwrap();
    assert_eq!(all.len(), 7);
}

#[test]
fn hardness_selection_prefers_the_bucket() {
    let index = built().index;
    let picks = index.select_hardness(Hardness::Easy, 2, 3).unwrap();
    for i in picks {
        assert_eq!(index.candidates[i].hardness, Hardness::Easy);
    }
    // bucket too small: widens instead of failing
    let picks = index.select_hardness(Hardness::Extra, 3, 3).unwrap();
    assert_eq!(picks.len(), 3);
}

#[test]
fn jaccard_puts_exact_question_first() {
    let index = built().index;
    let picks = index
        .select_jaccard("How many singers do we have?", 3)
        .unwrap();
    assert_eq!(picks[0], 0);
    // repeatable
    assert_eq!(picks, index.select_jaccard("How many singers do we have?", 3).unwrap());
}

#[test]
fn jaccard_breaks_ties_by_candidate_id() {
    let index = built().index;
    let picks = index.select_jaccard("zxqv unrelated words", 3).unwrap();
    assert_eq!(picks, vec![0, 1, 2]);
}

#[test]
fn struct_tree_finds_name_erased_twin() {
    let index = built().index;
    // same shape as candidate 2, different identifiers
    let picks = index
        .select_struct_tree("SELECT title FROM album WHERE year > 1999", 3)
        .unwrap();
    assert_eq!(picks[0], 2);
    let query = parse_sql("SELECT title FROM album WHERE year > 1999").unwrap();
    let profile = pq_gram_profile(&normalize_ast(&query), 2, 3).unwrap();
    assert_eq!(
        pq_gram_distance(&profile, &index.candidates[2].pq_profile).unwrap(),
        0
    );
}

#[test]
fn struct_tree_matches_full_scan_oracle() {
    let index = built().index;
    let initial = "SELECT name FROM singer WHERE age > 30";
    let picks = index.select_struct_tree(initial, 5).unwrap();
    // naive oracle: score every candidate, stable sort
    let query = parse_sql(initial).unwrap();
    let profile = pq_gram_profile(&normalize_ast(&query), 2, 3).unwrap();
    let mut scored: Vec<(usize, u64)> = index
        .candidates
        .iter()
        .enumerate()
        .map(|(i, c)| (i, pq_gram_distance(&profile, &c.pq_profile).unwrap()))
        .collect();
    scored.sort_by(|a, b| a.1.cmp(&b.1).then(a.0.cmp(&b.0)));
    let expect: Vec<usize> = scored.into_iter().take(5).map(|(i, _)| i).collect();
    assert_eq!(picks, expect);
}

#[test]
fn struct_graph_requires_matching_checkpoint() {
    let embedder = Embedder::offline(8);
    let meta = EncoderMeta {
        d_text: 8,
        d_h: 2,
        heads: 1,
        d_z: 4,
        tau: 0.5,
        pq_p: 2,
        pq_q: 3,
        provider_id: embedder.provider_id(),
    };
    let params = EncoderParams::init(meta.clone(), 5);
    let report = build_index(&pool_rows(), Some((&params, &embedder)), 2, 3).unwrap();
    let index = report.index;

    // self-retrieval: an indexed SQL is its own best match
    let picks = index
        .select_struct_graph("SELECT count(*) FROM singer", 3, &params, &embedder)
        .unwrap();
    assert_eq!(picks[0], 0);

    // different parameters are rejected
    let other = EncoderParams::init(meta, 6);
    assert!(matches!(
        index.select_struct_graph("SELECT count(*) FROM singer", 3, &other, &embedder),
        Err(SelectError::CheckpointMismatch { .. })
    ));

    // an index built without embeddings gates the strategy off
    let plain = built().index;
    assert!(matches!(
        plain.select_struct_graph("SELECT count(*) FROM singer", 3, &params, &embedder),
        Err(SelectError::MissingEmbeddings)
    ));
}

#[test]
fn index_round_trips_bit_exactly() {
    let embedder = Embedder::offline(8);
    let meta = EncoderMeta {
        d_text: 8,
        d_h: 2,
        heads: 1,
        d_z: 4,
        tau: 0.5,
        pq_p: 2,
        pq_q: 3,
        provider_id: embedder.provider_id(),
    };
    let params = EncoderParams::init(meta, 5);
    let index = build_index(&pool_rows(), Some((&params, &embedder)), 2, 3)
        .unwrap()
        .index;
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pool.idx");
    index.save(&path).unwrap();
    let bytes_a = std::fs::read(&path).unwrap();

    let loaded = CandidateIndex::load(&path).unwrap();
    assert_eq!(loaded.len(), index.len());
    assert_eq!(loaded.checkpoint_id, index.checkpoint_id);
    for (a, b) in index.candidates.iter().zip(&loaded.candidates) {
        assert_eq!(a.question, b.question);
        assert_eq!(a.sql, b.sql);
        assert_eq!(a.hardness, b.hardness);
        assert_eq!(a.pq_profile, b.pq_profile);
        assert_eq!(a.embedding, b.embedding);
    }
    // re-saving reproduces the same bytes
    let path2 = dir.path().join("pool2.idx");
    loaded.save(&path2).unwrap();
    assert_eq!(bytes_a, std::fs::read(&path2).unwrap());
}

#[test]
fn zero_shot_initial_sql_uses_replay() {
    use crate::llm::{LlmClient, ReplayTransport};
    let dir = tempfile::tempdir().unwrap();
    let bundle = crate::prompt::PromptBundle::zero_shot(
        "CREATE TABLE singer (x INTEGER);".to_string(),
        "How many singers do we have?".to_string(),
    );
    let prompt = crate::prompt::build_prompt(&bundle);
    ReplayTransport::record(dir.path(), "m", &prompt, "SELECT count(*) FROM singer").unwrap();
    let client = LlmClient::new(
        Box::new(ReplayTransport::offline(dir.path().to_path_buf(), "m")),
        1,
        1,
        0,
    );
    let out = initial_sql(
        "How many singers do we have?",
        "CREATE TABLE singer (x INTEGER);",
        &client,
    )
    .unwrap();
    assert_eq!(out, InitialSql::Sql("SELECT count(*) FROM singer".to_string()));
}

#[test]
fn unparseable_replies_trigger_fallback() {
    use crate::llm::{LlmClient, ReplayTransport};
    let dir = tempfile::tempdir().unwrap();
    let bundle = crate::prompt::PromptBundle::zero_shot("".to_string(), "q?".to_string());
    let prompt = crate::prompt::build_prompt(&bundle);
    ReplayTransport::record(dir.path(), "m", &prompt, "I do not know.").unwrap();
    let client = LlmClient::new(
        Box::new(ReplayTransport::offline(dir.path().to_path_buf(), "m")),
        1,
        1,
        0,
    );
    assert_eq!(initial_sql("q?", "", &client).unwrap(), InitialSql::Fallback);
}
