//! End-to-end pipeline checks over a synthetic Spider-layout dataset.

use text2sql_core::correct::GuidelineCatalog;
use text2sql_core::eval::{
    evaluate, load_dataset, DatasetFormat, EvalDeps, PipelineConfig, Strategy,
};
use text2sql_core::llm::{LlmClient, ReplayTransport};
use text2sql_core::schema::parse_tables_json;
use text2sql_core::select::build_index;
use text2sql_testkit::dataset::{generate, GenSpec};
use text2sql_testkit::transport::QuestionLookupTransport;

fn small_spec() -> GenSpec {
    GenSpec {
        databases: 4,
        dev_instances: 60,
        train_instances: 80,
        seed: 7,
    }
}

#[test]
fn synthetic_golds_all_parse_and_execute() {
    let data = generate(&small_spec());
    let dir = tempfile::tempdir().unwrap();
    data.materialize(dir.path()).unwrap();
    for instance in data.dev.iter().chain(&data.train) {
        let query = text2sql_core::ast::parse_sql(&instance.sql)
            .unwrap_or_else(|e| panic!("gold does not parse: {} ({e})", instance.sql));
        let db = dir
            .path()
            .join("database")
            .join(&instance.db_id)
            .join(format!("{}.sqlite", instance.db_id));
        let matched =
            text2sql_core::eval::execution_match(&instance.sql, &instance.sql, &db).unwrap();
        assert!(matched);
        let _ = query;
    }
}

#[test]
fn spider_and_bird_loaders_read_the_layout() {
    let data = generate(&small_spec());
    let dir = tempfile::tempdir().unwrap();
    data.materialize(dir.path()).unwrap();
    data.materialize_bird_dev(&dir.path().join("bird_dev.json"), 10)
        .unwrap();

    let dev = load_dataset(
        &dir.path().join("dev.json"),
        DatasetFormat::Spider,
        Some(&dir.path().join("database")),
    )
    .unwrap();
    assert_eq!(dev.len(), 60);
    assert!(dev.iter().all(|i| i.hardness_tag.is_some()));
    assert!(dev.iter().all(|i| i.evidence.is_none()));

    let bird = load_dataset(&dir.path().join("bird_dev.json"), DatasetFormat::Bird, None).unwrap();
    assert_eq!(bird.len(), 10);
    assert!(bird.iter().all(|i| i.evidence.is_some()));

    // a dangling db_id is a format error naming the database
    let err = load_dataset(
        &dir.path().join("bird_dev.json"),
        DatasetFormat::Bird,
        Some(&dir.path().join("nowhere")),
    )
    .unwrap_err();
    assert!(err.to_string().contains("synth_"));
}

#[test]
fn gold_passthrough_scores_perfectly() {
    let data = generate(&small_spec());
    let dir = tempfile::tempdir().unwrap();
    data.materialize(dir.path()).unwrap();
    let catalog =
        parse_tables_json(&std::fs::read_to_string(dir.path().join("tables.json")).unwrap())
            .unwrap();
    let dev = load_dataset(&dir.path().join("dev.json"), DatasetFormat::Spider, None).unwrap();

    let config = PipelineConfig {
        strategy: Strategy::Gold,
        correction: false,
        ..PipelineConfig::default()
    };
    let deps = EvalDeps {
        catalog: &catalog,
        db_root: &dir.path().join("database"),
        index: None,
        encoder: None,
        embedder: None,
        client: None,
        guidelines: &GuidelineCatalog::default(),
    };
    let report = evaluate(&dev, &config, &deps, None).unwrap();
    assert_eq!(report.skipped, 0);
    assert_eq!(report.em_accuracy, 1.0);
    assert_eq!(report.ex_accuracy, 1.0);
    let total: usize = report.per_hardness.values().map(|r| r.count).sum();
    assert_eq!(total, 60);
}

#[test]
fn replay_pipeline_is_byte_deterministic() {
    let data = generate(&small_spec());
    let dir = tempfile::tempdir().unwrap();
    data.materialize(dir.path()).unwrap();
    let catalog =
        parse_tables_json(&std::fs::read_to_string(dir.path().join("tables.json")).unwrap())
            .unwrap();
    let dev = load_dataset(&dir.path().join("dev.json"), DatasetFormat::Spider, None).unwrap();
    let train: Vec<(String, String, String)> = data
        .train
        .iter()
        .map(|i| (i.question.clone(), i.sql.clone(), i.db_id.clone()))
        .collect();
    let index = build_index(&train, None, 2, 3).unwrap().index;

    let replay_dir = dir.path().join("replay");
    // first run records canned gold-echo replies into the store
    let answers: Vec<(String, String)> = dev
        .iter()
        .map(|i| (i.question.clone(), i.gold_sql.clone()))
        .collect();
    let recording = ReplayTransport {
        dir: replay_dir.clone(),
        model: "canned".to_string(),
        record_from: Some(Box::new(QuestionLookupTransport { answers })),
    };
    let config = PipelineConfig {
        strategy: Strategy::Jaccard,
        k: 3,
        correction: true,
        max_instances: Some(20),
        ..PipelineConfig::default()
    };
    let run = |client: LlmClient, records: &std::path::Path| {
        let deps = EvalDeps {
            catalog: &catalog,
            db_root: &dir.path().join("database"),
            index: Some(&index),
            encoder: None,
            embedder: None,
            client: Some(&client),
            guidelines: &GuidelineCatalog::default(),
        };
        let report = evaluate(&dev, &config, &deps, Some(records)).unwrap();
        serde_json::to_vec(&report).unwrap()
    };
    let priming = run(
        LlmClient::new(Box::new(recording), 2, 1, 0),
        &dir.path().join("records_prime.jsonl"),
    );

    // two offline runs must agree byte for byte
    let offline_a = run(
        LlmClient::new(
            Box::new(ReplayTransport::offline(replay_dir.clone(), "canned")),
            2,
            1,
            0,
        ),
        &dir.path().join("records_a.jsonl"),
    );
    let offline_b = run(
        LlmClient::new(
            Box::new(ReplayTransport::offline(replay_dir.clone(), "canned")),
            2,
            1,
            0,
        ),
        &dir.path().join("records_b.jsonl"),
    );
    assert_eq!(offline_a, offline_b);
    assert_eq!(priming, offline_a);
    assert_eq!(
        std::fs::read(dir.path().join("records_a.jsonl")).unwrap(),
        std::fs::read(dir.path().join("records_b.jsonl")).unwrap()
    );

    // the canned transport echoes gold, so accuracy is perfect
    let report: text2sql_core::eval::EvalReport = serde_json::from_slice(&offline_a).unwrap();
    assert_eq!(report.ex_accuracy, 1.0);
    assert_eq!(report.instances, 20);

    // resuming from existing records touches no provider at all
    let resumed = run(
        LlmClient::new(
            Box::new(ReplayTransport::offline(
                dir.path().join("empty_replay"),
                "canned",
            )),
            2,
            1,
            0,
        ),
        &dir.path().join("records_a.jsonl"),
    );
    assert_eq!(resumed, offline_a);
}
