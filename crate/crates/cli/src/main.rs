//! Command-line driver wiring the pipeline together: build candidate
//! indexes, train the contrastive encoder, answer single questions, run
//! batch evaluations, and post-process SQL.
//!
//! Exit codes: 0 success, 1 internal error, 2 usage or configuration error,
//! 3 provider or replay-store error.

mod config;

use clap::{Args, Parser, Subcommand};
use config::{exit_code_for, CliError, FileConfig};
use std::path::PathBuf;
use text2sql_core::correct::{correct, DbContext, GuidelineCatalog};
use text2sql_core::embed::Embedder;
use text2sql_core::eval::{
    database_path, evaluate, load_dataset, DatasetFormat, EvalDeps, PipelineConfig, Strategy,
};
use text2sql_core::gcl::{load_checkpoint, save_checkpoint, train, TrainConfig};
use text2sql_core::llm::{HttpTransport, LlmClient, ProviderConfig, ReplayTransport, Transport};
use text2sql_core::prompt::{build_prompt_with_layout, render_schema_ddl, PromptBundle};
use text2sql_core::schema::{parse_tables_json, SchemaCatalog};
use text2sql_core::select::{build_index, classify_hardness, initial_sql, CandidateIndex, InitialSql};

#[derive(Parser)]
#[command(name = "text2sql", version, about = "Text-to-SQL prompting toolkit")]
struct Cli {
    /// TOML configuration file; command-line flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed for every stochastic choice.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Never touch the network; answer from the replay store only.
    #[arg(long, global = true)]
    offline: bool,
    /// Replay store directory (recorded replies keyed by prompt fingerprint).
    #[arg(long, global = true)]
    replay_dir: Option<PathBuf>,
    /// Chat-completions endpoint URL.
    #[arg(long, global = true)]
    provider: Option<String>,
    /// Model identifier sent to the provider.
    #[arg(long, global = true)]
    model: Option<String>,
    /// Environment variable holding the API key.
    #[arg(long, global = true)]
    api_key_env: Option<String>,
    /// Decoding temperature.
    #[arg(long, global = true)]
    temperature: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SelectionArgs {
    /// Demonstration selection strategy: random, hardness, jaccard,
    /// struct-tree, struct-graph, or gold.
    #[arg(long)]
    strategy: Option<String>,
    /// Number of demonstrations.
    #[arg(long)]
    k: Option<usize>,
    /// Candidate index file.
    #[arg(long)]
    index: Option<PathBuf>,
    /// Encoder checkpoint (required for struct-graph).
    #[arg(long)]
    checkpoint: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Build and persist the demonstration candidate index.
    Index {
        /// Training split JSON (question/query/db_id rows).
        #[arg(long)]
        dataset: PathBuf,
        /// Dataset format: spider or bird.
        #[arg(long, default_value = "spider")]
        format: String,
        /// Output index file.
        #[arg(long)]
        out: PathBuf,
        /// Encoder checkpoint; when given, graph embeddings are precomputed.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// pq-gram stem size.
        #[arg(long, default_value_t = 2)]
        p: usize,
        /// pq-gram base size.
        #[arg(long, default_value_t = 3)]
        q: usize,
    },
    /// Train the contrastive graph encoder and write a checkpoint.
    Train {
        /// Corpus JSON (SQL statements are taken from each row).
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value = "spider")]
        format: String,
        /// Schema metadata JSON (donor databases for augmentation).
        #[arg(long)]
        tables: PathBuf,
        /// Output checkpoint file.
        #[arg(long)]
        out: PathBuf,
        /// Loss-curve CSV (one `epoch,loss` line per epoch).
        #[arg(long)]
        loss_out: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        epochs: usize,
        /// NT-Xent temperature τ.
        #[arg(long = "temperature-tau", default_value_t = 0.5)]
        tau: f64,
        #[arg(long, default_value_t = 2)]
        n_positive: usize,
        #[arg(long, default_value_t = 16)]
        n_negative: usize,
        #[arg(long, default_value_t = 1e-3)]
        learning_rate: f64,
        #[arg(long, default_value_t = 128)]
        d_text: usize,
        #[arg(long, default_value_t = 64)]
        d_h: usize,
        #[arg(long, default_value_t = 4)]
        heads: usize,
        #[arg(long, default_value_t = 128)]
        d_z: usize,
        #[arg(long, default_value_t = 2)]
        p: usize,
        #[arg(long, default_value_t = 3)]
        q: usize,
        /// Cap on corpus rows (0 = all).
        #[arg(long, default_value_t = 0)]
        max_rows: usize,
    },
    /// Answer one question: select demonstrations, prompt, correct, print SQL.
    Ask {
        question: String,
        #[arg(long)]
        db_id: String,
        /// Schema metadata JSON.
        #[arg(long)]
        tables: PathBuf,
        /// Directory of SQLite databases.
        #[arg(long)]
        db_root: Option<PathBuf>,
        #[command(flatten)]
        selection: SelectionArgs,
        /// Skip error correction.
        #[arg(long)]
        no_correction: bool,
    },
    /// Batch evaluation: run the pipeline over a dataset and report EM/EX.
    Eval {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value = "spider")]
        format: String,
        #[arg(long)]
        tables: PathBuf,
        #[arg(long)]
        db_root: PathBuf,
        /// Output directory for the report and per-instance records.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        selection: SelectionArgs,
        #[arg(long)]
        no_correction: bool,
        /// Evaluate only the first N instances.
        #[arg(long)]
        max_instances: Option<usize>,
    },
    /// Run rule-based (and optionally prompt-based) correction on one statement.
    Correct {
        sql: String,
        #[arg(long)]
        db_id: String,
        #[arg(long)]
        tables: PathBuf,
        #[arg(long)]
        db_root: Option<PathBuf>,
    },
}

fn main() {
    env_logger::init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => {}
        Err(err) => {
            eprintln!("error: {err}");
            std::process::exit(exit_code_for(&err));
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file_config = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let seed = cli.seed.or(file_config.defaults.seed).unwrap_or(0);

    match cli.command {
        Command::Index {
            dataset,
            format,
            out,
            checkpoint,
            p,
            q,
        } => cmd_index(&dataset, &format, &out, checkpoint.as_deref(), p, q),
        Command::Train {
            dataset,
            format,
            tables,
            out,
            loss_out,
            epochs,
            tau,
            n_positive,
            n_negative,
            learning_rate,
            d_text,
            d_h,
            heads,
            d_z,
            p,
            q,
            max_rows,
        } => {
            if tau <= 0.0 {
                return Err(CliError::Usage("temperature τ must be positive".to_string()));
            }
            let config = TrainConfig {
                tau,
                n_positive,
                n_negative,
                learning_rate,
                epochs,
                batch_size: 1,
                seed,
                mask_rate: 0.2,
                d_h,
                heads,
                d_z,
                pq_p: p,
                pq_q: q,
            };
            cmd_train(
                &dataset,
                &format,
                &tables,
                &out,
                loss_out.as_deref(),
                &config,
                d_text,
                max_rows,
            )
        }
        Command::Ask {
            question,
            db_id,
            tables,
            db_root,
            selection,
            no_correction,
        } => {
            let client = build_client(&cli_provider(&cli, &file_config)?, &cli, &file_config)?;
            cmd_ask(
                &question,
                &db_id,
                &tables,
                db_root.as_deref(),
                &selection,
                &file_config,
                seed,
                no_correction,
                &client,
            )
        }
        Command::Eval {
            dataset,
            format,
            tables,
            db_root,
            out,
            selection,
            no_correction,
            max_instances,
        } => {
            let client = build_client(&cli_provider(&cli, &file_config)?, &cli, &file_config)?;
            cmd_eval(
                &dataset,
                &format,
                &tables,
                &db_root,
                &out,
                &selection,
                &file_config,
                seed,
                no_correction,
                max_instances,
                &client,
            )
        }
        Command::Correct {
            sql,
            db_id,
            tables,
            db_root,
        } => {
            // the prompt pass is optional here: without a reachable provider
            // the rules still run and the original degrades gracefully
            let client = build_client(&cli_provider(&cli, &file_config)?, &cli, &file_config).ok();
            cmd_correct(&sql, &db_id, &tables, db_root.as_deref(), client.as_ref())
        }
    }
}

fn cli_provider(cli: &Cli, file_config: &FileConfig) -> Result<ProviderConfig, CliError> {
    let mut provider = file_config.provider.clone();
    if let Some(endpoint) = &cli.provider {
        provider.endpoint = endpoint.clone();
    }
    if let Some(model) = &cli.model {
        provider.model = model.clone();
    }
    if let Some(env) = &cli.api_key_env {
        provider.api_key_env = env.clone();
    }
    if let Some(t) = cli.temperature {
        provider.temperature = t;
    }
    Ok(provider)
}

fn build_client(
    provider: &ProviderConfig,
    cli: &Cli,
    file_config: &FileConfig,
) -> Result<LlmClient, CliError> {
    let replay_dir = cli
        .replay_dir
        .clone()
        .or_else(|| file_config.defaults.replay_dir.clone());
    let transport: Box<dyn Transport> = if cli.offline {
        let dir = replay_dir.ok_or_else(|| {
            CliError::Usage("--offline requires --replay-dir (or defaults.replay_dir)".to_string())
        })?;
        Box::new(ReplayTransport::offline(dir, &provider.model))
    } else if let Some(dir) = replay_dir {
        // online with a store: hits replay, records misses
        Box::new(ReplayTransport {
            dir,
            model: provider.model.clone(),
            record_from: Some(Box::new(HttpTransport::new(provider.clone()))),
        })
    } else {
        Box::new(HttpTransport::new(provider.clone()))
    };
    Ok(LlmClient::new(
        transport,
        provider.max_in_flight,
        provider.max_attempts,
        provider.backoff_base_ms,
    ))
}

fn load_catalog(tables: &std::path::Path) -> Result<SchemaCatalog, CliError> {
    let text = std::fs::read_to_string(tables)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", tables.display())))?;
    parse_tables_json(&text).map_err(|e| CliError::Usage(e.to_string()))
}

fn parse_format(format: &str) -> Result<DatasetFormat, CliError> {
    DatasetFormat::parse(format)
        .ok_or_else(|| CliError::Usage(format!("unknown dataset format `{format}`")))
}

fn dataset_rows(
    dataset: &std::path::Path,
    format: DatasetFormat,
) -> Result<Vec<(String, String, String)>, CliError> {
    let instances = load_dataset(dataset, format, None).map_err(CliError::from)?;
    Ok(instances
        .into_iter()
        .map(|i| (i.question, i.gold_sql, i.db_id))
        .collect())
}

fn cmd_index(
    dataset: &std::path::Path,
    format: &str,
    out: &std::path::Path,
    checkpoint: Option<&std::path::Path>,
    p: usize,
    q: usize,
) -> Result<(), CliError> {
    let rows = dataset_rows(dataset, parse_format(format)?)?;
    let loaded = match checkpoint {
        Some(path) => {
            let params = load_checkpoint(path).map_err(CliError::from)?;
            let embedder = Embedder::offline(params.meta.d_text);
            Some((params, embedder))
        }
        None => None,
    };
    let encoder = loaded.as_ref().map(|(params, embedder)| (params, embedder));
    let report = build_index(&rows, encoder, p, q).map_err(CliError::from)?;
    report.index.save(out).map_err(CliError::from)?;
    println!(
        "indexed {} candidates ({} skipped, {} without embeddings) -> {}",
        report.index.len(),
        report.skipped,
        report.unembedded,
        out.display()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_train(
    dataset: &std::path::Path,
    format: &str,
    tables: &std::path::Path,
    out: &std::path::Path,
    loss_out: Option<&std::path::Path>,
    config: &TrainConfig,
    d_text: usize,
    max_rows: usize,
) -> Result<(), CliError> {
    let catalog = load_catalog(tables)?;
    let mut corpus: Vec<String> = dataset_rows(dataset, parse_format(format)?)?
        .into_iter()
        .map(|(_, sql, _)| sql)
        .collect();
    if max_rows > 0 {
        corpus.truncate(max_rows);
    }
    let embedder = Embedder::offline(d_text);
    let (params, log) = train(&corpus, &catalog, config, &embedder).map_err(CliError::from)?;
    save_checkpoint(&params, out).map_err(CliError::from)?;
    if let Some(path) = loss_out {
        let mut text = String::from("epoch,loss\n");
        for (epoch, loss) in log.epoch_losses.iter().enumerate() {
            text.push_str(&format!("{epoch},{loss:.6}\n"));
        }
        std::fs::write(path, text).map_err(CliError::from)?;
    }
    println!(
        "trained {} epochs on {} statements ({} skipped) -> {}",
        log.epoch_losses.len(),
        corpus.len() - log.skipped,
        log.skipped,
        out.display()
    );
    Ok(())
}

struct Selection {
    strategy: Strategy,
    k: usize,
    index: Option<CandidateIndex>,
    encoder: Option<text2sql_core::gcl::EncoderParams>,
    embedder: Option<Embedder>,
}

fn resolve_selection(
    selection: &SelectionArgs,
    file_config: &FileConfig,
) -> Result<Selection, CliError> {
    let strategy_name = selection
        .strategy
        .clone()
        .or_else(|| file_config.defaults.strategy.clone())
        .unwrap_or_else(|| "jaccard".to_string());
    let strategy = Strategy::parse(&strategy_name)
        .ok_or_else(|| CliError::Usage(format!("unknown strategy `{strategy_name}`")))?;
    let k = selection.k.or(file_config.defaults.k).unwrap_or(5);
    if k > 10 {
        return Err(CliError::Usage("k is capped at 10 demonstrations".to_string()));
    }
    let index = match &selection.index {
        Some(path) => Some(CandidateIndex::load(path).map_err(CliError::from)?),
        None => None,
    };
    let (encoder, embedder) = match &selection.checkpoint {
        Some(path) => {
            let params = load_checkpoint(path).map_err(CliError::from)?;
            let embedder = Embedder::offline(params.meta.d_text);
            (Some(params), Some(embedder))
        }
        None => (None, None),
    };
    if strategy == Strategy::StructGraph && encoder.is_none() {
        return Err(CliError::Usage(
            "strategy struct-graph requires --checkpoint".to_string(),
        ));
    }
    if !matches!(strategy, Strategy::Gold) && k > 0 && index.is_none() {
        return Err(CliError::Usage(
            "this strategy requires --index (or use --k 0 for zero-shot)".to_string(),
        ));
    }
    Ok(Selection {
        strategy,
        k,
        index,
        encoder,
        embedder,
    })
}

#[allow(clippy::too_many_arguments)]
fn cmd_ask(
    question: &str,
    db_id: &str,
    tables: &std::path::Path,
    db_root: Option<&std::path::Path>,
    selection_args: &SelectionArgs,
    file_config: &FileConfig,
    seed: u64,
    no_correction: bool,
    client: &LlmClient,
) -> Result<(), CliError> {
    let catalog = load_catalog(tables)?;
    let schema = catalog
        .require(db_id)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let selection = resolve_selection(selection_args, file_config)?;
    let ddl = render_schema_ddl(schema);

    let demos: Vec<(String, String)> = if selection.k == 0 {
        Vec::new()
    } else {
        let pool = selection.index.as_ref().expect("validated above");
        let picks = match selection.strategy {
            Strategy::Random => pool.select_random(selection.k, seed)?,
            Strategy::Jaccard | Strategy::Gold => pool.select_jaccard(question, selection.k)?,
            Strategy::Hardness => {
                let target = match initial_sql(question, &ddl, client)? {
                    InitialSql::Sql(sql) => text2sql_core::ast::parse_sql(&sql)
                        .map(|q| classify_hardness(&q))
                        .unwrap_or(text2sql_core::select::Hardness::Medium),
                    InitialSql::Fallback => text2sql_core::select::Hardness::Medium,
                };
                pool.select_hardness(target, selection.k, seed)?
            }
            Strategy::StructTree | Strategy::StructGraph => {
                match initial_sql(question, &ddl, client)? {
                    InitialSql::Sql(sql) => {
                        if selection.strategy == Strategy::StructTree {
                            pool.select_struct_tree(&sql, selection.k)?
                        } else {
                            pool.select_struct_graph(
                                &sql,
                                selection.k,
                                selection.encoder.as_ref().expect("validated above"),
                                selection.embedder.as_ref().expect("validated above"),
                            )?
                        }
                    }
                    InitialSql::Fallback => pool.select_jaccard(question, selection.k)?,
                }
            }
        };
        picks
            .into_iter()
            .rev()
            .map(|i| {
                let c = &pool.candidates[i];
                (c.question.clone(), c.sql.clone())
            })
            .collect()
    };

    let bundle = PromptBundle {
        instruction: text2sql_core::prompt::DEFAULT_INSTRUCTION.to_string(),
        demonstrations: demos.clone(),
        schema_ddl: ddl,
        evidence: None,
        question: question.to_string(),
    };
    let prompt = build_prompt_with_layout(&bundle, text2sql_core::prompt::SPIDER_LAYOUT);
    let reply = client.complete(&prompt)?;
    let predicted = text2sql_core::llm::extract_sql(&reply.text).unwrap_or(reply.text);

    let final_sql = if no_correction {
        predicted
    } else {
        let ctx = match db_root {
            Some(root) => {
                let db_file = database_path(root, db_id);
                if db_file.exists() {
                    DbContext::from_sqlite(schema.clone(), &db_file).map_err(CliError::from)?
                } else {
                    DbContext::without_values(schema.clone())
                }
            }
            None => DbContext::without_values(schema.clone()),
        };
        let hardness = text2sql_core::ast::parse_sql(&predicted)
            .map(|q| classify_hardness(&q))
            .unwrap_or(text2sql_core::select::Hardness::Medium);
        let outcome = correct(
            &predicted,
            &ctx,
            hardness,
            &demos,
            &GuidelineCatalog::default(),
            Some(client),
        )
        .map_err(CliError::from)?;
        if !outcome.applied_rules.is_empty() {
            eprintln!("applied rules: {}", outcome.applied_rules.join(", "));
        }
        outcome.corrected
    };
    println!("{final_sql}");
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_eval(
    dataset: &std::path::Path,
    format: &str,
    tables: &std::path::Path,
    db_root: &std::path::Path,
    out: &std::path::Path,
    selection_args: &SelectionArgs,
    file_config: &FileConfig,
    seed: u64,
    no_correction: bool,
    max_instances: Option<usize>,
    client: &LlmClient,
) -> Result<(), CliError> {
    let catalog = load_catalog(tables)?;
    let format = parse_format(format)?;
    let instances = load_dataset(dataset, format, Some(db_root)).map_err(CliError::from)?;
    let selection = resolve_selection(selection_args, file_config)?;
    std::fs::create_dir_all(out).map_err(CliError::from)?;

    let config = PipelineConfig {
        strategy: selection.strategy,
        k: selection.k,
        seed,
        layout: text2sql_core::prompt::SPIDER_LAYOUT.to_string(),
        correction: !no_correction,
        max_instances,
    };
    let deps = EvalDeps {
        catalog: &catalog,
        db_root,
        index: selection.index.as_ref(),
        encoder: selection.encoder.as_ref(),
        embedder: selection.embedder.as_ref(),
        client: (selection.strategy != Strategy::Gold).then_some(client),
        guidelines: &GuidelineCatalog::default(),
    };
    let report = evaluate(
        &instances,
        &config,
        &deps,
        Some(&out.join("records.jsonl")),
    )
    .map_err(CliError::from)?;
    std::fs::write(
        out.join("report.json"),
        serde_json::to_string_pretty(&report).map_err(|e| CliError::Internal(e.to_string()))?,
    )
    .map_err(CliError::from)?;
    print!("{}", report.summary());
    Ok(())
}

fn cmd_correct(
    sql: &str,
    db_id: &str,
    tables: &std::path::Path,
    db_root: Option<&std::path::Path>,
    client: Option<&LlmClient>,
) -> Result<(), CliError> {
    let catalog = load_catalog(tables)?;
    let schema = catalog
        .require(db_id)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let ctx = match db_root {
        Some(root) => {
            let db_file = database_path(root, db_id);
            if db_file.exists() {
                DbContext::from_sqlite(schema.clone(), &db_file).map_err(CliError::from)?
            } else {
                DbContext::without_values(schema.clone())
            }
        }
        None => DbContext::without_values(schema.clone()),
    };
    let hardness = text2sql_core::ast::parse_sql(sql)
        .map(|q| classify_hardness(&q))
        .unwrap_or(text2sql_core::select::Hardness::Medium);
    let outcome = correct(
        sql,
        &ctx,
        hardness,
        &[],
        &GuidelineCatalog::default(),
        client,
    )
    .map_err(CliError::from)?;
    if !outcome.applied_rules.is_empty() {
        eprintln!("applied rules: {}", outcome.applied_rules.join(", "));
    }
    if let Some(err) = &outcome.prompt_error {
        eprintln!("prompt pass unavailable: {err}");
    }
    println!("{}", outcome.corrected);
    Ok(())
}
