//! `maat`: generate data, pretrain models, compute concept importance, run
//! simulated experiments and serve live sessions.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use maat_core::baselines::{CandidateSize, StrategyKind};
use maat_core::cdm::{pretrain, ModelCheckpoint, ModelKind, PretrainConfig, CHECKPOINT_VERSION};
use maat_core::environment::{load_dataset, save_dataset, split_dataset, DatasetFormat, Environment, Record};
use maat_core::harness::experiment::{DatasetSource, ExperimentReport, Metric};
use maat_core::harness::synthetic::{generate_synthetic, SyntheticSpec};
use maat_core::harness::{run_experiment, ExperimentConfig};
use maat_core::importance::{
    compute_importance, train_embeddings, SgnsConfig, DEFAULT_GAMMA, DEFAULT_NEIGHBORS, IMPORTANCE_FILE,
};
use maat_service::store::DEFAULT_TTL_SECS;
use maat_service::{router, AppState, Engine, SessionDefaults, SessionStore};

const DEFAULT_SEED: u64 = 42;

#[derive(Parser)]
#[command(name = "maat", version, about = "Model-agnostic adaptive testing")]
struct Cli {
    /// Seed used wherever a command does not get one explicitly.
    #[arg(long, env = "MAAT_SEED", default_value_t = DEFAULT_SEED, global = true)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset with known parameters.
    Synth {
        /// TOML synthetic spec; defaults apply when omitted.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit question-side parameters and write `model.<kind>.json`.
    Pretrain {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long = "model", value_name = "KIND", default_value = "irt")]
        models: Vec<ModelKind>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        epochs: Option<usize>,
        /// Train only on examinees with fewer records than this (the
        /// historical side of the experiment split).
        #[arg(long)]
        min_testing_records: Option<usize>,
    },
    /// Train test-effect embeddings and write concept importance weights.
    Importance {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value = IMPORTANCE_FILE)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_GAMMA)]
        gamma: f64,
        #[arg(long, default_value_t = DEFAULT_NEIGHBORS)]
        neighbors: usize,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        min_testing_records: Option<usize>,
    },
    /// Run a simulated experiment and write report.json, curves.csv, runs.csv.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Replaces the configured strategies.
        #[arg(long = "strategy", value_name = "NAME")]
        strategies: Vec<StrategyKind>,
        /// Replaces the configured dataset with a directory.
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Print the curves of a finished run.
    Report { run_dir: PathBuf },
    /// Serve live sessions over HTTP.
    Serve {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long = "model", value_name = "CHECKPOINT", required = true)]
        models: Vec<PathBuf>,
        #[arg(long, default_value = IMPORTANCE_FILE)]
        importance: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Session store file; sessions are kept in memory when omitted.
        #[arg(long)]
        store: Option<PathBuf>,
        #[arg(long, default_value_t = 50)]
        test_length: usize,
        #[arg(long, default_value_t = CandidateSize::default())]
        candidates: CandidateSize,
    },
}

fn load_env(dir: &Path) -> Result<Environment> {
    let (env, report) = load_dataset(dir, DatasetFormat::Csv).with_context(|| format!("loading {}", dir.display()))?;
    if report.dropped_records + report.duplicate_records > 0 {
        log::warn!("dataset load: {report:?}");
    }
    Ok(env)
}

/// Records to train on: everything, or the historical side of the split.
fn training_records(env: &Environment, min_testing_records: Option<usize>, seed: u64) -> Result<Vec<Record>> {
    Ok(match min_testing_records {
        Some(min) => split_dataset(env, min, seed)?.historical_records,
        None => env.records().to_vec(),
    })
}

fn synth(spec: Option<&Path>, out: &Path, seed: u64) -> Result<()> {
    let spec = match spec {
        Some(p) => toml::from_str(&fs::read_to_string(p)?).with_context(|| format!("parsing {}", p.display()))?,
        None => SyntheticSpec {
            seed,
            ..SyntheticSpec::default()
        },
    };
    let s = generate_synthetic(&spec)?;
    save_dataset(&s.env, out)?;
    fs::write(out.join("truth.json"), serde_json::to_string_pretty(&s.truth)?)?;
    fs::write(out.join("spec.toml"), toml::to_string(&spec)?)?;
    println!(
        "wrote {} records for {} examinees to {} (testing examinees: min_testing_records = {})",
        s.env.records().len(),
        s.env.n_examinees(),
        out.display(),
        spec.testing_threshold()
    );
    Ok(())
}

fn run(
    config: Option<&Path>,
    out: &Path,
    strategies: Vec<StrategyKind>,
    dataset: Option<PathBuf>,
    seed: u64,
) -> Result<()> {
    let (mut cfg, seeds_given) = match config {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            let table: toml::Table = toml::from_str(&text)?;
            (ExperimentConfig::from_toml(&text)?, table.contains_key("seeds"))
        }
        None => (ExperimentConfig::default(), false),
    };
    if !seeds_given {
        cfg.seeds = vec![seed];
    }
    if !strategies.is_empty() {
        cfg.strategies = strategies;
        cfg.runs = None;
    }
    if let Some(dir) = dataset {
        cfg.dataset = DatasetSource::Path(dir);
    }
    let outcome = run_experiment(&cfg)?;
    outcome.write(out)?;
    print_report(&outcome.report);
    Ok(())
}

fn print_report(report: &ExperimentReport) {
    let cfg = &report.metadata.config;
    println!(
        "{} testing examinees, {} questions, {} concepts",
        report.metadata.n_testing, report.metadata.n_questions, report.metadata.n_concepts
    );
    println!(
        "{:<16} {:<5} {:>4} {:>16} {:>16} {:>16}",
        "strategy", "model", "step", "auc", "cov", "see"
    );
    let mut labels: Vec<(String, ModelKind)> = Vec::new();
    for c in &report.curves {
        if !labels.iter().any(|(s, m)| *s == c.strategy && *m == c.model) {
            labels.push((c.strategy.clone(), c.model));
        }
    }
    let cell = |c: Option<&maat_core::harness::experiment::CurveRow>| {
        c.map_or("-".to_string(), |c| format!("{:.4}±{:.4}", c.mean, c.stderr))
    };
    for (s, m) in labels {
        for &t in &cfg.auc_steps {
            println!(
                "{:<16} {:<5} {:>4} {:>16} {:>16} {:>16}",
                s,
                m,
                t,
                cell(report.point(&s, m, Metric::Auc, t)),
                cell(report.point(&s, m, Metric::Cov, t)),
                cell(report.point(&s, m, Metric::See, t)),
            );
        }
    }
    for u in &report.undefined_auc {
        println!(
            "undefined AUC: {} {} step {}: {} examinees excluded",
            u.strategy, u.model, u.step, u.count
        );
    }
}

async fn serve(engine: Engine, store: SessionStore, defaults: SessionDefaults, addr: String) -> Result<()> {
    let state = AppState::new(store, defaults);
    state.warm(engine);
    let listener = tokio::net::TcpListener::bind(&addr).await?;
    log::info!("listening on {addr}");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Synth { spec, out } => synth(spec.as_deref(), &out, cli.seed),
        Command::Pretrain {
            dataset,
            models,
            out,
            epochs,
            min_testing_records,
        } => {
            let env = load_env(&dataset)?;
            let records = training_records(&env, min_testing_records, cli.seed)?;
            let mut cfg = PretrainConfig {
                seed: cli.seed,
                ..PretrainConfig::default()
            };
            if let Some(e) = epochs {
                cfg.epochs = e;
            }
            fs::create_dir_all(&out)?;
            for kind in models {
                let fit = pretrain(kind, &records, env.graph(), &cfg)?;
                let path = out.join(ModelCheckpoint::file_name(kind));
                ModelCheckpoint {
                    version: CHECKPOINT_VERSION,
                    question_ids: env.ids().questions.clone(),
                    config: cfg.clone(),
                    model: fit.model,
                }
                .save(&path)?;
                println!(
                    "{kind}: final training loss {:.4}, wrote {}",
                    fit.epoch_losses.last().copied().unwrap_or(f64::NAN),
                    path.display()
                );
            }
            Ok(())
        }
        Command::Importance {
            dataset,
            out,
            gamma,
            neighbors,
            dim,
            epochs,
            min_testing_records,
        } => {
            let env = load_env(&dataset)?;
            let records = training_records(&env, min_testing_records, cli.seed)?;
            let mut sgns = SgnsConfig {
                seed: cli.seed,
                ..SgnsConfig::default()
            };
            sgns.dim = dim.unwrap_or(sgns.dim);
            sgns.epochs = epochs.unwrap_or(sgns.epochs);
            let emb = train_embeddings(&records, env.n_questions(), &sgns)?;
            let table = compute_importance(&emb, env.graph(), neighbors, gamma)?;
            table.save(&out, env.ids())?;
            println!("wrote {} concept weights to {}", table.weights.len(), out.display());
            Ok(())
        }
        Command::Run {
            config,
            out,
            strategies,
            dataset,
        } => run(config.as_deref(), &out, strategies, dataset, cli.seed),
        Command::Report { run_dir } => {
            print_report(&ExperimentReport::load(&run_dir)?);
            Ok(())
        }
        Command::Serve {
            dataset,
            models,
            importance,
            port,
            host,
            store,
            test_length,
            candidates,
        } => {
            if test_length == 0 {
                bail!("--test-length must be at least 1");
            }
            let engine = Engine::load(&dataset, &models, &importance)?;
            let store = match store {
                Some(p) => SessionStore::open(&p, DEFAULT_TTL_SECS)?,
                None => SessionStore::in_memory(DEFAULT_TTL_SECS)?,
            };
            let purged = store.purge_expired(maat_service::unix_now())?;
            if purged > 0 {
                log::info!("dropped {purged} expired sessions");
            }
            let defaults = SessionDefaults {
                test_length,
                candidates,
                seed: cli.seed,
                ..SessionDefaults::default()
            };
            tokio::runtime::Runtime::new()?.block_on(serve(engine, store, defaults, format!("{host}:{port}")))
        }
    }
}
