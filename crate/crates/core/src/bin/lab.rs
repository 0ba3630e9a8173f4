use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::json;

use rulelab::error::{LabError, Result};
use rulelab::experiment::{self, ConditionSpec, ExperimentConfig};
use rulelab::feedback::FeedbackCondition;
use rulelab::llm::LlmClient;
use rulelab::session::{self, ServiceConfig, SessionService};
use rulelab::theory::{self, TheoryConfig};

#[derive(Parser)]
#[command(name = "lab", version, about = "Rule-discovery laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON config; defaults apply to missing fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Root seed, overriding the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for output files; the report also goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run simulated populations and compare conditions.
    Simulate(Common),
    /// Exact and Monte Carlo checks of learner dynamics.
    Theory(Common),
    /// Compare conditions in exported session records.
    Analyze {
        #[command(flatten)]
        common: Common,
        /// JSONL session records.
        #[arg(long)]
        input: PathBuf,
    },
    /// Serve participant sessions over HTTP.
    Serve {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        bind: Option<String>,
        /// Append-only session store.
        #[arg(long)]
        store: Option<PathBuf>,
    },
    /// Run the LLM conditions against the live endpoint.
    Probe {
        #[command(flatten)]
        common: Common,
        /// Agents per condition when no config is given.
        #[arg(long, default_value_t = 10)]
        agents: usize,
    },
}

fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| LabError::Config(format!("{}: {e}", p.display())))?;
            Ok(serde_json::from_str(&text)?)
        }
    }
}

fn emit<T: Serialize>(report: &T, out: Option<&Path>, name: &str) -> Result<()> {
    let text = serde_json::to_string_pretty(report)?;
    if let Some(dir) = out {
        fs::write(dir.join(name), &text)?;
    }
    println!("{text}");
    Ok(())
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn prepare(out: Option<&PathBuf>) -> Result<Option<&Path>> {
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
    }
    Ok(out.map(PathBuf::as_path))
}

fn run_batch(cfg: &ExperimentConfig, client: Option<Arc<LlmClient>>, out: Option<&Path>) -> Result<experiment::AnalysisReport> {
    let results = experiment::run_experiment(cfg, client)?;
    if let Some(dir) = out {
        experiment::write_results_jsonl(&results, create(dir, "results.jsonl")?)?;
        experiment::write_summary_csv(&results, create(dir, "summary.csv")?)?;
        let space = cfg.space.build()?;
        let records: Vec<_> = results.iter().flat_map(|r| r.records.iter().cloned()).collect();
        session::write_summary_csv(&records, &space, &cfg.true_rule, create(dir, "sessions.csv")?)?;
    }
    experiment::analyze(&results, cfg)
}

fn simulate(c: Common) -> Result<()> {
    let mut cfg: ExperimentConfig = load(c.config.as_deref())?;
    cfg.seed = c.seed.unwrap_or(cfg.seed);
    let out = prepare(c.out.as_ref())?;
    let client = if cfg.conditions.iter().any(|s| s.condition.needs_llm()) {
        Some(Arc::new(LlmClient::from_env(cfg.llm.clone())?))
    } else {
        None
    };
    let report = run_batch(&cfg, client, out)?;
    emit(&report, out, "report.json")
}

fn theory_cmd(c: Common) -> Result<()> {
    let cfg: TheoryConfig = load(c.config.as_deref())?;
    let seed = c.seed.unwrap_or(0);
    let out = prepare(c.out.as_ref())?;
    let report = theory::run_theory(&cfg, seed)?;
    if let Some(dir) = out {
        theory::write_curve_csv(&report.truth_curve, create(dir, "truth_curve.csv")?)?;
        theory::write_curve_csv(&report.fixed_curve, create(dir, "fixed_curve.csv")?)?;
        theory::write_curve_csv(&report.fixed_truth_curve, create(dir, "fixed_truth_curve.csv")?)?;
    }
    emit(&json!({ "seed": seed, "report": report }), out, "theory.json")
}

fn analyze(c: Common, input: PathBuf) -> Result<()> {
    let mut cfg: ExperimentConfig = load(c.config.as_deref())?;
    cfg.seed = c.seed.unwrap_or(cfg.seed);
    let out = prepare(c.out.as_ref())?;
    let text = fs::read_to_string(&input).map_err(|e| LabError::Config(format!("{}: {e}", input.display())))?;
    let records = session::read_jsonl(&text)?;
    let space = cfg.space.build()?;
    if let Some(dir) = out {
        session::write_summary_csv(&records, &space, &cfg.true_rule, create(dir, "sessions.csv")?)?;
    }
    let results = experiment::results_from_records(records, &space, &cfg.true_rule);
    if let Some(dir) = out {
        experiment::write_summary_csv(&results, create(dir, "summary.csv")?)?;
    }
    emit(&experiment::analyze(&results, &cfg)?, out, "report.json")
}

fn serve(c: Common, bind: Option<String>, store: Option<PathBuf>) -> Result<()> {
    let mut cfg: ServiceConfig = load(c.config.as_deref())?;
    cfg.seed = c.seed.unwrap_or(cfg.seed);
    cfg.bind = bind.unwrap_or(cfg.bind);
    cfg.store_path = store.or(cfg.store_path);
    let wants_llm = cfg.llm.is_some() || cfg.conditions.iter().flatten().any(|c| c.needs_llm());
    let client = if wants_llm { Some(Arc::new(LlmClient::from_env(cfg.llm.clone())?)) } else { None };
    let (bind, workers) = (cfg.bind.clone(), cfg.workers);
    let service = Arc::new(SessionService::new(cfg, client)?);
    log::info!("conditions: {:?}", service.enabled_conditions());
    session::serve(service, &bind, workers)?.wait();
    Ok(())
}

fn probe(c: Common, agents: usize) -> Result<()> {
    let mut cfg: ExperimentConfig = match c.config.as_deref() {
        Some(p) => load(Some(p))?,
        None => ExperimentConfig {
            conditions: [FeedbackCondition::DefaultLlm, FeedbackCondition::AgreeableLlm]
                .into_iter()
                .map(|condition| ConditionSpec { condition, agents })
                .collect(),
            ..ExperimentConfig::default()
        },
    };
    cfg.seed = c.seed.unwrap_or(cfg.seed);
    let out = prepare(c.out.as_ref())?;
    let client = Arc::new(LlmClient::from_env(cfg.llm.clone())?);
    let model = client.config().model.clone();
    let hash = client.config().config_hash();
    let report = run_batch(&cfg, Some(client), out)?;
    let labeled = json!({
        "reproducible": false,
        "note": "live model replies; decoding parameters are not pinned",
        "model": model,
        "model_config_hash": hash,
        "report": report,
    });
    emit(&labeled, out, "probe.json")
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Simulate(c) => simulate(c),
        Command::Theory(c) => theory_cmd(c),
        Command::Analyze { common, input } => analyze(common, input),
        Command::Serve { common, bind, store } => serve(common, bind, store),
        Command::Probe { common, agents } => probe(common, agents),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            ExitCode::FAILURE
        }
    }
}
