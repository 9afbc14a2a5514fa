use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mlion_core::clock::{Clock, ManualClock, SystemClock};
use mlion_core::config::ApiConfig;
use mlion_core::horizon::Horizon;
use mlion_core::market_data::{parse_timestamp, CandleFormat, IngestOptions, Resolution, Timestamp};
use mlion_core::ml::{evaluate_series, to_csv, to_pretty, EvaluationOptions, EvaluationRow};
use mlion_core::recommend::IntentRequest;
use mlion_core::report::FixtureRetriever;
use mlion_core::service::{self, ChatRequest, Engine, FeedKind, FeedbackRequest};
use mlion_core::{Error, Result};

#[derive(Parser)]
#[command(name = "mlion", version, about = "Market analytics engine: forecasts, reports and news recommendations")]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true, env = "MLION_CONFIG")]
    config: Option<PathBuf>,
    /// Store directory (overrides the config file).
    #[arg(long, global = true)]
    data_dir: Option<PathBuf>,
    /// Pin the clock (epoch seconds or RFC 3339).
    #[arg(long, global = true, value_parser = timestamp)]
    now: Option<Timestamp>,
    /// Seed for stochastic providers.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load candles, news or feeds into the store.
    #[command(subcommand)]
    Ingest(Ingest),
    /// Run both forecast tracks, fuse them and archive the records.
    Forecast {
        #[arg(long)]
        symbol: String,
        #[arg(long, default_value = "1d", value_parser = resolution)]
        resolution: Resolution,
        /// Issue time; defaults to --now, else the last stored candle.
        #[arg(long, value_parser = timestamp)]
        t0: Option<Timestamp>,
        /// Print only the text summary.
        #[arg(long)]
        summary: bool,
    },
    /// Backtest every series in a directory of CSV files.
    Evaluate {
        #[arg(long)]
        fixtures: PathBuf,
        #[arg(long, default_value = "1d", value_parser = resolution)]
        resolution: Resolution,
        /// Use only the last N candles of each series.
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long, default_value_t = 5)]
        folds: usize,
        /// Comma-separated ridge penalties to search.
        #[arg(long, value_delimiter = ',')]
        alphas: Option<Vec<f64>>,
        #[arg(long, value_enum, default_value_t = EvalFormat::Csv)]
        format: EvalFormat,
        /// Also write the CSV here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate the multi-agent report for an asset.
    Report {
        #[arg(long)]
        symbol: String,
        #[arg(long, default_value = "Medium", value_parser = horizon)]
        horizon: Horizon,
        #[arg(long, value_enum, default_value_t = ReportFormat::Markdown)]
        format: ReportFormat,
    },
    /// Rank recent news for an intent.
    Recommend {
        #[arg(long)]
        category: Option<String>,
        #[arg(long)]
        risk: Option<String>,
        #[arg(long)]
        horizon: Option<String>,
        /// Free-text intent, used for fields not given above.
        #[arg(long)]
        text: Option<String>,
        #[arg(long)]
        user: Option<String>,
    },
    /// Record one feedback event.
    Feedback {
        #[arg(long)]
        user: String,
        #[arg(long)]
        recommendation: String,
        #[arg(long)]
        item: String,
        /// 1 for a click, 0 for an ignore, or a rating in [0, 1].
        #[arg(long)]
        outcome: f64,
    },
    /// Rebuild the policy weights from the feedback log and check them
    /// against the live weights.
    FeedbackReplay,
    /// Route a chat message to the report or recommendation flow.
    Chat {
        #[arg(long, default_value = "cli")]
        session: String,
        #[arg(long)]
        user: Option<String>,
        message: String,
    },
    /// Start the JSON API.
    Serve {
        #[arg(long)]
        bind: Option<String>,
    },
    /// Serve offline stand-ins for the remote forecaster (`POST /forecast`)
    /// and retriever (`POST /retrieve`).
    MockProviders {
        /// JSON list of retrievable items.
        #[arg(long)]
        retriever: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8090")]
        bind: String,
    },
    /// Print the effective configuration.
    Config,
}

#[derive(Subcommand)]
enum Ingest {
    Candles {
        #[arg(long)]
        file: PathBuf,
        #[arg(long)]
        symbol: String,
        #[arg(long, value_parser = resolution)]
        resolution: Resolution,
        #[arg(long, value_parser = format)]
        format: Option<CandleFormat>,
        /// Forward-fill missing candles instead of failing.
        #[arg(long)]
        allow_gaps: bool,
    },
    News {
        #[arg(long)]
        file: PathBuf,
    },
    Feed {
        #[arg(long, value_enum)]
        kind: FeedArg,
        #[arg(long)]
        file: PathBuf,
    },
    /// Ingest a fixture tree: `SYMBOL_RES.csv|jsonl` candles, news `.jsonl`
    /// or `.xml`, and `flows.jsonl` / `social.jsonl` feeds.
    Dir(DirArgs),
}

#[derive(Args)]
struct DirArgs {
    path: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum FeedArg {
    Flows,
    Social,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EvalFormat {
    Csv,
    Pretty,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReportFormat {
    Markdown,
    Json,
}

fn timestamp(s: &str) -> std::result::Result<Timestamp, String> {
    parse_timestamp(s).ok_or_else(|| format!("cannot parse '{s}' as a timestamp"))
}

fn resolution(s: &str) -> std::result::Result<Resolution, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn horizon(s: &str) -> std::result::Result<Horizon, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn format(s: &str) -> std::result::Result<CandleFormat, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

/// `BTC_1d.csv` → ("BTC", 1d).
fn candle_file(path: &Path) -> Option<(String, Resolution, CandleFormat)> {
    let ext = path.extension()?.to_str()?;
    let format = match ext {
        "csv" => CandleFormat::Csv,
        "jsonl" => CandleFormat::Jsonl,
        _ => return None,
    };
    let (symbol, res) = path.file_stem()?.to_str()?.rsplit_once('_')?;
    let res: Resolution = res.parse().ok()?;
    Some((symbol.to_ascii_uppercase(), res, format))
}

fn files_in(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d)? {
            let p = entry?.path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p);
            }
        }
    }
    out.sort();
    Ok(out)
}

fn ingest_dir(engine: &Engine, dir: &Path) -> Result<()> {
    for path in files_in(dir)? {
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string();
        if let Some((symbol, res, format)) = candle_file(&path) {
            let s = engine.ingest_candles(&path, Some(format), &symbol, res, false)?;
            println!("candles {symbol} {res}: {} rows from {name}", s.len());
        } else if name == "flows.jsonl" || name == "social.jsonl" {
            let kind = if name == "flows.jsonl" { FeedKind::Flows } else { FeedKind::Social };
            println!("feed {}: {} items", kind.label(), engine.ingest_feed(kind, &path)?);
        } else if name.starts_with("news") && (name.ends_with(".jsonl") || name.ends_with(".xml") || name.ends_with(".rss")) {
            println!("news: {} new items from {name}", engine.ingest_news(&path)?);
        }
    }
    Ok(())
}

/// Token name from `TRX.csv` or `TRX_1d.csv`.
fn token_of(path: &Path) -> Option<String> {
    let stem = path.file_stem()?.to_str()?;
    Some(stem.split('_').next().unwrap_or(stem).to_ascii_uppercase())
}

fn evaluate(dir: &Path, resolution: Resolution, options: &EvaluationOptions) -> Result<Vec<EvaluationRow>> {
    let mut rows = Vec::new();
    for path in files_in(dir)? {
        let Some(token) = token_of(&path) else { continue };
        let format = match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => CandleFormat::Csv,
            Some("jsonl") => CandleFormat::Jsonl,
            _ => continue,
        };
        let file = std::fs::File::open(&path)?;
        let series = mlion_core::market_data::ingest_candles(file, format, &token, resolution, IngestOptions::default())?;
        rows.push(evaluate_series(&series, options)?);
    }
    if rows.is_empty() {
        return Err(Error::InvalidArgument(format!("no .csv or .jsonl series under {}", dir.display())));
    }
    Ok(rows)
}

fn run(cli: Cli) -> Result<()> {
    let env: Vec<(String, String)> = std::env::vars().collect();
    let mut config = ApiConfig::load(cli.config.as_deref(), env)?;
    if let Some(dir) = &cli.data_dir {
        config.data_dir = dir.clone();
    }
    if let Command::Serve { bind: Some(bind) } = &cli.command {
        config.bind = bind.clone();
    }
    config.validate()?;

    match &cli.command {
        Command::Config => {
            print!("{}", config.to_toml());
            return Ok(());
        }
        Command::Evaluate { fixtures, resolution, horizon, folds, alphas, format, out } => {
            let mut options = EvaluationOptions { horizon: *horizon, folds: *folds, ..EvaluationOptions::default() };
            if let Some(a) = alphas {
                options.alphas = a.clone();
            }
            let rows = evaluate(fixtures, *resolution, &options)?;
            let csv = to_csv(&rows);
            if let Some(out) = out {
                std::fs::write(out, &csv)?;
            }
            match format {
                EvalFormat::Csv => print!("{csv}"),
                EvalFormat::Pretty => print!("{}", to_pretty(&rows)),
            }
            return Ok(());
        }
        Command::MockProviders { retriever, bind } => {
            let items = FixtureRetriever::from_file(retriever)?;
            let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
            return runtime.block_on(service::serve_mock(items, bind, |addr| eprintln!("mock providers on http://{addr}"), async {
                let _ = tokio::signal::ctrl_c().await;
            }));
        }
        _ => {}
    }

    let clock: Arc<dyn Clock> = match cli.now {
        Some(t) => Arc::new(ManualClock::new(t)),
        None => Arc::new(SystemClock),
    };
    let engine = Engine::open(config, clock)?;
    match cli.command {
        Command::Ingest(Ingest::Candles { file, symbol, resolution, format, allow_gaps }) => {
            let s = engine.ingest_candles(&file, format, &symbol, resolution, allow_gaps)?;
            println!("candles {} {}: {} rows", s.symbol, s.resolution, s.len());
        }
        Command::Ingest(Ingest::News { file }) => println!("news: {} new items", engine.ingest_news(&file)?),
        Command::Ingest(Ingest::Feed { kind, file }) => {
            let kind = match kind {
                FeedArg::Flows => FeedKind::Flows,
                FeedArg::Social => FeedKind::Social,
            };
            println!("feed {}: {} items", kind.label(), engine.ingest_feed(kind, &file)?);
        }
        Command::Ingest(Ingest::Dir(DirArgs { path })) => ingest_dir(&engine, &path)?,
        Command::Forecast { symbol, resolution, t0, summary } => {
            let outcome = engine.forecast(&symbol, resolution, t0.or(cli.now), cli.seed)?;
            if summary {
                println!("{}", outcome.summary);
            } else {
                print_json(&outcome)?;
            }
        }
        Command::Report { symbol, horizon, format } => {
            let run = engine.report(&symbol, horizon)?;
            match format {
                ReportFormat::Markdown => print!("{}", run.enhanced.to_markdown()),
                ReportFormat::Json => print_json(&run)?,
            }
        }
        Command::Recommend { category, risk, horizon, text, user } => {
            let rec = engine.recommend(&IntentRequest { category, risk, horizon, text }, user.as_deref())?;
            print_json(&rec)?;
        }
        Command::Feedback { user, recommendation, item, outcome } => {
            print_json(&engine.feedback(&FeedbackRequest { user, recommendation, item, outcome })?)?;
        }
        Command::FeedbackReplay => {
            let report = engine.feedback_replay()?;
            print_json(&report)?;
            if !report.matches_online {
                return Err(Error::InvalidArgument("replayed weights differ from the live weights".into()));
            }
        }
        Command::Chat { session, user, message } => {
            let reply = engine.chat(&ChatRequest { session_id: session, message, user })?;
            println!("{}", reply.reply);
            for p in &reply.provenance {
                println!("  [{p}]");
            }
        }
        Command::Serve { .. } => {
            let bind = engine.config().bind.clone();
            let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
            runtime.block_on(service::serve(
                Arc::new(engine),
                &bind,
                |addr| eprintln!("listening on http://{addr}"),
                async {
                    let _ = tokio::signal::ctrl_c().await;
                },
            ))?;
        }
        Command::Config | Command::Evaluate { .. } | Command::MockProviders { .. } => unreachable!("handled above"),
    }
    Ok(())
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_env("MLION_LOG").unwrap_or_else(|_| "warn".into()))
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            ExitCode::FAILURE
        }
    }
}
