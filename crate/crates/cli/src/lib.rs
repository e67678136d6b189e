//! Command-line front end: fits models, labels a corpus, builds the index,
//! serves the HTTP API and runs one-shot queries.

pub mod server;

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use trendsearch::datastore::{
    corpus_stats, load_events, load_models, load_series_csv, load_shape_labels_csv,
    load_slope_labels_csv, persist_events, postings_path, save_models, save_postings,
};
use trendsearch::engine::{Engine, EnginePaths};
use trendsearch::facets::{parse_exclusions, EdgeKind};
use trendsearch::label_models::LabelModels;
use trendsearch::response::SearchResponse;
use trendsearch::search_core::Index;
use trendsearch::trend_labeler::{label_corpus, LabelerConfig, TimeSeries};
use trendsearch::Config;

#[derive(Debug, Parser)]
#[command(name = "trendsearch", version, about = "Semantic search over time-series trends")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// TOML config file; built-in defaults are used when absent.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory holding series.csv and companies.csv.
    #[arg(long, global = true, default_value = ".")]
    pub corpus: PathBuf,
    /// Fitted models file.
    #[arg(long, global = true, default_value = "models.json")]
    pub models: PathBuf,
    /// Labeled events file (JSON lines).
    #[arg(long, global = true, default_value = "events.jsonl")]
    pub events: PathBuf,
    /// Print JSON instead of a table.
    #[arg(long, global = true)]
    pub json: bool,
    /// Maximum gap in days between consecutive events of a sequence.
    #[arg(long, global = true)]
    pub max_gap: Option<i64>,
    /// Fraction of labels kept per kind and tolerance level.
    #[arg(long, global = true)]
    pub keep: Option<f64>,
    /// Chart width-to-height ratio used for perceived angles.
    #[arg(long, global = true)]
    pub aspect: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit label models from crowdsourced label CSVs.
    FitModels {
        /// Slope label files (single descriptors and modifier compounds).
        /// Defaults to labels_exp1.csv and labels_exp2.csv in the corpus directory.
        #[arg(long)]
        slope: Vec<PathBuf>,
        /// Shape label files. Defaults to labels_exp3.csv in the corpus directory.
        #[arg(long)]
        shape: Vec<PathBuf>,
    },
    /// Label every series in the corpus and write the events file.
    Label,
    /// Build the postings sidecar for the events file.
    Index,
    /// Serve the HTTP API. SIGHUP reloads every input.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
    },
    /// Run one search and print the ranked buckets.
    Query {
        text: String,
        /// Comma-separated facet labels to exclude.
        #[arg(long, default_value = "")]
        exclude: String,
        #[arg(long, default_value_t = 1)]
        page: usize,
    },
    /// Print corpus counts, modifier retention and the label hierarchy.
    Stats,
}

impl GlobalArgs {
    /// Loads the config file (if any) and applies the command-line overrides.
    pub fn load_config(&self) -> Result<Config> {
        let mut config = match &self.config {
            Some(p) => Config::load(p)?,
            None => Config::default(),
        };
        if let Some(g) = self.max_gap {
            config.max_gap_days = g;
        }
        if let Some(k) = self.keep {
            config.keep = k;
        }
        if let Some(a) = self.aspect {
            config.aspect = a;
        }
        config.validate()?;
        Ok(config)
    }

    pub fn paths(&self) -> EnginePaths {
        EnginePaths {
            corpus: self.corpus.clone(),
            models: self.models.clone(),
            events: self.events.clone(),
        }
    }

    pub fn load_engine(&self) -> Result<Engine> {
        Ok(Engine::load(self.load_config()?, &self.paths())?)
    }
}

fn existing_or_default(given: &[PathBuf], dir: &Path, names: &[&str]) -> Vec<PathBuf> {
    if !given.is_empty() {
        return given.to_vec();
    }
    names.iter().map(|n| dir.join(n)).filter(|p| p.exists()).collect()
}

fn fit_models(g: &GlobalArgs, slope: &[PathBuf], shape: &[PathBuf]) -> Result<String> {
    let config = g.load_config()?;
    let slope = existing_or_default(slope, &g.corpus, &["labels_exp1.csv", "labels_exp2.csv"]);
    let shape = existing_or_default(shape, &g.corpus, &["labels_exp3.csv"]);
    let mut slope_rows = Vec::new();
    for p in &slope {
        slope_rows.extend(load_slope_labels_csv(p)?);
    }
    let mut shape_rows = Vec::new();
    for p in &shape {
        shape_rows.extend(load_shape_labels_csv(p)?);
    }
    let (models, report) = LabelModels::fit(&slope_rows, &shape_rows, &config)?;
    for d in &report.diagnostics {
        tracing::warn!(row = d.row, "{}", d.message);
    }
    save_models(&g.models, &models)?;
    Ok(format!(
        "wrote {}: {} slope, {} compound, {} shape models; {} of {} modifier rows retained; {} rows skipped\n",
        g.models.display(),
        models.slope.len(),
        models.compound.len(),
        models.shape.len(),
        models.cleaning.retained,
        models.cleaning.total,
        report.diagnostics.len()
    ))
}

fn label(g: &GlobalArgs) -> Result<String> {
    let config = g.load_config()?;
    let series_path = g.paths().series();
    let charts: Vec<TimeSeries> = load_series_csv(&series_path)?.into_values().collect();
    let models = load_models(&g.models)?;
    let events = label_corpus(&charts, &models, &LabelerConfig::from(&config))?;
    persist_events(&g.events, &events, &models.fingerprint())?;
    Ok(format!(
        "wrote {}: {} events from {} charts\n",
        g.events.display(),
        events.len(),
        charts.len()
    ))
}

fn index(g: &GlobalArgs) -> Result<String> {
    let models = load_models(&g.models)?;
    let (_, events) = load_events(&g.events)?;
    let modes = models.stats().into_iter().map(|(l, s)| (l, s.mode)).collect();
    let index = Index::build(events, modes);
    let path = postings_path(&g.events);
    save_postings(&path, &index.postings())?;
    Ok(format!(
        "wrote {}: {} documents, {} terms\n",
        path.display(),
        index.len(),
        index.postings().postings.len()
    ))
}

/// Runs one query against the engine, as the search endpoint does.
pub fn run_query(engine: &Engine, text: &str, exclude: &str, page: usize) -> Result<SearchResponse> {
    let exclude: BTreeSet<String> = parse_exclusions(exclude);
    Ok(engine.search(text, &exclude, page)?)
}

/// Plain-text rendering of a response.
pub fn render_table(r: &SearchResponse) -> String {
    let mut out = String::new();
    if let Some(n) = &r.notification {
        let _ = writeln!(out, "note: {n}");
    }
    let _ = writeln!(
        out,
        "{:>4}  {:<8} {:>7} {:>9}  {}",
        "rank", "chart", "matches", "score", "summary"
    );
    let first = (r.page.max(1) - 1) * r.buckets.len().max(1);
    for (i, b) in r.buckets.iter().enumerate() {
        let _ = writeln!(
            out,
            "{:>4}  {:<8} {:>7} {:>9.4}  {}",
            first + i + 1,
            b.chart_id,
            b.match_count,
            b.bucket_score,
            b.sentence
        );
    }
    let _ = writeln!(
        out,
        "page {} of {} ({} charts)",
        r.page,
        r.page_count.max(1),
        r.total_buckets
    );
    out
}

fn query(g: &GlobalArgs, text: &str, exclude: &str, page: usize) -> Result<String> {
    let engine = g.load_engine()?;
    let r = run_query(&engine, text, exclude, page)?;
    Ok(if g.json {
        serde_json::to_string_pretty(&r)? + "\n"
    } else {
        render_table(&r)
    })
}

fn stats(g: &GlobalArgs) -> Result<String> {
    let engine = g.load_engine()?;
    let corpus = engine.corpus();
    let s = corpus_stats(&corpus.charts, &corpus.events, Some(engine.models()));
    let hierarchy = engine.hierarchy();
    if g.json {
        let v = serde_json::json!({ "corpus": s, "hierarchy": hierarchy });
        return Ok(serde_json::to_string_pretty(&v)? + "\n");
    }
    let mut out = String::new();
    let _ = writeln!(out, "charts           {}", s.charts);
    let _ = writeln!(out, "observations     {}", s.observations);
    let _ = writeln!(out, "events           {}", s.events);
    for (k, n) in &s.events_by_kind {
        let _ = writeln!(out, "  {k:<14} {n}");
    }
    for (l, n) in &s.events_by_level {
        let _ = writeln!(out, "  level {l:<8} {n}");
    }
    let _ = writeln!(out, "distinct labels  {}", s.distinct_labels);
    let _ = writeln!(
        out,
        "modifier rows    {} retained of {} ({:.1}%)",
        s.modifier_rows_retained,
        s.modifier_rows,
        100.0 * s.retention_fraction
    );
    let full = hierarchy.iter().filter(|e| e.kind == EdgeKind::Full).count();
    let _ = writeln!(
        out,
        "hierarchy edges  {} ({} full, {} partial; --json lists them)",
        hierarchy.len(),
        full,
        hierarchy.len() - full
    );
    Ok(out)
}

async fn serve(g: GlobalArgs, port: u16) -> Result<()> {
    let engine = g.load_engine()?;
    let state = server::AppState::new(Some(engine));
    spawn_reloader(g, state.clone());
    let listener = tokio::net::TcpListener::bind(("0.0.0.0", port))
        .await
        .with_context(|| format!("binding port {port}"))?;
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, server::router(state)).await?;
    Ok(())
}

#[cfg(unix)]
fn spawn_reloader(g: GlobalArgs, state: server::AppState) {
    use tokio::signal::unix::{signal, SignalKind};
    tokio::spawn(async move {
        let Ok(mut hup) = signal(SignalKind::hangup()) else {
            tracing::warn!("SIGHUP reload unavailable");
            return;
        };
        while hup.recv().await.is_some() {
            let g = g.clone();
            match tokio::task::spawn_blocking(move || g.load_engine()).await {
                Ok(Ok(engine)) => {
                    state.swap(engine);
                    tracing::info!("reloaded");
                }
                Ok(Err(e)) => tracing::error!("reload failed, keeping the current index: {e:#}"),
                Err(e) => tracing::error!("reload task failed: {e}"),
            }
        }
    });
}

#[cfg(not(unix))]
fn spawn_reloader(_: GlobalArgs, _: server::AppState) {}

/// Runs a parsed command line; returns the text to print.
pub fn run(cli: Cli) -> Result<String> {
    let g = cli.global;
    match cli.command {
        Command::FitModels { slope, shape } => fit_models(&g, &slope, &shape),
        Command::Label => label(&g),
        Command::Index => index(&g),
        Command::Query {
            text,
            exclude,
            page,
        } => query(&g, &text, &exclude, page),
        Command::Stats => stats(&g),
        Command::Serve { port } => {
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(serve(g, port))?;
            Ok(String::new())
        }
    }
}
