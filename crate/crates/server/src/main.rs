use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{bail, Context};
use chrono::{NaiveDate, Utc};
use clap::{Parser, Subcommand};
use tracing_subscriber::EnvFilter;
use triagebase::ingest::UploadMeta;
use triagebase::model::{ToolCategory, ToolDescriptor};
use triagebase::project::Project;
use triagebase_server::{router, AppState, Config};

#[derive(Parser)]
#[command(name = "triagebase", version, about = "Security findings triage service")]
struct Cli {
    /// JSON config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the HTTP API.
    Serve,
    /// Ingest one report file directly into the project store.
    Ingest {
        #[arg(long)]
        project: String,
        #[arg(long)]
        file: PathBuf,
        /// Format tag; detected from the document when omitted.
        #[arg(long)]
        format: Option<String>,
        #[arg(long)]
        tool: Option<String>,
        #[arg(long, default_value = "")]
        tool_version: String,
        #[arg(long, default_value = "other")]
        category: String,
        #[arg(long)]
        scope: Option<String>,
        #[arg(long)]
        report_id: Option<String>,
    },
    /// Print the weekly snapshot for a date (default today).
    Stats {
        #[arg(long)]
        project: String,
        #[arg(long)]
        as_of: Option<NaiveDate>,
    },
    /// Write the project's belief log as JSON lines.
    Export {
        #[arg(long)]
        project: String,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .with_writer(std::io::stderr)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let config = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    match cli.command {
        Command::Serve => serve(config),
        Command::Ingest {
            project,
            file,
            format,
            tool,
            tool_version,
            category,
            scope,
            report_id,
        } => {
            let mut p = open_offline(&config, &project)?;
            let document = std::fs::read(&file).with_context(|| format!("reading {}", file.display()))?;
            let mut meta = UploadMeta::new(project, Utc::now());
            if let Some(name) = tool {
                let category = ToolCategory::from_str(&category)?;
                meta = meta.with_tool(ToolDescriptor::new(name, tool_version, category)?);
            }
            if let Some(s) = scope {
                meta = meta.with_scope(s);
            }
            if let Some(id) = report_id {
                meta = meta.with_report_id(id);
            }
            let summary = p.ingest(&document, format.as_deref(), meta)?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
            Ok(())
        }
        Command::Stats { project, as_of } => {
            let p = open_offline(&config, &project)?;
            let snapshot = p.weekly(as_of.unwrap_or_else(|| Utc::now().date_naive()));
            println!("{}", serde_json::to_string_pretty(&snapshot)?);
            Ok(())
        }
        Command::Export { project, out } => {
            let p = open_offline(&config, &project)?;
            let records = p.export_log()?;
            write_lines(&out, &records)?;
            eprintln!("wrote {} records to {}", records.len(), out.display());
            Ok(())
        }
    }
}

/// Offline commands work on the stored project directly. Do not point them
/// at a directory a running server is writing to.
fn open_offline(config: &Config, project: &str) -> anyhow::Result<Project> {
    let Some(root) = &config.storage.path else {
        bail!("storage.path is not configured");
    };
    if !triagebase_server::state::valid_project_id(project) {
        bail!("invalid project id `{project}`");
    }
    Ok(Project::open(project, config.project_settings(), root.join(project))?)
}

fn write_lines<T: serde::Serialize>(path: &Path, records: &[T]) -> anyhow::Result<()> {
    let file = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = std::io::BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

#[tokio::main]
async fn serve(config: Config) -> anyhow::Result<()> {
    if config.tokens.ci.is_empty() && config.tokens.users.is_empty() {
        tracing::warn!("no tokens configured; every authenticated request will be refused");
    }
    let state = AppState::new(&config)?;
    let addr = config.server.addr();
    let listener = tokio::net::TcpListener::bind(addr).await.with_context(|| format!("binding {addr}"))?;
    tracing::info!(%addr, projects = state.project_ids().len(), "listening");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
