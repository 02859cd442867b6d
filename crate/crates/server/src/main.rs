use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use pianoview_core::catalog::scan_dataset;
use pianoview_core::SharedCatalog;
use pianoview_server::report::{self, Report};
use pianoview_server::{router, AppState};
use tracing_subscriber::EnvFilter;

#[derive(Parser)]
#[command(name = "pianoview", version, about = "Multimodal piano performance dataset service")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Serve the REST API, playback channel and assets.
    Serve {
        #[arg(long)]
        root: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
    },
    /// Scan the dataset and print a status table. Exits 1 if any session is not Ready.
    Scan {
        #[arg(long)]
        root: PathBuf,
    },
    /// Print status and warnings for one session.
    Validate {
        #[arg(long)]
        root: PathBuf,
        #[arg(long)]
        session: String,
    },
}

fn print(report: Report) -> ExitCode {
    print!("{}", report.text);
    ExitCode::from(report.exit_code as u8)
}

async fn serve(root: PathBuf, host: String, port: u16) -> anyhow::Result<()> {
    let catalog = tokio::task::spawn_blocking(move || SharedCatalog::open(root)).await??;
    let summary = catalog.snapshot().summary();
    tracing::info!(
        total = summary.total,
        ready = summary.ready,
        unaligned = summary.unaligned,
        incomplete = summary.incomplete,
        "catalog loaded"
    );
    let addr: SocketAddr = format!("{host}:{port}")
        .parse()
        .with_context(|| format!("invalid listen address {host}:{port}"))?;
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .with_context(|| format!("binding {addr}"))?;
    tracing::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(AppState::new(catalog)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Serve { root, port, host } => tokio::runtime::Runtime::new()
            .context("starting runtime")
            .and_then(|rt| rt.block_on(serve(root, host, port)))
            .map(|()| ExitCode::SUCCESS),
        Command::Scan { root } => scan_dataset(&root)
            .map(|index| print(report::scan_report(&index)))
            .map_err(Into::into),
        Command::Validate { root, session } => scan_dataset(&root)
            .map(|index| print(report::validate_report(&index, &session)))
            .map_err(Into::into),
    };
    result.unwrap_or_else(|e: anyhow::Error| {
        eprintln!("error: {e:#}");
        ExitCode::from(3)
    })
}
