//! Command-line entry point: run the HTTP service, or cluster, summarize and
//! generate datasets offline.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use clap::{Parser, Subcommand};
use tracing_subscriber::EnvFilter;
use xrf_workbench::service::{self, AppState, ServiceConfig};
use xrf_workbench::synthetic::crater_dataset;
use xrf_workbench::{load_dataset, run_pipeline, summarize, write_dataset, ClusterConfig, Dataset, SchemaConfig};

#[derive(Parser)]
#[command(name = "xrfw", version, about = "micro-XRF element abundance workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Serve the HTTP API over one CSV file or a directory of them.
    Serve {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
        /// Seed for cluster requests that do not give one.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Restore and persist workspaces here.
        #[arg(long)]
        workspace_dir: Option<PathBuf>,
        /// Seconds before a clustering job is abandoned.
        #[arg(long, default_value_t = 120)]
        cluster_timeout: u64,
    },
    /// Run one clustering pipeline and print the result as JSON.
    Cluster {
        #[arg(long)]
        data: PathBuf,
        /// Cluster configuration as inline JSON, or `@path` to read a file.
        #[arg(long)]
        config: String,
        /// Comma-separated element subset.
        #[arg(long, value_delimiter = ',')]
        elements: Option<Vec<String>>,
    },
    /// Print per-element statistics over all points as CSV.
    Stats {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_delimiter = ',')]
        elements: Option<Vec<String>>,
    },
    /// Write the synthetic 80 × 80 crater dataset as CSV.
    Synth {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn open_dataset(path: &Path) -> Result<Dataset, String> {
    let file = File::open(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let id = path
        .file_stem()
        .map_or_else(|| "data".into(), |s| s.to_string_lossy().into_owned());
    load_dataset(file, &SchemaConfig::default(), id).map_err(|e| format!("{}: {e}", path.display()))
}

fn sink(out: Option<&Path>) -> Result<Box<dyn Write>, String> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| format!("{}: {e}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn run(cli: Cli) -> Result<(), String> {
    match cli.command {
        Command::Serve {
            data,
            port,
            host,
            seed,
            workspace_dir,
            cluster_timeout,
        } => {
            let datasets = service::load_data_path(&data, &SchemaConfig::default())?;
            if datasets.is_empty() {
                return Err(format!("{}: no CSV files found", data.display()));
            }
            let config = ServiceConfig {
                default_seed: seed,
                cluster_timeout: Duration::from_secs(cluster_timeout),
                workspace_dir,
            };
            let state = Arc::new(AppState::new(config, datasets)?);
            let runtime = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
            runtime
                .block_on(service::serve(state, SocketAddr::new(host, port)))
                .map_err(|e| e.to_string())
        }
        Command::Cluster { data, config, elements } => {
            let ds = open_dataset(&data)?;
            let text = match config.strip_prefix('@') {
                Some(path) => std::fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))?,
                None => config,
            };
            let cfg: ClusterConfig = serde_json::from_str(&text).map_err(|e| format!("cluster config: {e}"))?;
            let result = run_pipeline(&ds, elements.as_deref(), &cfg).map_err(|e| e.to_string())?;
            let json = serde_json::to_string_pretty(&result).map_err(|e| e.to_string())?;
            println!("{json}");
            Ok(())
        }
        Command::Stats { data, elements } => {
            let ds = open_dataset(&data)?;
            let names = match elements {
                Some(e) => e,
                None => ds.element_names().to_vec(),
            };
            let mut w = csv::Writer::from_writer(io::stdout().lock());
            let io_err = |e: csv::Error| e.to_string();
            w.write_record(["element", "n", "mean", "sd", "cv", "min", "q1", "median", "q3", "max"])
                .map_err(io_err)?;
            for name in &names {
                let values = ds.column(name, 0..ds.len()).map_err(|e| e.to_string())?;
                let s = summarize(name, &values).map_err(|e| e.to_string())?;
                let cv = s.cv.map_or_else(String::new, |c| c.to_string());
                let row = [s.n.to_string(), s.mean.to_string(), s.sd.to_string(), cv]
                    .into_iter()
                    .chain([s.min, s.q1, s.median, s.q3, s.max].map(|v| v.to_string()));
                w.write_record(std::iter::once(name.clone()).chain(row))
                    .map_err(io_err)?;
            }
            w.flush().map_err(|e| e.to_string())
        }
        Command::Synth { seed, out } => {
            let planted = crater_dataset(seed);
            write_dataset(&planted.dataset, sink(out.as_deref())?).map_err(|e| e.to_string())
        }
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .with_writer(io::stderr)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
