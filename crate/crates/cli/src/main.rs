use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use noma_core::crl::write_round_log;
use noma_core::harness::{self, Algo, SweepParam, SweepSpec, Trace};
use noma_core::opt::export_ilp;
use noma_core::{ExperimentConfig, Scenario};

#[derive(Parser)]
#[command(name = "noma-arena", version, about = "Online NOMA grouping and power allocation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one algorithm on one seeded scenario and print its result record.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// crl, tql, fm-max or opt.
        #[arg(long)]
        algo: String,
        /// Write the JSON record here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Learning trace: JSON lines per round for crl, CSV per episode for tql.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// JSON snapshot of the trained crl transition graphs.
        #[arg(long)]
        snapshot: Option<PathBuf>,
    },
    /// Sweep packet length or group cap over replications and algorithms.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        /// l_max or g.
        #[arg(long, default_value = "l_max")]
        param: String,
        /// Comma-separated values; defaults to the reference grid.
        #[arg(long, value_delimiter = ',')]
        values: Vec<u64>,
        #[arg(long, default_value_t = 20)]
        reps: usize,
        #[arg(long, value_delimiter = ',', default_value = "crl,tql,fm-max,opt")]
        algos: Vec<String>,
        /// Seed of the first replication.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// CSV output; the summary goes next to it as `<stem>.summary.json`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Serve the environment over the JSON-lines protocol.
    Serve {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Transport::Stdio)]
        transport: Transport,
        #[arg(long, default_value_t = 7878)]
        port: u16,
    },
    /// Write the offline packing model of a scenario as an LP file.
    ExportIlp {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1_000_000)]
        config_cap: usize,
    },
    /// Generate a scenario document.
    Generate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print formula and constructed transition-graph sizes.
    GraphReport {
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Transport {
    Stdio,
    Tcp,
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig> {
    match path {
        Some(p) => ExperimentConfig::load(p).with_context(|| format!("loading {}", p.display())),
        None => Ok(ExperimentConfig::default()),
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => match writeln!(io::stdout().lock(), "{text}") {
            Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
            other => Ok(other?),
        },
    }
}

fn summary_path(csv: &Path) -> PathBuf {
    let stem = csv.file_stem().and_then(|s| s.to_str()).unwrap_or("sweep");
    csv.with_file_name(format!("{stem}.summary.json"))
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            seed,
            algo,
            out,
            trace,
            snapshot,
        } => {
            let cfg = load_config(config.as_deref())?;
            let algo: Algo = algo.parse()?;
            let (record, history) = harness::run_traced(algo, &cfg, seed)?;
            if let Some(path) = &trace {
                let file = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
                match &history {
                    Trace::Crl(run) => write_round_log(&run.rounds, file)?,
                    Trace::Tql(run) => run.write_curve_csv(file)?,
                    Trace::None => bail!("--trace needs a learning algorithm (crl or tql)"),
                }
            }
            if let Some(path) = &snapshot {
                let Trace::Crl(run) = &history else {
                    bail!("--snapshot needs --algo crl");
                };
                std::fs::write(path, serde_json::to_string(&run.agents)?)
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            emit(&serde_json::to_string_pretty(&record)?, out.as_deref())?;
        }
        Command::Sweep {
            config,
            param,
            values,
            reps,
            algos,
            seed,
            out,
        } => {
            let base = load_config(config.as_deref())?;
            let param: SweepParam = param.parse()?;
            let algos = algos
                .iter()
                .map(|a| a.parse::<Algo>())
                .collect::<Result<Vec<_>, _>>()?;
            let spec = SweepSpec {
                param,
                values: if values.is_empty() { param.default_values() } else { values },
                replications: reps,
                base,
                algos,
                base_seed: seed,
            };
            let output = harness::run_sweep(&spec)?;
            output.write_csv(&out)?;
            let summary = summary_path(&out);
            output.write_summary(&summary)?;
            for row in &output.summary {
                eprintln!(
                    "{}={:<4} {:<7} n={:<3} mean={:.2} ci95=[{:.2}, {:.2}]",
                    row.param, row.value, row.algo, row.n, row.mean, row.ci95_low, row.ci95_high
                );
            }
            let failed: usize = output.summary.iter().map(|r| r.failed).sum();
            if failed > 0 {
                eprintln!("{failed} runs failed; see the status column");
            }
        }
        Command::Serve { config, transport, port } => {
            let cfg = load_config(config.as_deref())?;
            match transport {
                Transport::Stdio => {
                    let stdin = io::stdin();
                    harness::serve(&cfg, stdin.lock(), io::stdout().lock())?;
                }
                Transport::Tcp => {
                    let listener = TcpListener::bind(("127.0.0.1", port))
                        .with_context(|| format!("binding port {port}"))?;
                    eprintln!("listening on {}", listener.local_addr()?);
                    for conn in listener.incoming() {
                        let conn = conn?;
                        let reader = BufReader::new(conn.try_clone()?);
                        if let Err(e) = harness::serve(&cfg, reader, &conn) {
                            eprintln!("session ended with error: {e}");
                        }
                    }
                }
            }
        }
        Command::ExportIlp { scenario, out, config_cap } => {
            let s = Scenario::load(&scenario).with_context(|| format!("loading {}", scenario.display()))?;
            export_ilp(&s, config_cap, &out)?;
        }
        Command::Generate { config, seed, out } => {
            let cfg = load_config(config.as_deref())?;
            let s = Scenario::generate(&cfg.network, &cfg.radio, &cfg.traffic, seed)?;
            s.save(&out)?;
        }
        Command::GraphReport { config } => {
            let cfg = load_config(config.as_deref())?;
            let r = harness::graph_report(&cfg)?;
            let mut stdout = io::stdout().lock();
            writeln!(stdout, "frames={} levels={}", r.frames, r.levels)?;
            writeln!(stdout, "nodes: formula={} actual={}", r.formula_nodes, r.actual_nodes)?;
            writeln!(stdout, "edges: formula={} actual={}", r.formula_edges, r.actual_edges)?;
            writeln!(stdout, "paths: formula={} actual={}", r.formula_paths, r.actual_paths)?;
        }
    }
    Ok(())
}
