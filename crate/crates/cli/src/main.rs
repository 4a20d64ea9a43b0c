//! `dhem` command line: replication studies, diagnostic probes and table
//! formatting for the dual-homotopy EM benchmark.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dhem_cli::config::RunConfig;
use dhem_cli::study::{metric_names, run_study};
use dhem_cli::table::{
    collect_summaries, emit_table, replications_csv, summary_csv, trace_csv,
};
use dhem_cli::probes::run_probe;

#[derive(Parser)]
#[command(name = "dhem", about = "Dual-homotopy EM benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a replication study from a config file.
    Run {
        /// Path of the key-value config file.
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides the config's `out`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write per-iteration trace CSVs.
        #[arg(long)]
        trace: bool,
        /// Worker threads for replications.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Run a named diagnostic probe and write its CSV report.
    Probe {
        /// kl_rate | dkl_limit | latent_effect | grad_fd | all
        #[arg(long)]
        name: String,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Combine summary CSVs from a directory into one formatted table.
    Table {
        /// Directory holding summary*.csv files.
        #[arg(long = "in")]
        input: PathBuf,
    },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), String> {
    match cli.command {
        Command::Run {
            config,
            out,
            trace,
            jobs,
        } => {
            let cfg = RunConfig::load(&config)?;
            let out_dir = out
                .or_else(|| cfg.out.clone())
                .ok_or("no output directory: pass --out or set `out` in the config")?;
            std::fs::create_dir_all(&out_dir).map_err(|e| e.to_string())?;
            let results = run_study(&cfg, trace, jobs.max(1))?;
            let write = |name: &str, text: &str| -> Result<(), String> {
                std::fs::write(out_dir.join(name), text).map_err(|e| e.to_string())
            };
            write("summary.csv", &summary_csv(&results))?;
            write(
                "replications.csv",
                &replications_csv(&results, metric_names(cfg.model)),
            )?;
            if trace {
                for res in &results {
                    write(&format!("trace_{}.csv", res.method.name()), &trace_csv(res))?;
                }
            }
            for res in &results {
                let s = &res.summary;
                println!(
                    "{} {}: success {:.3}, mean iterations {:.1}",
                    cfg.model.name(),
                    s.method.name(),
                    s.success_rate,
                    s.mean_iterations
                );
            }
            println!("wrote {}", out_dir.display());
            Ok(())
        }
        Command::Probe { name, out } => {
            std::fs::create_dir_all(&out).map_err(|e| e.to_string())?;
            let reports = run_probe(&name)?;
            let mut csv = String::from("probe,input,value,criterion,pass\n");
            for report in &reports {
                for row in report.csv_rows() {
                    csv.push_str(&row);
                    csv.push('\n');
                }
                println!(
                    "{}: {} (fitted {:.6e})",
                    report.name,
                    if report.pass { "pass" } else { "FAIL" },
                    report.fitted
                );
            }
            let path = out.join(format!("probe_{name}.csv"));
            std::fs::write(&path, csv).map_err(|e| e.to_string())?;
            println!("wrote {}", path.display());
            if reports.iter().all(|r| r.pass) {
                Ok(())
            } else {
                Err("probe criterion failed".into())
            }
        }
        Command::Table { input } => {
            let rows = collect_summaries(&input)?;
            let (table, csv) = emit_table(&rows);
            print!("{table}");
            let path = input.join("table.csv");
            std::fs::write(&path, csv).map_err(|e| e.to_string())?;
            println!("wrote {}", path.display());
            Ok(())
        }
    }
}
