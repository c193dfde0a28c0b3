use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use llg_core::driver::{self, RunConfig, CSV_HEADER};

#[derive(Parser)]
#[command(name = "llg", about = "Landau-Lifshitz finite-element solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and report its errors against the exact solution.
    Run {
        config: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run a sweep over mesh levels and report convergence rates.
    Convergence {
        config: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Check the admissibility conditions of a mesh; exits 1 on violations.
    CheckMesh {
        config: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn load(config: &PathBuf, output: Option<PathBuf>) -> llg_core::Result<RunConfig> {
    let mut cfg = RunConfig::load(config)?;
    if output.is_some() {
        cfg.output = output;
    }
    Ok(cfg)
}

fn print_rows(rows: &[driver::ConvergenceRow]) {
    println!("{}", CSV_HEADER.join(","));
    for row in rows {
        println!("{}", row.to_record().join(","));
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, output } => load(&config, output)
            .and_then(|cfg| driver::cmd_run(&cfg))
            .map(|row| {
                print_rows(&[row]);
                ExitCode::SUCCESS
            }),
        Command::Convergence { config, output } => load(&config, output)
            .and_then(|cfg| driver::cmd_convergence(&cfg))
            .map(|rows| {
                print_rows(&rows);
                ExitCode::SUCCESS
            }),
        Command::CheckMesh { config, output } => load(&config, output).and_then(|cfg| {
            let report = driver::cmd_check_mesh(&cfg)?;
            let text = format!(
                "c1_obs = {}\nc2_obs = {}\nc3_obs = {}\nc4_obs = {}\n\
                 stiffness_offdiag_violations = {}\nmax_angle = {}\n",
                driver::format_float(report.c1_obs),
                driver::format_float(report.c2_obs),
                driver::format_float(report.c3_obs),
                driver::format_float(report.c4_obs),
                report.stiffness_offdiag_violations,
                driver::format_float(report.max_angle),
            );
            print!("{text}");
            if let Some(path) = &cfg.output {
                std::fs::write(path, &text).map_err(|e| llg_core::Error::Io {
                    path: path.clone(),
                    source: e,
                })?;
            }
            Ok(if report.is_nonobtuse() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("llg: {e}");
            ExitCode::from(2)
        }
    }
}
