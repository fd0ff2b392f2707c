mod args;
mod plot;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use fedshap::Error;
use fedshap::sim::{read_rounds_csv, run_any, summarize, write_run, Summary, SimConfig};
use rayon::prelude::*;

use args::{Axis, Cli, Command, Opts, PlotArgs};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or configuration; exit code 2.
    Usage(String),
    /// Failure while running or writing; exit code 1.
    Runtime(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(o) => o.resolve().and_then(|o| cmd_run(&o)),
        Command::Compare(o) => o.resolve().and_then(|o| cmd_compare(&o)),
        Command::Sweep(o) => o.resolve().and_then(|o| cmd_sweep(&o)),
        Command::Plot(p) => cmd_plot(&p),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                CliError::Usage(_) => 2,
                CliError::Runtime(_) => 1,
            })
        }
    }
}

/// Runs every config, writes its run directory under `out` and returns the
/// final-round test accuracies in input order.
fn execute(out: &Path, cfgs: &[SimConfig]) -> Result<Vec<(PathBuf, f64)>, CliError> {
    cfgs.par_iter()
        .map(|cfg| {
            let tag = format!("{} (seed {})", cfg.display_label(), cfg.seed);
            let r = run_any(cfg).map_err(|e| {
                // Setup failures (missing or malformed data, bad settings) are the caller's to fix.
                let setup = e.round == 0
                    && e.records.is_empty()
                    && matches!(e.source, Error::Config(_) | Error::Input(_) | Error::Io { .. } | Error::Ingest { .. });
                let msg = format!("{tag}: {}", e.source);
                if setup {
                    CliError::Usage(msg)
                } else {
                    CliError::Runtime(format!("{tag}: {e}"))
                }
            })?;
            let dir = write_run(out, &r).map_err(|e| CliError::Runtime(format!("{tag}: {e}")))?;
            Ok((dir, r.final_accuracy()))
        })
        .collect()
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| CliError::Runtime(format!("{}: {e}", parent.display())))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn cmd_run(o: &Opts) -> Result<(), CliError> {
    let cfg = o.sim_config(o.strategy.unwrap_or(args::StrategyArg::GreedyFed), o.seed.unwrap_or(1))?;
    let (dir, acc) = execute(&o.out_dir(), &[cfg])?.remove(0);
    println!("{}", dir.display());
    println!("final test accuracy: {:.2}%", 100.0 * acc);
    Ok(())
}

fn cmd_compare(o: &Opts) -> Result<(), CliError> {
    let seeds = o.seeds();
    let strategies = o.strategies();
    let mut cfgs = Vec::new();
    for &s in &strategies {
        for &seed in &seeds {
            cfgs.push(o.sim_config(s, seed)?);
        }
    }
    let out = o.out_dir();
    let accs = execute(&out, &cfgs)?;
    let rows = strategies
        .iter()
        .zip(accs.chunks(seeds.len()))
        .map(|(s, chunk)| summarize(s.label(), &seeds, &chunk.iter().map(|a| a.1).collect::<Vec<_>>()))
        .collect();
    let summary = Summary { rows };
    print!("{}", summary.to_table());
    write_file(&out.join("summary.csv"), &summary.to_csv())
}

fn axis_name(axis: Axis) -> &'static str {
    match axis {
        Axis::AlphaDir => "alpha-dir",
        Axis::Rounds => "rounds",
        Axis::StragglerFrac => "straggler-frac",
        Axis::Sigma => "sigma",
    }
}

fn cmd_sweep(o: &Opts) -> Result<(), CliError> {
    let axis = o.axis.ok_or_else(|| CliError::Usage("sweep needs --axis".into()))?;
    let values = o.values.clone().filter(|v| !v.is_empty())
        .ok_or_else(|| CliError::Usage("sweep needs --values".into()))?;
    let seeds = o.seeds();
    let strategies = o.strategies();
    let mut cfgs = Vec::new();
    let mut keys = Vec::new();
    for &v in &values {
        let mut at = o.clone();
        match axis {
            Axis::AlphaDir => at.alpha_dir = Some(v),
            Axis::StragglerFrac => at.straggler_frac = Some(v),
            Axis::Sigma => at.noise_sigma = Some(v),
            Axis::Rounds => {
                if v < 1.0 || v.fract() != 0.0 {
                    return Err(CliError::Usage(format!("rounds must be a positive integer, got {v}")));
                }
                at.rounds = Some(v as usize);
            }
        }
        for &s in &strategies {
            keys.push((v, s));
            for &seed in &seeds {
                let mut c = at.sim_config(s, seed)?;
                c.label = Some(format!("{}@{}={v}", s.label(), axis_name(axis)));
                cfgs.push(c);
            }
        }
    }
    let out = o.out_dir();
    let accs = execute(&out, &cfgs)?;
    let mut csv = String::from("axis,value,strategy,mean,std,n,accuracies\n");
    for ((v, s), chunk) in keys.iter().zip(accs.chunks(seeds.len())) {
        let a: Vec<f64> = chunk.iter().map(|x| x.1).collect();
        let row = summarize(s.label(), &seeds, &a);
        let list: Vec<String> = a.iter().map(|x| x.to_string()).collect();
        println!("{}={v:<8} {:<16} {}", axis_name(axis), s.label(), row.cell());
        csv.push_str(&format!(
            "{},{v},{},{},{},{},{}\n",
            axis_name(axis),
            s.label(),
            row.mean,
            row.std,
            a.len(),
            list.join(";")
        ));
    }
    write_file(&out.join("summary.csv"), &csv)
}

fn cmd_plot(p: &PlotArgs) -> Result<(), CliError> {
    if let Some(l) = &p.labels {
        if l.len() != p.files.len() {
            return Err(CliError::Usage(format!("{} labels for {} files", l.len(), p.files.len())));
        }
    }
    let mut series = Vec::new();
    for (i, f) in p.files.iter().enumerate() {
        let rows = read_rounds_csv(f).map_err(|e| CliError::Runtime(e.to_string()))?;
        let label = match &p.labels {
            Some(l) => l[i].clone(),
            None => f
                .parent()
                .and_then(|d| d.file_name())
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| f.display().to_string()),
        };
        series.push(plot::Series {
            label,
            points: rows.iter().map(|r| (r.t as f64, r.test_acc)).collect(),
        });
    }
    write_file(&p.out, &plot::render(&p.title, &series))?;
    println!("{}", p.out.display());
    Ok(())
}
