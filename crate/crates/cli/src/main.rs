use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use cfmult_core::pipeline::{self, Experiment, ExperimentConfig, WeakLimitSummary};
use cfmult_core::Error;

/// Rank-one towers, skew products and their finite verification suites.
#[derive(Parser)]
#[command(name = "cfmult", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build the tower and skew data for a config and write the artifacts.
    Build { config: PathBuf },
    /// Re-run every validator on written artifacts.
    Verify {
        /// Artifact directory, or a config whose output directory is used.
        path: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Residual table of the weak-limit identities.
    Weaklimits { config: PathBuf },
    /// Catalog triples realizing each target set, e.g. `1,2`.
    Groups {
        #[arg(required = true)]
        targets: Vec<String>,
        #[arg(long, default_value_t = 40)]
        bound: u64,
        /// Write the catalog here as well.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Multiplicity table on tensor powers restricted to Γ-invariants.
    Spectra {
        #[arg(short, long, default_value_t = 2)]
        k: usize,
        #[arg(short, long, default_value_t = 5)]
        d: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Density, ergodicity, skew and recurrence witnesses.
    Recur { config: PathBuf },
}

fn out_dir(config: &Path) -> Result<(ExperimentConfig, PathBuf)> {
    let (cfg, base) = pipeline::load_config(config)?;
    let dir = cfg.out_dir(&base);
    Ok((cfg, dir))
}

fn artifacts(path: &Path) -> Result<Experiment> {
    let dir = if path.is_dir() { path.to_path_buf() } else { out_dir(path)?.1 };
    Ok(Experiment::read(&dir)?)
}

fn parse_target(s: &str) -> Result<BTreeSet<usize>> {
    s.split(',')
        .map(|x| {
            x.trim().parse::<usize>().map_err(|_| Error::Parse { line: 0, msg: format!("bad target set `{s}`") }.into())
        })
        .collect()
}

fn run(cli: Cli) -> Result<bool> {
    match cli.cmd {
        Cmd::Build { config } => {
            let (cfg, base) = pipeline::load_config(&config)?;
            let exp = pipeline::build(&cfg, &base)?;
            let dir = cfg.out_dir(&base);
            exp.write(&dir)?;
            let t = &exp.tower;
            println!("K = Z{:?}, depth {}, h = {}", t.k().factors(), t.depth(), t.h(t.depth()));
            for l in t.levels() {
                if let Some(tag) = &l.tag {
                    println!("level {} {tag} #C {} h {}", l.n, l.c.len(), l.h);
                }
            }
            match &exp.skew {
                Some(s) => println!("skew m = {}, H of order {}", s.m, s.h.order()),
                None => println!("rank-one only"),
            }
            println!("wrote {}", dir.display());
            Ok(true)
        }
        Cmd::Verify { path, samples, seed } => {
            let exp = artifacts(&path)?;
            let rep = pipeline::verify(&exp, samples, seed)?;
            print!("{rep}");
            let failed: Vec<&str> = rep.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
            if !failed.is_empty() {
                eprintln!("failed: {}", failed.join("; "));
            }
            Ok(rep.passed())
        }
        Cmd::Weaklimits { config } => {
            let (_, dir) = out_dir(&config)?;
            let exp = Experiment::read(&dir)?;
            let rows = pipeline::weak_limits(&exp)?;
            pipeline::write_file(&dir.join(pipeline::WEAKLIMITS_FILE), &pipeline::weak_limits_csv(&rows))?;
            let summary = WeakLimitSummary::from_rows(&rows);
            print!("{}", summary.render());
            Ok(summary.series.keys().all(|t| summary.strictly_decreasing(t)))
        }
        Cmd::Groups { targets, bound, out } => {
            let targets: Vec<BTreeSet<usize>> = targets.iter().map(|s| parse_target(s)).collect::<Result<_>>()?;
            let (cat, text) = pipeline::groups_report(&targets, bound)?;
            print!("{text}");
            if let Some(p) = out {
                pipeline::write_file(&p, &cat.to_text())?;
            }
            Ok(cat.entries.iter().all(|e| e.verified))
        }
        Cmd::Spectra { k, d, seed, out } => {
            let (csv, ok) = pipeline::spectra_table(k, d, seed)?;
            print!("{csv}");
            if let Some(p) = out {
                pipeline::write_file(&p, &csv)?;
            }
            Ok(ok)
        }
        Cmd::Recur { config } => {
            let (_, dir) = out_dir(&config)?;
            let exp = Experiment::read(&dir)?;
            let (text, ok) = pipeline::recurrence_report(&exp)?;
            pipeline::write_file(&dir.join(pipeline::RECUR_FILE), &text)?;
            print!("{text}");
            Ok(ok)
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Io { .. } | Error::Parse { .. }) => 2,
        Some(_) => 1,
        None if err.downcast_ref::<std::io::Error>().is_some() => 2,
        None => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli).context("cfmult") {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {:#}", e);
            ExitCode::from(exit_code(&e))
        }
    }
}
