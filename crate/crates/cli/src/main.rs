use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lrcomb::alloc::solve_exact;
use lrcomb::estimation::{als_least_squares, AlsOptions, FactorInit};
use lrcomb::experiment::{run_experiment, write_csv, ExperimentConfig, RoundRecord};
use lrcomb::model::{ConstraintProfile, Hyperparams, MeanRewardMatrix, ObservationLog};

/// Overrides the directory of the output CSV.
const OUT_DIR_VAR: &str = "LRCOMB_OUT_DIR";

#[derive(Parser)]
#[command(name = "lrcomb", version, about = "Low-rank combinatorial bandit experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every policy and seed of an experiment config and write the per-round CSV.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output CSV; defaults to the config's `runner.output`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Number of seeds, overriding the config.
        #[arg(long)]
        seeds: Option<usize>,
        /// Worker threads for the (policy, seed) runs.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Solve one allocation exactly and print it with its value.
    Oracle {
        /// Reward matrix, one user per line, comma-separated.
        #[arg(long)]
        theta: PathBuf,
        /// Item capacities, comma- or newline-separated.
        #[arg(long)]
        capacities: PathBuf,
        /// User demands, comma- or newline-separated.
        #[arg(long)]
        demands: PathBuf,
    },
    /// Time the exact allocator and the least-squares estimator on random instances.
    Bench {
        #[arg(long, default_value_t = 400)]
        users: usize,
        #[arg(long, default_value_t = 200)]
        items: usize,
        #[arg(long, default_value_t = 10)]
        rank: usize,
        #[arg(long, default_value_t = 3)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            config,
            out,
            seeds,
            threads,
        } => run(&config, out, seeds, threads),
        Command::Oracle {
            theta,
            capacities,
            demands,
        } => oracle(&theta, &capacities, &demands),
        Command::Bench {
            users,
            items,
            rank,
            reps,
            seed,
        } => bench(users, items, rank, reps, seed),
    }
}

fn run(config: &Path, out: Option<PathBuf>, seeds: Option<usize>, threads: Option<usize>) -> Result<()> {
    let mut cfg = ExperimentConfig::from_path(config)
        .with_context(|| format!("loading {}", config.display()))?;
    if let Some(k) = seeds {
        if k == 0 {
            bail!("--seeds must be at least 1");
        }
        cfg.n_seeds = k;
    }
    if let Some(j) = threads {
        if j == 0 {
            bail!("--threads must be at least 1");
        }
        cfg.threads = Some(j);
    }
    let mut path = out
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from("lrcomb_results.csv"));
    if let Some(dir) = std::env::var_os(OUT_DIR_VAR) {
        let name = path.file_name().map(PathBuf::from).unwrap_or_else(|| "lrcomb_results.csv".into());
        path = PathBuf::from(dir).join(name);
    }

    let started = Instant::now();
    let records = run_experiment(&cfg)?;
    write_csv(&records, &path)?;
    eprintln!(
        "wrote {} rows to {} in {:.1}s",
        records.len(),
        path.display(),
        started.elapsed().as_secs_f64()
    );
    print_summary(&records);
    Ok(())
}

/// Mean and population std of the final cumulative regret per policy.
fn print_summary(records: &[RoundRecord]) {
    let mut order: Vec<&str> = Vec::new();
    for r in records {
        if !order.contains(&r.policy.as_str()) {
            order.push(&r.policy);
        }
    }
    println!("{:<12} {:>6} {:>16} {:>12}", "policy", "seeds", "final_cum_regret", "std");
    for name in order {
        let last_t = records.iter().filter(|r| r.policy == name).map(|r| r.t).max().unwrap_or(0);
        let finals: Vec<f64> = records
            .iter()
            .filter(|r| r.policy == name && r.t == last_t)
            .map(|r| r.cumulative_regret)
            .collect();
        let n = finals.len() as f64;
        let mean = finals.iter().sum::<f64>() / n;
        let std = (finals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        println!("{:<12} {:>6} {:>16.3} {:>12.3}", name, finals.len(), mean, std);
    }
}

fn read_numbers(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut rows = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .with_context(|| format!("{}:{}: expected comma-separated numbers", path.display(), k + 1))?;
        rows.push(row);
    }
    if rows.is_empty() {
        bail!("{} contains no numbers", path.display());
    }
    Ok(rows)
}

fn read_counts(path: &Path) -> Result<Vec<u32>> {
    read_numbers(path)?
        .into_iter()
        .flatten()
        .map(|v| {
            if v >= 0.0 && v.fract() == 0.0 && v <= f64::from(u32::MAX) {
                Ok(v as u32)
            } else {
                bail!("{}: `{v}` is not a nonnegative integer", path.display())
            }
        })
        .collect()
}

fn oracle(theta: &Path, capacities: &Path, demands: &Path) -> Result<()> {
    let theta = MeanRewardMatrix::from_rows(&read_numbers(theta)?)?;
    let profile = ConstraintProfile::new(read_counts(capacities)?, read_counts(demands)?);
    let (x, value) = solve_exact(&theta, &profile)?;
    for u in 0..x.n_users() {
        let row: Vec<&str> = x.row(u).iter().map(|&b| if b { "1" } else { "0" }).collect();
        println!("{}", row.join(","));
    }
    println!("value {value}");
    Ok(())
}

fn bench(users: usize, items: usize, rank: usize, reps: usize, seed: u64) -> Result<()> {
    if users == 0 || items == 0 || rank == 0 || rank > users.min(items) || reps == 0 {
        bail!("need positive sizes, reps, and rank <= min(users, items)");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let theta = MeanRewardMatrix::from_fn(users, items, |_, _| rng.random_range(0.0..10.0));
    let profile = ConstraintProfile::new(
        (0..items).map(|_| rng.random_range(1..=(3 * users / items).max(1) as u32)).collect(),
        vec![1; users],
    );
    let mut log = ObservationLog::new(users, items);
    for round in 1..=20u64 {
        for u in 0..users {
            let i = rng.random_range(0..items);
            log.push(round, u, i, theta.get(u, i) + rng.random_range(-1.0..1.0))?;
        }
    }
    let hp = Hyperparams {
        rank,
        ..Hyperparams::default()
    };

    let mut flow_ms = Vec::with_capacity(reps);
    let mut als_ms = Vec::with_capacity(reps);
    for rep in 0..reps {
        let t0 = Instant::now();
        let (_, value) = solve_exact(&theta, &profile)?;
        flow_ms.push(t0.elapsed().as_secs_f64() * 1e3);
        let t0 = Instant::now();
        let fit = als_least_squares(&log, &hp, None, FactorInit::Seed(seed + rep as u64), &AlsOptions::default())?;
        als_ms.push(t0.elapsed().as_secs_f64() * 1e3);
        if rep == 0 {
            println!("exact value {value:.3}, als sweeps {}", fit.trace.len().saturating_sub(1));
        }
    }
    let median = |v: &mut Vec<f64>| {
        v.sort_by(f64::total_cmp);
        v[v.len() / 2]
    };
    println!("{users}x{items} exact allocation: median {:.2} ms over {reps} runs", median(&mut flow_ms));
    println!("{users}x{items} rank-{rank} least squares ({} observations): median {:.2} ms", log.len(), median(&mut als_ms));
    Ok(())
}
