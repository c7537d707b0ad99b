//! Multi-seed interaction loop, regret bookkeeping and CSV logs.

mod config;
mod csv_log;

pub use config::{ExperimentConfig, WorldKind, WorldSource};
pub use csv_log::{format_sig9, read_csv, write_csv, CSV_HEADER};

use std::time::Instant;

use rayon::prelude::*;
use serde::Deserialize;

use crate::alloc::solve_exact;
use crate::data::{complete_matrix, load_movielens, load_rc};
use crate::environment::{derive_seed, stream_rng, World, WorldConfig};
use crate::error::{Error, Result};
use crate::model::{allocation_value, validate_allocation, ConstraintProfile, MeanRewardMatrix};
use crate::policies::{build_policy, PolicyParams, RoundFeedback, WorldInfo};

/// One round of one `(policy, seed)` run.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct RoundRecord {
    pub policy: String,
    pub seed: u64,
    pub t: u64,
    /// Sum of observed rewards on served pairs.
    pub reward: f64,
    /// `<X_t, Theta*>` over served pairs.
    pub expected_reward: f64,
    pub optimal_reward: f64,
    pub regret: f64,
    pub cumulative_regret: f64,
    pub dropped_count: u64,
    pub runtime_ms: f64,
}

/// Tag mixed into the world seed to seed a policy's own randomness.
const POLICY_STREAM: u64 = 0x706f_6c69_6379;

/// Ground truth shared by every run of an experiment.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub world: WorldConfig,
    /// `None` for synthetic worlds, which draw a fresh matrix per seed.
    pub theta: Option<MeanRewardMatrix>,
}

/// Loads and completes the dataset if the config names one.
pub fn prepare(cfg: &ExperimentConfig) -> Result<Prepared> {
    match &cfg.source {
        WorldSource::Synthetic => Ok(Prepared {
            world: cfg.world.clone(),
            theta: None,
        }),
        WorldSource::Dataset {
            kind,
            path,
            completion,
            completion_seed,
        } => {
            let ratings = match kind {
                WorldKind::Movielens => load_movielens(path)?,
                WorldKind::Rc => load_rc(path)?,
                WorldKind::Synthetic => unreachable!("synthetic worlds carry no dataset"),
            };
            let mut rng = stream_rng(*completion_seed, 0);
            let done = complete_matrix(&ratings, completion, &mut rng)?;
            let mut world = cfg.world.clone();
            world.n_users = ratings.n_users;
            world.n_items = ratings.n_items;
            world.rank = completion.rank;
            world.bound = world.bound.min(ratings.rating_range.1);
            world.validate()?;
            Ok(Prepared {
                theta: Some(done.theta.clipped(0.0, world.bound)),
                world,
            })
        }
    }
}

/// Runs every `(policy, seed)` pair in parallel and returns records ordered by
/// policy (config order), seed and round.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<RoundRecord>> {
    let prepared = prepare(cfg)?;
    let jobs: Vec<(usize, u64)> = (0..cfg.policies.len())
        .flat_map(|p| (0..cfg.n_seeds as u64).map(move |s| (p, s)))
        .collect();
    let work = || -> Result<Vec<Vec<RoundRecord>>> {
        jobs.par_iter()
            .map(|&(p, s)| run_single(cfg, &prepared, &cfg.policies[p], s))
            .collect()
    };
    let runs = match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::invalid(format!("thread pool: {e}")))?
            .install(work)?,
        None => work()?,
    };
    let mut records: Vec<RoundRecord> = runs.into_iter().flatten().collect();
    if !cfg.emit_per_round {
        records.retain(|r| r.t == cfg.horizon);
    }
    Ok(records)
}

/// One policy against the world of seed index `seed`.
pub fn run_single(
    cfg: &ExperimentConfig,
    prepared: &Prepared,
    params: &PolicyParams,
    seed: u64,
) -> Result<Vec<RoundRecord>> {
    let world_seed = derive_seed(cfg.master_seed, seed);
    let world_cfg = WorldConfig {
        seed: world_seed,
        ..prepared.world.clone()
    };
    let mut world = match &prepared.theta {
        Some(theta) => World::with_theta(world_cfg.clone(), theta.clone())?,
        None => World::synthetic(world_cfg.clone())?,
    };
    let info = WorldInfo {
        n_users: world_cfg.n_users,
        n_items: world_cfg.n_items,
        bound: world_cfg.bound,
        eta: world_cfg.eta,
    };
    let mut policy = build_policy(params, info, derive_seed(world_seed, POLICY_STREAM))?;
    let respects = params.kind.respects_capacity();

    let mut records = Vec::with_capacity(cfg.horizon as usize);
    let mut cached: Option<(ConstraintProfile, f64)> = None;
    let mut cumulative = 0.0;
    for t in 1..=cfg.horizon {
        let profile = world.constraints(t);
        let started = cfg.timing.then(Instant::now);
        let requested = policy.select(&profile)?;
        let (realized, dropped) = if respects {
            if !validate_allocation(&requested, &profile)?.feasible {
                return Err(Error::Policy(format!("{} requested an infeasible allocation at t={t}", params.name)));
            }
            (requested, Vec::new())
        } else {
            world.capacity_drop(&requested, &profile)?
        };
        let rewards = world.rewards(&realized)?;
        let reward = rewards.iter().map(|r| r.2).sum();
        let expected_reward = allocation_value(&realized, world.theta())?;
        let dropped_count = dropped.len() as u64;
        policy.update(&RoundFeedback {
            realized,
            rewards,
            dropped,
        })?;
        let runtime_ms = started.map_or(0.0, |s| s.elapsed().as_secs_f64() * 1e3);

        let optimal_reward = match &cached {
            Some((p, v)) if *p == profile => *v,
            _ => {
                let v = solve_exact(world.theta(), &profile)?.1;
                cached = Some((profile, v));
                v
            }
        };
        let regret = optimal_reward - expected_reward;
        cumulative += regret;
        records.push(RoundRecord {
            policy: params.name.clone(),
            seed,
            t,
            reward,
            expected_reward,
            optimal_reward,
            regret,
            cumulative_regret: cumulative,
            dropped_count,
            runtime_ms,
        });
    }
    Ok(records)
}
