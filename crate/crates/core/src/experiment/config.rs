//! TOML experiment description.
//!
//! ```toml
//! [runner]
//! horizon = 500
//! n_seeds = 10
//! master_seed = 7
//! output = "results/desk_static.csv"
//!
//! [world]
//! kind = "synthetic"        # synthetic | movielens | rc
//! n_users = 60
//! n_items = 30
//! rank = 3
//!
//! [[policies]]
//! kind = "lrcomb"           # lrcomb | acf | cucb | icf | icf2
//! kappa = 1.0
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::data::CompletionOptions;
use crate::environment::{CapacityRule, Dynamics, WorldConfig};
use crate::error::{Error, Result};
use crate::estimation::{AlsOptions, OptimismMode};
use crate::policies::{Allocator, PolicyKind, PolicyParams, RadiusRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WorldKind {
    Synthetic,
    Movielens,
    Rc,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldSection {
    #[serde(default = "default_world_kind")]
    pub kind: WorldKind,
    /// Required for synthetic worlds; datasets take their size from the file.
    pub n_users: Option<usize>,
    pub n_items: Option<usize>,
    /// Rank of the synthetic matrix, or of the completion for datasets.
    pub rank: Option<usize>,
    /// Defaults to 10 for synthetic worlds and to the top rating for datasets.
    pub bound: Option<f64>,
    #[serde(default = "one")]
    pub eta: f64,
    #[serde(default = "default_dynamics")]
    pub dynamics: DynamicsName,
    #[serde(default = "default_p_active")]
    pub p_active: f64,
    /// Fixed `C_max`; absent means the demand-proportional rule.
    pub c_max: Option<u32>,
    #[serde(default)]
    pub zero_capacity: bool,
    #[serde(default)]
    pub theta_noise: f64,
    /// Dataset file, resolved relative to the config file.
    pub path: Option<PathBuf>,
    pub completion_reg: Option<f64>,
    pub completion_sweeps: Option<usize>,
    #[serde(default)]
    pub completion_seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DynamicsName {
    Static,
    Dynamic,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunnerSection {
    pub horizon: u64,
    #[serde(default = "one_usize")]
    pub n_seeds: usize,
    #[serde(default)]
    pub master_seed: u64,
    pub output: Option<PathBuf>,
    #[serde(default = "yes")]
    pub emit_per_round: bool,
    /// Record wall-clock time per round; off keeps output reproducible.
    #[serde(default)]
    pub timing: bool,
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicySection {
    pub kind: PolicyName,
    pub name: Option<String>,
    /// Defaults to the world rank.
    pub rank: Option<usize>,
    pub gamma: Option<f64>,
    pub kappa: Option<f64>,
    pub mode: Option<ModeName>,
    pub radius: Option<RadiusName>,
    pub allocator: Option<AllocatorName>,
    pub prior_mean: Option<f64>,
    pub delta: Option<f64>,
    pub alpha_cover: Option<f64>,
    pub cucb_scale: Option<f64>,
    pub bonus_cap: Option<f64>,
    pub refit_every: Option<usize>,
    pub icf_ridge: Option<f64>,
    pub kappa_icf: Option<f64>,
    pub als_sweeps: Option<usize>,
    pub als_tol: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyName {
    Lrcomb,
    Acf,
    Cucb,
    Icf,
    Icf2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeName {
    Fast,
    Alternating,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RadiusName {
    Practical,
    Theoretical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AllocatorName {
    Exact,
    Dual,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    runner: RunnerSection,
    world: WorldSection,
    policies: Vec<PolicySection>,
}

fn default_world_kind() -> WorldKind {
    WorldKind::Synthetic
}
fn default_dynamics() -> DynamicsName {
    DynamicsName::Static
}
fn default_p_active() -> f64 {
    0.2
}
fn one() -> f64 {
    1.0
}
fn one_usize() -> usize {
    1
}
fn yes() -> bool {
    true
}

/// Where the ground truth comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum WorldSource {
    Synthetic,
    Dataset {
        kind: WorldKind,
        path: PathBuf,
        completion: CompletionOptions,
        completion_seed: u64,
    },
}

/// Validated experiment with every default filled in.
///
/// For dataset worlds `world.n_users`, `world.n_items` and `world.bound` are
/// placeholders until the file is loaded.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub world: WorldConfig,
    pub source: WorldSource,
    pub horizon: u64,
    pub n_seeds: usize,
    pub master_seed: u64,
    pub output: Option<PathBuf>,
    pub emit_per_round: bool,
    pub timing: bool,
    pub threads: Option<usize>,
    pub policies: Vec<PolicyParams>,
}

impl ExperimentConfig {
    /// Reads and validates a config file; relative dataset paths resolve
    /// against the file's directory.
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, Some(base))
    }

    pub fn from_toml(text: &str, base_dir: Option<&Path>) -> Result<Self> {
        let de = toml::Deserializer::new(text);
        let raw: RawConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::Config {
                path,
                message: e.into_inner().message().trim().to_string(),
            }
        })?;
        resolve(raw, base_dir)
    }
}

fn config_err(path: &str, message: impl Into<String>) -> Error {
    Error::Config {
        path: path.to_string(),
        message: message.into(),
    }
}

fn resolve(raw: RawConfig, base_dir: Option<&Path>) -> Result<ExperimentConfig> {
    let RawConfig {
        runner,
        world: w,
        policies,
    } = raw;
    if runner.horizon == 0 {
        return Err(config_err("runner.horizon", "must be at least 1"));
    }
    if runner.n_seeds == 0 {
        return Err(config_err("runner.n_seeds", "must be at least 1"));
    }
    if runner.threads == Some(0) {
        return Err(config_err("runner.threads", "must be at least 1"));
    }
    if policies.is_empty() {
        return Err(config_err("policies", "at least one policy is required"));
    }

    let synthetic = w.kind == WorldKind::Synthetic;
    let require = |v: Option<usize>, field: &str| {
        v.ok_or_else(|| config_err(&format!("world.{field}"), "required for synthetic worlds"))
    };
    let (n_users, n_items) = if synthetic {
        (require(w.n_users, "n_users")?, require(w.n_items, "n_items")?)
    } else {
        if w.n_users.is_some() || w.n_items.is_some() {
            return Err(config_err("world", "dataset worlds take n_users and n_items from the file"));
        }
        (1, 1)
    };
    let rank = match (w.rank, w.kind) {
        (Some(r), _) => r,
        (None, WorldKind::Synthetic) => require(None, "rank")?,
        (None, WorldKind::Movielens) => 20,
        (None, WorldKind::Rc) => 5,
    };
    let bound = w.bound.unwrap_or(match w.kind {
        WorldKind::Synthetic => 10.0,
        WorldKind::Movielens => 5.0,
        WorldKind::Rc => 2.0,
    });
    let world = WorldConfig {
        n_users,
        n_items,
        rank: if synthetic { rank } else { 1 },
        bound,
        eta: w.eta,
        dynamics: match w.dynamics {
            DynamicsName::Static => Dynamics::Static,
            DynamicsName::Dynamic => Dynamics::Dynamic,
        },
        p_active: w.p_active,
        c_max_rule: w.c_max.map_or(CapacityRule::Paper, CapacityRule::Fixed),
        zero_capacity: w.zero_capacity,
        theta_noise: w.theta_noise,
        seed: 0,
    };
    world
        .validate()
        .map_err(|e| config_err("world", e.to_string()))?;

    let source = if synthetic {
        if w.path.is_some() {
            return Err(config_err("world.path", "only dataset worlds read a file"));
        }
        WorldSource::Synthetic
    } else {
        let path = w
            .path
            .ok_or_else(|| config_err("world.path", "dataset worlds need a file path"))?;
        let path = match base_dir {
            Some(base) if path.is_relative() => base.join(path),
            _ => path,
        };
        let defaults = CompletionOptions::default();
        WorldSource::Dataset {
            kind: w.kind,
            path,
            completion: CompletionOptions {
                rank,
                reg: w.completion_reg.unwrap_or(defaults.reg),
                sweeps: w.completion_sweeps.unwrap_or(defaults.sweeps),
                rel_tol: defaults.rel_tol,
            },
            completion_seed: w.completion_seed,
        }
    };

    let mut params = Vec::with_capacity(policies.len());
    for (k, p) in policies.into_iter().enumerate() {
        let prefix = format!("policies[{k}]");
        let resolved = policy_params(p, rank);
        resolved
            .validate()
            .map_err(|e| config_err(&prefix, e.to_string()))?;
        if params.iter().any(|q: &PolicyParams| q.name == resolved.name) {
            return Err(config_err(
                &format!("{prefix}.name"),
                format!("duplicate policy name `{}`", resolved.name),
            ));
        }
        params.push(resolved);
    }

    Ok(ExperimentConfig {
        world,
        source,
        horizon: runner.horizon,
        n_seeds: runner.n_seeds,
        master_seed: runner.master_seed,
        output: runner.output,
        emit_per_round: runner.emit_per_round,
        timing: runner.timing,
        threads: runner.threads,
        policies: params,
    })
}

fn policy_params(p: PolicySection, world_rank: usize) -> PolicyParams {
    let kind = match p.kind {
        PolicyName::Lrcomb => PolicyKind::LrComb,
        PolicyName::Acf => PolicyKind::Acf,
        PolicyName::Cucb => PolicyKind::Cucb,
        PolicyName::Icf => PolicyKind::Icf,
        PolicyName::Icf2 => PolicyKind::Icf2,
    };
    let d = PolicyParams::new(kind);
    let als = AlsOptions {
        max_sweeps: p.als_sweeps.unwrap_or(d.als.max_sweeps),
        rel_tol: p.als_tol.unwrap_or(d.als.rel_tol),
    };
    PolicyParams {
        kind,
        name: p.name.unwrap_or(d.name),
        rank: p.rank.unwrap_or(world_rank),
        gamma: p.gamma.unwrap_or(d.gamma),
        kappa: p.kappa.unwrap_or(d.kappa),
        mode: match p.mode {
            Some(ModeName::Alternating) => OptimismMode::Alternating,
            Some(ModeName::Fast) => OptimismMode::Fast,
            None => d.mode,
        },
        radius: match p.radius {
            Some(RadiusName::Theoretical) => RadiusRule::Theoretical,
            Some(RadiusName::Practical) => RadiusRule::Practical,
            None => d.radius,
        },
        allocator: match p.allocator {
            Some(AllocatorName::Dual) => Allocator::Dual,
            Some(AllocatorName::Exact) => Allocator::Exact,
            None => d.allocator,
        },
        prior_mean: p.prior_mean.or(d.prior_mean),
        delta: p.delta.unwrap_or(d.delta),
        alpha_cover: p.alpha_cover.unwrap_or(d.alpha_cover),
        cucb_scale: p.cucb_scale.unwrap_or(d.cucb_scale),
        bonus_cap: p.bonus_cap.or(d.bonus_cap),
        refit_every: p.refit_every.unwrap_or(d.refit_every),
        icf_ridge: p.icf_ridge.unwrap_or(d.icf_ridge),
        kappa_icf: p.kappa_icf.unwrap_or(d.kappa_icf),
        als,
    }
}
