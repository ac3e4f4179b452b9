//! Experiment configuration: TOML schema, validation, and conversion into
//! the solver and environment configs.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baselines::GridSpec;
use crate::contract::PenaltyPolicy;
use crate::error::{config, Error, Result};
use crate::freshness::TimingModel;
use crate::gdm::{CriticBootstrap, GdmConfig, TrainConfig};
use crate::market::{ActionBounds, EnvConfig};
use crate::ppo::PpoConfig;

/// Contract-design solvers the driver can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Solver {
    Gdm,
    Ppo,
    Greedy,
    Random,
    CompleteInfo,
}

impl fmt::Display for Solver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Solver::Gdm => "gdm",
            Solver::Ppo => "ppo",
            Solver::Greedy => "greedy",
            Solver::Random => "random",
            Solver::CompleteInfo => "complete-info",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEnv {
    holder_count: usize,
    delta_ranges: Vec<(f64, f64)>,
    max_aoi_range: (f64, f64),
    dirichlet_concentration: Vec<f64>,
    f_bounds: (f64, f64),
    r_bounds: (f64, f64),
    timing: TimingModel,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProvider {
    accuracy: f64,
    unit_profit: f64,
    penalty_floor: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGdm {
    hidden_sizes: Vec<usize>,
    time_embed_dim: usize,
    denoise_steps: usize,
    beta_lo: f64,
    beta_hi: f64,
    exploration_noise: f64,
    discount: f64,
    bootstrap: CriticBootstrap,
    episodes: usize,
    steps_per_episode: usize,
    batch_size: usize,
    buffer_capacity: usize,
    actor_lr: f64,
    critic_lr: f64,
    soft_update: f64,
    reward_scale: f64,
    #[serde(default)]
    warmup_steps: usize,
    eval_every: usize,
    eval_states: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    f_step: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    scenario: String,
    solvers: Vec<Solver>,
    seeds: Vec<u64>,
    output_dir: PathBuf,
    /// Number of shared evaluation states every run is scored on.
    eval_states: usize,
    /// Seed of the shared evaluation state set.
    eval_seed: u64,
    env: RawEnv,
    provider: RawProvider,
    penalty: PenaltyPolicy,
    #[serde(default)]
    gdm: Option<RawGdm>,
    #[serde(default)]
    ppo: Option<PpoConfig>,
    #[serde(default)]
    grid: Option<RawGrid>,
}

/// A fully validated experiment: scenario name, solver/seed matrix, the
/// environment template, and per-solver hyperparameters.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub scenario: String,
    pub solvers: Vec<Solver>,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    pub eval_states: usize,
    pub eval_seed: u64,
    /// Environment template; the per-run seed replaces `seed`.
    pub env: EnvConfig,
    pub gdm: Option<(GdmConfig, TrainConfig)>,
    pub ppo: Option<PpoConfig>,
    pub grid: GridSpec,
}

impl ExperimentConfig {
    /// Parses and validates a TOML config document.
    pub fn from_toml(text: &str) -> Result<Self> {
        let raw: RawConfig =
            toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_raw(raw)
    }

    /// Loads a config file. The `FRESHCONTRACT_SEED` environment variable,
    /// when set, replaces the config's seed list with that single seed.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        if let Ok(value) = std::env::var("FRESHCONTRACT_SEED") {
            let seed: u64 = value.parse().map_err(|_| {
                config(format!("FRESHCONTRACT_SEED must be an unsigned integer, got {value:?}"))
            })?;
            cfg.seeds = vec![seed];
        }
        Ok(cfg)
    }

    fn from_raw(raw: RawConfig) -> Result<Self> {
        if raw.scenario.is_empty()
            || !raw
                .scenario
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
        {
            return Err(config(
                "scenario must be a non-empty name of letters, digits, '-', '_'",
            ));
        }
        if raw.solvers.is_empty() {
            return Err(config("at least one solver is required"));
        }
        if raw.seeds.is_empty() {
            return Err(config("at least one seed is required"));
        }
        if raw.eval_states == 0 {
            return Err(config("eval_states must be positive"));
        }
        let env = EnvConfig {
            holder_count: raw.env.holder_count,
            delta_ranges: raw.env.delta_ranges,
            max_aoi_range: raw.env.max_aoi_range,
            dirichlet_concentration: raw.env.dirichlet_concentration,
            timing: raw.env.timing,
            accuracy: raw.provider.accuracy,
            unit_profit: raw.provider.unit_profit,
            penalty_floor: raw.provider.penalty_floor,
            penalty: raw.penalty,
            bounds: ActionBounds {
                f_min: raw.env.f_bounds.0,
                f_max: raw.env.f_bounds.1,
                r_min: raw.env.r_bounds.0,
                r_max: raw.env.r_bounds.1,
            },
            seed: 0,
        };
        env.validate()?;

        let gdm = match raw.gdm {
            Some(g) => {
                let gdm_cfg = GdmConfig {
                    hidden_sizes: g.hidden_sizes,
                    time_embed_dim: g.time_embed_dim,
                    denoise_steps: g.denoise_steps,
                    beta_lo: g.beta_lo,
                    beta_hi: g.beta_hi,
                    exploration_noise: g.exploration_noise,
                    discount: g.discount,
                    bootstrap: g.bootstrap,
                };
                let train_cfg = TrainConfig {
                    episodes: g.episodes,
                    steps_per_episode: g.steps_per_episode,
                    batch_size: g.batch_size,
                    buffer_capacity: g.buffer_capacity,
                    actor_lr: g.actor_lr,
                    critic_lr: g.critic_lr,
                    soft_update: g.soft_update,
                    reward_scale: g.reward_scale,
                    warmup_steps: g.warmup_steps,
                    eval_every: g.eval_every,
                    eval_states: g.eval_states,
                    seed: 0,
                };
                gdm_cfg.validate()?;
                train_cfg.validate()?;
                Some((gdm_cfg, train_cfg))
            }
            None => None,
        };
        if raw.solvers.contains(&Solver::Gdm) && gdm.is_none() {
            return Err(config("solver 'gdm' is listed but the [gdm] section is missing"));
        }
        if let Some(ppo) = &raw.ppo {
            ppo.validate()?;
        }
        if raw.solvers.contains(&Solver::Ppo) && raw.ppo.is_none() {
            return Err(config("solver 'ppo' is listed but the [ppo] section is missing"));
        }
        let f_step = raw.grid.map(|g| g.f_step).unwrap_or(1e-3);
        let grid = GridSpec::from_bounds(&env.bounds, f_step)?;

        Ok(Self {
            scenario: raw.scenario,
            solvers: raw.solvers,
            seeds: raw.seeds,
            output_dir: raw.output_dir,
            eval_states: raw.eval_states,
            eval_seed: raw.eval_seed,
            env,
            gdm,
            ppo: raw.ppo,
            grid,
        })
    }

    /// The environment for one run of the given seed.
    pub fn env_for_seed(&self, seed: u64) -> EnvConfig {
        let mut env = self.env.clone();
        env.seed = seed;
        env
    }

    /// File stem of one (solver, seed) run's outputs.
    pub fn run_stem(&self, solver: Solver, seed: u64) -> String {
        format!("{}_{}_{}", self.scenario, solver, seed)
    }
}

/// FNV-1a hash of the structural environment config (seed excluded),
/// identifying which checkpoints are compatible with which experiments.
pub fn config_fingerprint(env: &EnvConfig) -> String {
    let mut canonical = env.clone();
    canonical.seed = 0;
    let text = serde_json::to_string(&canonical).expect("EnvConfig serializes");
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in text.as_bytes() {
        hash ^= u64::from(*byte);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{hash:016x}")
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const SMOKE_TOML: &str = r#"
scenario = "smoke"
solvers = ["gdm", "ppo", "greedy", "random", "complete-info"]
seeds = [1, 2]
output_dir = "runs/smoke"
eval_states = 10
eval_seed = 4242

[env]
holder_count = 10
delta_ranges = [[1.0, 6.0], [13.0, 18.0]]
max_aoi_range = [30.0, 60.0]
dirichlet_concentration = [1.0, 1.0]
f_bounds = [0.01, 1.0]
r_bounds = [0.0, 2.0]

[env.timing]
data_size = 2.0
transmission_rate = 1.0
consensus_time = 0.0

[provider]
accuracy = 39.9
unit_profit = 10.0
penalty_floor = -100.0

[penalty]
mode = "graded"
scale = 100.0

[gdm]
hidden_sizes = [16, 16]
time_embed_dim = 4
denoise_steps = 3
beta_lo = 0.1
beta_hi = 0.5
exploration_noise = 0.01
discount = 0.0
bootstrap = "next-state"
episodes = 2
steps_per_episode = 8
batch_size = 8
buffer_capacity = 4096
actor_lr = 1e-3
critic_lr = 1e-3
soft_update = 0.01
reward_scale = 0.01
eval_every = 1
eval_states = 4

[ppo]
hidden_sizes = [16, 16]
clip_ratio = 0.2
gae_lambda = 0.95
discount = 0.99
iterations = 2
rollout_len = 64
minibatch_size = 16
epochs = 2
learning_rate = 3e-4
value_coef = 0.5
entropy_coef = 0.0
reward_scale = 0.01
init_log_std = 0.0
eval_every = 1
eval_states = 4

[grid]
f_step = 0.01
"#;

    #[test]
    fn parses_and_validates_the_smoke_config() {
        let cfg = ExperimentConfig::from_toml(SMOKE_TOML).unwrap();
        assert_eq!(cfg.scenario, "smoke");
        assert_eq!(cfg.solvers.len(), 5);
        assert_eq!(cfg.seeds, vec![1, 2]);
        assert!(cfg.gdm.is_some());
        assert!(cfg.ppo.is_some());
        assert_eq!(cfg.run_stem(Solver::CompleteInfo, 2), "smoke_complete-info_2");
    }

    #[test]
    fn rejects_malformed_and_inconsistent_configs() {
        assert!(matches!(
            ExperimentConfig::from_toml("scenario = ["),
            Err(Error::Parse(_))
        ));
        // Unknown field.
        let unknown = SMOKE_TOML.replace("eval_states = 10", "eval_states = 10\nbogus = 1");
        assert!(matches!(ExperimentConfig::from_toml(&unknown), Err(Error::Parse(_))));
        // Solver listed without its section.
        let missing = SMOKE_TOML.replace("[gdm]", "[gdm_unused]").replace(
            "solvers = [\"gdm\", \"ppo\", \"greedy\", \"random\", \"complete-info\"]",
            "solvers = [\"gdm\"]",
        );
        assert!(ExperimentConfig::from_toml(&missing).is_err());
        // Bad scenario name.
        let bad_name = SMOKE_TOML.replace("scenario = \"smoke\"", "scenario = \"a b\"");
        assert!(matches!(ExperimentConfig::from_toml(&bad_name), Err(Error::Config(_))));
    }

    #[test]
    fn fingerprint_tracks_structural_changes_only() {
        let cfg = ExperimentConfig::from_toml(SMOKE_TOML).unwrap();
        let a = config_fingerprint(&cfg.env);
        let mut reseeded = cfg.env.clone();
        reseeded.seed = 777;
        assert_eq!(a, config_fingerprint(&reseeded));
        let mut other_k = cfg.env.clone();
        other_k.delta_ranges.push((20.0, 30.0));
        other_k.dirichlet_concentration.push(1.0);
        assert_ne!(a, config_fingerprint(&other_k));
    }
}
