//! Market environment for contract learning: samples random market states,
//! encodes them for networks, decodes raw network actions into contract
//! menus, and prices menus through the contract-core reward.
//!
//! States are independent across steps. Nothing a solver does changes the
//! next state, so each step is a one-shot decision whose entire consequence
//! is its immediate reward.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::contract::{
    mdp_reward, ContractItem, ContractMenu, HolderPopulation, HolderType, PenaltyPolicy,
    ProviderParams,
};
use crate::error::{config, structure, Result};
use crate::freshness::TimingModel;

/// One observed market: the holder population the provider must contract
/// with, plus the freshness tolerance in force.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketState {
    holder_count: usize,
    max_aoi: f64,
    /// Type probabilities, a simplex vector aligned with `deltas`.
    probabilities: Vec<f64>,
    /// Type values, ascending.
    deltas: Vec<f64>,
}

impl MarketState {
    /// Builds a state from `(delta, probability)` pairs. Pairs are sorted
    /// ascending by delta, so permuting the input never changes the state.
    pub fn new(holder_count: usize, max_aoi: f64, pairs: Vec<(f64, f64)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(config("a market state needs at least one type"));
        }
        if holder_count == 0 {
            return Err(config("holder count must be positive"));
        }
        if !(max_aoi > 0.0 && max_aoi.is_finite()) {
            return Err(config(format!("max_aoi must be positive, got {max_aoi}")));
        }
        let mut pairs = pairs;
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut total = 0.0;
        for &(delta, q) in &pairs {
            if !(delta > 0.0 && delta.is_finite()) {
                return Err(config(format!("type value must be positive, got {delta}")));
            }
            if !(0.0..=1.0).contains(&q) {
                return Err(config(format!("type probability must lie in [0, 1], got {q}")));
            }
            total += q;
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(config(format!("type probabilities must sum to 1, got {total}")));
        }
        Ok(Self {
            holder_count,
            max_aoi,
            probabilities: pairs.iter().map(|p| p.1).collect(),
            deltas: pairs.iter().map(|p| p.0).collect(),
        })
    }

    pub fn holder_count(&self) -> usize {
        self.holder_count
    }

    pub fn type_count(&self) -> usize {
        self.deltas.len()
    }

    pub fn max_aoi(&self) -> f64 {
        self.max_aoi
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn deltas(&self) -> &[f64] {
        &self.deltas
    }

    /// The holder population this state describes.
    pub fn population(&self) -> Result<HolderPopulation> {
        let types = self
            .deltas
            .iter()
            .zip(&self.probabilities)
            .map(|(&delta, &q)| HolderType::new(delta, q))
            .collect::<Result<Vec<_>>>()?;
        HolderPopulation::new(types, self.holder_count)
    }
}

/// Bounds of the raw action space once mapped out of `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionBounds {
    pub f_min: f64,
    pub f_max: f64,
    pub r_min: f64,
    pub r_max: f64,
}

impl Default for ActionBounds {
    fn default() -> Self {
        Self { f_min: 0.01, f_max: 1.0, r_min: 0.0, r_max: 200.0 }
    }
}

impl ActionBounds {
    fn validate(&self) -> Result<()> {
        if !(0.0 <= self.f_min && self.f_min < self.f_max && self.f_max <= 1.0) {
            return Err(config(format!(
                "frequency bounds must satisfy 0 <= f_min < f_max <= 1, got [{}, {}]",
                self.f_min, self.f_max
            )));
        }
        if !(0.0 <= self.r_min && self.r_min < self.r_max && self.r_max.is_finite()) {
            return Err(config(format!(
                "reward bounds must satisfy 0 <= r_min < r_max, got [{}, {}]",
                self.r_min, self.r_max
            )));
        }
        Ok(())
    }
}

/// Everything needed to sample market states and price actions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    pub holder_count: usize,
    /// Per-type sampling interval for delta, ordered so that interval `k`
    /// sits at or below interval `k + 1`.
    pub delta_ranges: Vec<(f64, f64)>,
    pub max_aoi_range: (f64, f64),
    /// Dirichlet concentration for the type-probability draw, one entry per
    /// type.
    pub dirichlet_concentration: Vec<f64>,
    pub timing: TimingModel,
    /// Zero-shot accuracy constant of the provider's satisfaction score.
    pub accuracy: f64,
    /// Profit per satisfaction unit.
    pub unit_profit: f64,
    /// Penalty floor for infeasible menus, non-positive.
    pub penalty_floor: f64,
    pub penalty: PenaltyPolicy,
    pub bounds: ActionBounds,
    pub seed: u64,
}

impl EnvConfig {
    pub fn type_count(&self) -> usize {
        self.delta_ranges.len()
    }

    /// Length of the encoded state vector: `1 + 2K`.
    pub fn state_dim(&self) -> usize {
        1 + 2 * self.type_count()
    }

    /// Length of a raw action vector: `2K`.
    pub fn action_dim(&self) -> usize {
        2 * self.type_count()
    }

    pub fn validate(&self) -> Result<()> {
        if self.holder_count == 0 {
            return Err(config("holder count must be positive"));
        }
        if self.delta_ranges.is_empty() {
            return Err(config("at least one delta range is required"));
        }
        if self.dirichlet_concentration.len() != self.delta_ranges.len() {
            return Err(config(format!(
                "{} delta ranges but {} concentration entries",
                self.delta_ranges.len(),
                self.dirichlet_concentration.len()
            )));
        }
        for (k, &(lo, hi)) in self.delta_ranges.iter().enumerate() {
            if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
                return Err(config(format!("delta range {k} must satisfy 0 < lo <= hi")));
            }
            if k > 0 && self.delta_ranges[k - 1].1 > lo {
                return Err(config(
                    "delta ranges must be ordered: each interval must start at or \
                     above the previous interval's end",
                ));
            }
        }
        let (lo, hi) = self.max_aoi_range;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(config("max_aoi range must satisfy 0 < lo <= hi"));
        }
        if self.dirichlet_concentration.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
            return Err(config("Dirichlet concentration entries must be positive"));
        }
        self.timing.validate()?;
        if !(self.accuracy > 0.0) {
            return Err(config("accuracy must be positive"));
        }
        if !(self.unit_profit > 0.0) {
            return Err(config("unit profit must be positive"));
        }
        if !(self.penalty_floor <= 0.0) {
            return Err(config("penalty floor must be non-positive"));
        }
        self.bounds.validate()
    }

    /// Provider parameters for a state with the given freshness tolerance.
    pub fn provider_params(&self, max_aoi: f64) -> Result<ProviderParams> {
        ProviderParams::new(self.accuracy, self.unit_profit, max_aoi, self.penalty_floor, self.timing)
    }
}

fn uniform_in<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.random_range(lo..=hi)
    } else {
        lo
    }
}

/// Draws a simplex vector from the Dirichlet distribution with the given
/// concentration, via normalized Gamma draws.
pub fn sample_dirichlet<R: Rng + ?Sized>(concentration: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    let mut draws = Vec::with_capacity(concentration.len());
    for &alpha in concentration {
        let gamma = Gamma::new(alpha, 1.0)
            .map_err(|e| config(format!("invalid Gamma shape {alpha}: {e}")))?;
        draws.push(gamma.sample(rng));
    }
    let total: f64 = draws.iter().sum();
    if total <= f64::MIN_POSITIVE {
        // All draws underflowed to zero; fall back to the uniform simplex.
        let k = concentration.len() as f64;
        return Ok(vec![1.0 / k; concentration.len()]);
    }
    Ok(draws.into_iter().map(|g| g / total).collect())
}

/// Samples a fresh market state from the configured intervals.
pub fn sample_state<R: Rng + ?Sized>(cfg: &EnvConfig, rng: &mut R) -> Result<MarketState> {
    cfg.validate()?;
    let mut deltas: Vec<f64> = cfg
        .delta_ranges
        .iter()
        .map(|&(lo, hi)| uniform_in(rng, lo, hi))
        .collect();
    deltas.sort_by(|a, b| a.total_cmp(b));
    let max_aoi = uniform_in(rng, cfg.max_aoi_range.0, cfg.max_aoi_range.1);
    let mut probabilities = sample_dirichlet(&cfg.dirichlet_concentration, rng)?;
    // Normalization can leave the sum a few ulps off one; close the gap on
    // the largest entry so the state invariant holds exactly.
    let total: f64 = probabilities.iter().sum();
    let largest = probabilities
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    probabilities[largest] += 1.0 - total;
    MarketState::new(
        cfg.holder_count,
        max_aoi,
        deltas.into_iter().zip(probabilities).collect(),
    )
}

/// Encodes a state as a flat vector in `[0, 1]^(1+2K)`:
/// `[max_aoi / hi, Q_1..Q_K, delta_1 / hi_1 .. delta_K / hi_K]`.
pub fn encode_state(state: &MarketState, cfg: &EnvConfig) -> Result<Vec<f64>> {
    if state.type_count() != cfg.type_count() {
        return Err(structure(format!(
            "state has {} types, config expects {}",
            state.type_count(),
            cfg.type_count()
        )));
    }
    let mut out = Vec::with_capacity(cfg.state_dim());
    out.push(state.max_aoi / cfg.max_aoi_range.1);
    out.extend_from_slice(state.probabilities());
    for (delta, range) in state.deltas().iter().zip(&cfg.delta_ranges) {
        out.push(delta / range.1);
    }
    Ok(out)
}

/// Reconstructs the market state from its encoding. Exact inverse of
/// [`encode_state`] up to float rounding.
pub fn decode_state(encoded: &[f64], cfg: &EnvConfig) -> Result<MarketState> {
    if encoded.len() != cfg.state_dim() {
        return Err(structure(format!(
            "expected encoded state of length {}, got {}",
            cfg.state_dim(),
            encoded.len()
        )));
    }
    let k = cfg.type_count();
    let max_aoi = encoded[0] * cfg.max_aoi_range.1;
    let pairs = (0..k)
        .map(|i| (encoded[1 + k + i] * cfg.delta_ranges[i].1, encoded[1 + i]))
        .collect();
    MarketState::new(cfg.holder_count, max_aoi, pairs)
}

/// Maps a raw action in `[-1, 1]^(2K)` onto a contract menu. Coordinate `2k`
/// becomes the frequency for type `k`, coordinate `2k+1` its reward, each by
/// affine interpolation of its bound interval. Out-of-range coordinates are
/// clamped to `[-1, 1]` first.
pub fn decode_action(raw: &[f64], cfg: &EnvConfig) -> Result<ContractMenu> {
    if raw.len() != cfg.action_dim() {
        return Err(structure(format!(
            "expected raw action of length {}, got {}",
            cfg.action_dim(),
            raw.len()
        )));
    }
    let b = &cfg.bounds;
    let lerp = |lo: f64, hi: f64, x: f64| {
        let x = x.clamp(-1.0, 1.0);
        lo + (x + 1.0) / 2.0 * (hi - lo)
    };
    let items = raw
        .chunks_exact(2)
        .map(|pair| ContractItem::new(lerp(b.f_min, b.f_max, pair[0]), lerp(b.r_min, b.r_max, pair[1])))
        .collect::<Result<Vec<_>>>()?;
    Ok(ContractMenu::new(items))
}

/// Inverse of [`decode_action`] on interior points.
pub fn encode_action(menu: &ContractMenu, cfg: &EnvConfig) -> Result<Vec<f64>> {
    if menu.len() != cfg.type_count() {
        return Err(structure(format!(
            "menu has {} items, config expects {}",
            menu.len(),
            cfg.type_count()
        )));
    }
    let b = &cfg.bounds;
    let unlerp = |lo: f64, hi: f64, v: f64| 2.0 * (v - lo) / (hi - lo) - 1.0;
    let mut out = Vec::with_capacity(cfg.action_dim());
    for item in &menu.items {
        out.push(unlerp(b.f_min, b.f_max, item.update_frequency));
        out.push(unlerp(b.r_min, b.r_max, item.reward));
    }
    Ok(out)
}

/// Prices a menu against a state: the expected provider utility when the
/// menu is feasible, otherwise the configured penalty.
pub fn env_step(state: &MarketState, menu: &ContractMenu, cfg: &EnvConfig) -> Result<f64> {
    let pop = state.population()?;
    let params = cfg.provider_params(state.max_aoi())?;
    mdp_reward(menu, &pop, &params, &cfg.penalty)
}

/// A solver-facing environment: sample observation vectors, price raw
/// actions. Implementations own their randomness.
pub trait Environment {
    fn state_dim(&self) -> usize;
    fn action_dim(&self) -> usize;
    /// Draws the next observation.
    fn sample_state_vec(&mut self) -> Vec<f64>;
    /// Reward of a raw `[-1, 1]` action taken against an observation.
    fn reward(&mut self, state: &[f64], raw_action: &[f64]) -> Result<f64>;
    /// Restarts the environment's random stream.
    fn reseed(&mut self, seed: u64);
}

/// The contract-design environment over randomly drawn markets.
#[derive(Debug, Clone)]
pub struct MarketEnv {
    config: EnvConfig,
    rng: ChaCha8Rng,
}

impl MarketEnv {
    pub fn new(config: EnvConfig) -> Result<Self> {
        config.validate()?;
        let rng = rand::SeedableRng::seed_from_u64(config.seed);
        Ok(Self { config, rng })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn sample_market_state(&mut self) -> Result<MarketState> {
        sample_state(&self.config, &mut self.rng)
    }
}

impl Environment for MarketEnv {
    fn state_dim(&self) -> usize {
        self.config.state_dim()
    }

    fn action_dim(&self) -> usize {
        self.config.action_dim()
    }

    fn sample_state_vec(&mut self) -> Vec<f64> {
        let state = sample_state(&self.config, &mut self.rng)
            .expect("config was validated at construction");
        encode_state(&state, &self.config).expect("sampled state matches its own config")
    }

    fn reward(&mut self, state: &[f64], raw_action: &[f64]) -> Result<f64> {
        let state = decode_state(state, &self.config)?;
        let menu = decode_action(raw_action, &self.config)?;
        env_step(&state, &menu, &self.config)
    }

    fn reseed(&mut self, seed: u64) {
        self.rng = rand::SeedableRng::seed_from_u64(seed);
    }
}
