//! Non-learning comparison schemes: the complete-information optimum, a
//! constraint-aware greedy construction, and uniform random menus.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::contract::{
    provider_expected_utility, satisfaction, ContractItem, ContractMenu, ProviderParams,
};
use crate::error::{config, Result};
use crate::market::{ActionBounds, MarketState};

/// Search grid for the per-type frequency optimization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Step of the frequency grid.
    pub f_step: f64,
    pub f_min: f64,
    pub f_max: f64,
    /// Rewards outside these bounds disqualify a frequency candidate.
    pub r_min: f64,
    pub r_max: f64,
}

impl GridSpec {
    pub fn from_bounds(bounds: &ActionBounds, f_step: f64) -> Result<Self> {
        let spec = Self {
            f_step,
            f_min: bounds.f_min.max(f64::MIN_POSITIVE),
            f_max: bounds.f_max,
            r_min: bounds.r_min,
            r_max: bounds.r_max,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.f_step > 0.0 && self.f_step <= self.f_max - self.f_min) {
            return Err(config(format!(
                "grid step must be positive and at most the range width, got {}",
                self.f_step
            )));
        }
        if !(self.f_min > 0.0 && self.f_min < self.f_max && self.f_max <= 1.0) {
            return Err(config("frequency grid must satisfy 0 < f_min < f_max <= 1"));
        }
        if !(self.r_min >= 0.0 && self.r_min < self.r_max) {
            return Err(config("reward bounds must satisfy 0 <= r_min < r_max"));
        }
        Ok(())
    }

    fn frequencies(&self) -> impl Iterator<Item = f64> + '_ {
        let steps = ((self.f_max - self.f_min) / self.f_step).ceil() as usize;
        (0..=steps).map(move |i| (self.f_min + i as f64 * self.f_step).min(self.f_max))
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { f_step: 1e-3, f_min: 0.01, f_max: 1.0, r_min: 0.0, r_max: 200.0 }
    }
}

/// Golden-section maximization of `objective` on `[lo, hi]` to width 1e-6.
fn golden_max(mut lo: f64, mut hi: f64, objective: impl Fn(f64) -> f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    while hi - lo > 1e-6 {
        let left = hi - INV_PHI * (hi - lo);
        let right = lo + INV_PHI * (hi - lo);
        if objective(left) >= objective(right) {
            hi = right;
        } else {
            lo = left;
        }
    }
    0.5 * (lo + hi)
}

/// Maximizes a per-type profit over the frequency grid, then polishes the
/// best grid point by golden section. `reward_for(f)` yields the reward the
/// type must be paid at frequency `f`, or `None` when no admissible reward
/// exists there.
fn maximize_profit(
    params: &ProviderParams,
    grid: &GridSpec,
    reward_for: impl Fn(f64) -> Option<f64>,
) -> Result<Option<(f64, f64, f64)>> {
    let profit_of = |f: f64| -> f64 {
        match reward_for(f) {
            Some(reward) => {
                let item = ContractItem { update_frequency: f, reward };
                match satisfaction(&item, params) {
                    Ok(s) => params.unit_profit * s - reward,
                    Err(_) => f64::NEG_INFINITY,
                }
            }
            None => f64::NEG_INFINITY,
        }
    };
    let mut best_f = f64::NAN;
    let mut best_profit = f64::NEG_INFINITY;
    for f in grid.frequencies() {
        let profit = profit_of(f);
        if profit > best_profit {
            best_profit = profit;
            best_f = f;
        }
    }
    if !best_profit.is_finite() {
        return Ok(None);
    }
    let lo = (best_f - grid.f_step).max(grid.f_min);
    let hi = (best_f + grid.f_step).min(grid.f_max);
    let polished = golden_max(lo, hi, profit_of);
    let (f_star, profit) = if profit_of(polished) > best_profit {
        (polished, profit_of(polished))
    } else {
        (best_f, best_profit)
    };
    let reward = reward_for(f_star).expect("profit was finite at f_star");
    Ok(Some((f_star, reward, profit)))
}

/// Optimal menu when the provider observes every holder's type: each type's
/// reward binds its individual-rationality constraint (`R = f / delta`) and
/// its frequency maximizes the type's profit independently. Incentive
/// compatibility is not imposed. Returns the menu and its expected utility.
pub fn complete_info_optimum(
    state: &MarketState,
    params: &ProviderParams,
    grid: &GridSpec,
) -> Result<(ContractMenu, f64)> {
    grid.validate()?;
    let mut items = Vec::with_capacity(state.type_count());
    for &delta in state.deltas() {
        let reward_for = |f: f64| {
            let r = (f / delta).max(grid.r_min);
            (r <= grid.r_max).then_some(r)
        };
        let (f_star, reward, _) = maximize_profit(params, grid, reward_for)?.ok_or_else(|| {
            config(format!("no admissible reward for type {delta} within the grid bounds"))
        })?;
        items.push(ContractItem::new(f_star, reward)?);
    }
    let menu = ContractMenu::new(items);
    let utility = provider_expected_utility(&menu, &state.population()?, params)?;
    Ok((menu, utility))
}

/// Greedy menu construction under information asymmetry: types are processed
/// in ascending delta order; each type's frequency maximizes its profit with
/// the reward set to the smallest value that satisfies its IR constraint and
/// pairwise IC against every previously fixed item. The result always passes
/// the feasibility check.
pub fn greedy_menu(
    state: &MarketState,
    params: &ProviderParams,
    grid: &GridSpec,
) -> Result<ContractMenu> {
    grid.validate()?;
    let deltas = state.deltas();
    let mut fixed: Vec<ContractItem> = Vec::with_capacity(deltas.len());
    for (k, &delta) in deltas.iter().enumerate() {
        let reward_for = |f: f64| {
            let mut lower = (f / delta).max(grid.r_min);
            let mut upper = grid.r_max;
            for (i, item) in fixed.iter().enumerate() {
                // This type must not prefer item i ...
                lower = lower.max(item.reward + f / delta - item.update_frequency / delta);
                // ... and type i must not prefer this item.
                let delta_i = deltas[i];
                upper = upper.min(
                    item.reward - item.update_frequency / delta_i + f / delta_i,
                );
            }
            (lower <= upper + 1e-15).then_some(lower)
        };
        let (f_star, reward, _) = maximize_profit(params, grid, reward_for)?.ok_or_else(|| {
            config(format!("greedy construction found no feasible item for type {k}"))
        })?;
        fixed.push(ContractItem::new(f_star, reward)?);
    }
    Ok(ContractMenu::new(fixed))
}

/// Uniform random menu within the action bounds, with no feasibility repair.
pub fn random_menu<R: Rng + ?Sized>(
    state: &MarketState,
    bounds: &ActionBounds,
    rng: &mut R,
) -> Result<ContractMenu> {
    bounds_check(bounds)?;
    let items = (0..state.type_count())
        .map(|_| {
            ContractItem::new(
                rng.random_range(bounds.f_min..=bounds.f_max),
                rng.random_range(bounds.r_min..=bounds.r_max),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ContractMenu::new(items))
}

fn bounds_check(bounds: &ActionBounds) -> Result<()> {
    if bounds.f_min > bounds.f_max || bounds.r_min > bounds.r_max {
        return Err(config("action bounds are reversed"));
    }
    Ok(())
}
