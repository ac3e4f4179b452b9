//! Contract-theoretic core: holder types, provider utilities, and the
//! individual-rationality / incentive-compatibility feasibility checks that
//! gate the data-sharing reward.
//!
//! A provider publishes a menu of `(update_frequency, reward)` items, one per
//! holder type. A type is characterized by `delta` (the inverse of its
//! per-update cost) and by its population share. The provider's payoff from a
//! served type is `beta * S - R` where `S` is a freshness-driven satisfaction
//! score; the holder's payoff is `R - f / delta`. Feasible menus give every
//! type a non-negative payoff (IR) and make every type prefer its own item
//! over any other (IC).

use serde::{Deserialize, Serialize};

use crate::error::{domain, structure, Result};
use crate::freshness::{average_aoi_real, freshness_quality, TimingModel};

/// Slack tolerance on the `>= 0` constraint checks, so float noise at a
/// boundary cannot flip feasibility.
pub const FEASIBILITY_TOL: f64 = 1e-12;

/// One holder type: inverse update cost and population share.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderType {
    /// Inverse of the per-update cost. Larger delta means cheaper updates.
    pub delta: f64,
    /// Fraction of the holder population that has this type.
    pub probability: f64,
}

impl HolderType {
    pub fn new(delta: f64, probability: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(domain(format!("delta must be positive, got {delta}")));
        }
        if !(0.0..=1.0).contains(&probability) {
            return Err(domain(format!("probability must lie in [0, 1], got {probability}")));
        }
        Ok(Self { delta, probability })
    }
}

/// A population of holders grouped into types, sorted ascending by delta.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderPopulation {
    types: Vec<HolderType>,
    holder_count: usize,
}

impl HolderPopulation {
    /// Builds a population, sorting types ascending by delta and requiring
    /// the probabilities to sum to one.
    pub fn new(mut types: Vec<HolderType>, holder_count: usize) -> Result<Self> {
        if types.is_empty() {
            return Err(domain("population needs at least one type"));
        }
        if holder_count == 0 {
            return Err(domain("holder count must be positive"));
        }
        for ty in &types {
            HolderType::new(ty.delta, ty.probability)?;
        }
        let total: f64 = types.iter().map(|ty| ty.probability).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(domain(format!("type probabilities must sum to 1, got {total}")));
        }
        types.sort_by(|a, b| a.delta.total_cmp(&b.delta));
        Ok(Self { types, holder_count })
    }

    pub fn types(&self) -> &[HolderType] {
        &self.types
    }

    pub fn type_count(&self) -> usize {
        self.types.len()
    }

    pub fn holder_count(&self) -> usize {
        self.holder_count
    }
}

/// One contract item: requested update frequency and the reward paid for it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContractItem {
    /// Updates per time slot, in [0, 1]. A positive frequency `f` implies an
    /// update cycle of `1/f >= 1` slots.
    pub update_frequency: f64,
    /// Reward in monetary units, non-negative.
    pub reward: f64,
}

impl ContractItem {
    pub fn new(update_frequency: f64, reward: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&update_frequency) {
            return Err(domain(format!(
                "update frequency must lie in [0, 1], got {update_frequency}"
            )));
        }
        if !(reward >= 0.0 && reward.is_finite()) {
            return Err(domain(format!("reward must be non-negative, got {reward}")));
        }
        Ok(Self { update_frequency, reward })
    }
}

/// A full contract menu: item `k` is intended for type `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractMenu {
    pub items: Vec<ContractItem>,
}

impl ContractMenu {
    pub fn new(items: Vec<ContractItem>) -> Self {
        Self { items }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

/// Provider-side constants for the satisfaction and utility computations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProviderParams {
    /// Zero-shot accuracy score of the served model, positive.
    pub accuracy: f64,
    /// Monetary profit per satisfaction unit, positive.
    pub unit_profit: f64,
    /// Maximum permissible average age of information, in seconds.
    pub max_aoi: f64,
    /// Penalty floor for infeasible menus, non-positive.
    pub penalty: f64,
    pub timing: TimingModel,
}

impl ProviderParams {
    pub fn new(
        accuracy: f64,
        unit_profit: f64,
        max_aoi: f64,
        penalty: f64,
        timing: TimingModel,
    ) -> Result<Self> {
        if !(accuracy > 0.0 && accuracy.is_finite()) {
            return Err(domain(format!("accuracy must be positive, got {accuracy}")));
        }
        if !(unit_profit > 0.0 && unit_profit.is_finite()) {
            return Err(domain(format!("unit profit must be positive, got {unit_profit}")));
        }
        if !(max_aoi > 0.0 && max_aoi.is_finite()) {
            return Err(domain(format!("max_aoi must be positive, got {max_aoi}")));
        }
        if !(penalty <= 0.0 && penalty.is_finite()) {
            return Err(domain(format!("penalty must be non-positive, got {penalty}")));
        }
        timing.validate()?;
        Ok(Self { accuracy, unit_profit, max_aoi, penalty, timing })
    }
}

/// How infeasible menus are priced in the learning reward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum PenaltyPolicy {
    /// Return the constant penalty floor from [`ProviderParams::penalty`].
    Constant,
    /// Return `-scale * total_violation`, clipped below at the penalty floor.
    Graded { scale: f64 },
}

impl Default for PenaltyPolicy {
    fn default() -> Self {
        PenaltyPolicy::Graded { scale: 100.0 }
    }
}

/// Utility of a holder of the given type accepting the given item:
/// `R - f / delta`.
pub fn holder_utility(item: &ContractItem, holder: &HolderType) -> f64 {
    item.reward - item.update_frequency / holder.delta
}

/// Provider satisfaction from a served item: `accuracy * ln(G + 1)` where `G`
/// is the freshness quality of the average age at cycle length `1/f`.
pub fn satisfaction(item: &ContractItem, params: &ProviderParams) -> Result<f64> {
    if item.update_frequency <= 0.0 {
        return Err(domain(
            "update frequency must be positive: a zero frequency means an \
             infinite cycle with undefined age",
        ));
    }
    let theta = 1.0 / item.update_frequency;
    let aoi = average_aoi_real(&params.timing, theta)?;
    let quality = freshness_quality(aoi, params.max_aoi)?;
    Ok(params.accuracy * (quality + 1.0).ln())
}

fn check_menu_len(menu: &ContractMenu, pop: &HolderPopulation) -> Result<()> {
    if menu.len() != pop.type_count() {
        return Err(structure(format!(
            "menu has {} items but the population has {} types",
            menu.len(),
            pop.type_count()
        )));
    }
    Ok(())
}

/// Expected provider utility given precomputed satisfaction scores:
/// `sum_k Q_k * (beta * S_k - R_k)`.
pub fn expected_utility_with(
    satisfactions: &[f64],
    menu: &ContractMenu,
    pop: &HolderPopulation,
    unit_profit: f64,
) -> Result<f64> {
    check_menu_len(menu, pop)?;
    if satisfactions.len() != menu.len() {
        return Err(structure(format!(
            "expected {} satisfaction scores, got {}",
            menu.len(),
            satisfactions.len()
        )));
    }
    Ok(menu
        .items
        .iter()
        .zip(pop.types())
        .zip(satisfactions)
        .map(|((item, ty), s)| ty.probability * (unit_profit * s - item.reward))
        .sum())
}

/// Expected provider utility of a menu over the type distribution.
pub fn provider_expected_utility(
    menu: &ContractMenu,
    pop: &HolderPopulation,
    params: &ProviderParams,
) -> Result<f64> {
    check_menu_len(menu, pop)?;
    let satisfactions = menu
        .items
        .iter()
        .map(|item| satisfaction(item, params))
        .collect::<Result<Vec<_>>>()?;
    expected_utility_with(&satisfactions, menu, pop, params.unit_profit)
}

/// Individual rationality per type: entry `k` is true iff type `k` gets a
/// non-negative utility from its own item.
pub fn check_ir(menu: &ContractMenu, pop: &HolderPopulation) -> Result<Vec<bool>> {
    check_menu_len(menu, pop)?;
    Ok(menu
        .items
        .iter()
        .zip(pop.types())
        .map(|(item, ty)| holder_utility(item, ty) >= -FEASIBILITY_TOL)
        .collect())
}

/// Incentive compatibility for every ordered type pair: entry `(k, i)` is
/// true iff type `k` weakly prefers item `k` over item `i`. Diagonal entries
/// are true by convention.
pub fn check_ic(menu: &ContractMenu, pop: &HolderPopulation) -> Result<Vec<Vec<bool>>> {
    check_menu_len(menu, pop)?;
    let k_count = menu.len();
    let mut matrix = vec![vec![true; k_count]; k_count];
    for (k, ty) in pop.types().iter().enumerate() {
        let own = holder_utility(&menu.items[k], ty);
        for (i, row) in matrix[k].iter_mut().enumerate() {
            if i == k {
                continue;
            }
            let other = holder_utility(&menu.items[i], ty);
            *row = own >= other - FEASIBILITY_TOL;
        }
    }
    Ok(matrix)
}

/// True iff the menu satisfies IR, IC, and the sign constraints on `f`, `R`.
pub fn is_feasible(menu: &ContractMenu, pop: &HolderPopulation) -> Result<bool> {
    let signs_ok = menu
        .items
        .iter()
        .all(|item| item.update_frequency >= 0.0 && item.reward >= 0.0);
    let ir_ok = check_ir(menu, pop)?.into_iter().all(|ok| ok);
    let ic_ok = check_ic(menu, pop)?.into_iter().flatten().all(|ok| ok);
    Ok(signs_ok && ir_ok && ic_ok)
}

/// Sum of all constraint violations of the menu: IR shortfalls, IC
/// shortfalls, and negative-sign excesses. Zero iff feasible (up to the
/// boundary tolerance).
pub fn constraint_violation(menu: &ContractMenu, pop: &HolderPopulation) -> Result<f64> {
    check_menu_len(menu, pop)?;
    let mut total = 0.0;
    for (k, ty) in pop.types().iter().enumerate() {
        let own = holder_utility(&menu.items[k], ty);
        total += (-own).max(0.0);
        for (i, item) in menu.items.iter().enumerate() {
            if i == k {
                continue;
            }
            let other = holder_utility(item, ty);
            total += (other - own).max(0.0);
        }
    }
    for item in &menu.items {
        total += (-item.update_frequency).max(0.0);
        total += (-item.reward).max(0.0);
    }
    Ok(total)
}

/// Immediate learning reward of a menu: the expected provider utility when
/// the menu is feasible, otherwise the penalty chosen by `policy`.
pub fn mdp_reward(
    menu: &ContractMenu,
    pop: &HolderPopulation,
    params: &ProviderParams,
    policy: &PenaltyPolicy,
) -> Result<f64> {
    if is_feasible(menu, pop)? {
        return provider_expected_utility(menu, pop, params);
    }
    match policy {
        PenaltyPolicy::Constant => Ok(params.penalty),
        PenaltyPolicy::Graded { scale } => {
            let violation = constraint_violation(menu, pop)?;
            Ok((-scale * violation).max(params.penalty))
        }
    }
}
