//! Builds a two-type holder population and prices contract menus: holder
//! utilities, individual-rationality and incentive-compatibility checks, and
//! the penalized learning reward for feasible and infeasible menus.
//!
//! Run: `cargo run --release --example contract_menu`

use freshcontract::contract::{
    check_ic, check_ir, holder_utility, is_feasible, mdp_reward, provider_expected_utility,
    ContractItem, ContractMenu, HolderPopulation, HolderType, PenaltyPolicy, ProviderParams,
};
use freshcontract::freshness::TimingModel;

fn inspect(name: &str, menu: &ContractMenu, pop: &HolderPopulation, params: &ProviderParams) {
    println!("menu {name}:");
    for (item, ty) in menu.items.iter().zip(pop.types()) {
        println!(
            "  type delta={:<4} f={:.2} R={:.2}  holder utility {:+.4}",
            ty.delta,
            item.update_frequency,
            item.reward,
            holder_utility(item, ty),
        );
    }
    println!("  IR: {:?}", check_ir(menu, pop).unwrap());
    println!("  IC: {:?}", check_ic(menu, pop).unwrap());
    println!("  feasible: {}", is_feasible(menu, pop).unwrap());
    if let Ok(utility) = provider_expected_utility(menu, pop, params) {
        println!("  provider expected utility: {utility:.4}");
    }
    let reward = mdp_reward(menu, pop, params, &PenaltyPolicy::Graded { scale: 100.0 }).unwrap();
    println!("  learning reward (graded penalty): {reward:.4}");
    println!();
}

fn main() -> freshcontract::Result<()> {
    let pop = HolderPopulation::new(
        vec![HolderType::new(2.0, 0.5)?, HolderType::new(4.0, 0.5)?],
        10,
    )?;
    let params =
        ProviderParams::new(39.9, 10.0, 40.0, -100.0, TimingModel::new(2.0, 1.0, 0.0)?)?;

    // Feasible: rewards track the cost difference between the items.
    let good = ContractMenu::new(vec![
        ContractItem::new(0.4, 0.2)?,
        ContractItem::new(0.8, 0.3)?,
    ]);
    inspect("aligned", &good, &pop, &params);

    // Infeasible: the cheap-update type is offered less for more work.
    let bad = ContractMenu::new(vec![
        ContractItem::new(0.8, 0.4)?,
        ContractItem::new(0.4, 0.1)?,
    ]);
    inspect("misaligned", &bad, &pop, &params);
    Ok(())
}
