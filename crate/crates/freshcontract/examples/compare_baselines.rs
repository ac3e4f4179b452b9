//! Prices the non-learning schemes against each other on shared markets:
//! the complete-information optimum, the greedy incentive-compatible
//! construction, and uniform random menus.
//!
//! Run: `cargo run --release --example compare_baselines`

use freshcontract::baselines::{complete_info_optimum, greedy_menu, random_menu, GridSpec};
use freshcontract::contract::{provider_expected_utility, PenaltyPolicy};
use freshcontract::freshness::TimingModel;
use freshcontract::market::{env_step, sample_state, ActionBounds, EnvConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> freshcontract::Result<()> {
    let cfg = EnvConfig {
        holder_count: 10,
        delta_ranges: vec![(1.0, 6.0), (13.0, 18.0)],
        max_aoi_range: (30.0, 60.0),
        dirichlet_concentration: vec![1.0, 1.0],
        timing: TimingModel::new(2.0, 1.0, 0.0)?,
        accuracy: 39.9,
        unit_profit: 10.0,
        penalty_floor: -100.0,
        penalty: PenaltyPolicy::default(),
        bounds: ActionBounds { f_min: 0.01, f_max: 1.0, r_min: 0.0, r_max: 2.0 },
        seed: 4242,
    };
    let grid = GridSpec::from_bounds(&cfg.bounds, 1e-3)?;
    let mut state_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut menu_rng = ChaCha8Rng::seed_from_u64(7);

    let n = 200;
    let (mut ci_total, mut greedy_total, mut random_total) = (0.0, 0.0, 0.0);
    for index in 0..n {
        let state = sample_state(&cfg, &mut state_rng)?;
        let params = cfg.provider_params(state.max_aoi())?;
        let pop = state.population()?;

        let (ci_menu, ci_utility) = complete_info_optimum(&state, &params, &grid)?;
        let greedy = greedy_menu(&state, &params, &grid)?;
        let greedy_utility = provider_expected_utility(&greedy, &pop, &params)?;
        let random = random_menu(&state, &cfg.bounds, &mut menu_rng)?;
        let random_reward = env_step(&state, &random, &cfg)?;

        ci_total += ci_utility;
        greedy_total += greedy_utility;
        random_total += random_reward;

        if index < 3 {
            println!(
                "market {index}: complete-info f*=({:.4}, {:.4}) utility {:.2}; \
                 greedy utility {:.2}; random reward {:.2}",
                ci_menu.items[0].update_frequency,
                ci_menu.items[1].update_frequency,
                ci_utility,
                greedy_utility,
                random_reward,
            );
        }
    }
    println!();
    println!("means over {n} markets:");
    println!("  complete-info {:>10.4}", ci_total / n as f64);
    println!("  greedy        {:>10.4}", greedy_total / n as f64);
    println!("  random        {:>10.4}", random_total / n as f64);
    println!();
    println!("Greedy pays each type the information rent its cheaper updates command,");
    println!("so it trails complete information by exactly that rent; random menus");
    println!("almost always violate the incentive constraints and take the penalty.");
    Ok(())
}
