//! Trains the clipped-surrogate actor-critic baseline on the same market
//! environment used by the diffusion solver.
//!
//! Run: `cargo run --release --example train_ppo`

use freshcontract::contract::PenaltyPolicy;
use freshcontract::freshness::TimingModel;
use freshcontract::market::{ActionBounds, EnvConfig, MarketEnv};
use freshcontract::ppo::{evaluate_ppo, train_ppo, PpoConfig};

fn env_config(seed: u64) -> freshcontract::Result<EnvConfig> {
    Ok(EnvConfig {
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
        seed,
    })
}

fn main() -> freshcontract::Result<()> {
    let cfg = PpoConfig {
        hidden_sizes: vec![64, 64],
        iterations: 40,
        rollout_len: 1024,
        minibatch_size: 256,
        epochs: 10,
        learning_rate: 3e-4,
        reward_scale: 0.01,
        eval_every: 5,
        eval_states: 50,
        seed: 11,
        ..PpoConfig::default()
    };
    let mut env = MarketEnv::new(env_config(1)?)?;
    let mut eval_env = MarketEnv::new(env_config(2)?)?;
    println!("training PPO ({} environment steps)...", cfg.iterations * cfg.rollout_len);
    let (agent, records) = train_ppo(&mut env, &mut eval_env, &cfg)?;
    for record in &records {
        if let Some(eval) = record.eval_reward {
            println!(
                "iteration {:>3}  train reward {:>9.2}  eval reward {:>9.2}",
                record.episode, record.train_reward, eval
            );
        }
    }
    let final_eval = evaluate_ppo(&agent, &mut eval_env, 200, 777)?;
    println!("\nfinal deterministic evaluation over 200 fresh markets: {final_eval:.2}");
    Ok(())
}
