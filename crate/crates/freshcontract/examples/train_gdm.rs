//! Trains the diffusion contract designer on the randomized market at a
//! minute scale and prints the learning curve plus a few inferred menus.
//!
//! Run: `cargo run --release --example train_gdm`

use freshcontract::contract::{is_feasible, PenaltyPolicy};
use freshcontract::freshness::TimingModel;
use freshcontract::gdm::{evaluate, infer, train, CriticBootstrap, GdmConfig, TrainConfig};
use freshcontract::market::{sample_state, ActionBounds, EnvConfig, MarketEnv};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

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
    let gdm_cfg = GdmConfig {
        hidden_sizes: vec![64, 64],
        time_embed_dim: 8,
        denoise_steps: 5,
        beta_lo: 1e-4,
        beta_hi: 0.02,
        exploration_noise: 0.01,
        discount: 0.0,
        bootstrap: CriticBootstrap::NextState,
    };
    let train_cfg = TrainConfig {
        episodes: 40,
        steps_per_episode: 25,
        batch_size: 128,
        buffer_capacity: 100_000,
        actor_lr: 1e-3,
        critic_lr: 1e-3,
        soft_update: 0.005,
        reward_scale: 0.01,
        warmup_steps: 0,
        eval_every: 5,
        eval_states: 50,
        seed: 11,
    };
    let mut env = MarketEnv::new(env_config(1)?)?;
    let mut eval_env = MarketEnv::new(env_config(2)?)?;
    println!("training the diffusion policy ({} updates)...", 40 * 25);
    let (agent, records) = train(&mut env, &mut eval_env, &gdm_cfg, &train_cfg)?;
    for record in &records {
        if let Some(eval) = record.eval_reward {
            println!(
                "episode {:>3}  train reward {:>9.2}  eval reward {:>9.2}",
                record.episode, record.train_reward, eval
            );
        }
    }

    let final_eval = evaluate(&agent, &mut eval_env, 200, 777)?;
    println!("\nfinal deterministic evaluation over 200 fresh markets: {final_eval:.2}");

    println!("\ninferred menus on sample markets:");
    let cfg = env_config(4242)?;
    let mut state_rng = ChaCha8Rng::seed_from_u64(4242);
    let mut infer_rng = ChaCha8Rng::seed_from_u64(555);
    for index in 0..4 {
        let state = sample_state(&cfg, &mut state_rng)?;
        let menu = infer(&agent, &state, &cfg, &mut infer_rng)?;
        let feasible = is_feasible(&menu, &state.population()?)?;
        println!(
            "  market {index}: deltas ({:>5.2}, {:>5.2})  menu f=({:.3}, {:.3}) R=({:.3}, {:.3})  feasible {feasible}",
            state.deltas()[0],
            state.deltas()[1],
            menu.items[0].update_frequency,
            menu.items[1].update_frequency,
            menu.items[0].reward,
            menu.items[1].reward,
        );
    }
    Ok(())
}
