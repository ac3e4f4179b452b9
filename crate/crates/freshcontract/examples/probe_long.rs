use freshcontract::contract::PenaltyPolicy;
use freshcontract::freshness::TimingModel;
use freshcontract::gdm::{infer, train, CriticBootstrap, GdmConfig, TrainConfig};
use freshcontract::market::{sample_state, ActionBounds, EnvConfig, MarketEnv};
use freshcontract::baselines::{complete_info_optimum, GridSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

fn env_cfg(seed: u64) -> EnvConfig {
    EnvConfig {
        holder_count: 10,
        delta_ranges: vec![(1.0, 6.0), (13.0, 18.0)],
        max_aoi_range: (30.0, 60.0),
        dirichlet_concentration: vec![1.0, 1.0],
        timing: TimingModel::new(2.0, 1.0, 0.0).unwrap(),
        accuracy: 39.9,
        unit_profit: 10.0,
        penalty_floor: -100.0,
        penalty: PenaltyPolicy::default(),
        bounds: ActionBounds { f_min: 0.01, f_max: 1.0, r_min: 0.0, r_max: 2.0 },
        seed,
    }
}

fn main() {
    let hidden: usize = std::env::args().nth(1).unwrap().parse().unwrap();
    let episodes: usize = std::env::args().nth(2).unwrap().parse().unwrap();
    let seed: u64 = std::env::args().nth(3).unwrap().parse().unwrap();
    let gdm_cfg = GdmConfig {
        hidden_sizes: vec![hidden, hidden],
        time_embed_dim: 8,
        denoise_steps: 5,
        beta_lo: 1e-4,
        beta_hi: 0.02,
        exploration_noise: 0.01,
        discount: 0.0,
        bootstrap: CriticBootstrap::NextState,
    };
    let train_cfg = TrainConfig {
        episodes,
        steps_per_episode: 25,
        batch_size: 512,
        buffer_capacity: 1_000_000,
        actor_lr: 1e-3,
        critic_lr: 1e-3,
        soft_update: 0.005,
        reward_scale: 0.01,
        warmup_steps: std::env::args().nth(4).map(|v| v.parse().unwrap()).unwrap_or(0),
        eval_every: 50,
        eval_states: 50,
        seed,
    };
    let mut env = MarketEnv::new(env_cfg(seed)).unwrap();
    let mut eval_env = MarketEnv::new(env_cfg(seed ^ 0xe7a1)).unwrap();
    let t0 = Instant::now();
    let (agent, records) = train(&mut env, &mut eval_env, &gdm_cfg, &train_cfg).unwrap();
    let curve: Vec<String> = records.iter().filter_map(|r| r.eval_reward.map(|e| format!("{e:.0}"))).collect();
    let ecfg = env_cfg(4242);
    let grid = GridSpec::from_bounds(&ecfg.bounds, 1e-3).unwrap();
    let mut srng = ChaCha8Rng::seed_from_u64(4242);
    let mut irng = ChaCha8Rng::seed_from_u64(0x4242 ^ 0x1f2e);
    let (mut total, mut ci_total) = (0.0, 0.0);
    let mut mean_menu = [0.0f64; 4];
    for _ in 0..200 {
        let st = sample_state(&ecfg, &mut srng).unwrap();
        let params = ecfg.provider_params(st.max_aoi()).unwrap();
        ci_total += complete_info_optimum(&st, &params, &grid).unwrap().1;
        let menu = infer(&agent, &st, &ecfg, &mut irng).unwrap();
        total += freshcontract::market::env_step(&st, &menu, &ecfg).unwrap();
        mean_menu[0] += menu.items[0].update_frequency;
        mean_menu[1] += menu.items[1].update_frequency;
        mean_menu[2] += menu.items[0].reward;
        mean_menu[3] += menu.items[1].reward;
    }
    for m in &mut mean_menu { *m /= 200.0; }
    println!(
        "hidden {hidden} eps {episodes} seed {seed}: curve [{}] final {:.1} (ci {:.1}) menu mean f=({:.3},{:.3}) R=({:.3},{:.3}) wall {:.0}s",
        curve.join(","), total / 200.0, ci_total / 200.0,
        mean_menu[0], mean_menu[1], mean_menu[2], mean_menu[3],
        t0.elapsed().as_secs_f64()
    );
}
