//! Samples random market states, encodes them for networks, and decodes raw
//! actions back into contract menus: the environment surface every solver
//! shares.
//!
//! Run: `cargo run --release --example market_sampling`

use freshcontract::contract::PenaltyPolicy;
use freshcontract::freshness::TimingModel;
use freshcontract::market::{
    decode_action, encode_state, env_step, sample_state, ActionBounds, EnvConfig,
};
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
        seed: 7,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    for index in 0..3 {
        let state = sample_state(&cfg, &mut rng)?;
        println!(
            "state {index}: max_aoi {:.2}, deltas {:?}, probabilities {:?}",
            state.max_aoi(),
            state.deltas(),
            state.probabilities(),
        );
        let encoded = encode_state(&state, &cfg)?;
        println!("  encoded: {encoded:.3?}");

        // A mid-range raw action and a deliberately lopsided one.
        for raw in [vec![0.2, -0.8, 0.2, -0.8], vec![0.9, 0.9, -0.9, -0.9]] {
            let menu = decode_action(&raw, &cfg)?;
            let reward = env_step(&state, &menu, &cfg)?;
            let items: Vec<String> = menu
                .items
                .iter()
                .map(|i| format!("(f={:.3}, R={:.3})", i.update_frequency, i.reward))
                .collect();
            println!("  raw {raw:?} -> {} reward {reward:.2}", items.join(" "));
        }
        println!();
    }
    Ok(())
}
