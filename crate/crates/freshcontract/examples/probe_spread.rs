use freshcontract::contract::{is_feasible, PenaltyPolicy};
use freshcontract::experiment::{config_fingerprint, load_gdm_checkpoint};
use freshcontract::freshness::TimingModel;
use freshcontract::gdm::infer;
use freshcontract::market::{sample_state, ActionBounds, EnvConfig};
use freshcontract::baselines::{complete_info_optimum, GridSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let path = std::env::args().nth(1).unwrap();
    let cfg = EnvConfig {
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
        seed: 0,
    };
    let agent = load_gdm_checkpoint(std::path::Path::new(&path), &config_fingerprint(&cfg)).unwrap();
    let grid = GridSpec::from_bounds(&cfg.bounds, 1e-3).unwrap();
    let mut srng = ChaCha8Rng::seed_from_u64(4242);
    let mut irng = ChaCha8Rng::seed_from_u64(99);
    // Per-state action spread over repeated inference + regret vs complete info.
    let mut mean_std = [0.0f64; 4];
    let mut mean_regret = 0.0;
    let n_states = 20;
    for _ in 0..n_states {
        let st = sample_state(&cfg, &mut srng).unwrap();
        let params = cfg.provider_params(st.max_aoi()).unwrap();
        let (_, ci) = complete_info_optimum(&st, &params, &grid).unwrap();
        let mut samples: Vec<[f64; 4]> = Vec::new();
        let mut mean_reward = 0.0;
        for _ in 0..50 {
            let menu = infer(&agent, &st, &cfg, &mut irng).unwrap();
            samples.push([
                menu.items[0].update_frequency,
                menu.items[1].update_frequency,
                menu.items[0].reward,
                menu.items[1].reward,
            ]);
            mean_reward += freshcontract::market::env_step(&st, &menu, &cfg).unwrap();
            let _ = is_feasible(&menu, &st.population().unwrap());
        }
        mean_reward /= 50.0;
        mean_regret += ci - mean_reward;
        for c in 0..4 {
            let m: f64 = samples.iter().map(|s| s[c]).sum::<f64>() / 50.0;
            let v: f64 = samples.iter().map(|s| (s[c] - m) * (s[c] - m)).sum::<f64>() / 50.0;
            mean_std[c] += v.sqrt();
        }
    }
    for s in &mut mean_std { *s /= n_states as f64; }
    println!(
        "action std per coord (f1,f2,R1,R2): ({:.4}, {:.4}, {:.4}, {:.4}); mean regret vs CI {:.2}",
        mean_std[0], mean_std[1], mean_std[2], mean_std[3], mean_regret / n_states as f64
    );
}
