//! Verifies analytic network gradients against central finite differences,
//! both for a plain dense network and through the full denoising chain of
//! the diffusion policy.
//!
//! Run: `cargo run --release --example gradient_check`

use freshcontract::gdm::{build_schedule, denoise_chain_backward, run_denoise_chain};
use freshcontract::nn::{flat_grad, perturb_param, Activation, DenseNet, NetGrads};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> freshcontract::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(42);

    // Plain network: d(upstream . output)/d(params).
    let net = DenseNet::new(&[4, 24, 16, 3], Activation::Silu, Activation::Identity, &mut rng)?;
    let input: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
    let upstream = [0.7, -1.3, 0.4];
    let (grads, _) = net.backward(&input, &upstream)?;
    let flat = flat_grad(&grads);
    let loss = |candidate: &DenseNet| -> f64 {
        candidate.forward(&input).unwrap().iter().zip(&upstream).map(|(o, u)| o * u).sum()
    };
    let mut worst: f64 = 0.0;
    for idx in (0..net.param_count()).step_by(7) {
        let step = 1e-5;
        let mut plus = net.clone();
        perturb_param(&mut plus, idx, step);
        let mut minus = net.clone();
        perturb_param(&mut minus, idx, -step);
        let numeric = (loss(&plus) - loss(&minus)) / (2.0 * step);
        let denom = flat[idx].abs().max(numeric.abs()).max(1e-6);
        worst = worst.max((flat[idx] - numeric).abs() / denom);
    }
    println!("dense net: worst relative gap vs finite differences {worst:.3e}");

    // Denoising chain: gradients flow through every step of the sampler.
    let schedule = build_schedule(5, 1e-4, 0.02)?;
    let chain_net =
        DenseNet::new(&[2 + 3 + 4, 16, 2], Activation::Silu, Activation::Identity, &mut rng)?;
    let state = [0.3, 0.6, 0.9];
    let initial = [0.5, -0.7];
    let mut grads = NetGrads::zeros_like(&chain_net);
    denoise_chain_backward(
        &chain_net,
        &schedule,
        4,
        &initial,
        &state,
        &mut ChaCha8Rng::seed_from_u64(9),
        &[1.0, 1.0],
        &mut grads,
    )?;
    let flat = flat_grad(&grads);
    let objective = |candidate: &DenseNet| -> f64 {
        run_denoise_chain(
            candidate,
            &schedule,
            4,
            &initial,
            &state,
            &mut ChaCha8Rng::seed_from_u64(9),
        )
        .unwrap()
        .iter()
        .map(|a| a.tanh())
        .sum()
    };
    let mut worst: f64 = 0.0;
    for idx in (0..chain_net.param_count()).step_by(5) {
        let step = 1e-5;
        let mut plus = chain_net.clone();
        perturb_param(&mut plus, idx, step);
        let mut minus = chain_net.clone();
        perturb_param(&mut minus, idx, -step);
        let numeric = (objective(&plus) - objective(&minus)) / (2.0 * step);
        let denom = flat[idx].abs().max(numeric.abs()).max(1e-6);
        worst = worst.max((flat[idx] - numeric).abs() / denom);
    }
    println!("denoising chain: worst relative gap vs finite differences {worst:.3e}");
    Ok(())
}
