//! Noise schedule of the denoising chain.

use serde::{Deserialize, Serialize};

use crate::error::{config, Result};

/// Per-step noise levels of a denoising chain of `T` steps.
///
/// `noise[t]` is the variance added at step `t` (the paper's per-step noise
/// level), `chi[t] = 1 - noise[t]`, and `chi_bar[t]` is the running product
/// of `chi` up to and including `t`. Indices here are zero-based; the chain
/// math uses one-based step numbers via the accessors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffusionSchedule {
    noise: Vec<f64>,
    chi: Vec<f64>,
    chi_bar: Vec<f64>,
}

/// Builds a schedule with `steps` noise levels linearly spaced from `beta_lo`
/// to `beta_hi`.
pub fn build_schedule(steps: usize, beta_lo: f64, beta_hi: f64) -> Result<DiffusionSchedule> {
    if steps < 1 {
        return Err(config("a schedule needs at least one step"));
    }
    if !(0.0 < beta_lo && beta_lo <= beta_hi && beta_hi < 1.0) {
        return Err(config(format!(
            "noise bounds must satisfy 0 < lo <= hi < 1, got [{beta_lo}, {beta_hi}]"
        )));
    }
    let noise: Vec<f64> = if steps == 1 {
        vec![beta_lo]
    } else {
        (0..steps)
            .map(|i| beta_lo + (beta_hi - beta_lo) * i as f64 / (steps - 1) as f64)
            .collect()
    };
    let chi: Vec<f64> = noise.iter().map(|d| 1.0 - d).collect();
    let mut chi_bar = Vec::with_capacity(steps);
    let mut product = 1.0;
    for &c in &chi {
        product *= c;
        chi_bar.push(product);
    }
    Ok(DiffusionSchedule { noise, chi, chi_bar })
}

impl DiffusionSchedule {
    pub fn steps(&self) -> usize {
        self.noise.len()
    }

    /// Noise level at one-based step `t`.
    pub fn noise(&self, t: usize) -> f64 {
        self.noise[t - 1]
    }

    /// `1 - noise` at one-based step `t`.
    pub fn chi(&self, t: usize) -> f64 {
        self.chi[t - 1]
    }

    /// Running product of `chi` through one-based step `t`.
    pub fn chi_bar(&self, t: usize) -> f64 {
        self.chi_bar[t - 1]
    }

    pub fn validate(&self) -> Result<()> {
        if self.noise.is_empty()
            || self.noise.len() != self.chi.len()
            || self.noise.len() != self.chi_bar.len()
        {
            return Err(config("schedule vectors are empty or disagree in length"));
        }
        let mut product = 1.0;
        let mut prev_bar = 1.0;
        for t in 1..=self.steps() {
            let d = self.noise(t);
            if !(0.0 < d && d < 1.0) {
                return Err(config(format!("noise level {d} at step {t} outside (0, 1)")));
            }
            if (self.chi(t) - (1.0 - d)).abs() > 1e-15 {
                return Err(config(format!("chi at step {t} is not 1 - noise")));
            }
            product *= self.chi(t);
            if (self.chi_bar(t) - product).abs() > 1e-12 {
                return Err(config(format!("chi_bar at step {t} is not the running product")));
            }
            if self.chi_bar(t) >= prev_bar {
                return Err(config("chi_bar must be strictly decreasing"));
            }
            prev_bar = self.chi_bar(t);
        }
        Ok(())
    }
}
