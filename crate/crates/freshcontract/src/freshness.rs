//! Time-slotted age-of-information model.
//!
//! A data holder refreshes its record once per update cycle of `theta` time
//! slots, where one slot covers a transmission plus a consensus round.
//! Requests land uniformly across the slots of a cycle, so the average age of
//! the data at request time has the closed form `t * (1/theta + theta/2 + 1/2)`.
//! [`aoi_slot_oracle`] recomputes the same quantity by enumerating every slot
//! and is kept as an independent cross-check of the closed form.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Timing constants that fix the length of one time slot.
///
/// A slot is one data transmission plus one consensus round:
/// `slot_length = data_size / transmission_rate + consensus_time`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingModel {
    /// Payload size in bytes.
    pub data_size: f64,
    /// Transmission rate in bytes per second.
    pub transmission_rate: f64,
    /// Time to complete one consensus round, in seconds.
    pub consensus_time: f64,
}

impl TimingModel {
    pub fn new(data_size: f64, transmission_rate: f64, consensus_time: f64) -> Result<Self> {
        if !(data_size > 0.0 && data_size.is_finite()) {
            return Err(domain(format!("data_size must be positive, got {data_size}")));
        }
        if !(transmission_rate > 0.0 && transmission_rate.is_finite()) {
            return Err(domain(format!(
                "transmission_rate must be positive, got {transmission_rate}"
            )));
        }
        if !(consensus_time >= 0.0 && consensus_time.is_finite()) {
            return Err(domain(format!(
                "consensus_time must be non-negative, got {consensus_time}"
            )));
        }
        Ok(Self { data_size, transmission_rate, consensus_time })
    }

    /// Slot length in seconds, always recomputed from its parts.
    pub fn slot_length(&self) -> f64 {
        self.data_size / self.transmission_rate + self.consensus_time
    }

    pub fn validate(&self) -> Result<()> {
        Self::new(self.data_size, self.transmission_rate, self.consensus_time).map(|_| ())
    }
}

/// Average age of information over one update cycle of `cycle_slots` slots.
///
/// Evaluates `t * (1/theta + theta/2 + 1/2)` at the integer slot count.
pub fn average_aoi(timing: &TimingModel, cycle_slots: u32) -> Result<f64> {
    if cycle_slots < 1 {
        return Err(domain("cycle length must be at least one slot"));
    }
    average_aoi_real(timing, f64::from(cycle_slots))
}

/// Average AoI at a real-valued cycle length `theta >= 1`.
///
/// The continuous relaxation lets the contract layer evaluate the age at
/// `theta = 1/f` for a real-valued update frequency `f`.
pub fn average_aoi_real(timing: &TimingModel, theta: f64) -> Result<f64> {
    if !(theta >= 1.0 && theta.is_finite()) {
        return Err(domain(format!("cycle length must be >= 1, got {theta}")));
    }
    let t = timing.slot_length();
    Ok(t * (1.0 / theta + theta / 2.0 + 0.5))
}

/// Slot-enumeration oracle for [`average_aoi`].
///
/// Walks every slot of the cycle: requests in the first or last slot see an
/// age of `2t`, a request in slot `i` (for `i` in `2..theta-1`) sees `(i+1)t`.
/// Returns the uniform average over all slots.
pub fn aoi_slot_oracle(timing: &TimingModel, cycle_slots: u32) -> Result<f64> {
    if cycle_slots < 1 {
        return Err(domain("cycle length must be at least one slot"));
    }
    let t = timing.slot_length();
    let theta = cycle_slots as u64;
    if theta == 1 {
        return Ok(2.0 * t);
    }
    let mut total = 2.0 * (2.0 * t);
    for i in 2..theta {
        total += (i as f64 + 1.0) * t;
    }
    Ok(total / theta as f64)
}

/// Freshness quality of data with average age `aoi` against the permissible
/// maximum `max_aoi`: the ratio `max_aoi / aoi`.
pub fn freshness_quality(aoi: f64, max_aoi: f64) -> Result<f64> {
    if !(aoi > 0.0 && aoi.is_finite()) {
        return Err(domain(format!("aoi must be positive, got {aoi}")));
    }
    if !(max_aoi > 0.0 && max_aoi.is_finite()) {
        return Err(domain(format!("max_aoi must be positive, got {max_aoi}")));
    }
    Ok(max_aoi / aoi)
}
