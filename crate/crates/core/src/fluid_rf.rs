//! Deterministic fluid model of the relay buffer when the downlink is RF.
//!
//! With an RF downlink the relay can receive on the laser uplink and transmit
//! on RF at the same time, so the buffer is modeled as a constant inflow
//! `β = (1−ρ_SS)·C_SS` and outflow `φ = (1−ρ_SG)·C_SG^r`, both in bits per
//! observation step (one step is one second).

use serde::{Deserialize, Serialize};

use crate::error::{check_non_negative, check_positive, Error, Result};
use crate::markov_chain::PerfTriple;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluidParams {
    pub beta_bits_per_step: f64,
    pub phi_bits_per_step: f64,
    /// Buffer size `L_b` in bits.
    pub buffer_bits: f64,
    /// Observation horizon `O_t` in steps.
    pub horizon_steps: u32,
}

impl FluidParams {
    /// Builds the rates from link capacities and outage probabilities.
    pub fn from_links(
        rho_ss: f64,
        cap_ss_bps: f64,
        rho_sg: f64,
        cap_sg_rf_bps: f64,
        buffer_bits: f64,
        horizon_steps: u32,
    ) -> Self {
        Self {
            beta_bits_per_step: (1.0 - rho_ss) * cap_ss_bps,
            phi_bits_per_step: (1.0 - rho_sg) * cap_sg_rf_bps,
            buffer_bits,
            horizon_steps,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_non_negative("beta_bits_per_step", self.beta_bits_per_step)?;
        check_non_negative("phi_bits_per_step", self.phi_bits_per_step)?;
        check_positive("buffer_bits", self.buffer_bits)?;
        if self.horizon_steps == 0 {
            return Err(Error::invalid("horizon_steps", "must be >= 1"));
        }
        Ok(())
    }

    fn growth(&self) -> Option<f64> {
        let d = self.beta_bits_per_step - self.phi_bits_per_step;
        (d > 0.0).then_some(d)
    }
}

/// Mean buffer level over the `O_t + 1` points `0..=O_t`.
pub fn fluid_avg_queue_bits(p: &FluidParams) -> Result<f64> {
    p.validate()?;
    let Some(growth) = p.growth() else {
        return Ok(0.0);
    };
    let total: f64 = (0..=p.horizon_steps)
        .map(|i| p.buffer_bits.min(f64::from(i) * growth))
        .sum();
    Ok(total / f64::from(p.horizon_steps + 1))
}

/// Free buffer space after `z` steps.
pub fn remaining_space(p: &FluidParams, z: u32) -> Result<f64> {
    p.validate()?;
    if z > p.horizon_steps {
        return Err(Error::invalid(
            "z",
            format!("{z} is outside 0..={}", p.horizon_steps),
        ));
    }
    Ok(match p.growth() {
        Some(growth) => p.buffer_bits - p.buffer_bits.min(f64::from(z) * growth),
        None => p.buffer_bits,
    })
}

/// One minus the mean per-step acceptance ratio `min(1, (S_e + φ)/β)` over
/// steps `1..=O_t`, where `S_e` is the free space at the previous step.
pub fn fluid_drop_prob(p: &FluidParams) -> Result<f64> {
    p.validate()?;
    if p.beta_bits_per_step == 0.0 {
        return Ok(0.0);
    }
    let mut accepted = 0.0;
    for i in 1..=p.horizon_steps {
        let space = remaining_space(p, i - 1)?;
        accepted += ((space + p.phi_bits_per_step) / p.beta_bits_per_step).min(1.0);
    }
    Ok((1.0 - accepted / f64::from(p.horizon_steps)).clamp(0.0, 1.0))
}

/// `min((1 − P_drop)·β, φ)`.
pub fn fluid_throughput_bps(p: &FluidParams) -> Result<f64> {
    let drop = fluid_drop_prob(p)?;
    Ok(((1.0 - drop) * p.beta_bits_per_step).min(p.phi_bits_per_step))
}

pub fn fluid_metrics(p: &FluidParams) -> Result<PerfTriple> {
    Ok(PerfTriple {
        throughput_bps: fluid_throughput_bps(p)?,
        avg_queue_bits: fluid_avg_queue_bits(p)?,
        drop_prob: fluid_drop_prob(p)?,
    })
}
