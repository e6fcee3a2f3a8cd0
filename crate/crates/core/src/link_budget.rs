//! Shannon capacity of the individual links.
//!
//! Every link carries a bandwidth and either a direct linear SNR or a
//! textbook free-space budget from which the SNR is derived:
//!
//! ```text
//! SNR  = P_tx · G_tx · G_rx / (FSPL · k_B · T · W)
//! FSPL = (4π d / λ)²
//! C    = W · log2(1 + SNR)
//! ```
//!
//! Gains are given in dBi and converted to linear before use; everything else
//! is in SI units.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{check_non_negative, check_positive, Error, Result};

/// Boltzmann constant [J/K].
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Speed of light in vacuum [m/s].
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Carrier {
    /// Optical links are usually specified by wavelength [m].
    WavelengthM(f64),
    /// RF links by carrier frequency [Hz].
    FrequencyHz(f64),
}

impl Carrier {
    pub fn wavelength_m(&self) -> f64 {
        match *self {
            Carrier::WavelengthM(l) => l,
            Carrier::FrequencyHz(f) => SPEED_OF_LIGHT / f,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreeSpaceBudget {
    pub tx_power_w: f64,
    pub tx_gain_dbi: f64,
    pub rx_gain_dbi: f64,
    pub carrier: Carrier,
    pub distance_m: f64,
    pub noise_temperature_k: f64,
}

/// How the SNR of a link is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalModel {
    SnrLinear(f64),
    FreeSpace(FreeSpaceBudget),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkPhysical {
    pub bandwidth_hz: f64,
    pub signal: SignalModel,
}

impl LinkPhysical {
    pub fn with_snr(bandwidth_hz: f64, snr_linear: f64) -> Self {
        Self {
            bandwidth_hz,
            signal: SignalModel::SnrLinear(snr_linear),
        }
    }

    pub fn with_budget(bandwidth_hz: f64, budget: FreeSpaceBudget) -> Self {
        Self {
            bandwidth_hz,
            signal: SignalModel::FreeSpace(budget),
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_positive("bandwidth_hz", self.bandwidth_hz)?;
        match &self.signal {
            SignalModel::SnrLinear(snr) => check_non_negative("snr_linear", *snr),
            SignalModel::FreeSpace(b) => {
                check_positive("tx_power_w", b.tx_power_w)?;
                check_positive("distance_m", b.distance_m)?;
                check_positive("noise_temperature_k", b.noise_temperature_k)?;
                match b.carrier {
                    Carrier::WavelengthM(l) => check_positive("wavelength_m", l)?,
                    Carrier::FrequencyHz(f) => check_positive("frequency_hz", f)?,
                }
                if !(b.tx_gain_dbi.is_finite() && b.rx_gain_dbi.is_finite()) {
                    return Err(Error::invalid("gain_dbi", "gains must be finite"));
                }
                Ok(())
            }
        }
    }

    /// Linear SNR, either given or produced by [`snr_free_space`].
    pub fn snr(&self) -> Result<f64> {
        match &self.signal {
            SignalModel::SnrLinear(snr) => {
                check_non_negative("snr_linear", *snr)?;
                Ok(*snr)
            }
            SignalModel::FreeSpace(b) => snr_free_space(b, self.bandwidth_hz),
        }
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}

/// Free-space path loss `(4πd/λ)²`, linear.
pub fn free_space_path_loss(distance_m: f64, wavelength_m: f64) -> Result<f64> {
    check_positive("distance_m", distance_m)?;
    check_positive("wavelength_m", wavelength_m)?;
    Ok((4.0 * PI * distance_m / wavelength_m).powi(2))
}

pub fn snr_free_space(b: &FreeSpaceBudget, bandwidth_hz: f64) -> Result<f64> {
    check_positive("bandwidth_hz", bandwidth_hz)?;
    check_positive("tx_power_w", b.tx_power_w)?;
    check_positive("noise_temperature_k", b.noise_temperature_k)?;
    let fspl = free_space_path_loss(b.distance_m, b.carrier.wavelength_m())?;
    let gains = db_to_linear(b.tx_gain_dbi) * db_to_linear(b.rx_gain_dbi);
    let noise_w = BOLTZMANN * b.noise_temperature_k * bandwidth_hz;
    Ok(b.tx_power_w * gains / (fspl * noise_w))
}

/// `W · log2(1 + SNR)` in bit/s.
pub fn shannon_capacity(bandwidth_hz: f64, snr_linear: f64) -> Result<f64> {
    check_positive("bandwidth_hz", bandwidth_hz)?;
    check_non_negative("snr_linear", snr_linear)?;
    Ok(bandwidth_hz * snr_linear.ln_1p() / std::f64::consts::LN_2)
}

pub fn capacity_bps(link: &LinkPhysical) -> Result<f64> {
    shannon_capacity(link.bandwidth_hz, link.snr()?)
}
