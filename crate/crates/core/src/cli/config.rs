//! TOML run configuration.
//!
//! The schema is documented in `configs/default.toml`, which is also the
//! built-in default. Every link is described by a bandwidth plus exactly one
//! of `snr_db`, `snr_linear`, `capacity_bps` or a `[budget]` table. SNR values
//! on relay → ground links refer to the relay transmit power
//! `downlink.tx_power_dbm` and scale linearly with it when that power is
//! swept; budget tables take the swept power directly. Outages are either a
//! fixed probability or a `[[power_dbm, outage], ...]` table interpolated
//! linearly in dBm and held constant beyond its ends.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fluid_rf::FluidParams;
use crate::link_budget::{
    capacity_bps, db_to_linear, dbm_to_watts, Carrier, FreeSpaceBudget, LinkPhysical,
};
use crate::markov_chain::LaserChainParams;
use crate::weather::{WeatherScenario, WeatherWeights};

pub const DEFAULT_CONFIG: &str = include_str!("../../configs/default.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_slots")]
    pub slots: u64,
    #[serde(default)]
    pub format: OutputFormat,
    pub relay: RelaySpec,
    pub uplink: UplinkSpec,
    pub downlink: DownlinkSpec,
    pub weather: WeatherSpec,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
}

fn default_seed() -> u64 {
    1
}

fn default_slots() -> u64 {
    10_000_000
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelaySpec {
    pub alpha: f64,
    pub buffer_packets: usize,
    pub packet_bits: f64,
    /// Fluid observation horizon `O_t` in seconds (one step per second).
    pub horizon_steps: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UplinkSpec {
    pub outage: f64,
    pub timeout_s: f64,
    pub link: LinkSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DownlinkSpec {
    pub timeout_s: f64,
    pub tx_power_dbm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeatherSpec {
    pub weights: WeatherWeights,
    pub cloud: CloudSpec,
    pub rain: RainSpec,
    pub fog: FogSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CloudSpec {
    pub outage: Outage,
    pub laser: LinkSpec,
    pub rf: LinkSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RainSpec {
    pub outage: Outage,
    pub laser: LinkSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FogSpec {
    pub outage: Outage,
    pub rf: LinkSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Outage {
    Fixed(f64),
    /// `(power_dbm, outage)` points, strictly increasing in power.
    Table(Vec<[f64; 2]>),
}

impl Outage {
    pub fn at(&self, power_dbm: f64, path: &str) -> Result<f64> {
        let v = match self {
            Outage::Fixed(v) => *v,
            Outage::Table(points) => interpolate(points, power_dbm, path)?,
        };
        if !(0.0..1.0).contains(&v) {
            return Err(Error::config(path, format!("outage {v} is not in [0, 1)")));
        }
        Ok(v)
    }
}

fn interpolate(points: &[[f64; 2]], x: f64, path: &str) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::config(path, "outage table is empty"));
    }
    if points.windows(2).any(|w| w[1][0] <= w[0][0]) {
        return Err(Error::config(
            path,
            "outage table powers must be strictly increasing",
        ));
    }
    let first = points[0];
    let last = points[points.len() - 1];
    if x <= first[0] {
        return Ok(first[1]);
    }
    if x >= last[0] {
        return Ok(last[1]);
    }
    let i = points.partition_point(|p| p[0] <= x);
    let [x0, y0] = points[i - 1];
    let [x1, y1] = points[i];
    Ok(y0 + (y1 - y0) * (x - x0) / (x1 - x0))
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSpec {
    #[serde(default)]
    pub bandwidth_hz: Option<f64>,
    #[serde(default)]
    pub snr_db: Option<f64>,
    #[serde(default)]
    pub snr_linear: Option<f64>,
    #[serde(default)]
    pub capacity_bps: Option<f64>,
    #[serde(default)]
    pub budget: Option<BudgetSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetSpec {
    /// Only read on the uplink; relay → ground budgets radiate the operating
    /// relay power (`downlink.tx_power_dbm` or the swept value).
    #[serde(default)]
    pub tx_power_dbm: Option<f64>,
    pub tx_gain_dbi: f64,
    pub rx_gain_dbi: f64,
    #[serde(default)]
    pub wavelength_m: Option<f64>,
    #[serde(default)]
    pub frequency_hz: Option<f64>,
    pub distance_m: f64,
    pub noise_temperature_k: f64,
}

impl LinkSpec {
    /// Capacity of the link when the transmitter radiates `power_dbm`,
    /// with `reference_dbm` the power at which a direct SNR is quoted.
    fn capacity(&self, path: &str, power_dbm: Option<f64>, reference_dbm: f64) -> Result<f64> {
        let given = [
            self.snr_db.is_some(),
            self.snr_linear.is_some(),
            self.capacity_bps.is_some(),
            self.budget.is_some(),
        ]
        .iter()
        .filter(|x| **x)
        .count();
        if given != 1 {
            return Err(Error::config(
                path,
                "give exactly one of snr_db, snr_linear, capacity_bps or [budget]",
            ));
        }
        let wrap = |e: Error| Error::config(path, e.to_string());
        if let Some(c) = self.capacity_bps {
            if !(c.is_finite() && c > 0.0) {
                return Err(Error::config(format!("{path}.capacity_bps"), "must be > 0"));
            }
            return Ok(c);
        }
        let bandwidth = self
            .bandwidth_hz
            .ok_or_else(|| Error::config(format!("{path}.bandwidth_hz"), "required"))?;
        let power_gain = power_dbm.map_or(1.0, |p| db_to_linear(p - reference_dbm));
        let link = if let Some(db) = self.snr_db {
            LinkPhysical::with_snr(bandwidth, db_to_linear(db) * power_gain)
        } else if let Some(lin) = self.snr_linear {
            LinkPhysical::with_snr(bandwidth, lin * power_gain)
        } else {
            let b = self.budget.as_ref().expect("counted above");
            let bpath = format!("{path}.budget");
            let carrier = match (b.wavelength_m, b.frequency_hz) {
                (Some(l), None) => Carrier::WavelengthM(l),
                (None, Some(f)) => Carrier::FrequencyHz(f),
                _ => {
                    return Err(Error::config(
                        bpath,
                        "give exactly one of wavelength_m or frequency_hz",
                    ))
                }
            };
            if power_dbm.is_some() && b.tx_power_dbm.is_some() {
                return Err(Error::config(
                    format!("{bpath}.tx_power_dbm"),
                    "relay -> ground budgets use downlink.tx_power_dbm",
                ));
            }
            let tx_dbm = power_dbm
                .or(b.tx_power_dbm)
                .ok_or_else(|| Error::config(format!("{bpath}.tx_power_dbm"), "required"))?;
            LinkPhysical::with_budget(
                bandwidth,
                FreeSpaceBudget {
                    tx_power_w: dbm_to_watts(tx_dbm),
                    tx_gain_dbi: b.tx_gain_dbi,
                    rx_gain_dbi: b.rx_gain_dbi,
                    carrier,
                    distance_m: b.distance_m,
                    noise_temperature_k: b.noise_temperature_k,
                },
            )
        };
        link.validate().map_err(wrap)?;
        let c = capacity_bps(&link).map_err(wrap)?;
        if c <= 0.0 {
            return Err(Error::config(path, "link capacity is zero"));
        }
        Ok(c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum SweepAxis {
    Alpha,
    BufferPackets,
    TxPower,
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::Alpha => "alpha",
            SweepAxis::BufferPackets => "buffer_packets",
            SweepAxis::TxPower => "tx_power",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub from: f64,
    pub to: f64,
    pub step: f64,
}

impl SweepSpec {
    /// Grid points `from, from+step, ...` up to `to` (inclusive within a small
    /// relative slack for accumulated decimal steps).
    pub fn grid(&self) -> Result<Vec<f64>> {
        if !(self.step.is_finite() && self.step > 0.0) {
            return Err(Error::config("sweep.step", "must be > 0"));
        }
        if !(self.from.is_finite() && self.to.is_finite()) || self.to < self.from {
            return Err(Error::config("sweep", "range is empty (to < from)"));
        }
        let n = ((self.to - self.from) / self.step + 1e-9).floor() as usize + 1;
        let grid: Vec<f64> = (0..n).map(|k| self.from + k as f64 * self.step).collect();
        if self.axis == SweepAxis::BufferPackets
            && grid.iter().any(|v| v.fract() != 0.0 || *v < 1.0)
        {
            return Err(Error::config(
                "sweep",
                "buffer_packets grid must be integers >= 1",
            ));
        }
        Ok(grid)
    }
}

/// Operating point of one evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub alpha: f64,
    pub buffer_packets: usize,
    pub tx_power_dbm: f64,
}

/// Link-level quantities behind a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intermediates {
    pub cap_lisl_bps: f64,
    pub cap_cloud_laser_bps: f64,
    pub cap_cloud_rf_bps: f64,
    pub cap_rain_laser_bps: f64,
    pub cap_fog_rf_bps: f64,
    pub rho_ss: f64,
    pub rho_cloud: f64,
    pub rho_rain: f64,
    pub rho_fog: f64,
    pub beta_bits_per_step: f64,
    pub phi_cloud_bits_per_step: f64,
    pub phi_fog_bits_per_step: f64,
    pub buffer_bits: f64,
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: RunConfig =
            toml::from_str(s).map_err(|e| Error::config("<toml>", e.to_string().trim_end()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(path.display().to_string(), e.to_string()))?;
        Self::from_toml_str(&text)
    }

    pub fn default_config() -> Self {
        Self::from_toml_str(DEFAULT_CONFIG).expect("built-in config is valid")
    }

    fn check(&self) -> Result<()> {
        if self.slots == 0 {
            return Err(Error::config("slots", "must be >= 1"));
        }
        if let Some(s) = &self.sweep {
            s.grid()?;
        }
        self.scenario_at(&self.operating_point()).map(|_| ())
    }

    pub fn operating_point(&self) -> OperatingPoint {
        OperatingPoint {
            alpha: self.relay.alpha,
            buffer_packets: self.relay.buffer_packets,
            tx_power_dbm: self.downlink.tx_power_dbm,
        }
    }

    /// The operating point with `value` substituted on `axis`.
    pub fn point_on_axis(&self, axis: SweepAxis, value: f64) -> OperatingPoint {
        let mut op = self.operating_point();
        match axis {
            SweepAxis::Alpha => op.alpha = value,
            SweepAxis::BufferPackets => op.buffer_packets = value as usize,
            SweepAxis::TxPower => op.tx_power_dbm = value,
        }
        op
    }

    pub fn scenario_at(&self, op: &OperatingPoint) -> Result<(WeatherScenario, Intermediates)> {
        let reference = self.downlink.tx_power_dbm;
        let power = Some(op.tx_power_dbm);
        let w = &self.weather;

        let cap_lisl = self.uplink.link.capacity("uplink.link", None, reference)?;
        let cap_cloud_laser = w
            .cloud
            .laser
            .capacity("weather.cloud.laser", power, reference)?;
        let cap_cloud_rf = w.cloud.rf.capacity("weather.cloud.rf", power, reference)?;
        let cap_rain = w
            .rain
            .laser
            .capacity("weather.rain.laser", power, reference)?;
        let cap_fog = w.fog.rf.capacity("weather.fog.rf", power, reference)?;

        let rho_ss = Outage::Fixed(self.uplink.outage).at(op.tx_power_dbm, "uplink.outage")?;
        let rho_cloud = w.cloud.outage.at(op.tx_power_dbm, "weather.cloud.outage")?;
        let rho_rain = w.rain.outage.at(op.tx_power_dbm, "weather.rain.outage")?;
        let rho_fog = w.fog.outage.at(op.tx_power_dbm, "weather.fog.outage")?;

        let chain = |rho_sg, cap_sg| LaserChainParams {
            rho_ss,
            rho_sg,
            alpha: op.alpha,
            buffer_packets: op.buffer_packets,
            packet_bits: self.relay.packet_bits,
            cap_ss_bps: cap_lisl,
            cap_sg_bps: cap_sg,
            timeout_ss_s: self.uplink.timeout_s,
            timeout_sg_s: self.downlink.timeout_s,
        };
        let buffer_bits = op.buffer_packets as f64 * self.relay.packet_bits;
        let fluid = |rho_sg, cap_rf| {
            FluidParams::from_links(
                rho_ss,
                cap_lisl,
                rho_sg,
                cap_rf,
                buffer_bits,
                self.relay.horizon_steps,
            )
        };
        let cloud_laser = chain(rho_cloud, cap_cloud_laser);
        let rain = chain(rho_rain, cap_rain);
        let cloud_rf = fluid(rho_cloud, cap_cloud_rf);
        let fog = fluid(rho_fog, cap_fog);

        let relay_path = |e: Error| match e {
            Error::InvalidParameter { name, reason } => {
                let path = match name.as_str() {
                    "alpha" | "buffer_packets" | "packet_bits" | "horizon_steps" => {
                        format!("relay.{name}")
                    }
                    "timeout_ss_s" => "uplink.timeout_s".into(),
                    "timeout_sg_s" => "downlink.timeout_s".into(),
                    n if n.starts_with("weights") => format!("weather.{n}"),
                    n => n.to_string(),
                };
                Error::config(path, reason)
            }
            other => other,
        };
        let scenario = WeatherScenario::new(cloud_laser, cloud_rf, rain, fog, w.weights)
            .map_err(relay_path)?;
        Ok((
            scenario,
            Intermediates {
                cap_lisl_bps: cap_lisl,
                cap_cloud_laser_bps: cap_cloud_laser,
                cap_cloud_rf_bps: cap_cloud_rf,
                cap_rain_laser_bps: cap_rain,
                cap_fog_rf_bps: cap_fog,
                rho_ss,
                rho_cloud,
                rho_rain,
                rho_fog,
                beta_bits_per_step: cloud_rf.beta_bits_per_step,
                phi_cloud_bits_per_step: cloud_rf.phi_bits_per_step,
                phi_fog_bits_per_step: fog.phi_bits_per_step,
                buffer_bits,
            },
        ))
    }
}
