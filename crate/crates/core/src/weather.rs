//! Per-weather metrics and the weather mix.
//!
//! | weather    | relay → ground link | model                            |
//! |------------|---------------------|----------------------------------|
//! | thin cloud | laser and RF        | mean of laser chain and RF fluid |
//! | rain       | laser               | laser chain                      |
//! | fog        | RF                  | RF fluid                         |

use serde::{Deserialize, Serialize};

use crate::error::{check_prob, Error, Result};
use crate::fluid_rf::{fluid_metrics, FluidParams};
use crate::markov_chain::{laser_metrics, LaserChainParams, PerfTriple};

/// Occurrence probabilities of thin cloud, rain and fog.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeatherWeights {
    pub cloud: f64,
    pub rain: f64,
    pub fog: f64,
}

impl WeatherWeights {
    pub fn equal() -> Self {
        Self {
            cloud: 1.0 / 3.0,
            rain: 1.0 / 3.0,
            fog: 1.0 / 3.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_prob("weights.cloud", self.cloud)?;
        check_prob("weights.rain", self.rain)?;
        check_prob("weights.fog", self.fog)?;
        let sum = self.cloud + self.rain + self.fog;
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(
                "weights",
                format!("sum to {sum}, expected 1"),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeatherScenario {
    cloud_laser: LaserChainParams,
    cloud_rf: FluidParams,
    rain: LaserChainParams,
    fog: FluidParams,
    weights: WeatherWeights,
}

impl WeatherScenario {
    /// Validates every branch and checks that the branches describe the same
    /// uplink and relay.
    pub fn new(
        cloud_laser: LaserChainParams,
        cloud_rf: FluidParams,
        rain: LaserChainParams,
        fog: FluidParams,
        weights: WeatherWeights,
    ) -> Result<Self> {
        cloud_laser.validate()?;
        rain.validate()?;
        cloud_rf.validate()?;
        fog.validate()?;
        weights.validate()?;

        let shared = [
            ("rho_ss", cloud_laser.rho_ss, rain.rho_ss),
            ("alpha", cloud_laser.alpha, rain.alpha),
            ("packet_bits", cloud_laser.packet_bits, rain.packet_bits),
            ("cap_ss_bps", cloud_laser.cap_ss_bps, rain.cap_ss_bps),
            ("timeout_ss_s", cloud_laser.timeout_ss_s, rain.timeout_ss_s),
            ("timeout_sg_s", cloud_laser.timeout_sg_s, rain.timeout_sg_s),
        ];
        for (name, a, b) in shared {
            if a != b {
                return Err(Error::Inconsistent(format!(
                    "{name} differs between cloud laser ({a}) and rain ({b}) branches"
                )));
            }
        }
        if cloud_laser.buffer_packets != rain.buffer_packets {
            return Err(Error::Inconsistent(format!(
                "buffer_packets differs between cloud laser ({}) and rain ({}) branches",
                cloud_laser.buffer_packets, rain.buffer_packets
            )));
        }
        if cloud_rf.beta_bits_per_step != fog.beta_bits_per_step {
            return Err(Error::Inconsistent(format!(
                "uplink inflow differs between cloud RF ({}) and fog ({}) branches",
                cloud_rf.beta_bits_per_step, fog.beta_bits_per_step
            )));
        }
        if cloud_rf.buffer_bits != fog.buffer_bits || cloud_rf.horizon_steps != fog.horizon_steps {
            return Err(Error::Inconsistent(
                "buffer_bits/horizon_steps differ between cloud RF and fog branches".into(),
            ));
        }
        Ok(Self {
            cloud_laser,
            cloud_rf,
            rain,
            fog,
            weights,
        })
    }

    pub fn cloud_laser(&self) -> &LaserChainParams {
        &self.cloud_laser
    }

    pub fn cloud_rf(&self) -> &FluidParams {
        &self.cloud_rf
    }

    pub fn rain(&self) -> &LaserChainParams {
        &self.rain
    }

    pub fn fog(&self) -> &FluidParams {
        &self.fog
    }

    pub fn weights(&self) -> &WeatherWeights {
        &self.weights
    }
}

pub fn thin_cloud_metrics(s: &WeatherScenario) -> Result<PerfTriple> {
    let laser = laser_metrics(&s.cloud_laser)?;
    let rf = fluid_metrics(&s.cloud_rf)?;
    Ok(PerfTriple::mean(&laser, &rf))
}

pub fn rain_metrics(s: &WeatherScenario) -> Result<PerfTriple> {
    laser_metrics(&s.rain)
}

pub fn fog_metrics(s: &WeatherScenario) -> Result<PerfTriple> {
    fluid_metrics(&s.fog)
}

/// Weighted mix of three per-weather results.
pub fn combine_weather(
    w: &WeatherWeights,
    cloud: &PerfTriple,
    rain: &PerfTriple,
    fog: &PerfTriple,
) -> PerfTriple {
    let mix = |f: fn(&PerfTriple) -> f64| w.cloud * f(cloud) + w.rain * f(rain) + w.fog * f(fog);
    PerfTriple {
        throughput_bps: mix(|p| p.throughput_bps),
        avg_queue_bits: mix(|p| p.avg_queue_bits),
        drop_prob: mix(|p| p.drop_prob).clamp(0.0, 1.0),
    }
}

pub fn combined_metrics(s: &WeatherScenario) -> Result<PerfTriple> {
    Ok(evaluate(s)?.combined)
}

/// All per-weather results of one scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeatherReport {
    pub cloud_laser: PerfTriple,
    pub cloud_rf: PerfTriple,
    pub cloud: PerfTriple,
    pub rain: PerfTriple,
    pub fog: PerfTriple,
    pub combined: PerfTriple,
}

pub fn evaluate(s: &WeatherScenario) -> Result<WeatherReport> {
    let cloud_laser = laser_metrics(&s.cloud_laser)?;
    let cloud_rf = fluid_metrics(&s.cloud_rf)?;
    let cloud = PerfTriple::mean(&cloud_laser, &cloud_rf);
    let rain = laser_metrics(&s.rain)?;
    let fog = fluid_metrics(&s.fog)?;
    let combined = combine_weather(&s.weights, &cloud, &rain, &fog);
    Ok(WeatherReport {
        cloud_laser,
        cloud_rf,
        cloud,
        rain,
        fog,
        combined,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn laser(rho_sg: f64, cap_sg: f64) -> LaserChainParams {
        LaserChainParams {
            rho_ss: 1e-4,
            rho_sg,
            alpha: 1.5,
            buffer_packets: 20,
            packet_bits: 20e6,
            cap_ss_bps: 6e9,
            cap_sg_bps: cap_sg,
            timeout_ss_s: 0.01,
            timeout_sg_s: 0.01,
        }
    }

    fn fluid(rho_sg: f64, cap_rf: f64) -> FluidParams {
        FluidParams::from_links(1e-4, 6e9, rho_sg, cap_rf, 20.0 * 20e6, 30)
    }

    fn scenario(w: WeatherWeights) -> WeatherScenario {
        WeatherScenario::new(
            laser(0.1, 5e9),
            fluid(0.1, 3e8),
            laser(0.2, 4e9),
            fluid(0.3, 2.5e8),
            w,
        )
        .unwrap()
    }

    #[test]
    fn equal_branches_give_same_value() {
        let v = PerfTriple::new(5.0, 3.0, 0.2);
        let c = combine_weather(&WeatherWeights::equal(), &v, &v, &v);
        assert_relative_eq!(c.throughput_bps, 5.0, max_relative = 1e-15);
        assert_relative_eq!(c.avg_queue_bits, 3.0, max_relative = 1e-15);
        assert_relative_eq!(c.drop_prob, 0.2, max_relative = 1e-15);
        let m = PerfTriple::mean(
            &PerfTriple::new(6.0, 0.0, 0.0),
            &PerfTriple::new(2.0, 0.0, 0.0),
        );
        assert_eq!(m.throughput_bps, 4.0);
    }

    #[test]
    fn hand_set_mix() {
        let t = |x| PerfTriple::new(x, 0.0, 0.0);
        let c = combine_weather(&WeatherWeights::equal(), &t(3.0), &t(6.0), &t(9.0));
        assert_relative_eq!(c.throughput_bps, 6.0, max_relative = 1e-15);
    }

    #[test]
    fn degenerate_mix_is_thin_cloud() {
        let s = scenario(WeatherWeights {
            cloud: 1.0,
            rain: 0.0,
            fog: 0.0,
        });
        assert_eq!(
            combined_metrics(&s).unwrap(),
            thin_cloud_metrics(&s).unwrap()
        );
        let s = scenario(WeatherWeights {
            cloud: 0.0,
            rain: 1.0,
            fog: 0.0,
        });
        assert_eq!(combined_metrics(&s).unwrap(), rain_metrics(&s).unwrap());
        let s = scenario(WeatherWeights {
            cloud: 0.0,
            rain: 0.0,
            fog: 1.0,
        });
        assert_eq!(combined_metrics(&s).unwrap(), fog_metrics(&s).unwrap());
    }

    #[test]
    fn thin_cloud_is_branch_mean() {
        let s = scenario(WeatherWeights::equal());
        let l = laser_metrics(s.cloud_laser()).unwrap();
        let r = fluid_metrics(s.cloud_rf()).unwrap();
        let c = thin_cloud_metrics(&s).unwrap();
        assert_relative_eq!(
            c.throughput_bps,
            0.5 * (l.throughput_bps + r.throughput_bps),
            max_relative = 1e-15
        );
        assert_relative_eq!(
            c.drop_prob,
            0.5 * (l.drop_prob + r.drop_prob),
            max_relative = 1e-15
        );
    }

    #[test]
    fn inconsistent_scenarios_rejected() {
        let err = WeatherScenario::new(
            laser(0.1, 5e9),
            fluid(0.1, 3e8),
            LaserChainParams {
                alpha: 2.0,
                ..laser(0.2, 4e9)
            },
            fluid(0.3, 2.5e8),
            WeatherWeights::equal(),
        )
        .unwrap_err();
        assert!(err.to_string().contains("alpha"));
        let err = WeatherScenario::new(
            laser(0.1, 5e9),
            fluid(0.1, 3e8),
            laser(0.2, 4e9),
            fluid(0.3, 2.5e8),
            WeatherWeights {
                cloud: 0.5,
                rain: 0.5,
                fog: 0.5,
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidParameter { .. }));
    }

    proptest! {
        #[test]
        fn mix_within_hull_and_permutation_invariant(a in 0.0..1.0f64, b in 0.0..1.0f64) {
            let (lo, hi) = (a.min(b), a.max(b));
            let w = WeatherWeights { cloud: lo, rain: hi - lo, fog: 1.0 - hi };
            let s = scenario(w);
            let r = evaluate(&s).unwrap();
            let parts = [r.cloud, r.rain, r.fog];
            let within = |f: fn(&PerfTriple) -> f64| {
                let v = f(&r.combined);
                let mn = parts.iter().map(f).fold(f64::INFINITY, f64::min);
                let mx = parts.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
                v >= mn * (1.0 - 1e-12) - 1e-12 && v <= mx * (1.0 + 1e-12) + 1e-12
            };
            prop_assert!(within(|p| p.throughput_bps));
            prop_assert!(within(|p| p.avg_queue_bits));
            prop_assert!(within(|p| p.drop_prob));

            let permuted = WeatherWeights { cloud: w.rain, rain: w.fog, fog: w.cloud };
            let c2 = combine_weather(&permuted, &r.rain, &r.fog, &r.cloud);
            prop_assert!((c2.throughput_bps - r.combined.throughput_bps).abs() <= 1e-12 * r.combined.throughput_bps);
            prop_assert!((c2.drop_prob - r.combined.drop_prob).abs() <= 1e-12);
        }
    }
}
