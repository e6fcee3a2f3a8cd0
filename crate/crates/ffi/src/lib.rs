//! C ABI for `satrelay`.
//!
//! Every function returns a [`SatStatus`]; results are written through out
//! pointers. On failure a message is kept per thread and can be read with
//! [`sat_last_error_message`]. Scenarios are opaque handles owned by the
//! caller and released with [`sat_scenario_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use satrelay::cli::config::OperatingPoint;
use satrelay::cli::RunConfig;
use satrelay::fluid_rf::{fluid_metrics, FluidParams};
use satrelay::markov_chain::{laser_metrics, stationary_closed_form, LaserChainParams, PerfTriple};
use satrelay::simulator::{run_laser_sim, SimConfig, SimResult};
use satrelay::weather::{evaluate, WeatherReport, WeatherScenario, WeatherWeights};
use satrelay::Error;

/// Result code of every exported function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SatStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidParameter = 3,
    DegenerateChain = 4,
    Inconsistent = 5,
    Config = 6,
    Io = 7,
    BufferTooSmall = 8,
    Internal = 9,
}

pub const SAT_BRANCH_CLOUD_LASER: u32 = 0;
pub const SAT_BRANCH_RAIN: u32 = 1;
pub const SAT_BRANCH_CLOUD_RF: u32 = 2;
pub const SAT_BRANCH_FOG: u32 = 3;

/// Laser-downlink chain inputs. Capacities in bit/s, timeouts in seconds.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SatLaserParams {
    pub rho_ss: f64,
    pub rho_sg: f64,
    pub alpha: f64,
    pub buffer_packets: u64,
    pub packet_bits: f64,
    pub cap_ss_bps: f64,
    pub cap_sg_bps: f64,
    pub timeout_ss_s: f64,
    pub timeout_sg_s: f64,
}

/// Fluid RF branch inputs, in bits per one-second step.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SatFluidParams {
    pub beta_bits_per_step: f64,
    pub phi_bits_per_step: f64,
    pub buffer_bits: f64,
    pub horizon_steps: u32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SatWeights {
    pub cloud: f64,
    pub rain: f64,
    pub fog: f64,
}

/// Operating point applied to a configuration file.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SatOperatingPoint {
    pub alpha: f64,
    pub buffer_packets: u64,
    pub tx_power_dbm: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SatPerf {
    pub throughput_bps: f64,
    pub avg_queue_bits: f64,
    pub drop_prob: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SatWeatherReport {
    pub cloud_laser: SatPerf,
    pub cloud_rf: SatPerf,
    pub cloud: SatPerf,
    pub rain: SatPerf,
    pub fog: SatPerf,
    pub combined: SatPerf,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SatSimResult {
    pub observed_slots: u64,
    pub throughput_bps: f64,
    pub throughput_stderr: f64,
    pub avg_queue_bits_embedded: f64,
    pub avg_queue_stderr: f64,
    pub avg_queue_bits_timeweighted: f64,
    pub drop_events_per_slot: f64,
    pub drop_stderr: f64,
    pub drops_per_arrival: f64,
    pub delivered_packets: u64,
    pub dropped_packets: u64,
    pub elapsed_model_time_s: f64,
}

/// Opaque per-weather scenario.
pub struct SatScenario {
    inner: WeatherScenario,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(SatStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::InvalidParameter { .. } => SatStatus::InvalidParameter,
            Error::DegenerateChain(_) => SatStatus::DegenerateChain,
            Error::Inconsistent(_) => SatStatus::Inconsistent,
            Error::Config { .. } => SatStatus::Config,
            _ => SatStatus::Io,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(SatStatus::NullPointer, format!("`{what}` is null"))
}

/// Runs `f`, records any failure and converts panics to `Internal`.
fn guard<F>(f: F) -> SatStatus
where
    F: FnOnce() -> Result<(), Failure>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            SatStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("internal error".into());
            SatStatus::Internal
        }
    }
}

unsafe fn read<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write<T>(p: *mut T, what: &str, value: T) -> Result<(), Failure> {
    let slot = p.as_mut().ok_or_else(|| null(what))?;
    *slot = value;
    Ok(())
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure(SatStatus::InvalidUtf8, format!("`{what}`: {e}")))
}

fn buffer_packets(v: u64) -> Result<usize, Failure> {
    usize::try_from(v).map_err(|_| {
        Failure(
            SatStatus::InvalidParameter,
            format!("buffer_packets {v} does not fit in usize"),
        )
    })
}

fn laser(p: &SatLaserParams) -> Result<LaserChainParams, Failure> {
    Ok(LaserChainParams {
        rho_ss: p.rho_ss,
        rho_sg: p.rho_sg,
        alpha: p.alpha,
        buffer_packets: buffer_packets(p.buffer_packets)?,
        packet_bits: p.packet_bits,
        cap_ss_bps: p.cap_ss_bps,
        cap_sg_bps: p.cap_sg_bps,
        timeout_ss_s: p.timeout_ss_s,
        timeout_sg_s: p.timeout_sg_s,
    })
}

impl From<&LaserChainParams> for SatLaserParams {
    fn from(p: &LaserChainParams) -> Self {
        SatLaserParams {
            rho_ss: p.rho_ss,
            rho_sg: p.rho_sg,
            alpha: p.alpha,
            buffer_packets: p.buffer_packets as u64,
            packet_bits: p.packet_bits,
            cap_ss_bps: p.cap_ss_bps,
            cap_sg_bps: p.cap_sg_bps,
            timeout_ss_s: p.timeout_ss_s,
            timeout_sg_s: p.timeout_sg_s,
        }
    }
}

impl From<&SatFluidParams> for FluidParams {
    fn from(p: &SatFluidParams) -> Self {
        FluidParams {
            beta_bits_per_step: p.beta_bits_per_step,
            phi_bits_per_step: p.phi_bits_per_step,
            buffer_bits: p.buffer_bits,
            horizon_steps: p.horizon_steps,
        }
    }
}

impl From<&FluidParams> for SatFluidParams {
    fn from(p: &FluidParams) -> Self {
        SatFluidParams {
            beta_bits_per_step: p.beta_bits_per_step,
            phi_bits_per_step: p.phi_bits_per_step,
            buffer_bits: p.buffer_bits,
            horizon_steps: p.horizon_steps,
        }
    }
}

impl From<PerfTriple> for SatPerf {
    fn from(p: PerfTriple) -> Self {
        SatPerf {
            throughput_bps: p.throughput_bps,
            avg_queue_bits: p.avg_queue_bits,
            drop_prob: p.drop_prob,
        }
    }
}

impl From<&WeatherReport> for SatWeatherReport {
    fn from(r: &WeatherReport) -> Self {
        SatWeatherReport {
            cloud_laser: r.cloud_laser.into(),
            cloud_rf: r.cloud_rf.into(),
            cloud: r.cloud.into(),
            rain: r.rain.into(),
            fog: r.fog.into(),
            combined: r.combined.into(),
        }
    }
}

impl From<&SimResult> for SatSimResult {
    fn from(s: &SimResult) -> Self {
        SatSimResult {
            observed_slots: s.observed_slots,
            throughput_bps: s.throughput_bps,
            throughput_stderr: s.throughput_stderr,
            avg_queue_bits_embedded: s.avg_queue_bits_embedded,
            avg_queue_stderr: s.avg_queue_stderr,
            avg_queue_bits_timeweighted: s.avg_queue_bits_timeweighted,
            drop_events_per_slot: s.drop_events_per_slot,
            drop_stderr: s.drop_stderr,
            drops_per_arrival: s.drops_per_arrival,
            delivered_packets: s.delivered_packets,
            dropped_packets: s.dropped_packets,
            elapsed_model_time_s: s.elapsed_model_time_s,
        }
    }
}

/// Message of the last failed call on this thread, or NULL. The pointer stays
/// valid until the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn sat_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sat_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Throughput, mean queue and drop probability of one laser-downlink chain.
///
/// # Safety
/// `params` and `out` must be valid pointers or NULL.
#[no_mangle]
pub unsafe extern "C" fn sat_laser_metrics(
    params: *const SatLaserParams,
    out: *mut SatPerf,
) -> SatStatus {
    guard(|| {
        let p = laser(read(params, "params")?)?;
        write(out, "out", laser_metrics(&p)?.into())
    })
}

/// Stationary distribution `P(0..=L)` of a laser-downlink chain.
///
/// `*written` receives `L + 1`. When `capacity` is smaller the call returns
/// `BufferTooSmall` and writes nothing to `probs`.
///
/// # Safety
/// `probs` must point to `capacity` writable doubles; the other pointers must
/// be valid or NULL.
#[no_mangle]
pub unsafe extern "C" fn sat_laser_stationary(
    params: *const SatLaserParams,
    probs: *mut f64,
    capacity: usize,
    written: *mut usize,
) -> SatStatus {
    guard(|| {
        let p = laser(read(params, "params")?)?;
        let d = stationary_closed_form(&p)?;
        write(written, "written", d.probs.len())?;
        if capacity < d.probs.len() {
            return Err(Failure(
                SatStatus::BufferTooSmall,
                format!("{} states do not fit in {capacity}", d.probs.len()),
            ));
        }
        if probs.is_null() {
            return Err(null("probs"));
        }
        ptr::copy_nonoverlapping(d.probs.as_ptr(), probs, d.probs.len());
        Ok(())
    })
}

/// Metrics of one fluid RF branch.
///
/// # Safety
/// `params` and `out` must be valid pointers or NULL.
#[no_mangle]
pub unsafe extern "C" fn sat_fluid_metrics(
    params: *const SatFluidParams,
    out: *mut SatPerf,
) -> SatStatus {
    guard(|| {
        let p = FluidParams::from(read(params, "params")?);
        write(out, "out", fluid_metrics(&p)?.into())
    })
}

/// Monte Carlo run of a laser-downlink chain with the default warm-up and
/// batch count. Identical inputs give identical results on every platform.
///
/// # Safety
/// `params` and `out` must be valid pointers or NULL.
#[no_mangle]
pub unsafe extern "C" fn sat_laser_simulate(
    params: *const SatLaserParams,
    slots: u64,
    seed: u64,
    out: *mut SatSimResult,
) -> SatStatus {
    guard(|| {
        let p = laser(read(params, "params")?)?;
        let sim = run_laser_sim(&SimConfig::new(p, slots, seed))?;
        write(out, "out", SatSimResult::from(&sim))
    })
}

unsafe fn scenario_from_config(
    cfg: RunConfig,
    op: *const SatOperatingPoint,
    out: *mut *mut SatScenario,
) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    let point = match op.as_ref() {
        Some(o) => OperatingPoint {
            alpha: o.alpha,
            buffer_packets: buffer_packets(o.buffer_packets)?,
            tx_power_dbm: o.tx_power_dbm,
        },
        None => cfg.operating_point(),
    };
    let (inner, _) = cfg.scenario_at(&point)?;
    *out = Box::into_raw(Box::new(SatScenario { inner }));
    Ok(())
}

/// Builds a scenario from TOML configuration text. `op` overrides the
/// configured operating point when not NULL.
///
/// # Safety
/// `toml` must be a NUL-terminated string; `out` must be valid or NULL.
#[no_mangle]
pub unsafe extern "C" fn sat_scenario_from_toml(
    toml: *const c_char,
    op: *const SatOperatingPoint,
    out: *mut *mut SatScenario,
) -> SatStatus {
    guard(|| {
        let cfg = RunConfig::from_toml_str(read_str(toml, "toml")?)?;
        scenario_from_config(cfg, op, out)
    })
}

/// Like [`sat_scenario_from_toml`], reading the configuration from a file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be valid or NULL.
#[no_mangle]
pub unsafe extern "C" fn sat_scenario_from_path(
    path: *const c_char,
    op: *const SatOperatingPoint,
    out: *mut *mut SatScenario,
) -> SatStatus {
    guard(|| {
        let cfg = RunConfig::from_path(Path::new(read_str(path, "path")?))?;
        scenario_from_config(cfg, op, out)
    })
}

/// Builds a scenario from explicit branch parameters.
///
/// # Safety
/// All pointers must be valid or NULL.
#[no_mangle]
pub unsafe extern "C" fn sat_scenario_new(
    cloud_laser: *const SatLaserParams,
    cloud_rf: *const SatFluidParams,
    rain: *const SatLaserParams,
    fog: *const SatFluidParams,
    weights: *const SatWeights,
    out: *mut *mut SatScenario,
) -> SatStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let w = read(weights, "weights")?;
        let inner = WeatherScenario::new(
            laser(read(cloud_laser, "cloud_laser")?)?,
            FluidParams::from(read(cloud_rf, "cloud_rf")?),
            laser(read(rain, "rain")?)?,
            FluidParams::from(read(fog, "fog")?),
            WeatherWeights {
                cloud: w.cloud,
                rain: w.rain,
                fog: w.fog,
            },
        )?;
        *out = Box::into_raw(Box::new(SatScenario { inner }));
        Ok(())
    })
}

/// Releases a scenario. NULL is ignored.
///
/// # Safety
/// `scenario` must come from one of the constructors and not be used again.
#[no_mangle]
pub unsafe extern "C" fn sat_scenario_free(scenario: *mut SatScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Per-weather and combined metrics of a scenario.
///
/// # Safety
/// `scenario` must be a live handle or NULL; `out` valid or NULL.
#[no_mangle]
pub unsafe extern "C" fn sat_scenario_evaluate(
    scenario: *const SatScenario,
    out: *mut SatWeatherReport,
) -> SatStatus {
    guard(|| {
        let s = read(scenario, "scenario")?;
        let report = evaluate(&s.inner)?;
        write(out, "out", SatWeatherReport::from(&report))
    })
}

/// Chain inputs of a laser branch (`SAT_BRANCH_CLOUD_LASER` or
/// `SAT_BRANCH_RAIN`).
///
/// # Safety
/// `scenario` must be a live handle or NULL; `out` valid or NULL.
#[no_mangle]
pub unsafe extern "C" fn sat_scenario_laser_params(
    scenario: *const SatScenario,
    branch: u32,
    out: *mut SatLaserParams,
) -> SatStatus {
    guard(|| {
        let s = &read(scenario, "scenario")?.inner;
        let p = match branch {
            SAT_BRANCH_CLOUD_LASER => s.cloud_laser(),
            SAT_BRANCH_RAIN => s.rain(),
            _ => {
                return Err(Failure(
                    SatStatus::InvalidParameter,
                    format!("{branch} is not a laser branch"),
                ))
            }
        };
        write(out, "out", SatLaserParams::from(p))
    })
}

/// Fluid inputs of an RF branch (`SAT_BRANCH_CLOUD_RF` or `SAT_BRANCH_FOG`).
///
/// # Safety
/// `scenario` must be a live handle or NULL; `out` valid or NULL.
#[no_mangle]
pub unsafe extern "C" fn sat_scenario_fluid_params(
    scenario: *const SatScenario,
    branch: u32,
    out: *mut SatFluidParams,
) -> SatStatus {
    guard(|| {
        let s = &read(scenario, "scenario")?.inner;
        let p = match branch {
            SAT_BRANCH_CLOUD_RF => s.cloud_rf(),
            SAT_BRANCH_FOG => s.fog(),
            _ => {
                return Err(Failure(
                    SatStatus::InvalidParameter,
                    format!("{branch} is not an RF branch"),
                ))
            }
        };
        write(out, "out", SatFluidParams::from(p))
    })
}
