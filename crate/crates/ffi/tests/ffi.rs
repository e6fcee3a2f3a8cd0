use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use satrelay::cli::config::DEFAULT_CONFIG;
use satrelay_ffi::*;

fn lossless(l: u64) -> SatLaserParams {
    SatLaserParams {
        rho_ss: 0.0,
        rho_sg: 0.0,
        alpha: 1.0,
        buffer_packets: l,
        packet_bits: 20e6,
        cap_ss_bps: 3e9,
        cap_sg_bps: 3e9,
        timeout_ss_s: 0.01,
        timeout_sg_s: 0.01,
    }
}

fn last_error() -> String {
    let p = sat_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string()
}

#[test]
fn laser_metrics_match_hand_values() {
    let mut out = SatPerf::default();
    let status = unsafe { sat_laser_metrics(&lossless(1), &mut out) };
    assert_eq!(status, SatStatus::Ok);
    assert!(sat_last_error_message().is_null());
    assert!((out.throughput_bps - 1e9).abs() < 1e-3);
    assert!((out.drop_prob - 1.0 / 3.0).abs() < 1e-12);
}

#[test]
fn stationary_reports_size_and_fills_buffer() {
    let p = lossless(2);
    let mut written = 0usize;
    let status = unsafe { sat_laser_stationary(&p, ptr::null_mut(), 0, &mut written) };
    assert_eq!(status, SatStatus::BufferTooSmall);
    assert_eq!(written, 3);

    let mut probs = [0.0; 3];
    let status = unsafe { sat_laser_stationary(&p, probs.as_mut_ptr(), probs.len(), &mut written) };
    assert_eq!(status, SatStatus::Ok);
    for (a, b) in probs.iter().zip([0.2, 0.4, 0.4]) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn invalid_inputs_map_to_status_codes() {
    let mut out = SatPerf::default();
    let bad = SatLaserParams {
        rho_sg: 1.5,
        ..lossless(1)
    };
    assert_eq!(
        unsafe { sat_laser_metrics(&bad, &mut out) },
        SatStatus::InvalidParameter
    );
    assert!(last_error().contains("rho_sg"));

    assert_eq!(
        unsafe { sat_laser_metrics(ptr::null(), &mut out) },
        SatStatus::NullPointer
    );
    assert_eq!(
        unsafe { sat_laser_metrics(&lossless(1), ptr::null_mut()) },
        SatStatus::NullPointer
    );

    let fluid = SatFluidParams {
        beta_bits_per_step: 10.0,
        phi_bits_per_step: 4.0,
        buffer_bits: 0.0,
        horizon_steps: 4,
    };
    assert_eq!(
        unsafe { sat_fluid_metrics(&fluid, &mut out) },
        SatStatus::InvalidParameter
    );
}

#[test]
fn fluid_metrics_fixture() {
    let fluid = SatFluidParams {
        beta_bits_per_step: 10.0,
        phi_bits_per_step: 4.0,
        buffer_bits: 10.0,
        horizon_steps: 4,
    };
    let mut out = SatPerf::default();
    assert_eq!(
        unsafe { sat_fluid_metrics(&fluid, &mut out) },
        SatStatus::Ok
    );
    assert!((out.avg_queue_bits - 7.2).abs() < 1e-12);
    assert!((out.drop_prob - 0.35).abs() < 1e-12);
    assert_eq!(out.throughput_bps, 4.0);
}

#[test]
fn simulation_is_deterministic() {
    let p = lossless(1);
    let (mut a, mut b) = (SatSimResult::default(), SatSimResult::default());
    assert_eq!(
        unsafe { sat_laser_simulate(&p, 100_000, 9, &mut a) },
        SatStatus::Ok
    );
    assert_eq!(
        unsafe { sat_laser_simulate(&p, 100_000, 9, &mut b) },
        SatStatus::Ok
    );
    assert_eq!(a, b);
    assert!((a.throughput_bps / 1e9 - 1.0).abs() < 0.02);
    assert_eq!(
        unsafe { sat_laser_simulate(&p, 0, 9, &mut a) },
        SatStatus::InvalidParameter
    );
}

#[test]
fn scenario_from_toml_round_trip() {
    let toml = CString::new(DEFAULT_CONFIG).unwrap();
    let mut handle: *mut SatScenario = ptr::null_mut();
    assert_eq!(
        unsafe { sat_scenario_from_toml(toml.as_ptr(), ptr::null(), &mut handle) },
        SatStatus::Ok
    );
    assert!(!handle.is_null());

    let mut report = SatWeatherReport::default();
    assert_eq!(
        unsafe { sat_scenario_evaluate(handle, &mut report) },
        SatStatus::Ok
    );
    let combined =
        (report.cloud.throughput_bps + report.rain.throughput_bps + report.fog.throughput_bps)
            / 3.0;
    assert!((report.combined.throughput_bps - combined).abs() <= 1e-6 * combined);

    let mut rain = lossless(1);
    assert_eq!(
        unsafe { sat_scenario_laser_params(handle, SAT_BRANCH_RAIN, &mut rain) },
        SatStatus::Ok
    );
    assert_eq!(rain.buffer_packets, 100);
    let mut perf = SatPerf::default();
    assert_eq!(
        unsafe { sat_laser_metrics(&rain, &mut perf) },
        SatStatus::Ok
    );
    assert_eq!(perf, report.rain);

    let mut fog = SatFluidParams {
        beta_bits_per_step: 0.0,
        phi_bits_per_step: 0.0,
        buffer_bits: 0.0,
        horizon_steps: 0,
    };
    assert_eq!(
        unsafe { sat_scenario_fluid_params(handle, SAT_BRANCH_FOG, &mut fog) },
        SatStatus::Ok
    );
    assert_eq!(unsafe { sat_fluid_metrics(&fog, &mut perf) }, SatStatus::Ok);
    assert_eq!(perf, report.fog);

    assert_eq!(
        unsafe { sat_scenario_fluid_params(handle, SAT_BRANCH_RAIN, &mut fog) },
        SatStatus::InvalidParameter
    );
    unsafe { sat_scenario_free(handle) };
    unsafe { sat_scenario_free(ptr::null_mut()) };
}

#[test]
fn operating_point_override_changes_power() {
    let toml = CString::new(DEFAULT_CONFIG).unwrap();
    let mut low: *mut SatScenario = ptr::null_mut();
    let mut high: *mut SatScenario = ptr::null_mut();
    let op = |p| SatOperatingPoint {
        alpha: 1.0,
        buffer_packets: 100,
        tx_power_dbm: p,
    };
    unsafe {
        assert_eq!(
            sat_scenario_from_toml(toml.as_ptr(), &op(-20.0), &mut low),
            SatStatus::Ok
        );
        assert_eq!(
            sat_scenario_from_toml(toml.as_ptr(), &op(0.0), &mut high),
            SatStatus::Ok
        );
        let (mut a, mut b) = (SatWeatherReport::default(), SatWeatherReport::default());
        sat_scenario_evaluate(low, &mut a);
        sat_scenario_evaluate(high, &mut b);
        assert!(b.combined.throughput_bps > a.combined.throughput_bps);
        sat_scenario_free(low);
        sat_scenario_free(high);
    }
}

#[test]
fn config_errors_are_reported() {
    let mut handle: *mut SatScenario = ptr::null_mut();
    let bad = CString::new(DEFAULT_CONFIG.replace("alpha = 1.0", "alpha = 0.0")).unwrap();
    assert_eq!(
        unsafe { sat_scenario_from_toml(bad.as_ptr(), ptr::null(), &mut handle) },
        SatStatus::Config
    );
    assert!(handle.is_null());
    assert!(last_error().contains("relay.alpha"));

    let missing = CString::new("/nonexistent/satrelay.toml").unwrap();
    let status = unsafe { sat_scenario_from_path(missing.as_ptr(), ptr::null(), &mut handle) };
    assert_ne!(status, SatStatus::Ok);

    let invalid = [0xffu8, 0];
    let status =
        unsafe { sat_scenario_from_toml(invalid.as_ptr().cast(), ptr::null(), &mut handle) };
    assert_eq!(status, SatStatus::InvalidUtf8);
}

#[test]
fn explicit_scenario_checks_consistency() {
    let cloud = SatLaserParams {
        rho_sg: 0.2,
        ..lossless(10)
    };
    let rain = SatLaserParams {
        rho_sg: 0.3,
        alpha: 2.0,
        ..lossless(10)
    };
    let fluid = SatFluidParams {
        beta_bits_per_step: 3e9,
        phi_bits_per_step: 1e8,
        buffer_bits: 2e8,
        horizon_steps: 30,
    };
    let w = SatWeights {
        cloud: 0.5,
        rain: 0.25,
        fog: 0.25,
    };
    let mut handle: *mut SatScenario = ptr::null_mut();
    let status = unsafe { sat_scenario_new(&cloud, &fluid, &rain, &fluid, &w, &mut handle) };
    assert_eq!(status, SatStatus::Inconsistent);
    assert!(last_error().contains("alpha"));

    let rain = SatLaserParams { alpha: 1.0, ..rain };
    let status = unsafe { sat_scenario_new(&cloud, &fluid, &rain, &fluid, &w, &mut handle) };
    assert_eq!(status, SatStatus::Ok);
    unsafe { sat_scenario_free(handle) };
}

#[test]
fn version_is_package_version() {
    let v = unsafe { CStr::from_ptr(sat_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

fn header() -> String {
    std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/satrelay.h"))
        .unwrap()
}

#[test]
fn header_declares_the_api() {
    let h = header();
    for name in [
        "sat_last_error_message",
        "sat_version",
        "sat_laser_metrics",
        "sat_laser_stationary",
        "sat_fluid_metrics",
        "sat_laser_simulate",
        "sat_scenario_from_toml",
        "sat_scenario_from_path",
        "sat_scenario_new",
        "sat_scenario_free",
        "sat_scenario_evaluate",
        "sat_scenario_laser_params",
        "sat_scenario_fluid_params",
        "typedef struct SatScenario SatScenario;",
        "SAT_STATUS_OK = 0",
        "SAT_STATUS_INTERNAL = 9",
        "#define SAT_BRANCH_FOG 3",
    ] {
        assert!(h.contains(name), "header lacks {name}");
    }
}

#[test]
fn header_compiles_as_c() {
    let Ok(cc) = which_cc() else { return };
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"satrelay.h\"\nint main(void) { SatPerf p; SatLaserParams l = {0}; return sat_laser_metrics(&l, &p) == SAT_STATUS_OK; }\n",
    )
    .unwrap();
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let status = Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(include)
        .arg(&src)
        .status()
        .unwrap();
    assert!(status.success());
}

fn which_cc() -> Result<&'static str, ()> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| {
            Command::new(c)
                .arg("--version")
                .output()
                .is_ok_and(|o| o.status.success())
        })
        .ok_or(())
}
