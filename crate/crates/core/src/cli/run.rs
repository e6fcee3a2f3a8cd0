use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Intermediates, OperatingPoint, RunConfig, SweepAxis, SweepSpec};
use crate::error::Result;
use crate::fluid_rf::{fluid_drop_prob, remaining_space, FluidParams};
use crate::markov_chain::{
    analyze_laser, chain_structure_check, stationary_oracle, LaserChainParams, PerfTriple,
    StationaryDistribution, TransitionProbs,
};
use crate::simulator::{run_fluid_replay, run_laser_sim_traced, SimConfig, SimResult, TraceRecord};
use crate::weather::{evaluate, WeatherReport, WeatherScenario};

/// The two weather branches served by the laser chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum LaserBranch {
    CloudLaser,
    Rain,
}

impl LaserBranch {
    pub const ALL: [LaserBranch; 2] = [LaserBranch::CloudLaser, LaserBranch::Rain];

    pub fn name(&self) -> &'static str {
        match self {
            LaserBranch::CloudLaser => "cloud_laser",
            LaserBranch::Rain => "rain",
        }
    }

    pub fn params<'a>(&self, s: &'a WeatherScenario) -> &'a LaserChainParams {
        match self {
            LaserBranch::CloudLaser => s.cloud_laser(),
            LaserBranch::Rain => s.rain(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSummary {
    pub transitions: TransitionProbs,
    pub states: usize,
    pub p0: f64,
    pub p_full: f64,
    pub total_probability: f64,
    pub mean_occupancy_packets: f64,
    pub max_row_sum_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub point: OperatingPoint,
    pub links: Intermediates,
    pub cloud_laser_chain: ChainSummary,
    pub rain_chain: ChainSummary,
    pub weather: WeatherReport,
}

fn summarize(p: &LaserChainParams) -> Result<ChainSummary> {
    let a = analyze_laser(p)?;
    let d = &a.distribution;
    Ok(ChainSummary {
        transitions: a.transitions,
        states: d.probs.len(),
        p0: d.p0(),
        p_full: d.full(),
        total_probability: d.total(),
        mean_occupancy_packets: d.mean_occupancy(),
        max_row_sum_error: chain_structure_check(p)?.max_row_sum_error,
    })
}

pub fn analyze(cfg: &RunConfig) -> Result<AnalysisReport> {
    analyze_point(cfg, &cfg.operating_point())
}

pub fn analyze_point(cfg: &RunConfig, op: &OperatingPoint) -> Result<AnalysisReport> {
    let (scenario, links) = cfg.scenario_at(op)?;
    Ok(AnalysisReport {
        point: *op,
        links,
        cloud_laser_chain: summarize(scenario.cloud_laser())?,
        rain_chain: summarize(scenario.rain())?,
        weather: evaluate(&scenario)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis_value: f64,
    /// Worst row-sum deviation over both laser chains at this point.
    pub max_row_sum_error: f64,
    pub weather: WeatherReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub axis: SweepAxis,
    pub rows: Vec<SweepRow>,
}

/// Evaluates every grid point in parallel; rows come back in grid order.
pub fn sweep(cfg: &RunConfig, spec: &SweepSpec) -> Result<SweepTable> {
    let grid = spec.grid()?;
    let rows = grid
        .par_iter()
        .map(|&v| {
            let (scenario, _) = cfg.scenario_at(&cfg.point_on_axis(spec.axis, v))?;
            let rse = chain_structure_check(scenario.cloud_laser())?
                .max_row_sum_error
                .max(chain_structure_check(scenario.rain())?.max_row_sum_error);
            Ok(SweepRow {
                axis_value: v,
                max_row_sum_error: rse,
                weather: evaluate(&scenario)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepTable {
        axis: spec.axis,
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchSimulation {
    pub branch: LaserBranch,
    pub seed: u64,
    pub params: LaserChainParams,
    pub analytic: PerfTriple,
    /// Total-variation distance between simulated and analytic state
    /// frequencies.
    pub total_variation: f64,
    pub sim: SimResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub slots: u64,
    pub warmup_slots: u64,
    pub runs: Vec<BranchSimulation>,
}

pub fn simulate_branch<F>(
    scenario: &WeatherScenario,
    branch: LaserBranch,
    slots: u64,
    seed: u64,
    on_epoch: F,
) -> Result<BranchSimulation>
where
    F: FnMut(&TraceRecord) -> Result<()>,
{
    let params = *branch.params(scenario);
    let analysis = analyze_laser(&params)?;
    let sim = run_laser_sim_traced(&SimConfig::new(params, slots, seed), on_epoch)?;
    Ok(BranchSimulation {
        branch,
        seed,
        params,
        analytic: analysis.perf,
        total_variation: analysis
            .distribution
            .total_variation(&sim.state_frequencies),
        sim,
    })
}

/// Simulates the selected laser branches at the configured operating point.
/// `on_epoch` sees every epoch of every branch, in branch order.
pub fn simulate<F>(
    cfg: &RunConfig,
    branches: &[LaserBranch],
    mut on_epoch: F,
) -> Result<SimulationReport>
where
    F: FnMut(LaserBranch, &TraceRecord) -> Result<()>,
{
    let (scenario, _) = cfg.scenario_at(&cfg.operating_point())?;
    let runs = branches
        .iter()
        .map(|&b| simulate_branch(&scenario, b, cfg.slots, cfg.seed, |r| on_epoch(b, r)))
        .collect::<Result<Vec<_>>>()?;
    Ok(SimulationReport {
        slots: cfg.slots,
        warmup_slots: SimConfig::new(*scenario.rain(), cfg.slots, cfg.seed).warmup_slots,
        runs,
    })
}

/// Batch-means standard error of an event rate, or the counting error
/// `sqrt(p/n)` of the expected rate when no batch saw a different count.
pub fn event_rate_stderr(batch_stderr: f64, expected_rate: f64, observed_slots: u64) -> f64 {
    if batch_stderr > 0.0 {
        batch_stderr
    } else {
        (expected_rate.max(0.0) / observed_slots as f64).sqrt()
    }
}

/// Simulated and closed-form values agree when within `k` standard errors,
/// up to rounding when the standard error vanishes.
pub fn within_stderr(measured: f64, expected: f64, stderr: f64, k: f64) -> bool {
    let diff = (measured - expected).abs();
    diff <= k * stderr || diff <= 1e-12 * expected.abs()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn at_most(name: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            measured,
            tolerance,
            passed: measured <= tolerance,
        }
    }

    fn flag(name: impl Into<String>, ok: bool) -> Self {
        Check {
            name: name.into(),
            measured: if ok { 0.0 } else { 1.0 },
            tolerance: 0.0,
            passed: ok,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
    /// Replay spill fraction next to the closed-form fluid drop probability,
    /// per fluid branch. Informational.
    pub fluid_spill: Vec<(String, f64, f64)>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidateOptions {
    /// Number of consecutive seeds starting at the configured seed.
    pub seeds: u64,
    /// Adds 1e-6 to `P(0)` of the closed-form distribution before checking,
    /// to exercise the failure path.
    pub perturb: bool,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        Self {
            seeds: 1,
            perturb: false,
        }
    }
}

pub const TOL_ORACLE: f64 = 1e-10;
pub const TOL_NORMALIZATION: f64 = 1e-12;
pub const TOL_ROW_SUM: f64 = 1e-12;
pub const TOL_TV: f64 = 0.005;
pub const STDERR_MULTIPLE: f64 = 3.0;
pub const TOL_THROUGHPUT_REL: f64 = 0.01;
pub const TOL_REPLAY: f64 = 1e-9;

fn chain_checks(name: &str, p: &LaserChainParams, perturb: bool) -> Result<Vec<Check>> {
    let mut dist: StationaryDistribution = analyze_laser(p)?.distribution;
    if perturb {
        dist.probs[0] += 1e-6;
    }
    let oracle = stationary_oracle(p)?;
    let diag = chain_structure_check(p)?;
    let t = analyze_laser(p)?.transitions;
    let ratio = t.p_sas / t.p_sai;
    let geometric = (1..p.buffer_packets)
        .filter(|&i| dist.probs[i] > 1e-250)
        .map(|i| (dist.probs[i + 1] / dist.probs[i] / ratio - 1.0).abs())
        .fold(0.0, f64::max);
    Ok(vec![
        Check::at_most(
            format!("{name}: closed form vs linear solve (max abs diff)"),
            dist.max_abs_diff(&oracle),
            TOL_ORACLE,
        ),
        Check::at_most(
            format!("{name}: |sum P(i) - 1|"),
            (dist.total() - 1.0).abs(),
            TOL_NORMALIZATION,
        ),
        Check::at_most(
            format!("{name}: transition row sums"),
            diag.max_row_sum_error,
            TOL_ROW_SUM,
        ),
        Check::flag(
            format!("{name}: finite, irreducible, aperiodic"),
            diag.ergodic(),
        ),
        Check::at_most(
            format!("{name}: P(i+1)/P(i) geometric ratio (rel)"),
            geometric,
            1e-12,
        ),
    ])
}

fn sim_checks(run: &BranchSimulation) -> Vec<Check> {
    let name = format!("{} seed {}", run.branch.name(), run.seed);
    let s = &run.sim;
    let a = &run.analytic;
    let drop_diff = (s.drop_events_per_slot - a.drop_prob).abs();
    let queue_diff = (s.avg_queue_bits_embedded - a.avg_queue_bits).abs();
    let k = STDERR_MULTIPLE;
    let drop_se = event_rate_stderr(s.drop_stderr, a.drop_prob, s.observed_slots);
    vec![
        Check::at_most(
            format!("{name}: state TV distance"),
            run.total_variation,
            TOL_TV,
        ),
        Check {
            name: format!("{name}: drop events per slot (3 s.e.)"),
            measured: drop_diff,
            tolerance: k * drop_se,
            passed: within_stderr(s.drop_events_per_slot, a.drop_prob, drop_se, k),
        },
        Check {
            name: format!("{name}: embedded queue bits (3 s.e.)"),
            measured: queue_diff,
            tolerance: k * s.avg_queue_stderr,
            passed: within_stderr(
                s.avg_queue_bits_embedded,
                a.avg_queue_bits,
                s.avg_queue_stderr,
                k,
            ),
        },
        Check::at_most(
            format!("{name}: throughput (rel)"),
            (s.throughput_bps - a.throughput_bps).abs() / a.throughput_bps,
            TOL_THROUGHPUT_REL,
        ),
    ]
}

fn fluid_checks(name: &str, p: &FluidParams) -> Result<(Vec<Check>, (String, f64, f64))> {
    let trace = run_fluid_replay(p)?;
    let mut worst: f64 = 0.0;
    if p.beta_bits_per_step > p.phi_bits_per_step {
        for (z, q) in trace.levels.iter().enumerate() {
            let space = remaining_space(p, z as u32)?;
            worst = worst.max((p.buffer_bits - q - space).abs() / p.buffer_bits);
        }
    }
    let checks = vec![Check::at_most(
        format!("{name}: replay vs remaining space (rel)"),
        worst,
        TOL_REPLAY,
    )];
    Ok((
        checks,
        (
            name.to_string(),
            trace.spill_fraction(p),
            fluid_drop_prob(p)?,
        ),
    ))
}

/// Cross-checks every closed-form result of the configured operating point.
pub fn validate(cfg: &RunConfig, opts: &ValidateOptions) -> Result<ValidationReport> {
    let (scenario, _) = cfg.scenario_at(&cfg.operating_point())?;
    let mut checks = Vec::new();
    for b in LaserBranch::ALL {
        checks.extend(chain_checks(b.name(), b.params(&scenario), opts.perturb)?);
    }

    let jobs: Vec<(LaserBranch, u64)> = LaserBranch::ALL
        .iter()
        .flat_map(|&b| (0..opts.seeds.max(1)).map(move |k| (b, cfg.seed.wrapping_add(k))))
        .collect();
    let runs = jobs
        .par_iter()
        .map(|&(b, seed)| simulate_branch(&scenario, b, cfg.slots, seed, |_| Ok(())))
        .collect::<Result<Vec<_>>>()?;
    for run in &runs {
        checks.extend(sim_checks(run));
    }

    let mut fluid_spill = Vec::new();
    for (name, p) in [("cloud_rf", scenario.cloud_rf()), ("fog", scenario.fog())] {
        let (c, spill) = fluid_checks(name, p)?;
        checks.extend(c);
        fluid_spill.push(spill);
    }

    let report = evaluate(&scenario)?;
    let parts = [report.cloud, report.rain, report.fog];
    let hull = |f: fn(&PerfTriple) -> f64| {
        let v = f(&report.combined);
        let lo = parts.iter().map(f).fold(f64::INFINITY, f64::min);
        let hi = parts.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
        let slack = 1e-12 * hi.abs().max(1.0);
        v >= lo - slack && v <= hi + slack
    };
    checks.push(Check::flag(
        "combined metrics within per-weather range",
        hull(|p| p.throughput_bps) && hull(|p| p.avg_queue_bits) && hull(|p| p.drop_prob),
    ));
    Ok(ValidationReport {
        checks,
        fluid_spill,
    })
}
