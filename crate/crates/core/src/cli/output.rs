//! CSV and JSON writers.
//!
//! Analysis and sweep CSVs share one fixed header, [`METRIC_COLUMNS`]; `tau_*`
//! are throughputs in bit/s, `A_*` mean queue lengths in bits and `P_*` drop
//! probabilities, for thin cloud (C), rain (R), fog (F) and the weather mix
//! (t). The single analysis row leaves `axis_value` empty. Floats are printed
//! in shortest round-trip form, so identical inputs give identical bytes.

use std::io::Write;

use serde::Serialize;

use super::config::OutputFormat;
use super::run::{AnalysisReport, SimulationReport, SweepTable, ValidationReport};
use crate::error::Result;
use crate::simulator::TraceRecord;
use crate::weather::WeatherReport;

pub const METRIC_COLUMNS: [&str; 13] = [
    "axis_value",
    "tau_C",
    "tau_R",
    "tau_F",
    "tau_t",
    "A_C",
    "A_R",
    "A_F",
    "A_t",
    "P_C",
    "P_R",
    "P_F",
    "P_t",
];

pub const SIMULATION_COLUMNS: [&str; 18] = [
    "branch",
    "seed",
    "observed_slots",
    "throughput_bps",
    "throughput_stderr",
    "throughput_analytic",
    "avg_queue_bits",
    "avg_queue_stderr",
    "avg_queue_analytic",
    "avg_queue_bits_timeweighted",
    "drop_events_per_slot",
    "drop_stderr",
    "drop_analytic",
    "drops_per_arrival",
    "state_tv_distance",
    "delivered_packets",
    "dropped_packets",
    "elapsed_model_time_s",
];

pub const TRACE_COLUMNS: [&str; 6] = ["branch", "epoch", "winner", "outcome", "queue", "elapsed_s"];

pub const VALIDATION_COLUMNS: [&str; 4] = ["check", "measured", "tolerance", "passed"];

fn metric_fields(r: &WeatherReport) -> [f64; 12] {
    [
        r.cloud.throughput_bps,
        r.rain.throughput_bps,
        r.fog.throughput_bps,
        r.combined.throughput_bps,
        r.cloud.avg_queue_bits,
        r.rain.avg_queue_bits,
        r.fog.avg_queue_bits,
        r.combined.avg_queue_bits,
        r.cloud.drop_prob,
        r.rain.drop_prob,
        r.fog.drop_prob,
        r.combined.drop_prob,
    ]
}

fn metric_record(axis: Option<f64>, r: &WeatherReport) -> Vec<String> {
    std::iter::once(axis.map(|v| v.to_string()).unwrap_or_default())
        .chain(metric_fields(r).iter().map(f64::to_string))
        .collect()
}

fn write_json<W: Write, T: Serialize>(mut w: W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    Ok(())
}

pub fn write_analysis<W: Write>(w: W, report: &AnalysisReport, format: OutputFormat) -> Result<()> {
    match format {
        OutputFormat::Json => write_json(w, report),
        OutputFormat::Csv => {
            let mut csv = csv::Writer::from_writer(w);
            csv.write_record(METRIC_COLUMNS)?;
            csv.write_record(metric_record(None, &report.weather))?;
            csv.flush()?;
            Ok(())
        }
    }
}

pub fn write_sweep<W: Write>(w: W, table: &SweepTable, format: OutputFormat) -> Result<()> {
    match format {
        OutputFormat::Json => write_json(w, table),
        OutputFormat::Csv => {
            let mut csv = csv::Writer::from_writer(w);
            csv.write_record(METRIC_COLUMNS)?;
            for row in &table.rows {
                csv.write_record(metric_record(Some(row.axis_value), &row.weather))?;
            }
            csv.flush()?;
            Ok(())
        }
    }
}

pub fn write_simulation<W: Write>(
    w: W,
    report: &SimulationReport,
    format: OutputFormat,
) -> Result<()> {
    match format {
        OutputFormat::Json => write_json(w, report),
        OutputFormat::Csv => {
            let mut csv = csv::Writer::from_writer(w);
            csv.write_record(SIMULATION_COLUMNS)?;
            for run in &report.runs {
                let s = &run.sim;
                let a = &run.analytic;
                csv.write_record([
                    run.branch.name().to_string(),
                    run.seed.to_string(),
                    s.observed_slots.to_string(),
                    s.throughput_bps.to_string(),
                    s.throughput_stderr.to_string(),
                    a.throughput_bps.to_string(),
                    s.avg_queue_bits_embedded.to_string(),
                    s.avg_queue_stderr.to_string(),
                    a.avg_queue_bits.to_string(),
                    s.avg_queue_bits_timeweighted.to_string(),
                    s.drop_events_per_slot.to_string(),
                    s.drop_stderr.to_string(),
                    a.drop_prob.to_string(),
                    s.drops_per_arrival.to_string(),
                    run.total_variation.to_string(),
                    s.delivered_packets.to_string(),
                    s.dropped_packets.to_string(),
                    s.elapsed_model_time_s.to_string(),
                ])?;
            }
            csv.flush()?;
            Ok(())
        }
    }
}

/// Streams per-epoch trace records as CSV.
pub struct TraceWriter<W: Write> {
    csv: csv::Writer<W>,
}

impl<W: Write> TraceWriter<W> {
    pub fn new(w: W) -> Result<Self> {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(TRACE_COLUMNS)?;
        Ok(Self { csv })
    }

    pub fn record(&mut self, branch: &str, r: &TraceRecord) -> Result<()> {
        self.csv.write_record([
            branch,
            &r.epoch.to_string(),
            r.winner.as_str(),
            r.outcome.as_str(),
            &r.queue.to_string(),
            &r.elapsed_s.to_string(),
        ])?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.csv.flush()?;
        Ok(())
    }
}

pub fn write_validation<W: Write>(
    w: W,
    report: &ValidationReport,
    format: OutputFormat,
) -> Result<()> {
    match format {
        OutputFormat::Json => write_json(w, report),
        OutputFormat::Csv => {
            let mut csv = csv::Writer::from_writer(w);
            csv.write_record(VALIDATION_COLUMNS)?;
            for c in &report.checks {
                csv.write_record([
                    c.name.clone(),
                    c.measured.to_string(),
                    c.tolerance.to_string(),
                    c.passed.to_string(),
                ])?;
            }
            csv.flush()?;
            Ok(())
        }
    }
}

/// One human-readable line per check.
pub fn print_validation<W: Write>(mut w: W, report: &ValidationReport) -> Result<()> {
    for c in &report.checks {
        writeln!(
            w,
            "{} {}  measured={:.3e} tolerance={:.3e}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.measured,
            c.tolerance
        )?;
    }
    for (name, spill, drop) in &report.fluid_spill {
        writeln!(
            w,
            "INFO {name}: replay spill fraction={spill:.6} fluid drop probability={drop:.6}"
        )?;
    }
    let failed = report.checks.iter().filter(|c| !c.passed).count();
    writeln!(w, "{} checks, {} failed", report.checks.len(), failed)?;
    Ok(())
}
