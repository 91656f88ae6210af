//! CSV rows for trajectory logs and run metrics.

use std::io::Write;

use serde::Serialize;

use super::{Mode, SimResult};

/// One vehicle at one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryRow {
    pub time_s: f64,
    pub vehicle_id: usize,
    pub position_m: f64,
    pub speed_mps: f64,
    pub accel_mps2: f64,
    pub section_index: usize,
}

/// Writes `time_s,vehicle_id,position_m,speed_mps,accel_mps2,section_index`.
pub fn write_trajectory_csv<W: Write>(rows: &[TrajectoryRow], writer: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// One run summarised:
/// `safe_d_m,mode,gap_s,entered,safe_arrivals,collisions,min_separation_m,arrival_rate,throughput`.
/// `gap_s` is empty for no-ETA runs, `min_separation_m` empty if no two
/// vehicles ever shared the corridor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricsRow {
    pub safe_d_m: f64,
    pub mode: Mode,
    pub gap_s: Option<f64>,
    pub entered: usize,
    pub safe_arrivals: usize,
    pub collisions: usize,
    pub min_separation_m: Option<f64>,
    pub arrival_rate: f64,
    pub throughput: f64,
}

impl MetricsRow {
    pub fn from_result(safe_d_m: f64, result: &SimResult) -> Self {
        Self {
            safe_d_m,
            mode: result.mode,
            gap_s: result.gap_s,
            entered: result.entered,
            safe_arrivals: result.safe_arrivals,
            collisions: result.collisions(),
            min_separation_m: result.min_pairwise_separation_m,
            arrival_rate: result.arrival_rate_cwp0,
            throughput: result.throughput_cwp_m,
        }
    }

    pub fn write_csv<W: Write>(rows: &[MetricsRow], writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }
}
