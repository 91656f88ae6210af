//! Extreme spatiotemporal trajectories.
//!
//! A vehicle that holds every section's speed limits and spends exactly `τ_j`
//! in section `j` is enclosed between two continuous piecewise-affine curves:
//! the lower bound flies each section at `v_min` then switches to `v_max`, the
//! upper bound does the reverse. Both pass through every scheduled waypoint
//! `(T_j, L_j)`.

use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::corridor::{CorridorSpec, Schedule, Section};

/// Breakpoints closer than this in time are treated as the same point.
pub const BREAKPOINT_DEDUP_S: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundError {
    #[error(
        "section length {length_m} m cannot be flown in {travel_time_s} s within [{v_min}, {v_max}] m/s"
    )]
    InfeasibleSection {
        length_m: f64,
        travel_time_s: f64,
        v_min: f64,
        v_max: f64,
    },
    #[error("time {t} s outside bound domain [{start}, {end}] s")]
    OutOfDomain { t: f64, start: f64, end: f64 },
    #[error("schedule has {got} waypoints, corridor needs {expected}")]
    ScheduleMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum BoundKind {
    /// Slow first, then fast. Bounds admissible positions from below.
    Lower,
    /// Fast first, then slow. Bounds admissible positions from above.
    Upper,
}

fn check_feasible(section: &Section, tau: f64) -> Result<(), BoundError> {
    let slack = 1e-12 * section.length_m;
    if section.length_m < section.v_min * tau - slack
        || section.length_m > section.v_max * tau + slack
    {
        return Err(BoundError::InfeasibleSection {
            length_m: section.length_m,
            travel_time_s: tau,
            v_min: section.v_min,
            v_max: section.v_max,
        });
    }
    Ok(())
}

/// Time spent at `v_min` before switching to `v_max` so the section of length
/// `l` takes exactly `tau`: solves `v_min·t + v_max·(tau − t) = l`.
///
/// Equal limits admit any switch time; 0 is returned.
pub fn switch_time_min_to_max(section: &Section, tau: f64) -> Result<f64, BoundError> {
    check_feasible(section, tau)?;
    if section.v_max <= section.v_min {
        return Ok(0.0);
    }
    let t = (section.v_max * tau - section.length_m) / (section.v_max - section.v_min);
    Ok(t.clamp(0.0, tau))
}

/// Time spent at `v_max` before switching to `v_min`: solves
/// `v_max·t + v_min·(tau − t) = l`.
pub fn switch_time_max_to_min(section: &Section, tau: f64) -> Result<f64, BoundError> {
    check_feasible(section, tau)?;
    if section.v_max <= section.v_min {
        return Ok(0.0);
    }
    let t = (section.length_m - section.v_min * tau) / (section.v_max - section.v_min);
    Ok(t.clamp(0.0, tau))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Breakpoint {
    pub time_s: f64,
    pub position_m: f64,
}

/// Continuous piecewise-affine position bound over `[T_0, T_m]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryBound {
    kind: BoundKind,
    breakpoints: Vec<Breakpoint>,
    schedule: Schedule,
}

impl TrajectoryBound {
    pub fn build(
        spec: &CorridorSpec,
        schedule: &Schedule,
        kind: BoundKind,
    ) -> Result<Self, BoundError> {
        let m = spec.num_sections();
        if schedule.cwp_times_s.len() != m + 1 {
            return Err(BoundError::ScheduleMismatch {
                expected: m + 1,
                got: schedule.cwp_times_s.len(),
            });
        }
        let cum = spec.cum_lengths_m();
        let mut breakpoints = Vec::with_capacity(2 * m + 1);
        breakpoints.push(Breakpoint {
            time_s: schedule.cwp_times_s[0],
            position_m: 0.0,
        });

        for j in 0..m {
            let section = spec.section(j);
            let tau = spec.travel_time(j);
            let (switch, first_speed) = match kind {
                BoundKind::Lower => (switch_time_min_to_max(section, tau)?, section.v_min),
                BoundKind::Upper => (switch_time_max_to_min(section, tau)?, section.v_max),
            };
            let t_start = schedule.cwp_times_s[j];
            let t_end = schedule.cwp_times_s[j + 1];
            let t_switch = t_start + switch;
            if t_switch - t_start > BREAKPOINT_DEDUP_S && t_end - t_switch > BREAKPOINT_DEDUP_S {
                breakpoints.push(Breakpoint {
                    time_s: t_switch,
                    position_m: cum[j] + first_speed * switch,
                });
            }
            breakpoints.push(Breakpoint {
                time_s: t_end,
                position_m: cum[j + 1],
            });
        }

        Ok(Self {
            kind,
            breakpoints,
            schedule: schedule.clone(),
        })
    }

    pub fn kind(&self) -> BoundKind {
        self.kind
    }

    pub fn breakpoints(&self) -> &[Breakpoint] {
        &self.breakpoints
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    pub fn start_time_s(&self) -> f64 {
        self.breakpoints[0].time_s
    }

    pub fn end_time_s(&self) -> f64 {
        self.breakpoints[self.breakpoints.len() - 1].time_s
    }

    /// Position on the bound at time `t`; exact at breakpoints.
    pub fn eval(&self, t: f64) -> Result<f64, BoundError> {
        let (start, end) = (self.start_time_s(), self.end_time_s());
        if !(start..=end).contains(&t) {
            return Err(BoundError::OutOfDomain { t, start, end });
        }
        let bps = &self.breakpoints;
        // First breakpoint strictly after t; t lies in [bps[k-1], bps[k]).
        let k = bps.partition_point(|b| b.time_s <= t);
        if k == 0 {
            return Ok(bps[0].position_m);
        }
        let a = bps[k - 1];
        if a.time_s == t || k == bps.len() {
            return Ok(a.position_m);
        }
        let b = bps[k];
        let frac = (t - a.time_s) / (b.time_s - a.time_s);
        Ok(a.position_m + frac * (b.position_m - a.position_m))
    }

    /// Slope of each segment, in breakpoint order.
    pub fn segment_speeds(&self) -> Vec<f64> {
        self.breakpoints
            .windows(2)
            .map(|w| (w[1].position_m - w[0].position_m) / (w[1].time_s - w[0].time_s))
            .collect()
    }

    pub fn critical_points(&self) -> CriticalPointSet {
        CriticalPointSet {
            kind: self.kind,
            points: self
                .breakpoints
                .iter()
                .map(|b| CriticalPoint {
                    position_m: b.position_m,
                    time_s: b.time_s,
                })
                .collect(),
        }
    }

    /// Writes `time_s,position_m` rows.
    pub fn write_csv<W: Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for b in &self.breakpoints {
            w.serialize(b)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalPoint {
    pub position_m: f64,
    pub time_s: f64,
}

/// Points where a bound changes slope, including both ends of its domain.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalPointSet {
    pub kind: BoundKind,
    pub points: Vec<CriticalPoint>,
}

impl CriticalPointSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.time_s)
    }
}
