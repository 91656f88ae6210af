//! Discrete-time corridor simulation with Helly car-following.
//!
//! Two admission modes are supported. In [`Mode::Eta`] vehicles enter at
//! multiples of a solved ETA gap and track their waypoint schedule, braking
//! further only when the car-following law asks for it. In [`Mode::NoEta`]
//! the next vehicle enters as soon as its car-following acceleration at the
//! entry waypoint would be positive.

mod control;
mod engine;
mod report;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use control::{
    clamp_accel, helly_accel, lead_vehicle_accel, schedule_target_speed, schedule_tracking_accel,
};
pub use engine::{run, Simulation};
pub use report::{write_trajectory_csv, MetricsRow, TrajectoryRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Eta,
    NoEta,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Eta => "eta",
            Mode::NoEta => "no-eta",
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("ETA mode needs a gap > 0, got {0} s")]
    InvalidGap(f64),
    #[error("non-finite state for vehicle {vehicle} at t = {time_s} s")]
    NonFinite { vehicle: usize, time_s: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub dt_s: f64,
    /// Defaults to entry window + total travel time + 60 s.
    pub horizon_s: Option<f64>,
    pub entry_window_s: f64,
    pub entry_speed_mps: f64,
    pub lambda_x: f64,
    pub lambda_v: f64,
    pub t_des_s: f64,
    pub d_min_m: f64,
    pub accel_min_mps2: f64,
    pub accel_max_mps2: f64,
    pub mode: Mode,
    /// Unused by the deterministic model; kept so configs stay stable once
    /// stochastic driver variants exist.
    pub seed: u64,
    /// Count only arrivals completed by this time.
    pub count_by_s: Option<f64>,
    pub record_trajectories: bool,
}

impl SimConfig {
    pub const HORIZON_MARGIN_S: f64 = 60.0;

    /// Step 0.1 s, 100 s entry window, 82.5 m/s entry speed, λx = 0.7, λv = 0.5,
    /// T_des = 1.2 s, accelerations in [−3, 2] m/s², D_min = safe distance.
    pub fn reference(mode: Mode, safe_d_m: f64) -> Self {
        Self {
            dt_s: 0.1,
            horizon_s: None,
            entry_window_s: 100.0,
            entry_speed_mps: 82.5,
            lambda_x: 0.7,
            lambda_v: 0.5,
            t_des_s: 1.2,
            d_min_m: safe_d_m,
            accel_min_mps2: -3.0,
            accel_max_mps2: 2.0,
            mode,
            seed: 0,
            count_by_s: None,
            record_trajectories: false,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |msg: &str| Err(SimError::InvalidConfig(msg.to_string()));
        let finite = [
            self.dt_s,
            self.entry_window_s,
            self.entry_speed_mps,
            self.lambda_x,
            self.lambda_v,
            self.t_des_s,
            self.d_min_m,
            self.accel_min_mps2,
            self.accel_max_mps2,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return bad("all parameters must be finite");
        }
        if self.dt_s <= 0.0 {
            return bad("dt_s must be > 0");
        }
        if !(self.accel_min_mps2 < 0.0 && 0.0 < self.accel_max_mps2) {
            return bad("acceleration bounds must satisfy lower < 0 < upper");
        }
        if self.entry_window_s < 0.0 {
            return bad("entry_window_s must be >= 0");
        }
        if self.entry_speed_mps <= 0.0 {
            return bad("entry_speed_mps must be > 0");
        }
        if self.d_min_m < 0.0 {
            return bad("d_min_m must be >= 0");
        }
        if let Some(h) = self.horizon_s {
            if !h.is_finite() || h <= 0.0 {
                return bad("horizon_s must be > 0");
            }
        }
        if let Some(c) = self.count_by_s {
            if !c.is_finite() || c < 0.0 {
                return bad("count_by_s must be >= 0");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VehicleState {
    pub id: usize,
    pub position_m: f64,
    pub speed_mps: f64,
    pub section_index: usize,
    pub entered: bool,
    pub exited: bool,
    /// Involved in a collision; frozen in place from then on.
    pub collided: bool,
    pub entry_time_s: f64,
    /// Interpolated crossing time of each waypoint reached so far.
    pub cwp_times_actual: Vec<f64>,
    pub exit_time_s: Option<f64>,
}

impl VehicleState {
    pub fn new(id: usize, entry_time_s: f64, speed_mps: f64, num_sections: usize) -> Self {
        let mut cwp_times_actual = Vec::with_capacity(num_sections + 1);
        cwp_times_actual.push(entry_time_s);
        Self {
            id,
            position_m: 0.0,
            speed_mps,
            section_index: 0,
            entered: true,
            exited: false,
            collided: false,
            entry_time_s,
            cwp_times_actual,
            exit_time_s: None,
        }
    }

    /// Entered and not yet past the final waypoint (wrecks included).
    pub fn in_corridor(&self) -> bool {
        self.entered && !self.exited
    }

    pub fn is_moving(&self) -> bool {
        self.in_corridor() && !self.collided
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CollisionEvent {
    pub time_s: f64,
    pub leader: usize,
    pub follower: usize,
    pub spacing_m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SimEvent {
    Entry {
        time_s: f64,
        vehicle: usize,
    },
    WaypointCrossing {
        time_s: f64,
        vehicle: usize,
        waypoint: usize,
    },
    Exit {
        time_s: f64,
        vehicle: usize,
    },
    SpeedClamp {
        time_s: f64,
        vehicle: usize,
        from_mps: f64,
        to_mps: f64,
    },
    SeparationLoss {
        time_s: f64,
        leader: usize,
        follower: usize,
        spacing_m: f64,
    },
    Collision(CollisionEvent),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub mode: Mode,
    pub gap_s: Option<f64>,
    pub entered: usize,
    pub exited: usize,
    /// Vehicles that passed the final waypoint without a collision (by
    /// `count_by_s` when set).
    pub safe_arrivals: usize,
    pub collision_events: Vec<CollisionEvent>,
    /// Steps × pairs where spacing fell below the separation distance.
    pub separation_loss_steps: usize,
    pub speed_clamp_events: usize,
    /// Over consecutive in-corridor pairs at every step. `None` if no two
    /// vehicles were ever in the corridor together.
    pub min_pairwise_separation_m: Option<f64>,
    /// Entries per second at the first waypoint.
    pub arrival_rate_cwp0: f64,
    /// Safe arrivals per second at the final waypoint.
    pub throughput_cwp_m: f64,
    /// Horizon reached with vehicles still in the corridor.
    pub incomplete: bool,
    pub end_time_s: f64,
    pub vehicles: Vec<VehicleState>,
    pub trajectories: Option<Vec<TrajectoryRow>>,
}

impl SimResult {
    pub fn collisions(&self) -> usize {
        self.collision_events.len()
    }
}

/// `(n − 1) / (last − first)` over sorted event times; 0 with fewer than two.
pub(crate) fn event_rate(times: &[f64]) -> f64 {
    match (times.first(), times.last()) {
        (Some(first), Some(last)) if times.len() >= 2 && last > first => {
            (times.len() - 1) as f64 / (last - first)
        }
        _ => 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_config_is_valid() {
        SimConfig::reference(Mode::Eta, 300.0).validate().unwrap();
    }

    #[test]
    fn config_rejects_bad_values() {
        let mut c = SimConfig::reference(Mode::Eta, 300.0);
        c.dt_s = 0.0;
        assert!(c.validate().is_err());
        let mut c = SimConfig::reference(Mode::Eta, 300.0);
        c.accel_min_mps2 = 1.0;
        assert!(c.validate().is_err());
        let mut c = SimConfig::reference(Mode::Eta, 300.0);
        c.horizon_s = Some(-1.0);
        assert!(c.validate().is_err());
        let mut c = SimConfig::reference(Mode::Eta, 300.0);
        c.lambda_x = f64::NAN;
        assert!(c.validate().is_err());
    }

    #[test]
    fn rates() {
        assert_eq!(event_rate(&[]), 0.0);
        assert_eq!(event_rate(&[3.0]), 0.0);
        assert_eq!(event_rate(&[0.0, 10.0, 20.0]), 0.1);
    }
}
